//! Mask and photometric evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{render_with, RenderOptions};
use crate::scene::{Camera, GaussianScene, Image, Mask};

/// Renders foreground Gaussians white and background Gaussians black over a
/// black background; foreground where luminance exceeds 0.5.
pub fn render_fg_mask(scene: &GaussianScene, labels: &[bool], cam: &Camera) -> Result<Mask> {
    if labels.len() != scene.count() {
        return Err(Error::InvalidInput(format!(
            "label vector has {} entries, scene has {} Gaussians",
            labels.len(),
            scene.count()
        )));
    }
    let colors: Vec<[f64; 3]> = labels.iter().map(|&fg| if fg { [1.0; 3] } else { [0.0; 3] }).collect();
    let img = render_with(
        scene,
        cam,
        RenderOptions {
            include: None,
            colors: Some(&colors),
            background: [0.0; 3],
        },
    );
    Ok(Mask {
        width: img.width,
        height: img.height,
        bits: img.pixels.iter().map(|p| luminance(p) > 0.5).collect(),
    })
}

pub fn luminance(p: &[f64; 3]) -> f64 {
    0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskMetrics {
    pub iou: f64,
    pub accuracy: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

pub fn mask_metrics(pred: &Mask, gt: &Mask) -> Result<MaskMetrics> {
    if pred.dims() != gt.dims() {
        return Err(Error::DimensionMismatch {
            expected: gt.dims(),
            actual: pred.dims(),
        });
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &g) in pred.bits.iter().zip(&gt.bits) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let union = tp + fp + fn_;
    let total = union + tn;
    Ok(MaskMetrics {
        iou: if union == 0 { 1.0 } else { tp as f64 / union as f64 },
        accuracy: if total == 0 { 1.0 } else { (tp + tn) as f64 / total as f64 },
        tp,
        fp,
        fn_,
        tn,
    })
}

/// Set IoU between two label vectors' foreground sets (1 when both are empty).
pub fn label_iou(pred: &[bool], gt: &[bool]) -> f64 {
    let inter = pred.iter().zip(gt).filter(|(&p, &g)| p && g).count();
    let union = pred.iter().zip(gt).filter(|(&p, &g)| p || g).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Photometric {
    /// `+inf` for identical crops.
    pub psnr_db: f64,
    pub ssim: f64,
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

pub fn psnr(pred: &Image, gt: &Image) -> f64 {
    let n = (pred.pixels.len() * 3) as f64;
    let mse: f64 = pred
        .pixels
        .iter()
        .zip(&gt.pixels)
        .flat_map(|(p, g)| (0..3).map(move |c| (p[c] - g[c]) * (p[c] - g[c])))
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

fn gaussian_kernel() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let k: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| (-((i as f64 - half).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Separable Gaussian filter; the window is truncated at the borders and
/// renormalized.
fn blur(data: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let half = kernel.len() as isize / 2;
    let pass = |src: &[f64], horizontal: bool| -> Vec<f64> {
        let mut out = vec![0.0; src.len()];
        for y in 0..h {
            for x in 0..w {
                let (mut acc, mut norm) = (0.0, 0.0);
                for (k, &kv) in kernel.iter().enumerate() {
                    let off = k as isize - half;
                    let (sx, sy) = if horizontal {
                        (x as isize + off, y as isize)
                    } else {
                        (x as isize, y as isize + off)
                    };
                    if sx < 0 || sy < 0 || sx >= w as isize || sy >= h as isize {
                        continue;
                    }
                    acc += kv * src[sy as usize * w + sx as usize];
                    norm += kv;
                }
                out[y * w + x] = acc / norm;
            }
        }
        out
    };
    pass(&pass(data, true), false)
}

/// Mean SSIM over pixels and channels.
pub fn ssim(pred: &Image, gt: &Image) -> f64 {
    let (w, h) = pred.dims();
    let kernel = gaussian_kernel();
    let mut total = 0.0;
    for c in 0..3 {
        let x: Vec<f64> = pred.pixels.iter().map(|p| p[c]).collect();
        let y: Vec<f64> = gt.pixels.iter().map(|p| p[c]).collect();
        let prod = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).collect::<Vec<f64>>();
        let mx = blur(&x, w, h, &kernel);
        let my = blur(&y, w, h, &kernel);
        let mxx = blur(&prod(&x, &x), w, h, &kernel);
        let myy = blur(&prod(&y, &y), w, h, &kernel);
        let mxy = blur(&prod(&x, &y), w, h, &kernel);
        for i in 0..w * h {
            let vx = mxx[i] - mx[i] * mx[i];
            let vy = myy[i] - my[i] * my[i];
            let cov = mxy[i] - mx[i] * my[i];
            total += ((2.0 * mx[i] * my[i] + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((mx[i] * mx[i] + my[i] * my[i] + SSIM_C1) * (vx + vy + SSIM_C2));
        }
    }
    total / (3 * w * h) as f64
}

/// PSNR and SSIM inside the tight bounding box of the ground-truth mask.
pub fn photometric(pred: &Image, gt: &Image, gt_mask: &Mask) -> Result<Photometric> {
    if pred.dims() != gt.dims() {
        return Err(Error::DimensionMismatch {
            expected: gt.dims(),
            actual: pred.dims(),
        });
    }
    if gt_mask.dims() != gt.dims() {
        return Err(Error::DimensionMismatch {
            expected: gt.dims(),
            actual: gt_mask.dims(),
        });
    }
    let (x0, y0, x1, y1) = gt_mask
        .bbox()
        .ok_or_else(|| Error::InvalidInput("ground-truth mask is empty".into()))?;
    let (p, g) = (pred.crop(x0, y0, x1, y1), gt.crop(x0, y0, x1, y1));
    Ok(Photometric {
        psnr_db: psnr(&p, &g),
        ssim: ssim(&p, &g),
    })
}
