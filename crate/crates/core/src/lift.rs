//! Lifting 2D masks and scribbles onto per-Gaussian foreground likelihoods.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mincut::Partition;
use crate::raster::{accumulate_contributions, ContributionTotals, Weighting};
use crate::scene::{Camera, GaussianScene, Mask};

pub const TAU_FRONT_FACING: f64 = 0.9;
pub const TAU_INWARD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiftMode {
    /// Blend-weighted ratio of masked to total contribution.
    Soft,
    /// Ratio of contributed masked pixels to contributed pixels.
    Hard,
}

impl std::str::FromStr for LiftMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(LiftMode::Soft),
            "hard" => Ok(LiftMode::Hard),
            other => Err(Error::InvalidInput(format!("unknown lift mode '{other}' (soft|hard)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiftParams {
    pub mode: LiftMode,
    /// Coarse-splatting threshold.
    pub tau: f64,
    /// Likelihood given to Gaussians that never contribute to any pixel.
    pub zero_contribution_weight: f64,
}

impl Default for LiftParams {
    fn default() -> Self {
        LiftParams {
            mode: LiftMode::Soft,
            tau: TAU_FRONT_FACING,
            zero_contribution_weight: 0.0,
        }
    }
}

impl LiftParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::InvalidInput(format!("tau {} outside [0, 1]", self.tau)));
        }
        if !(0.0..=1.0).contains(&self.zero_contribution_weight) {
            return Err(Error::InvalidInput(format!(
                "zero-contribution weight {} outside [0, 1]",
                self.zero_contribution_weight
            )));
        }
        Ok(())
    }
}

fn ratio(totals: &ContributionTotals, fallback: f64) -> Vec<f64> {
    totals
        .masked
        .iter()
        .zip(&totals.total)
        .map(|(&m, &t)| if t > 0.0 { (m / t).clamp(0.0, 1.0) } else { fallback })
        .collect()
}

/// Contribution totals summed over all (camera, mask) pairs.
pub fn sum_contributions(
    scene: &GaussianScene,
    cameras: &[Camera],
    masks: &[Mask],
    weighting: Weighting,
) -> Result<ContributionTotals> {
    if cameras.len() != masks.len() {
        return Err(Error::InvalidInput(format!(
            "{} cameras but {} masks",
            cameras.len(),
            masks.len()
        )));
    }
    if cameras.is_empty() {
        return Err(Error::InvalidInput("at least one view is required".into()));
    }
    let per_view: Vec<ContributionTotals> = cameras
        .par_iter()
        .zip(masks.par_iter())
        .map(|(cam, mask)| accumulate_contributions(scene, cam, mask, weighting))
        .collect::<Result<_>>()?;
    let mut sum = ContributionTotals::zeros(scene.count());
    for v in &per_view {
        sum.add(v);
    }
    Ok(sum)
}

/// Foreground likelihood of every Gaussian from `n` masked views; the result
/// is also stored into `scene`.
pub fn accumulate_weights(
    scene: &mut GaussianScene,
    cameras: &[Camera],
    masks: &[Mask],
    params: &LiftParams,
) -> Result<Vec<f64>> {
    params.validate()?;
    let weighting = match params.mode {
        LiftMode::Soft => Weighting::Blend,
        LiftMode::Hard => Weighting::Indicator,
    };
    let totals = sum_contributions(scene, cameras, masks, weighting)?;
    let w = ratio(&totals, params.zero_contribution_weight);
    scene.set_weights(w.clone())?;
    Ok(w)
}

/// Foreground iff `w > tau`.
pub fn coarse_splat(weights: &[f64], tau: f64) -> Partition {
    Partition::from_labels(weights.iter().map(|&w| w > tau).collect())
}

/// Scribble pixels on one view.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scribbles {
    pub fg: Vec<[usize; 2]>,
    pub bg: Vec<[usize; 2]>,
}

impl Scribbles {
    pub fn is_empty(&self) -> bool {
        self.fg.is_empty() && self.bg.is_empty()
    }
}

/// Likelihood assigned to Gaussians not touched by any scribble.
pub const UNANNOTATED_WEIGHT: f64 = 0.5;

fn scribble_masks(cam: &Camera, s: &Scribbles) -> Result<(Mask, Mask)> {
    let fg = Mask::from_pixels(cam.width, cam.height, &s.fg)?;
    let bg = Mask::from_pixels(cam.width, cam.height, &s.bg)?;
    if let Some(i) = fg.bits.iter().zip(&bg.bits).position(|(&a, &b)| a && b) {
        return Err(Error::InvalidInput(format!(
            "pixel ({}, {}) is scribbled as both foreground and background",
            i % cam.width,
            i / cam.width
        )));
    }
    let mut annotated = fg.clone();
    for (a, &b) in annotated.bits.iter_mut().zip(&bg.bits) {
        *a |= b;
    }
    Ok((fg, annotated))
}

/// Likelihoods from scribbles on several views, normalized over annotated
/// pixels only.
pub fn scribble_seeds_multi(scene: &GaussianScene, views: &[(&Camera, &Scribbles)]) -> Result<Vec<f64>> {
    if views.iter().all(|(_, s)| s.is_empty()) {
        return Err(Error::InvalidInput("no scribbles given".into()));
    }
    let mut fg_sum = vec![0.0; scene.count()];
    let mut ann_sum = vec![0.0; scene.count()];
    for (cam, s) in views {
        if s.is_empty() {
            continue;
        }
        let (fg_mask, annotated) = scribble_masks(cam, s)?;
        let fg = accumulate_contributions(scene, cam, &fg_mask, Weighting::Blend)?;
        let ann = accumulate_contributions(scene, cam, &annotated, Weighting::Blend)?;
        for g in 0..scene.count() {
            fg_sum[g] += fg.masked[g];
            ann_sum[g] += ann.masked[g];
        }
    }
    Ok(fg_sum
        .iter()
        .zip(&ann_sum)
        .map(|(&f, &a)| if a > 0.0 { (f / a).clamp(0.0, 1.0) } else { UNANNOTATED_WEIGHT })
        .collect())
}

pub fn scribble_seeds(
    scene: &GaussianScene,
    cam: &Camera,
    fg_pixels: &[[usize; 2]],
    bg_pixels: &[[usize; 2]],
) -> Result<Vec<f64>> {
    let s = Scribbles {
        fg: fg_pixels.to_vec(),
        bg: bg_pixels.to_vec(),
    };
    scribble_seeds_multi(scene, &[(cam, &s)])
}
