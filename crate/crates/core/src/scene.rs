//! In-memory scene representation: Gaussians, cameras, masks and images.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Number of SH coefficients per Gaussian (degree 3, RGB).
pub const SH_COEFFS: usize = 48;
/// Number of SH bases per channel at degree 3.
pub const SH_BASES: usize = 16;

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Columnar store of Gaussian parameters.
///
/// The values serialized to disk (pre-activation opacity, log-scale and the
/// raw quaternion) are kept alongside the activated values so that a
/// load/save cycle is lossless. SH coefficients are basis-major:
/// `sh[g][basis * 3 + channel]`, so the first three are the DC terms.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianScene {
    positions: Vec<[f32; 3]>,
    sh: Vec<[f32; SH_COEFFS]>,
    raw_opacities: Vec<f32>,
    raw_scales: Vec<[f32; 3]>,
    raw_rotations: Vec<[f32; 4]>,
    opacities: Vec<f64>,
    scales: Vec<[f64; 3]>,
    rotations: Vec<[f64; 4]>,
    weights: Vec<f64>,
}

/// Pre-activation parameters of one Gaussian, as stored in a splat file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawGaussian {
    pub position: [f32; 3],
    pub sh: [f32; SH_COEFFS],
    pub opacity: f32,
    pub scale: [f32; 3],
    /// `(w, x, y, z)`, not necessarily normalized.
    pub rotation: [f32; 4],
}

impl RawGaussian {
    /// Builds raw parameters from activated values (opacity in (0,1), positive
    /// scales, any nonzero quaternion).
    pub fn from_activated(
        position: [f32; 3],
        sh: [f32; SH_COEFFS],
        opacity: f64,
        scale: [f64; 3],
        rotation: [f64; 4],
    ) -> Self {
        let opacity = opacity.clamp(1e-6, 1.0 - 1e-6);
        RawGaussian {
            position,
            sh,
            opacity: logit(opacity) as f32,
            scale: scale.map(|s| s.ln() as f32),
            rotation: rotation.map(|q| q as f32),
        }
    }
}

impl GaussianScene {
    pub fn from_raw(gaussians: impl IntoIterator<Item = RawGaussian>) -> Result<Self> {
        let mut scene = GaussianScene {
            positions: Vec::new(),
            sh: Vec::new(),
            raw_opacities: Vec::new(),
            raw_scales: Vec::new(),
            raw_rotations: Vec::new(),
            opacities: Vec::new(),
            scales: Vec::new(),
            rotations: Vec::new(),
            weights: Vec::new(),
        };
        for g in gaussians {
            let q = g.rotation.map(f64::from);
            let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(Error::Schema(format!(
                    "Gaussian {} has a degenerate rotation quaternion",
                    scene.positions.len()
                )));
            }
            scene.positions.push(g.position);
            scene.sh.push(g.sh);
            scene.raw_opacities.push(g.opacity);
            scene.raw_scales.push(g.scale);
            scene.raw_rotations.push(g.rotation);
            scene.opacities.push(sigmoid(f64::from(g.opacity)));
            scene.scales.push(g.scale.map(|s| f64::from(s).exp()));
            scene.rotations.push(q.map(|v| v / norm));
            scene.weights.push(0.0);
        }
        if scene.positions.is_empty() {
            return Err(Error::EmptyScene);
        }
        Ok(scene)
    }

    pub fn count(&self) -> usize {
        self.positions.len()
    }

    pub fn raw(&self, g: usize) -> RawGaussian {
        RawGaussian {
            position: self.positions[g],
            sh: self.sh[g],
            opacity: self.raw_opacities[g],
            scale: self.raw_scales[g],
            rotation: self.raw_rotations[g],
        }
    }

    pub fn position(&self, g: usize) -> Vector3<f64> {
        let p = self.positions[g];
        Vector3::new(p[0].into(), p[1].into(), p[2].into())
    }

    pub fn positions(&self) -> &[[f32; 3]] {
        &self.positions
    }

    pub fn sh(&self, g: usize) -> &[f32; SH_COEFFS] {
        &self.sh[g]
    }

    /// Zero-degree SH coefficients (RGB), raw.
    pub fn dc(&self, g: usize) -> [f64; 3] {
        let sh = &self.sh[g];
        [sh[0].into(), sh[1].into(), sh[2].into()]
    }

    pub fn opacity(&self, g: usize) -> f64 {
        self.opacities[g]
    }

    pub fn scale(&self, g: usize) -> [f64; 3] {
        self.scales[g]
    }

    /// Unit quaternion `(w, x, y, z)`.
    pub fn rotation(&self, g: usize) -> [f64; 4] {
        self.rotations[g]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Replaces the foreground likelihoods wholesale.
    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.count() {
            return Err(Error::InvalidInput(format!(
                "weight vector has {} entries, scene has {} Gaussians",
                weights.len(),
                self.count()
            )));
        }
        if let Some(bad) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::InvalidInput(format!("weight {bad} outside [0, 1]")));
        }
        self.weights = weights;
        Ok(())
    }

    /// Gaussians selected by `keep`, in index order. Weights are carried over.
    pub fn subset(&self, keep: impl Fn(usize) -> bool) -> Result<Self> {
        let idx: Vec<usize> = (0..self.count()).filter(|&g| keep(g)).collect();
        if idx.is_empty() {
            return Err(Error::EmptySelection);
        }
        fn pick<T: Copy>(v: &[T], idx: &[usize]) -> Vec<T> {
            idx.iter().map(|&g| v[g]).collect()
        }
        Ok(GaussianScene {
            positions: pick(&self.positions, &idx),
            sh: pick(&self.sh, &idx),
            raw_opacities: pick(&self.raw_opacities, &idx),
            raw_scales: pick(&self.raw_scales, &idx),
            raw_rotations: pick(&self.raw_rotations, &idx),
            opacities: pick(&self.opacities, &idx),
            scales: pick(&self.scales, &idx),
            rotations: pick(&self.rotations, &idx),
            weights: pick(&self.weights, &idx),
        })
    }

    /// Copy of the scene with positions and scales mapped into the unit cube
    /// spanned by the position bounding box (uniform scaling, aspect kept).
    pub fn normalized_extent(&self) -> Self {
        let mut lo = [f32::INFINITY; 3];
        let mut hi = [f32::NEG_INFINITY; 3];
        for p in &self.positions {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let extent = (0..3).map(|a| hi[a] - lo[a]).fold(0.0f32, f32::max);
        if extent <= 0.0 {
            return self.clone();
        }
        let inv = 1.0 / extent;
        let mut out = self.clone();
        for p in &mut out.positions {
            for a in 0..3 {
                p[a] = (p[a] - lo[a]) * inv;
            }
        }
        let log_inv = f64::from(inv).ln();
        for (raw, s) in out.raw_scales.iter_mut().zip(out.scales.iter_mut()) {
            *raw = raw.map(|v| (f64::from(v) + log_inv) as f32);
            *s = s.map(|v| v * f64::from(inv));
        }
        out
    }
}

/// Pinhole camera with a world-to-camera pose.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub id: i64,
    pub image_name: String,
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// World-to-camera rotation.
    pub rotation: Matrix3<f64>,
    /// World-to-camera translation.
    pub translation: Vector3<f64>,
}

impl Camera {
    /// Camera at `position` looking at `target`, +y of the image pointing
    /// along `-up` (OpenCV convention: x right, y down, z forward).
    #[allow(clippy::too_many_arguments)]
    pub fn look_at(
        id: i64,
        image_name: impl Into<String>,
        width: usize,
        height: usize,
        focal: f64,
        position: Vector3<f64>,
        target: Vector3<f64>,
        up: Vector3<f64>,
    ) -> Self {
        let forward = (target - position).normalize();
        let right = forward.cross(&up).normalize();
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        Camera {
            id,
            image_name: image_name.into(),
            width,
            height,
            fx: focal,
            fy: focal,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            rotation,
            translation: -(rotation * position),
        }
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// Viewing direction (camera +z) in world coordinates.
    pub fn forward(&self) -> Vector3<f64> {
        self.rotation.row(2).transpose()
    }

    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }
}

/// Binary per-pixel map, row-major, `true` = foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, value: bool) -> Self {
        Mask {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: &[[usize; 2]]) -> Result<Self> {
        let mut mask = Mask::new(width, height, false);
        for &[x, y] in pixels {
            if x >= width || y >= height {
                return Err(Error::InvalidInput(format!(
                    "pixel ({x}, {y}) outside {width}x{height} image"
                )));
            }
            mask.bits[y * width + x] = true;
        }
        Ok(mask)
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Tight bounding box of the foreground as `(x0, y0, x1, y1)`, exclusive
    /// upper bounds.
    pub fn bbox(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bb: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    bb = Some(match bb {
                        None => (x, y, x + 1, y + 1),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x + 1), y1.max(y + 1)),
                    });
                }
            }
        }
        bb
    }

    /// Nearest-neighbor resample to `width` x `height`.
    pub fn resized(&self, width: usize, height: usize) -> Mask {
        if (width, height) == self.dims() {
            return self.clone();
        }
        let mut out = Mask::new(width, height, false);
        for y in 0..height {
            let sy = ((y as f64 + 0.5) * self.height as f64 / height as f64) as usize;
            let sy = sy.min(self.height - 1);
            for x in 0..width {
                let sx = ((x as f64 + 0.5) * self.width as f64 / width as f64) as usize;
                out.bits[y * width + x] = self.get(sx.min(self.width - 1), sy);
            }
        }
        out
    }
}

/// Float RGB image in [0, 1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[f64; 3]>,
}

impl Image {
    pub fn filled(width: usize, height: usize, color: [f64; 3]) -> Self {
        Image {
            width,
            height,
            pixels: vec![color; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn crop(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> Image {
        let mut pixels = Vec::with_capacity((x1 - x0) * (y1 - y0));
        for y in y0..y1 {
            pixels.extend_from_slice(&self.pixels[y * self.width + x0..y * self.width + x1]);
        }
        Image {
            width: x1 - x0,
            height: y1 - y0,
            pixels,
        }
    }
}

/// Which side of a partition to select.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Fg,
    Bg,
    All,
}

impl Side {
    pub fn selects(self, foreground: bool) -> bool {
        match self {
            Side::Fg => foreground,
            Side::Bg => !foreground,
            Side::All => true,
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fg" => Ok(Side::Fg),
            "bg" => Ok(Side::Bg),
            "all" => Ok(Side::All),
            other => Err(Error::InvalidInput(format!("unknown side '{other}' (fg|bg|all)"))),
        }
    }
}
