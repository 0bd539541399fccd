//! EWA projection of 3D Gaussians to screen-space splats.

use nalgebra::{Matrix2x3, Matrix3, Vector3};

use crate::raster::sh::eval_sh;
use crate::scene::{Camera, GaussianScene};

pub const NEAR_CLIP: f64 = 0.2;
/// Low-pass dilation added to the diagonal of the screen-space covariance.
pub const DILATION: f64 = 0.3;
pub const TILE_SIZE: usize = 16;

/// Screen-space footprint of one Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct Splat2D {
    pub gaussian_index: usize,
    /// Pixel coordinates; pixel `(x, y)` has its center at `(x + 0.5, y + 0.5)`.
    pub mean2d: [f64; 2],
    /// Screen covariance before inversion, `(a, b, c)` of `[[a, b], [b, c]]`.
    pub cov2d: [f64; 3],
    /// Upper triangle of the inverted screen covariance.
    pub conic: [f64; 3],
    pub radius: f64,
    pub depth: f64,
    pub color: [f64; 3],
    pub opacity: f64,
    /// Inclusive lower tile corner.
    pub tile_min: [usize; 2],
    /// Exclusive upper tile corner.
    pub tile_max: [usize; 2],
}

impl Splat2D {
    pub fn covers_tile(&self, tx: usize, ty: usize) -> bool {
        (self.tile_min[0]..self.tile_max[0]).contains(&tx) && (self.tile_min[1]..self.tile_max[1]).contains(&ty)
    }
}

/// Rotation matrix of a unit quaternion `(w, x, y, z)`.
pub fn quat_to_matrix(q: [f64; 4]) -> Matrix3<f64> {
    let [w, x, y, z] = q;
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// `R diag(s)^2 R^T`.
pub fn compute_cov3d(s: [f64; 3], r: [f64; 4]) -> Matrix3<f64> {
    let m = quat_to_matrix(r) * Matrix3::from_diagonal(&Vector3::from(s));
    m * m.transpose()
}

pub fn tile_grid(cam: &Camera) -> (usize, usize) {
    (cam.width.div_ceil(TILE_SIZE), cam.height.div_ceil(TILE_SIZE))
}

/// Projects Gaussian `g`; `None` when it is culled.
pub fn project_gaussian(g: usize, scene: &GaussianScene, cam: &Camera) -> Option<Splat2D> {
    let mu = scene.position(g);
    let t = cam.to_camera(&mu);
    if t.z <= NEAR_CLIP {
        return None;
    }
    let (fx, fy) = (cam.fx, cam.fy);
    let jac = Matrix2x3::new(
        fx / t.z,
        0.0,
        -fx * t.x / (t.z * t.z),
        0.0,
        fy / t.z,
        -fy * t.y / (t.z * t.z),
    );
    let cov3d = compute_cov3d(scene.scale(g), scene.rotation(g));
    let jw = jac * cam.rotation;
    let cov = jw * cov3d * jw.transpose();
    let (a, b, c) = (cov[(0, 0)] + DILATION, cov[(0, 1)], cov[(1, 1)] + DILATION);
    let det = a * c - b * b;
    if !(det > 0.0) {
        return None;
    }
    let conic = [c / det, -b / det, a / det];
    let mid = 0.5 * (a + c);
    let lambda_max = mid + (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let radius = (3.0 * lambda_max.sqrt()).ceil();
    let mean2d = [fx * t.x / t.z + cam.cx, fy * t.y / t.z + cam.cy];

    let (gx, gy) = tile_grid(cam);
    // tile bounds in pixel-index space, where pixel centers sit on integers
    let (px, py) = (mean2d[0] - 0.5, mean2d[1] - 0.5);
    let tile = TILE_SIZE as f64;
    let lo = |p: f64, n: usize| (((p - radius) / tile).floor().max(0.0) as usize).min(n);
    let hi = |p: f64, n: usize| (((p + radius + tile - 1.0) / tile).floor().max(0.0) as usize).min(n);
    let tile_min = [lo(px, gx), lo(py, gy)];
    let tile_max = [hi(px, gx), hi(py, gy)];
    if tile_min[0] >= tile_max[0] || tile_min[1] >= tile_max[1] {
        return None;
    }

    let dir = (mu - cam.center()).normalize();
    Some(Splat2D {
        gaussian_index: g,
        mean2d,
        cov2d: [a, b, c],
        conic,
        radius,
        depth: t.z,
        color: eval_sh(scene.sh(g), &dir, 3),
        opacity: scene.opacity(g),
        tile_min,
        tile_max,
    })
}
