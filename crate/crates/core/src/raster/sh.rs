//! Real spherical harmonics color evaluation (degree <= 3).

use nalgebra::Vector3;

use crate::scene::SH_COEFFS;

const C0: f64 = 0.282_094_791_773_878_14;
const C1: f64 = 0.488_602_511_902_919_9;
const C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// Basis function values for bases `0..16` at unit direction `dir`.
pub fn sh_basis(dir: &Vector3<f64>) -> [f64; 16] {
    let (x, y, z) = (dir.x, dir.y, dir.z);
    let (xx, yy, zz) = (x * x, y * y, z * z);
    [
        C0,
        -C1 * y,
        C1 * z,
        -C1 * x,
        C2[0] * x * y,
        C2[1] * y * z,
        C2[2] * (2.0 * zz - xx - yy),
        C2[3] * x * z,
        C2[4] * (xx - yy),
        C3[0] * y * (3.0 * xx - yy),
        C3[1] * x * y * z,
        C3[2] * y * (4.0 * zz - xx - yy),
        C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
        C3[4] * x * (4.0 * zz - xx - yy),
        C3[5] * z * (xx - yy),
        C3[6] * x * (xx - 3.0 * yy),
    ]
}

/// RGB color of basis-major coefficients seen along `dir`, with the 0.5
/// offset and clamped to [0, 1].
pub fn eval_sh(coeffs: &[f32; SH_COEFFS], dir: &Vector3<f64>, degree: usize) -> [f64; 3] {
    let degree = degree.min(3);
    let n_bases = (degree + 1) * (degree + 1);
    let basis = sh_basis(dir);
    let mut rgb = [0.5; 3];
    for (k, b) in basis.iter().enumerate().take(n_bases) {
        for (c, out) in rgb.iter_mut().enumerate() {
            *out += b * f64::from(coeffs[k * 3 + c]);
        }
    }
    rgb.map(|v| v.clamp(0.0, 1.0))
}

/// DC coefficient producing `rgb` at degree 0.
pub fn rgb_to_dc(rgb: f64) -> f64 {
    (rgb - 0.5) / C0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_dc_is_gray() {
        let c = [0f32; SH_COEFFS];
        assert_eq!(eval_sh(&c, &Vector3::z(), 0), [0.5; 3]);
    }

    #[test]
    fn degree_zero_direction_free() {
        let mut c = [0f32; SH_COEFFS];
        c[..3].copy_from_slice(&[0.3, -0.7, 1.1]);
        c[3..].iter_mut().enumerate().for_each(|(i, v)| *v = (i as f32 * 0.37).sin());
        let a = eval_sh(&c, &Vector3::new(0.0, 0.6, 0.8), 0);
        let b = eval_sh(&c, &Vector3::new(-1.0, 0.0, 0.0), 0);
        assert_eq!(a, b);
    }

    #[test]
    fn dc_round_trip() {
        let mut c = [0f32; SH_COEFFS];
        c[0] = rgb_to_dc(0.8) as f32;
        assert!((eval_sh(&c, &Vector3::x(), 3)[0] - 0.8).abs() < 1e-6);
    }
}
