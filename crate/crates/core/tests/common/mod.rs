#![allow(dead_code)]

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splatcut::scene::SH_COEFFS;
use splatcut::{Camera, GaussianScene, Mask, RawGaussian};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Camera at the origin looking down +z.
pub fn front_camera(w: usize, h: usize, f: f64) -> Camera {
    Camera {
        id: 0,
        image_name: "front.png".into(),
        width: w,
        height: h,
        fx: f,
        fy: f,
        cx: w as f64 / 2.0,
        cy: h as f64 / 2.0,
        rotation: Matrix3::identity(),
        translation: Vector3::zeros(),
    }
}

pub fn random_gaussian(r: &mut impl Rng) -> RawGaussian {
    let mut sh = [0.0f32; SH_COEFFS];
    for v in sh.iter_mut() {
        *v = r.gen_range(-0.6..0.6);
    }
    let q = [0; 4].map(|_| r.gen_range(-1.0..1.0f64));
    let q = if q.iter().map(|v| v * v).sum::<f64>() < 1e-6 { [1.0, 0.0, 0.0, 0.0] } else { q };
    RawGaussian::from_activated(
        [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(3.0..8.0)],
        sh,
        r.gen_range(0.05..0.99),
        [0; 3].map(|_| r.gen_range(0.05..0.5)),
        q,
    )
}

/// `n` random Gaussians in front of [`front_camera`].
pub fn random_scene(r: &mut impl Rng, n: usize) -> GaussianScene {
    GaussianScene::from_raw((0..n).map(|_| random_gaussian(r)).collect::<Vec<_>>()).unwrap()
}

pub fn random_mask(r: &mut impl Rng, w: usize, h: usize, p: f64) -> Mask {
    Mask {
        width: w,
        height: h,
        bits: (0..w * h).map(|_| r.gen_bool(p)).collect(),
    }
}
