mod common;

use proptest::prelude::*;
use rand::Rng;
use splatcut::lift::{accumulate_weights, coarse_splat, scribble_seeds, LiftMode, LiftParams, UNANNOTATED_WEIGHT};
use splatcut::raster::{accumulate_contributions, Weighting};
use splatcut::Mask;

use common::{front_camera, random_mask, random_scene, rng};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn masked_never_exceeds_total(seed in any::<u64>(), p in 0.0f64..1.0) {
        let mut r = rng(seed);
        let scene = random_scene(&mut r, 40);
        let cam = front_camera(32, 32, 30.0);
        let mask = random_mask(&mut r, 32, 32, p);
        for weighting in [Weighting::Blend, Weighting::Indicator] {
            let c = accumulate_contributions(&scene, &cam, &mask, weighting).unwrap();
            for g in 0..scene.count() {
                prop_assert!(c.masked[g] <= c.total[g]);
                prop_assert!(c.masked[g] >= 0.0);
            }
        }
        let full = accumulate_contributions(&scene, &cam, &Mask::new(32, 32, true), Weighting::Blend).unwrap();
        prop_assert_eq!(&full.masked, &full.total);
    }

    #[test]
    fn weights_grow_with_the_mask(seed in any::<u64>(), hard in any::<bool>()) {
        let mut r = rng(seed);
        let mut scene = random_scene(&mut r, 40);
        let cam = front_camera(32, 32, 30.0);
        let small = random_mask(&mut r, 32, 32, 0.3);
        let mut big = small.clone();
        for b in big.bits.iter_mut() {
            *b |= r.gen_bool(0.3);
        }
        let params = LiftParams {
            mode: if hard { LiftMode::Hard } else { LiftMode::Soft },
            ..LiftParams::default()
        };
        let cams = [cam];
        let ws = accumulate_weights(&mut scene, &cams, &[small], &params).unwrap();
        let wb = accumulate_weights(&mut scene, &cams, &[big], &params).unwrap();
        for (a, b) in ws.iter().zip(&wb) {
            prop_assert!((0.0..=1.0).contains(a));
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn coarse_is_monotone_in_tau(w in proptest::collection::vec(0.0f64..=1.0, 1..200), t1 in 0.0f64..=1.0, t2 in 0.0f64..=1.0) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = coarse_splat(&w, lo);
        let b = coarse_splat(&w, hi);
        for (x, y) in a.labels.iter().zip(&b.labels) {
            prop_assert!(*x || !*y);
        }
    }
}

#[test]
fn weights_in_unit_interval_over_many_pairs() {
    let cam = front_camera(24, 24, 22.0);
    for seed in 0..200 {
        let mut r = rng(seed);
        let n = r.gen_range(1..30);
        let mut scene = random_scene(&mut r, n);
        let p = r.gen_range(0.0..1.0);
        let masks = [random_mask(&mut r, 24, 24, p)];
        let w = accumulate_weights(&mut scene, std::slice::from_ref(&cam), &masks, &LiftParams::default()).unwrap();
        assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(scene.weights(), w.as_slice());
    }
}

#[test]
fn multi_view_sum_equals_sum_of_views() {
    let mut r = rng(3);
    let mut scene = random_scene(&mut r, 30);
    let cams = [front_camera(32, 32, 30.0), front_camera(32, 32, 20.0)];
    let masks = [random_mask(&mut r, 32, 32, 0.5), random_mask(&mut r, 32, 32, 0.5)];
    let w = accumulate_weights(&mut scene, &cams, &masks, &LiftParams::default()).unwrap();
    let a = accumulate_contributions(&scene, &cams[0], &masks[0], Weighting::Blend).unwrap();
    let b = accumulate_contributions(&scene, &cams[1], &masks[1], Weighting::Blend).unwrap();
    for g in 0..scene.count() {
        let t = a.total[g] + b.total[g];
        let want = if t > 0.0 { (a.masked[g] + b.masked[g]) / t } else { 0.0 };
        assert!((w[g] - want).abs() < 1e-12);
    }
}

#[test]
fn lift_input_errors() {
    let mut scene = random_scene(&mut rng(1), 5);
    let cam = front_camera(16, 16, 16.0);
    let p = LiftParams::default();
    assert!(accumulate_weights(&mut scene, &[cam.clone()], &[], &p).is_err());
    assert!(accumulate_weights(&mut scene, &[cam], &[Mask::new(8, 8, true)], &p).is_err());
    assert!(accumulate_weights(&mut scene, &[], &[], &p).is_err());
}

#[test]
fn scribbles_seed_their_side() {
    let mut r = rng(12);
    let scene = random_scene(&mut r, 60);
    let cam = front_camera(32, 32, 30.0);
    let fg: Vec<[usize; 2]> = (0..16).flat_map(|y| (0..16).map(move |x| [x, y])).collect();
    let bg: Vec<[usize; 2]> = (16..32).flat_map(|y| (16..32).map(move |x| [x, y])).collect();
    let w = scribble_seeds(&scene, &cam, &fg, &bg).unwrap();
    assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
    assert!(w.iter().any(|&v| v > 0.95));
    assert!(w.iter().any(|&v| v < 0.05));

    // only foreground scribbles: every touched Gaussian is fully foreground
    let only = scribble_seeds(&scene, &cam, &fg, &[]).unwrap();
    assert!(only.iter().all(|&v| v == 1.0 || v == UNANNOTATED_WEIGHT));

    assert!(scribble_seeds(&scene, &cam, &[], &[]).is_err());
    assert!(scribble_seeds(&scene, &cam, &[[40, 0]], &[]).is_err());
    assert!(scribble_seeds(&scene, &cam, &[[3, 3]], &[[3, 3]]).is_err());
}
