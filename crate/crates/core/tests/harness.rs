use nalgebra::Vector3;
use splatcut::graph::build_knn;
use splatcut::harness::{
    boundary_band, make_gt_masks, make_orbit_cameras, make_two_cluster_scene, perturb_mask, run_sweep, spec_cameras,
    sweep_csv, Axis, SyntheticSpec,
};
use splatcut::metrics::render_fg_mask;
use splatcut::pipeline::{segment, SegmentParams, Seeds};

fn small_spec() -> SyntheticSpec {
    SyntheticSpec {
        n_per_cluster: 150,
        image_size: 64,
        focal: 100.0,
        n_views: 4,
        ..SyntheticSpec::default()
    }
}

#[test]
fn scenes_are_deterministic() {
    let spec = small_spec();
    let (a, la) = make_two_cluster_scene(&spec).unwrap();
    let (b, lb) = make_two_cluster_scene(&spec).unwrap();
    assert_eq!(la, lb);
    for g in 0..a.count() {
        assert_eq!(a.raw(g), b.raw(g));
    }
    let (c, _) = make_two_cluster_scene(&SyntheticSpec { seed: 1, ..spec }).unwrap();
    assert_ne!(a.raw(0), c.raw(0));
    for g in 0..a.count() {
        assert!((0.7 - 1e-6..=1.0).contains(&a.opacity(g)));
        assert!(a.scale(g).iter().all(|&s| (0.3 - 1e-6..=1.0 + 1e-6).contains(&s)));
    }
}

#[test]
fn separated_clusters_have_no_cross_edges() {
    let spec = SyntheticSpec {
        n_per_cluster: 400,
        ..SyntheticSpec::default()
    };
    assert_eq!(spec.separation, 10.0 * spec.scale_range.1);
    let (scene, labels) = make_two_cluster_scene(&spec).unwrap();
    let pts: Vec<[f64; 3]> = (0..scene.count())
        .map(|g| {
            let p = scene.position(g);
            [p.x, p.y, p.z]
        })
        .collect();
    let edges = build_knn(&pts, 10);
    assert!(!edges.is_empty());
    assert!(edges.iter().all(|&(u, v)| labels[u] == labels[v]));
}

#[test]
fn orbit_geometry() {
    let center = Vector3::new(1.0, 2.0, -3.0);
    let one = make_orbit_cameras(center, 7.0, 1, 32, 32, 30.0);
    let to_center = (center - one[0].center()).normalize();
    assert!((one[0].forward() - to_center).norm() < 1e-6);
    let p = one[0].to_camera(&center);
    assert!(p.x.abs() < 1e-6 && p.y.abs() < 1e-6);

    let cams = make_orbit_cameras(center, 7.0, 8, 32, 32, 30.0);
    for c in &cams {
        assert!(((c.center() - center).norm() - 7.0).abs() < 1e-9);
        assert!((c.center().y - center.y).abs() < 1e-12);
    }
    for i in 0..4 {
        assert!((cams[i].forward() + cams[i + 4].forward()).norm() < 1e-9);
    }
    let ids: Vec<i64> = cams.iter().map(|c| c.id).collect();
    assert!(ids.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn noise_flips_exactly_the_requested_band_fraction() {
    let spec = small_spec();
    let (scene, labels) = make_two_cluster_scene(&spec).unwrap();
    let cams = spec_cameras(&spec);
    let clean = make_gt_masks(&scene, &labels, &cams, 0.0, 3).unwrap();
    for (c, m) in cams.iter().zip(&clean) {
        assert_eq!(m, &render_fg_mask(&scene, &labels, c).unwrap());
    }
    let noisy = make_gt_masks(&scene, &labels, &cams, 0.05, 3).unwrap();
    for (c, n) in clean.iter().zip(&noisy) {
        let band = boundary_band(c);
        let flipped: Vec<usize> = (0..c.bits.len()).filter(|&i| c.bits[i] != n.bits[i]).collect();
        assert_eq!(flipped.len(), (0.05 * band.len() as f64).round() as usize);
        assert!(flipped.iter().all(|i| band.contains(i)));
    }
    assert_eq!(noisy, make_gt_masks(&scene, &labels, &cams, 0.05, 3).unwrap());
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
    assert_eq!(perturb_mask(&clean[0], 0.0, &mut rng), clean[0]);
}

#[test]
fn partition_is_identical_across_thread_counts() {
    let spec = SyntheticSpec {
        mask_noise: 0.05,
        ..small_spec()
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let (mut scene, labels) = make_two_cluster_scene(&spec).unwrap();
                let cams = spec_cameras(&spec);
                let masks = make_gt_masks(&scene, &labels, &cams, spec.mask_noise, spec.seed).unwrap();
                let params = splatcut::harness::bench_params();
                let seg = segment(&mut scene, &cams, Seeds::Masks(&masks), &params).unwrap();
                (seg.weights, seg.partition.labels, seg.partition.flow_value)
            })
    };
    let a = run(1);
    for threads in [2, 4] {
        assert_eq!(run(threads), a);
    }
}

#[test]
fn coarse_only_skips_the_graph() {
    let spec = small_spec();
    let (mut scene, labels) = make_two_cluster_scene(&spec).unwrap();
    let cams = spec_cameras(&spec);
    let masks = make_gt_masks(&scene, &labels, &cams, 0.0, 0).unwrap();
    let params = SegmentParams {
        coarse_only: true,
        ..SegmentParams::default()
    };
    let seg = segment(&mut scene, &cams, Seeds::Masks(&masks), &params).unwrap();
    assert!(seg.graph.is_none());
    assert_eq!(seg.partition.labels, seg.coarse.labels);
    assert_eq!(seg.summary.energy_cut, None);
}

#[test]
fn sweep_rows_and_csv() {
    let spec = SyntheticSpec {
        n_per_cluster: 60,
        image_size: 48,
        focal: 75.0,
        ..SyntheticSpec::default()
    };
    let params = splatcut::harness::bench_params();
    let rows = run_sweep(Axis::Neighbors, &spec, &params, &[0], false).unwrap();
    let values: Vec<&str> = rows.iter().filter(|r| r.method == "cut").map(|r| r.value.as_str()).collect();
    assert_eq!(values, ["1", "10", "50", "100"]);
    let csv = sweep_csv(&rows);
    assert!(csv.starts_with("axis,value,method,seed,gaussian_iou,mask_iou,acc,energy,runtime_ms\n"));
    assert_eq!(csv.lines().count(), 1 + 8);
    assert_eq!(csv, sweep_csv(&run_sweep(Axis::Neighbors, &spec, &params, &[0], false).unwrap()));
}
