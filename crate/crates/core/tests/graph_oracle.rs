mod common;

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::Rng;
use splatcut::graph::{assemble, build_knn, cluster_confident, energy, knn_neighbors, CutParams, FlowGraph, Terminal};
use splatcut::mincut::{brute_force_mincut, max_flow};

use common::{random_scene, rng};

fn exhaustive_knn(points: &[[f64; 3]], i: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = (0..points.len())
        .filter(|&j| j != i)
        .map(|j| {
            let d: f64 = (0..3).map(|a| (points[i][a] - points[j][a]).powi(2)).sum();
            (d, j)
        })
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, j)| j).collect()
}

#[test]
fn knn_matches_exhaustive_scan() {
    for seed in 0..5 {
        let mut r = rng(seed);
        let pts: Vec<[f64; 3]> = (0..400).map(|_| [0; 3].map(|_| r.gen_range(-5.0..5.0))).collect();
        let got = knn_neighbors(&pts, 10);
        for i in 0..pts.len() {
            assert_eq!(got[i], exhaustive_knn(&pts, i, 10), "seed {seed} point {i}");
        }
    }
}

#[test]
fn knn_ties_on_lattice() {
    // integer lattice: many equidistant neighbors, broken by index
    let pts: Vec<[f64; 3]> = (0..4)
        .flat_map(|x| (0..4).flat_map(move |y| (0..4).map(move |z| [x as f64, y as f64, z as f64])))
        .collect();
    let got = knn_neighbors(&pts, 7);
    for i in 0..pts.len() {
        assert_eq!(got[i], exhaustive_knn(&pts, i, 7));
    }
}

#[test]
fn knn_edges_symmetric_and_unique() {
    let mut r = rng(9);
    let pts: Vec<[f64; 3]> = (0..300).map(|_| [0; 3].map(|_| r.gen_range(0.0..1.0))).collect();
    let edges = build_knn(&pts, 6);
    let nbrs = knn_neighbors(&pts, 6);
    let mut expect: Vec<(usize, usize)> = nbrs
        .iter()
        .enumerate()
        .flat_map(|(i, ns)| ns.iter().map(move |&j| if i < j { (i, j) } else { (j, i) }))
        .collect();
    expect.sort();
    expect.dedup();
    assert_eq!(edges, expect);
    assert!(edges.iter().all(|&(u, v)| u < v));
}

fn random_graph(r: &mut impl Rng, n: usize) -> FlowGraph {
    let mut nlinks = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if r.gen_bool(0.3) {
                nlinks.push((u, v, r.gen_range(0.0..10.0)));
            }
        }
    }
    FlowGraph {
        n,
        src_cap: (0..n).map(|_| r.gen_range(0.0..10.0)).collect(),
        sink_cap: (0..n).map(|_| r.gen_range(0.0..10.0)).collect(),
        nlinks,
    }
}

/// Cut value of the labeling, computed edge by edge over the directed s-t
/// network: s->g is cut when g is background, g->t when g is foreground,
/// and an n-link in either direction when its ends differ.
fn cut_value(labels: &[bool], g: &FlowGraph) -> f64 {
    let mut c = 0.0;
    for i in 0..g.n {
        if !labels[i] {
            c += g.src_cap[i];
        } else {
            c += g.sink_cap[i];
        }
    }
    for &(u, v, w) in &g.nlinks {
        if labels[u] && !labels[v] || !labels[u] && labels[v] {
            c += w;
        }
    }
    c
}

#[test]
fn energy_matches_cut_value() {
    let mut r = rng(21);
    for _ in 0..200 {
        let n = r.gen_range(1..12);
        let g = random_graph(&mut r, n);
        let labels: Vec<bool> = (0..n).map(|_| r.gen_bool(0.5)).collect();
        assert_relative_eq!(energy(&labels, &g), cut_value(&labels, &g), max_relative = 1e-12);
    }
}

#[test]
fn max_flow_equals_brute_force() {
    let mut r = rng(1234);
    for trial in 0..150 {
        let n = r.gen_range(1..=12);
        let g = random_graph(&mut r, n);
        let exact = brute_force_mincut(&g).unwrap();
        let flow = max_flow(&g).unwrap();
        let tol = 1e-9 * exact.energy.max(1.0);
        assert!((flow.flow_value - exact.energy).abs() <= tol, "trial {trial}: {} vs {}", flow.flow_value, exact.energy);
        assert!((energy(&flow.labels, &g) - flow.flow_value).abs() <= tol);
    }
}

#[test]
fn assembled_capacities_follow_formula() {
    let scene = random_scene(&mut rng(77), 120);
    let mut r = rng(78);
    let w: Vec<f64> = (0..scene.count())
        .map(|_| if r.gen_bool(0.5) { r.gen_range(0.96..1.0) } else { r.gen_range(0.0..0.04) })
        .collect();
    let params = CutParams::default();
    let graph = assemble(&scene, &w, &params).unwrap();
    let src = cluster_confident(&scene, &w, &params, Terminal::Source).unwrap();
    let sink = cluster_confident(&scene, &w, &params, Terminal::Sink).unwrap();
    assert_eq!(src.centroids.len(), 1);
    assert!(sink.centroids.len() <= 4);

    let psi = |p: [f64; 3], c: [f64; 3], q: [f64; 3], d: [f64; 3]| {
        let dp: f64 = (0..3).map(|i| (p[i] - q[i]).powi(2)).sum();
        let dc: f64 = (0..3).map(|i| (c[i] - d[i]).powi(2)).sum();
        (-params.gamma_pos * dp).exp() + params.lambda_n * (-params.gamma_col * dc).exp()
    };
    let pos = |g: usize| {
        let p = scene.position(g);
        [p.x, p.y, p.z]
    };
    for &(u, v, c) in &graph.nlinks {
        let want = params.lambda * psi(pos(u), scene.dc(u), pos(v), scene.dc(v));
        assert_relative_eq!(c, want, max_relative = 1e-12);
    }
    for g in 0..scene.count() {
        let nearest = |cs: &splatcut::graph::ClusterSet| {
            cs.centroids
                .iter()
                .min_by(|a, b| {
                    let da: f64 = (0..3).map(|i| (a.position[i] - pos(g)[i]).powi(2)).sum();
                    let db: f64 = (0..3).map(|i| (b.position[i] - pos(g)[i]).powi(2)).sum();
                    da.total_cmp(&db)
                })
                .copied()
                .unwrap()
        };
        let (f, b) = (nearest(&src), nearest(&sink));
        let want_src = w[g] + params.lambda_u * psi(pos(g), scene.dc(g), f.position, f.color);
        let want_sink = 1.0 - w[g] + params.lambda_u * psi(pos(g), scene.dc(g), b.position, b.color);
        assert_relative_eq!(graph.src_cap[g], want_src, max_relative = 1e-12);
        assert_relative_eq!(graph.sink_cap[g], want_sink, max_relative = 1e-12);
    }
}

#[test]
fn missing_confident_side_is_reported() {
    let scene = random_scene(&mut rng(4), 20);
    let w = vec![0.5; 20];
    let err = assemble(&scene, &w, &CutParams::default()).unwrap_err();
    assert!(err.to_string().contains("source"), "{err}");
    let mut w = vec![1.0; 20];
    w[0] = 0.5;
    let err = assemble(&scene, &w, &CutParams::default()).unwrap_err();
    assert!(err.to_string().contains("sink"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_scales_linearly(seed in any::<u64>(), n in 1usize..40, scale in 0.1f64..20.0) {
        let g = random_graph(&mut rng(seed), n);
        let mut h = g.clone();
        h.src_cap.iter_mut().for_each(|c| *c *= scale);
        h.sink_cap.iter_mut().for_each(|c| *c *= scale);
        h.nlinks.iter_mut().for_each(|e| e.2 *= scale);
        let (a, b) = (max_flow(&g).unwrap(), max_flow(&h).unwrap());
        prop_assert!((b.flow_value - scale * a.flow_value).abs() <= 1e-9 * b.flow_value.max(1.0));
    }

    #[test]
    fn no_labeling_beats_the_cut(seed in any::<u64>(), n in 1usize..60) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n);
        let cut = max_flow(&g).unwrap();
        prop_assert!((cut.energy - cut.flow_value).abs() <= 1e-9 * cut.flow_value.max(1.0));
        for _ in 0..20 {
            let labels: Vec<bool> = (0..n).map(|_| r.gen_bool(0.5)).collect();
            prop_assert!(energy(&labels, &g) >= cut.flow_value - 1e-9 * cut.flow_value.max(1.0));
        }
        let all_fg = energy(&vec![true; n], &g);
        let all_bg = energy(&vec![false; n], &g);
        prop_assert!(cut.flow_value <= all_fg.min(all_bg) + 1e-9);
    }

    #[test]
    fn flow_solver_is_deterministic(seed in any::<u64>(), n in 1usize..50) {
        let g = random_graph(&mut rng(seed), n);
        prop_assert_eq!(max_flow(&g).unwrap().labels, max_flow(&g).unwrap().labels);
    }
}
