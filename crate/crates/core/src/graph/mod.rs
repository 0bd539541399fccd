//! s-t graph over Gaussians: kNN n-links, confident-node clusters, t-links,
//! and the two-label energy of a labeling.

mod kmeans;
mod knn;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::GaussianScene;

pub use kmeans::{kmeans, lloyd, seed_plus_plus, KMEANS_SEED};
pub use knn::{build_knn, dist2, knn_neighbors, KdTree};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CutParams {
    pub k: usize,
    pub gamma_pos: f64,
    pub gamma_col: f64,
    /// Weight of the pairwise term.
    pub lambda: f64,
    /// Weight of color similarity inside the pairwise term.
    pub lambda_n: f64,
    /// Weight of cluster similarity inside the unary term.
    pub lambda_u: f64,
    pub conf_hi: f64,
    pub conf_lo: f64,
    pub clusters_src: usize,
    pub clusters_sink: usize,
    /// Rescale positions to a unit bounding cube before building the graph.
    pub normalize_extent: bool,
}

impl Default for CutParams {
    fn default() -> Self {
        CutParams {
            k: 10,
            gamma_pos: 0.1,
            gamma_col: 1.0,
            lambda: 0.5,
            lambda_n: 1.0,
            lambda_u: 1.0,
            conf_hi: 0.95,
            conf_lo: 0.05,
            clusters_src: 1,
            clusters_sink: 4,
            normalize_extent: false,
        }
    }
}

impl CutParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.k < 1 {
            return bad("k must be >= 1".into());
        }
        for (name, v) in [
            ("gamma-pos", self.gamma_pos),
            ("gamma-col", self.gamma_col),
            ("lambda", self.lambda),
            ("lambda-n", self.lambda_n),
            ("lambda-u", self.lambda_u),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(0.0 <= self.conf_lo && self.conf_lo < self.conf_hi && self.conf_hi <= 1.0) {
            return bad(format!(
                "confidence thresholds must satisfy 0 <= conf-lo < conf-hi <= 1, got {} and {}",
                self.conf_lo, self.conf_hi
            ));
        }
        if self.clusters_src < 1 || self.clusters_sink < 1 {
            return bad("cluster counts must be >= 1".into());
        }
        Ok(())
    }
}

/// Nodes with terminal capacities and undirected n-links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowGraph {
    pub n: usize,
    /// Paid when the node is labeled background.
    pub src_cap: Vec<f64>,
    /// Paid when the node is labeled foreground.
    pub sink_cap: Vec<f64>,
    /// `(u, v, capacity)` with `u < v`.
    pub nlinks: Vec<(usize, usize, f64)>,
}

impl FlowGraph {
    pub fn validate(&self) -> Result<()> {
        if self.src_cap.len() != self.n || self.sink_cap.len() != self.n {
            return Err(Error::InvalidInput("terminal capacity vectors must have length n".into()));
        }
        let ok = |c: f64| c.is_finite() && c >= 0.0;
        if let Some(g) = (0..self.n).find(|&g| !ok(self.src_cap[g]) || !ok(self.sink_cap[g])) {
            return Err(Error::InvalidInput(format!("node {g} has an invalid terminal capacity")));
        }
        let mut seen = std::collections::HashSet::new();
        for &(u, v, c) in &self.nlinks {
            if u >= v || v >= self.n {
                return Err(Error::InvalidInput(format!("n-link ({u}, {v}) must satisfy u < v < n")));
            }
            if !ok(c) {
                return Err(Error::InvalidInput(format!("n-link ({u}, {v}) has invalid capacity {c}")));
            }
            if !seen.insert((u, v)) {
                return Err(Error::InvalidInput(format!("duplicate n-link ({u}, {v})")));
            }
        }
        Ok(())
    }
}

/// Energy of a labeling (`true` = foreground): the s-t cut value it induces.
pub fn energy(labels: &[bool], graph: &FlowGraph) -> f64 {
    assert_eq!(labels.len(), graph.n, "label vector length must equal node count");
    let unary: f64 = labels
        .iter()
        .enumerate()
        .map(|(g, &fg)| if fg { graph.sink_cap[g] } else { graph.src_cap[g] })
        .sum();
    let pairwise: f64 = graph
        .nlinks
        .iter()
        .filter(|&&(u, v, _)| labels[u] != labels[v])
        .map(|&(_, _, c)| c)
        .sum();
    unary + pairwise
}

/// `exp(-gamma * |x - y|^2)`.
pub fn similarity(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    assert_eq!(x.len(), y.len());
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

/// Position and DC color of a node or cluster centroid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub position: [f64; 3],
    pub color: [f64; 3],
}

/// Pairwise similarity: position term plus `lambda_n`-weighted color term.
pub fn pair_similarity(a: &Descriptor, b: &Descriptor, params: &CutParams) -> f64 {
    similarity(&a.position, &b.position, params.gamma_pos)
        + params.lambda_n * similarity(&a.color, &b.color, params.gamma_col)
}

pub fn descriptors(scene: &GaussianScene, normalize_extent: bool) -> Vec<Descriptor> {
    let normalized;
    let scene = if normalize_extent {
        normalized = scene.normalized_extent();
        &normalized
    } else {
        scene
    };
    (0..scene.count())
        .map(|g| {
            let p = scene.position(g);
            Descriptor {
                position: [p.x, p.y, p.z],
                color: scene.dc(g),
            }
        })
        .collect()
}

/// N-link capacity before the `lambda` factor.
pub fn nlink_weight(g: usize, h: usize, scene: &GaussianScene, params: &CutParams) -> f64 {
    assert_ne!(g, h);
    let d = descriptors(scene, params.normalize_extent);
    pair_similarity(&d[g], &d[h], params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    Source,
    Sink,
}

impl Terminal {
    fn name(self) -> &'static str {
        match self {
            Terminal::Source => "source",
            Terminal::Sink => "sink",
        }
    }
}

/// k-means centroids of high-confidence nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub centroids: Vec<Descriptor>,
    pub member_counts: Vec<usize>,
}

fn cluster_descriptors(nodes: &[Descriptor], weights: &[f64], params: &CutParams, side: Terminal) -> Result<ClusterSet> {
    let (members, k): (Vec<usize>, usize) = match side {
        Terminal::Source => (
            (0..nodes.len()).filter(|&g| weights[g] >= params.conf_hi).collect(),
            params.clusters_src,
        ),
        Terminal::Sink => (
            (0..nodes.len()).filter(|&g| weights[g] <= params.conf_lo).collect(),
            params.clusters_sink,
        ),
    };
    if members.is_empty() {
        return Err(Error::NoConfidentSeeds(side.name()));
    }
    let points: Vec<[f64; 3]> = members.iter().map(|&g| nodes[g].position).collect();
    let (centers, assign) = kmeans(&points, k);
    let mut color = vec![[0.0; 3]; centers.len()];
    let mut counts = vec![0usize; centers.len()];
    for (&g, &a) in members.iter().zip(&assign) {
        for c in 0..3 {
            color[a][c] += nodes[g].color[c];
        }
        counts[a] += 1;
    }
    let centroids = centers
        .iter()
        .zip(&color)
        .zip(&counts)
        .map(|((&position, col), &n)| Descriptor {
            position,
            color: col.map(|v| v / n as f64),
        })
        .collect();
    Ok(ClusterSet {
        centroids,
        member_counts: counts,
    })
}

/// Clusters the confident nodes of one side (`w >= conf_hi` for the
/// source, `w <= conf_lo` for the sink) by position.
pub fn cluster_confident(scene: &GaussianScene, w: &[f64], params: &CutParams, side: Terminal) -> Result<ClusterSet> {
    cluster_descriptors(&descriptors(scene, params.normalize_extent), w, params, side)
}

fn nearest_centroid<'a>(d: &Descriptor, clusters: &'a ClusterSet) -> &'a Descriptor {
    let mut best = &clusters.centroids[0];
    let mut best_d = f64::INFINITY;
    for c in &clusters.centroids {
        let dd = dist2(&d.position, &c.position);
        if dd < best_d {
            best_d = dd;
            best = c;
        }
    }
    best
}

fn tlinks_of(d: &Descriptor, w: f64, src: &ClusterSet, sink: &ClusterSet, params: &CutParams) -> (f64, f64) {
    let gf = nearest_centroid(d, src);
    let gb = nearest_centroid(d, sink);
    (
        w + params.lambda_u * pair_similarity(d, gf, params),
        (1.0 - w) + params.lambda_u * pair_similarity(d, gb, params),
    )
}

/// `(source, sink)` capacities of node `g`.
pub fn tlink_weights(
    g: usize,
    scene: &GaussianScene,
    w: &[f64],
    src_clusters: &ClusterSet,
    sink_clusters: &ClusterSet,
    params: &CutParams,
) -> (f64, f64) {
    let d = descriptors(scene, params.normalize_extent);
    tlinks_of(&d[g], w[g], src_clusters, sink_clusters, params)
}

/// Builds the full s-t graph for likelihoods `w`.
pub fn assemble(scene: &GaussianScene, w: &[f64], params: &CutParams) -> Result<FlowGraph> {
    params.validate()?;
    if w.len() != scene.count() {
        return Err(Error::InvalidInput(format!(
            "weight vector has {} entries, scene has {} Gaussians",
            w.len(),
            scene.count()
        )));
    }
    let nodes = descriptors(scene, params.normalize_extent);
    let src = cluster_descriptors(&nodes, w, params, Terminal::Source)?;
    let sink = cluster_descriptors(&nodes, w, params, Terminal::Sink)?;
    let points: Vec<[f64; 3]> = nodes.iter().map(|d| d.position).collect();
    let nlinks = if nodes.len() >= 2 {
        build_knn(&points, params.k)
            .into_par_iter()
            .map(|(u, v)| (u, v, params.lambda * pair_similarity(&nodes[u], &nodes[v], params)))
            .collect()
    } else {
        Vec::new()
    };
    let (src_cap, sink_cap): (Vec<f64>, Vec<f64>) = nodes
        .par_iter()
        .zip(w.par_iter())
        .map(|(d, &wg)| tlinks_of(d, wg, &src, &sink, params))
        .unzip();
    Ok(FlowGraph {
        n: nodes.len(),
        src_cap,
        sink_cap,
        nlinks,
    })
}
