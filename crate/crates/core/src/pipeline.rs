//! Lift → (coarse | graph + cut) end to end.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{assemble, energy, CutParams, FlowGraph};
use crate::lift::{accumulate_weights, coarse_splat, scribble_seeds_multi, LiftParams, Scribbles};
use crate::mincut::{max_flow, Partition};
use crate::scene::{Camera, GaussianScene, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentParams {
    #[serde(flatten)]
    pub lift: LiftParams,
    #[serde(flatten)]
    pub cut: CutParams,
    /// Threshold the likelihoods and skip the graph cut.
    pub coarse_only: bool,
}

impl SegmentParams {
    pub fn validate(&self) -> Result<()> {
        self.lift.validate()?;
        self.cut.validate()
    }
}

/// Where the per-Gaussian likelihoods come from.
#[derive(Debug, Clone, Copy)]
pub enum Seeds<'a> {
    /// One mask per camera, in camera order.
    Masks(&'a [Mask]),
    /// `(view index, scribbles)` pairs.
    Scribbles(&'a [(usize, Scribbles)]),
}

/// Per-Gaussian foreground likelihoods, also stored into `scene`.
pub fn lift_weights(scene: &mut GaussianScene, cameras: &[Camera], seeds: Seeds<'_>, lift: &LiftParams) -> Result<Vec<f64>> {
    match seeds {
        Seeds::Masks(masks) => accumulate_weights(scene, cameras, masks, lift),
        Seeds::Scribbles(views) => {
            lift.validate()?;
            let mut pairs = Vec::with_capacity(views.len());
            for (view, s) in views {
                let cam = cameras.get(*view).ok_or_else(|| {
                    Error::InvalidInput(format!("scribble view index {view} out of range ({} cameras)", cameras.len()))
                })?;
                pairs.push((cam, s));
            }
            let w = scribble_seeds_multi(scene, &pairs)?;
            scene.set_weights(w.clone())?;
            Ok(w)
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub lift: f64,
    pub graph: f64,
    pub cut: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub n_gaussians: usize,
    pub n_fg: usize,
    pub n_bg: usize,
    /// `None` in coarse-only mode.
    pub energy_cut: Option<f64>,
    /// Energy of the coarse labels on the cut's graph.
    pub energy_coarse: Option<f64>,
    pub flow_value: Option<f64>,
    pub augmentations: usize,
    pub runtime_ms: StageTimes,
    pub params: SegmentParams,
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub weights: Vec<f64>,
    pub coarse: Partition,
    /// The final partition: the cut, or the coarse labels in coarse-only mode.
    pub partition: Partition,
    pub graph: Option<FlowGraph>,
    pub summary: SegmentSummary,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn segment(scene: &mut GaussianScene, cameras: &[Camera], seeds: Seeds<'_>, params: &SegmentParams) -> Result<Segmentation> {
    params.validate()?;
    let start = Instant::now();
    let weights = lift_weights(scene, cameras, seeds, &params.lift)?;
    let lift_ms = ms_since(start);
    let mut coarse = coarse_splat(&weights, params.lift.tau);
    let mut times = StageTimes {
        lift: lift_ms,
        ..StageTimes::default()
    };

    let (partition, graph) = if params.coarse_only {
        (coarse.clone(), None)
    } else {
        let t = Instant::now();
        let graph = assemble(scene, &weights, &params.cut)?;
        times.graph = ms_since(t);
        let t = Instant::now();
        let cut = max_flow(&graph)?;
        times.cut = ms_since(t);
        coarse.energy = energy(&coarse.labels, &graph);
        (cut, Some(graph))
    };
    times.total = ms_since(start);

    let summary = SegmentSummary {
        n_gaussians: partition.len(),
        n_fg: partition.n_fg(),
        n_bg: partition.n_bg(),
        energy_cut: graph.as_ref().map(|_| partition.energy),
        energy_coarse: graph.as_ref().map(|_| coarse.energy),
        flow_value: graph.as_ref().map(|_| partition.flow_value),
        augmentations: partition.stats.augmentations,
        runtime_ms: times,
        params: *params,
    };
    Ok(Segmentation {
        weights,
        coarse,
        partition,
        graph,
        summary,
    })
}
