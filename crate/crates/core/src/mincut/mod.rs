//! Exact s-t min-cut.

mod bk;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{energy, FlowGraph};

pub use bk::{FlowResult, Solver};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CutStats {
    pub augmentations: usize,
    pub runtime_ms: f64,
}

/// Foreground/background labels (`true` = foreground, source side) with the
/// cut value that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub labels: Vec<bool>,
    /// Max-flow value; zero for partitions not produced by a cut.
    pub flow_value: f64,
    /// Energy of `labels` on the graph they were evaluated against.
    pub energy: f64,
    pub stats: CutStats,
}

impl Partition {
    pub fn from_labels(labels: Vec<bool>) -> Self {
        Partition {
            labels,
            flow_value: 0.0,
            energy: 0.0,
            stats: CutStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_fg(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn n_bg(&self) -> usize {
        self.len() - self.n_fg()
    }

    /// Labels file contents: one `0`/`1` per line in index order.
    pub fn labels_text(&self) -> String {
        let mut s = String::with_capacity(self.len() * 2);
        for &l in &self.labels {
            s.push(if l { '1' } else { '0' });
            s.push('\n');
        }
        s
    }

    pub fn parse_labels(text: &str) -> Result<Vec<bool>> {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .enumerate()
            .map(|(i, l)| match l {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::InvalidInput(format!("labels line {}: expected 0 or 1, got '{other}'", i + 1))),
            })
            .collect()
    }
}

/// Maximum flow and the source-reachable side of the residual graph.
pub fn max_flow(graph: &FlowGraph) -> Result<Partition> {
    graph.validate()?;
    let start = Instant::now();
    let result = Solver::new(graph).solve();
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let energy = energy(&result.source_side, graph);
    Ok(Partition {
        labels: result.source_side,
        flow_value: result.flow,
        energy,
        stats: CutStats {
            augmentations: result.augmentations,
            runtime_ms,
        },
    })
}

pub const BRUTE_FORCE_MAX_NODES: usize = 20;

/// Exhaustive minimum over all 2^n labelings; ties go to the lexicographically
/// smallest label vector (`false < true`, node 0 first).
pub fn brute_force_mincut(graph: &FlowGraph) -> Result<Partition> {
    graph.validate()?;
    let n = graph.n;
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(Error::TooLarge(n));
    }
    let start = Instant::now();
    let mut labels = vec![false; n];
    let mut best = (f64::INFINITY, labels.clone());
    for code in 0u64..(1u64 << n) {
        for (i, l) in labels.iter_mut().enumerate() {
            *l = code >> (n - 1 - i) & 1 == 1;
        }
        let e = energy(&labels, graph);
        if e < best.0 {
            best = (e, labels.clone());
        }
    }
    Ok(Partition {
        labels: best.1,
        flow_value: best.0,
        energy: best.0,
        stats: CutStats {
            augmentations: 0,
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}
