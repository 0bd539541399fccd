//! Augmenting-path max-flow with reusable search trees (Boykov–Kolmogorov).
//!
//! Two trees grow from the terminals over residual arcs. When they touch, the
//! path through the touching arc is augmented; nodes whose parent arc
//! saturates become orphans and try to re-attach to their tree before being
//! freed. Node state follows the usual layout: a parent link, a tree tag, a
//! timestamp and a distance-to-terminal estimate used by the adoption
//! heuristic.

use std::collections::VecDeque;

use crate::graph::FlowGraph;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Parent {
    Free,
    Terminal,
    Orphan,
    Arc(usize),
}

struct Node {
    first: usize,
    parent: Parent,
    in_sink_tree: bool,
    /// Residual terminal capacity: `> 0` toward the source, `< 0` toward the sink.
    tr_cap: f64,
    ts: u64,
    dist: u64,
    queued: bool,
}

struct Arc {
    head: usize,
    next: usize,
    sister: usize,
    r_cap: f64,
}

pub struct Solver {
    nodes: Vec<Node>,
    arcs: Vec<Arc>,
    active: VecDeque<usize>,
    orphans: VecDeque<usize>,
    time: u64,
    flow: f64,
    augmentations: usize,
}

/// Max-flow value, minimum-cut labels (`true` = source side) and the number
/// of augmenting paths.
pub struct FlowResult {
    pub flow: f64,
    pub source_side: Vec<bool>,
    pub augmentations: usize,
}

impl Solver {
    pub fn new(graph: &FlowGraph) -> Self {
        let mut nodes: Vec<Node> = (0..graph.n)
            .map(|g| Node {
                first: NONE,
                parent: Parent::Free,
                in_sink_tree: false,
                tr_cap: graph.src_cap[g] - graph.sink_cap[g],
                ts: 0,
                dist: 0,
                queued: false,
            })
            .collect();
        let flow = (0..graph.n).map(|g| graph.src_cap[g].min(graph.sink_cap[g])).sum();
        let mut arcs = Vec::with_capacity(graph.nlinks.len() * 2);
        // insert in reverse so each adjacency list iterates in n-link order
        for &(u, v, cap) in graph.nlinks.iter().rev() {
            let a = arcs.len();
            arcs.push(Arc {
                head: v,
                next: nodes[u].first,
                sister: a + 1,
                r_cap: cap,
            });
            nodes[u].first = a;
            arcs.push(Arc {
                head: u,
                next: nodes[v].first,
                sister: a,
                r_cap: cap,
            });
            nodes[v].first = a + 1;
        }
        Solver {
            nodes,
            arcs,
            active: VecDeque::new(),
            orphans: VecDeque::new(),
            time: 0,
            flow,
            augmentations: 0,
        }
    }

    fn set_active(&mut self, i: usize) {
        if !self.nodes[i].queued {
            self.nodes[i].queued = true;
            self.active.push_back(i);
        }
    }

    fn next_active(&mut self) -> Option<usize> {
        while let Some(i) = self.active.pop_front() {
            self.nodes[i].queued = false;
            if self.nodes[i].parent != Parent::Free {
                return Some(i);
            }
        }
        None
    }

    fn arcs_of(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let mut a = self.nodes[i].first;
        std::iter::from_fn(move || {
            if a == NONE {
                return None;
            }
            let cur = a;
            a = self.arcs[a].next;
            Some(cur)
        })
    }

    fn orphan(&mut self, i: usize) {
        self.nodes[i].parent = Parent::Orphan;
        self.orphans.push_back(i);
    }

    pub fn solve(mut self) -> FlowResult {
        for i in 0..self.nodes.len() {
            let tr = self.nodes[i].tr_cap;
            if tr != 0.0 {
                self.nodes[i].in_sink_tree = tr < 0.0;
                self.nodes[i].parent = Parent::Terminal;
                self.nodes[i].dist = 1;
                self.set_active(i);
            }
        }

        let mut current: Option<usize> = None;
        loop {
            let i = match current.filter(|&i| self.nodes[i].parent != Parent::Free) {
                Some(i) => i,
                None => match self.next_active() {
                    Some(i) => i,
                    None => break,
                },
            };
            current = None;

            let bridge = self.grow(i);
            self.time += 1;
            if let Some(a) = bridge {
                // keep expanding from the same node after the augmentation
                current = Some(i);
                self.augment(a);
                self.adopt_orphans();
            }
        }

        let source_side = self.source_reachable();
        FlowResult {
            flow: self.flow,
            source_side,
            augmentations: self.augmentations,
        }
    }

    /// Expands node `i`; returns an arc from the source tree to the sink
    /// tree if the trees touch.
    fn grow(&mut self, i: usize) -> Option<usize> {
        let sink_side = self.nodes[i].in_sink_tree;
        let arcs: Vec<usize> = self.arcs_of(i).collect();
        for a in arcs {
            let residual = if sink_side {
                self.arcs[self.arcs[a].sister].r_cap
            } else {
                self.arcs[a].r_cap
            };
            if residual <= 0.0 {
                continue;
            }
            let j = self.arcs[a].head;
            if self.nodes[j].parent == Parent::Free {
                self.nodes[j].in_sink_tree = sink_side;
                self.nodes[j].parent = Parent::Arc(self.arcs[a].sister);
                self.nodes[j].ts = self.nodes[i].ts;
                self.nodes[j].dist = self.nodes[i].dist + 1;
                self.set_active(j);
            } else if self.nodes[j].in_sink_tree != sink_side {
                return Some(if sink_side { self.arcs[a].sister } else { a });
            } else if self.nodes[j].ts <= self.nodes[i].ts && self.nodes[j].dist > self.nodes[i].dist {
                self.nodes[j].parent = Parent::Arc(self.arcs[a].sister);
                self.nodes[j].ts = self.nodes[i].ts;
                self.nodes[j].dist = self.nodes[i].dist + 1;
            }
        }
        None
    }

    fn parent_arc(&self, i: usize) -> Option<usize> {
        match self.nodes[i].parent {
            Parent::Arc(a) => Some(a),
            _ => None,
        }
    }

    fn augment(&mut self, middle: usize) {
        let mut bottleneck = self.arcs[middle].r_cap;
        // source half: parent arcs point from child toward the source
        let mut i = self.arcs[self.arcs[middle].sister].head;
        while let Some(a) = self.parent_arc(i) {
            bottleneck = bottleneck.min(self.arcs[self.arcs[a].sister].r_cap);
            i = self.arcs[a].head;
        }
        bottleneck = bottleneck.min(self.nodes[i].tr_cap);
        let mut i = self.arcs[middle].head;
        while let Some(a) = self.parent_arc(i) {
            bottleneck = bottleneck.min(self.arcs[a].r_cap);
            i = self.arcs[a].head;
        }
        bottleneck = bottleneck.min(-self.nodes[i].tr_cap);

        let sister = self.arcs[middle].sister;
        self.arcs[sister].r_cap += bottleneck;
        self.arcs[middle].r_cap -= bottleneck;

        let mut i = self.arcs[sister].head;
        while let Some(a) = self.parent_arc(i) {
            let s = self.arcs[a].sister;
            self.arcs[a].r_cap += bottleneck;
            self.arcs[s].r_cap -= bottleneck;
            if self.arcs[s].r_cap <= 0.0 {
                self.arcs[s].r_cap = 0.0;
                self.orphan(i);
            }
            i = self.arcs[a].head;
        }
        self.nodes[i].tr_cap -= bottleneck;
        if self.nodes[i].tr_cap <= 0.0 {
            self.nodes[i].tr_cap = 0.0;
            self.orphan(i);
        }

        let mut i = self.arcs[middle].head;
        while let Some(a) = self.parent_arc(i) {
            let s = self.arcs[a].sister;
            self.arcs[s].r_cap += bottleneck;
            self.arcs[a].r_cap -= bottleneck;
            if self.arcs[a].r_cap <= 0.0 {
                self.arcs[a].r_cap = 0.0;
                self.orphan(i);
            }
            i = self.arcs[a].head;
        }
        self.nodes[i].tr_cap += bottleneck;
        if self.nodes[i].tr_cap >= 0.0 {
            self.nodes[i].tr_cap = 0.0;
            self.orphan(i);
        }

        self.flow += bottleneck;
        self.augmentations += 1;
    }

    fn adopt_orphans(&mut self) {
        while let Some(i) = self.orphans.pop_front() {
            self.adopt(i);
        }
    }

    /// Distance from `j` to its terminal following parent links, or `None`
    /// when the chain ends in an orphan. Caches distances with the current
    /// timestamp along the walk.
    fn origin_distance(&mut self, start: usize) -> Option<u64> {
        let mut j = start;
        let mut d = 0u64;
        loop {
            if self.nodes[j].ts == self.time {
                d += self.nodes[j].dist;
                break;
            }
            d += 1;
            match self.nodes[j].parent {
                Parent::Terminal => {
                    self.nodes[j].ts = self.time;
                    self.nodes[j].dist = 1;
                    break;
                }
                Parent::Orphan | Parent::Free => return None,
                Parent::Arc(a) => j = self.arcs[a].head,
            }
        }
        let mut j = start;
        let mut dd = d;
        while self.nodes[j].ts != self.time {
            self.nodes[j].ts = self.time;
            self.nodes[j].dist = dd;
            dd -= 1;
            j = match self.nodes[j].parent {
                Parent::Arc(a) => self.arcs[a].head,
                _ => break,
            };
        }
        Some(d)
    }

    fn adopt(&mut self, i: usize) {
        let sink_side = self.nodes[i].in_sink_tree;
        let arcs: Vec<usize> = self.arcs_of(i).collect();
        let mut best: Option<(usize, u64)> = None;
        for &a in &arcs {
            // residual capacity from the neighbor toward i (source tree) or
            // from i toward the neighbor (sink tree)
            let residual = if sink_side {
                self.arcs[a].r_cap
            } else {
                self.arcs[self.arcs[a].sister].r_cap
            };
            if residual <= 0.0 {
                continue;
            }
            let j = self.arcs[a].head;
            if self.nodes[j].in_sink_tree != sink_side || self.nodes[j].parent == Parent::Free {
                continue;
            }
            if let Some(d) = self.origin_distance(j) {
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((a, d));
                }
            }
        }

        if let Some((a, d)) = best {
            self.nodes[i].parent = Parent::Arc(a);
            self.nodes[i].ts = self.time;
            self.nodes[i].dist = d + 1;
            return;
        }

        self.nodes[i].parent = Parent::Free;
        for &a in &arcs {
            let j = self.arcs[a].head;
            if self.nodes[j].in_sink_tree != sink_side || self.nodes[j].parent == Parent::Free {
                continue;
            }
            let residual = if sink_side {
                self.arcs[a].r_cap
            } else {
                self.arcs[self.arcs[a].sister].r_cap
            };
            if residual > 0.0 {
                self.set_active(j);
            }
            if let Parent::Arc(pa) = self.nodes[j].parent {
                if self.arcs[pa].head == i {
                    self.orphan(j);
                }
            }
        }
    }

    /// Nodes reachable from the source in the residual graph.
    fn source_reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.tr_cap > 0.0 {
                seen[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            for a in self.arcs_of(i) {
                let j = self.arcs[a].head;
                if !seen[j] && self.arcs[a].r_cap > 0.0 {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen
    }
}
