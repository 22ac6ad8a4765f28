//! Yule processes and the continuous-time branching process whose stopped
//! tree is the local weak limit of DPA(m, β).
//!
//! In `B^{(m-1+β)}` every individual with `d` children gives birth at rate
//! `d + m + β`. Observed at an independent `τ ~ Exp(2 + β/m)`, the tree of
//! individuals (edges pointing to parents) has the law of the limit graph
//! seen from a uniformly chosen vertex.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::check_m_beta;
use crate::rng::{sample_exponential, RngState};

pub const DEFAULT_MAX_NODES: usize = 100_000_000;

/// Arrival times in `(0, horizon]` of an `offset`-Yule process: after `j`
/// births the next one comes at rate `j + 1 + offset`.
pub fn simulate_yule(offset: f64, horizon: f64, rng: &mut RngState) -> Result<Vec<f64>> {
    if !(offset.is_finite() && offset >= 0.0) {
        return Err(Error::param(format!(
            "Yule offset must be finite and >= 0, got {offset}"
        )));
    }
    if !(horizon >= 0.0) {
        return Err(Error::param("horizon must be >= 0"));
    }
    let mut times = Vec::new();
    let mut t = 0.0;
    loop {
        t += rng.exp1() / (times.len() as f64 + 1.0 + offset);
        if t > horizon {
            return Ok(times);
        }
        times.push(t);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtbpNode {
    pub parent: Option<u32>,
    pub birth_time: f64,
    pub depth: u32,
}

/// A realized branching-process tree, nodes in birth order (root first).
#[derive(Clone, Debug)]
pub struct CtbpTree {
    pub m: usize,
    pub beta: f64,
    pub nodes: Vec<CtbpNode>,
    pub horizon: f64,
}

impl CtbpTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root_in_degree(&self) -> u64 {
        self.nodes.iter().filter(|n| n.depth == 1).count() as u64
    }

    /// Number of children of each node.
    pub fn child_counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.nodes.len()];
        for node in &self.nodes {
            if let Some(p) = node.parent {
                counts[p as usize] += 1;
            }
        }
        counts
    }

    /// Birth times of the children of `node`, in order.
    pub fn children_birth_times(&self, node: usize) -> Vec<f64> {
        self.nodes
            .iter()
            .filter(|n| n.parent == Some(node as u32))
            .map(|n| n.birth_time)
            .collect()
    }

    /// The subtree of individuals born by time `t`.
    pub fn observed_at(&self, t: f64) -> CtbpTree {
        let cut = self.nodes.partition_point(|n| n.birth_time <= t);
        CtbpTree {
            m: self.m,
            beta: self.beta,
            nodes: self.nodes[..cut].to_vec(),
            horizon: t,
        }
    }

    /// Writes `node,parent,birth_time,depth`; the root's parent is empty.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["node", "parent", "birth_time", "depth"])?;
        for (i, n) in self.nodes.iter().enumerate() {
            let parent = n.parent.map(|p| p.to_string()).unwrap_or_default();
            out.write_record([
                i.to_string(),
                parent,
                n.birth_time.to_string(),
                n.depth.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// One birth in an event-driven run: who gave birth, when, and the rate its
/// clock was running at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BirthEvent {
    pub time: f64,
    pub parent: u32,
    pub parent_children_before: u32,
    pub rate: f64,
}

#[derive(Clone, Copy, Debug)]
struct Pending {
    time: f64,
    seq: u64,
    node: u32,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // Reversed so the max-heap pops the earliest event; equal times go in
    // insertion order.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

enum Stop {
    Horizon(f64),
    Population(usize),
}

struct EventSim<'a> {
    rate_offset: f64,
    /// Offset of the root once it has a child; differs from `rate_offset`
    /// only in the discrete-tree embedding.
    root_offset: f64,
    nodes: Vec<CtbpNode>,
    children: Vec<u32>,
    queue: BinaryHeap<Pending>,
    seq: u64,
    max_nodes: usize,
    log: Option<&'a mut Vec<BirthEvent>>,
}

impl<'a> EventSim<'a> {
    fn new(rate_offset: f64, max_nodes: usize, log: Option<&'a mut Vec<BirthEvent>>) -> Self {
        EventSim {
            rate_offset,
            root_offset: rate_offset,
            nodes: vec![CtbpNode {
                parent: None,
                birth_time: 0.0,
                depth: 0,
            }],
            children: vec![0],
            queue: BinaryHeap::new(),
            seq: 0,
            max_nodes,
            log,
        }
    }

    fn rate(&self, node: u32) -> f64 {
        let children = self.children[node as usize];
        let offset = if node == 0 && children > 0 {
            self.root_offset
        } else {
            self.rate_offset
        };
        children as f64 + offset
    }

    fn schedule(&mut self, node: u32, now: f64, rng: &mut RngState) {
        let rate = self.rate(node);
        let time = now + rng.exp1() / rate;
        self.queue.push(Pending {
            time,
            seq: self.seq,
            node,
        });
        self.seq += 1;
    }

    /// Runs until the stop condition; returns the observation time.
    fn run(
        &mut self,
        stop: Stop,
        rng: &mut RngState,
        mut on_birth: impl FnMut(f64),
    ) -> Result<f64> {
        self.schedule(0, 0.0, rng);
        if let Stop::Population(1) = stop {
            return Ok(0.0);
        }
        while let Some(ev) = self.queue.pop() {
            if let Stop::Horizon(h) = stop {
                if ev.time > h {
                    return Ok(h);
                }
            }
            if self.nodes.len() >= self.max_nodes {
                return Err(Error::Resource {
                    cap: self.max_nodes,
                });
            }
            let parent = ev.node as usize;
            let rate = self.rate(ev.node);
            if let Some(log) = self.log.as_deref_mut() {
                log.push(BirthEvent {
                    time: ev.time,
                    parent: ev.node,
                    parent_children_before: self.children[parent],
                    rate,
                });
            }
            let child = self.nodes.len() as u32;
            self.nodes.push(CtbpNode {
                parent: Some(ev.node),
                birth_time: ev.time,
                depth: self.nodes[parent].depth + 1,
            });
            self.children.push(0);
            self.children[parent] += 1;
            on_birth(ev.time);
            self.schedule(ev.node, ev.time, rng);
            self.schedule(child, ev.time, rng);
            if let Stop::Population(n) = stop {
                if self.nodes.len() == n {
                    return Ok(ev.time);
                }
            }
        }
        unreachable!("the root always has a pending birth")
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon >= 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!(
            "horizon must be finite and >= 0, got {horizon}"
        )))
    }
}

pub fn simulate_ctbp(m: usize, beta: f64, horizon: f64, rng: &mut RngState) -> Result<CtbpTree> {
    simulate_ctbp_with(m, beta, horizon, DEFAULT_MAX_NODES, rng, None)
}

/// Event-driven simulation up to `horizon`, aborting once `max_nodes`
/// individuals exist. When `log` is given every birth is appended to it.
pub fn simulate_ctbp_with(
    m: usize,
    beta: f64,
    horizon: f64,
    max_nodes: usize,
    rng: &mut RngState,
    log: Option<&mut Vec<BirthEvent>>,
) -> Result<CtbpTree> {
    check_m_beta(m, beta)?;
    check_horizon(horizon)?;
    let mut sim = EventSim::new(m as f64 + beta, max_nodes, log);
    sim.run(Stop::Horizon(horizon), rng, |_| {})?;
    Ok(CtbpTree {
        m,
        beta,
        nodes: sim.nodes,
        horizon,
    })
}

pub fn limit_horizon_rate(m: usize, beta: f64) -> f64 {
    2.0 + beta / m as f64
}

/// Draws `τ ~ Exp(2 + β/m)` and runs the process to `τ`.
pub fn sample_limit_tree(m: usize, beta: f64, rng: &mut RngState) -> Result<CtbpTree> {
    sample_limit_tree_with(m, beta, DEFAULT_MAX_NODES, rng)
}

pub fn sample_limit_tree_with(
    m: usize,
    beta: f64,
    max_nodes: usize,
    rng: &mut RngState,
) -> Result<CtbpTree> {
    check_m_beta(m, beta)?;
    let tau = sample_exponential(rng, limit_horizon_rate(m, beta))?;
    simulate_ctbp_with(m, beta, tau, max_nodes, rng, None)
}

/// In-degree and PageRank of the root of a limit tree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitPair {
    pub in_degree: u64,
    pub pagerank: f64,
}

/// Writes `replica,in_degree,pagerank`, replicas numbered from zero.
pub fn write_limit_pairs_csv<W: std::io::Write>(pairs: &[LimitPair], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["replica", "in_degree", "pagerank"])?;
    for (r, p) in pairs.iter().enumerate() {
        out.write_record([
            r.to_string(),
            p.in_degree.to_string(),
            p.pagerank.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `P_k`, the number of individuals at depth `k >= 1` (paths of length `k`
/// ending at the root).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DepthCounts(Vec<u64>);

impl DepthCounts {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let mut counts = counts;
        while counts.last() == Some(&0) {
            counts.pop();
        }
        DepthCounts(counts)
    }

    /// `P_k`; zero beyond the deepest level.
    pub fn get(&self, k: usize) -> u64 {
        if k == 0 {
            return 0;
        }
        self.0.get(k - 1).copied().unwrap_or(0)
    }

    /// Deepest non-empty level.
    pub fn max_depth(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// `(k, P_k)` for `k = 1..=max_depth`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.0.iter().enumerate().map(|(i, &p)| (i + 1, p))
    }
}

pub fn depth_counts(tree: &CtbpTree) -> DepthCounts {
    let mut counts: Vec<u64> = Vec::new();
    for node in &tree.nodes {
        let d = node.depth as usize;
        if d == 0 {
            continue;
        }
        if counts.len() < d {
            counts.resize(d, 0);
        }
        counts[d - 1] += 1;
    }
    DepthCounts::from_counts(counts)
}

/// `R = (1 - c) sum_v (c/m)^{depth(v)}`, summed over depth levels.
pub fn pagerank_from_depths(depths: &DepthCounts, c: f64, m: usize) -> f64 {
    (1.0 - c) * weighted_level_sum(&depths.0, c / m as f64)
}

/// `1 + sum_k w^k counts[k-1]`.
fn weighted_level_sum(counts: &[u64], w: f64) -> f64 {
    let mut acc = 1.0;
    let mut weight = 1.0;
    for &p in counts {
        weight *= w;
        acc += weight * p as f64;
    }
    acc
}

pub fn limit_pair(tree: &CtbpTree, c: f64) -> Result<LimitPair> {
    crate::graph::check_damping(c)?;
    let depths = depth_counts(tree);
    Ok(LimitPair {
        in_degree: depths.get(1),
        pagerank: pagerank_from_depths(&depths, c, tree.m),
    })
}

/// Grows the `m = 1` process until it holds `n_target` individuals and
/// returns the tree at `T_{n_target}` with the stopping times
/// `T_1 = 0 < T_2 < ... < T_{n_target}`.
///
/// Non-root individuals reproduce at rate `children + 1 + β`, matching
/// their DPA(1, β) weight `in-degree + out-degree + β`. The root has no
/// out-edge, so after its first child it reproduces at rate `children + β`;
/// its first child (the deterministic `G_1 -> G_2` step) comes at rate
/// `1 + β`. With these rates the tree at `T_n` has exactly the law of `G_n`.
pub fn simulate_to_population(
    beta: f64,
    n_target: usize,
    rng: &mut RngState,
) -> Result<(CtbpTree, Vec<f64>)> {
    check_m_beta(1, beta)?;
    if n_target < 1 {
        return Err(Error::param("target population must be at least 1"));
    }
    let mut times = Vec::with_capacity(n_target);
    times.push(0.0);
    let mut sim = EventSim::new(1.0 + beta, DEFAULT_MAX_NODES.max(n_target + 1), None);
    sim.root_offset = beta;
    let horizon = sim.run(Stop::Population(n_target), rng, |t| times.push(t))?;
    Ok((
        CtbpTree {
            m: 1,
            beta,
            nodes: sim.nodes,
            horizon,
        },
        times,
    ))
}

/// How much of a limit tree the depth-first pair sampler actually grows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    /// Grow every individual.
    Exact,
    /// Replace a subtree by its conditional mean weight once that mean is
    /// below `rel_tol` times the mean weight of the whole tree. The root's
    /// in-degree stays exact; the PageRank error is of relative order
    /// `rel_tol`.
    Relative(f64),
}

/// Constants of the weighted path sum `sum_v (c/m)^{depth(v)}`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct WeightGrowth {
    pub w: f64,
    pub theta: f64,
    pub nu: f64,
}

impl WeightGrowth {
    pub fn new(m: usize, beta: f64, c: f64) -> Self {
        let mf = m as f64;
        let theta = 1.0 + (mf + beta) * c / mf;
        WeightGrowth {
            w: c / mf,
            theta,
            nu: (mf + beta) * c / (theta * mf),
        }
    }

    /// Expected weighted size of a subtree grown for time `r`, counting its
    /// own root with weight one: `1 + ν (e^{θ r} - 1)`.
    pub fn mean_weight(&self, r: f64) -> f64 {
        1.0 + self.nu * (self.theta * r).exp_m1()
    }
}

/// Depth-first accumulator for the weighted path sum with pruning. Shared
/// by the Yule and the Pólya samplers so that both truncate identically.
/// Grown individuals are counted per level, so an untruncated run gives
/// bit-for-bit the value [`pagerank_from_depths`] gives on the stored tree.
pub(crate) struct PrunedSum {
    growth: WeightGrowth,
    threshold: f64,
    levels: Vec<u64>,
    pruned: f64,
    kept: usize,
    max_nodes: usize,
}

impl PrunedSum {
    pub fn new(
        growth: WeightGrowth,
        truncation: Truncation,
        horizon: f64,
        max_nodes: usize,
    ) -> Result<Self> {
        let threshold = match truncation {
            Truncation::Exact => 0.0,
            Truncation::Relative(eps) if eps > 0.0 && eps < 1.0 => {
                eps * growth.mean_weight(horizon)
            }
            Truncation::Relative(eps) => {
                return Err(Error::param(format!(
                    "relative tolerance must lie in (0,1), got {eps}"
                )))
            }
        };
        Ok(PrunedSum {
            growth,
            threshold,
            levels: Vec::new(),
            pruned: 0.0,
            kept: 1,
            max_nodes,
        })
    }

    /// Accounts for a newborn at `depth` with `remaining` time to grow.
    /// Returns true when the newborn must be expanded further.
    pub fn admit(&mut self, depth: u32, remaining: f64) -> Result<bool> {
        if self.threshold > 0.0 {
            let mean = self.growth.w.powi(depth as i32) * self.growth.mean_weight(remaining);
            if mean < self.threshold {
                self.pruned += mean;
                return Ok(false);
            }
        }
        let d = depth as usize;
        if self.levels.len() < d {
            self.levels.resize(d, 0);
        }
        self.levels[d - 1] += 1;
        self.kept += 1;
        if self.kept > self.max_nodes {
            return Err(Error::Resource {
                cap: self.max_nodes,
            });
        }
        Ok(true)
    }

    pub fn pagerank(&self, c: f64) -> f64 {
        (1.0 - c) * (weighted_level_sum(&self.levels, self.growth.w) + self.pruned)
    }
}

/// Samples the root in-degree and PageRank of the limit tree by growing
/// each individual's Yule clock depth-first. With [`Truncation::Exact`] the
/// law is that of `limit_pair(sample_limit_tree(..))`.
pub fn sample_limit_pair(
    m: usize,
    beta: f64,
    c: f64,
    truncation: Truncation,
    rng: &mut RngState,
) -> Result<LimitPair> {
    sample_limit_pair_with(m, beta, c, truncation, DEFAULT_MAX_NODES, rng)
}

pub fn sample_limit_pair_with(
    m: usize,
    beta: f64,
    c: f64,
    truncation: Truncation,
    max_nodes: usize,
    rng: &mut RngState,
) -> Result<LimitPair> {
    check_m_beta(m, beta)?;
    crate::graph::check_damping(c)?;
    let tau = sample_exponential(rng, limit_horizon_rate(m, beta))?;
    let offset = m as f64 + beta;
    let mut acc = PrunedSum::new(WeightGrowth::new(m, beta, c), truncation, tau, max_nodes)?;
    let mut stack: Vec<(u32, f64)> = vec![(0, tau)];
    let mut in_degree = 0;
    while let Some((depth, remaining)) = stack.pop() {
        let mut t = 0.0;
        let mut born = 0u64;
        loop {
            t += rng.exp1() / (born as f64 + offset);
            if t > remaining {
                break;
            }
            born += 1;
            if acc.admit(depth + 1, remaining - t)? {
                stack.push((depth + 1, remaining - t));
            }
        }
        if depth == 0 {
            in_degree = born;
        }
    }
    Ok(LimitPair {
        in_degree,
        pagerank: acc.pagerank(c),
    })
}

/// Exact sampler for the limit in-degree alone: the root's `(m-1+β)`-Yule
/// count at an independent `τ ~ Exp(2 + β/m)`.
pub fn sample_limit_in_degree(m: usize, beta: f64, rng: &mut RngState) -> Result<u64> {
    check_m_beta(m, beta)?;
    let tau = sample_exponential(rng, limit_horizon_rate(m, beta))?;
    Ok(simulate_yule(m as f64 - 1.0 + beta, tau, rng)?.len() as u64)
}
