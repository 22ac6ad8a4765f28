//! The Pólya point graph: a tree of birth positions in `(0, 1]` where a node
//! at `x` carrying weight `γ ~ Gamma(m+β, 1)` has children from a Poisson
//! process on `(x, 1]` with intensity `γ ψ v^{ψ-1} / x^ψ`.
//!
//! Under `σ ↦ ψ log(σ/z)` each node's offspring become an `(m-1+β)`-Yule
//! process and the root's remaining range becomes an `Exp(2 + β/m)` time, so
//! the tree has the law of the stopped branching process in [`crate::ctbp`].

use serde::{Deserialize, Serialize};

use crate::ctbp::{
    pagerank_from_depths, DepthCounts, LimitPair, PrunedSum, Truncation, WeightGrowth,
    DEFAULT_MAX_NODES,
};
use crate::error::{Error, Result};
use crate::graph::{check_damping, check_m_beta};
use crate::rng::{GammaSampler, RngState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyaParams {
    pub m: usize,
    pub beta: f64,
    pub chi: f64,
    pub psi: f64,
}

impl PolyaParams {
    /// m = 1 is accepted: the construction is well defined there too.
    pub fn new(m: usize, beta: f64) -> Result<Self> {
        check_m_beta(m, beta)?;
        let mf = m as f64;
        let chi = (mf + beta) / (2.0 * mf + beta);
        let psi = (1.0 - chi) / chi;
        if (psi - mf / (mf + beta)).abs() >= 1e-12 {
            return Err(Error::Numeric(format!(
                "psi = {psi} disagrees with m/(m+beta)"
            )));
        }
        Ok(PolyaParams { m, beta, chi, psi })
    }

    pub fn gamma_shape(&self) -> f64 {
        self.m as f64 + self.beta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyaNode {
    pub parent: Option<u32>,
    pub position: f64,
    pub gamma: f64,
    pub depth: u32,
}

/// Nodes in generation order: every parent precedes its children.
#[derive(Clone, Debug)]
pub struct PolyaTree {
    pub params: PolyaParams,
    pub nodes: Vec<PolyaNode>,
}

impl PolyaTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root_position(&self) -> f64 {
        self.nodes[0].position
    }

    pub fn root_in_degree(&self) -> u64 {
        self.nodes.iter().filter(|n| n.depth == 1).count() as u64
    }

    pub fn depth_counts(&self) -> DepthCounts {
        let mut counts: Vec<u64> = Vec::new();
        for node in &self.nodes[1..] {
            let d = node.depth as usize;
            if counts.len() < d {
                counts.resize(d, 0);
            }
            counts[d - 1] += 1;
        }
        DepthCounts::from_counts(counts)
    }

    /// The root's remaining range `ψ log(1/σ_∅)`, distributed as `Exp(2 + β/m)`.
    pub fn horizon(&self) -> f64 {
        self.params.psi * (1.0 / self.root_position()).ln()
    }

    /// Birth time of every node under the map anchored at the root position.
    pub fn mapped_birth_times(&self) -> Vec<f64> {
        let z = self.root_position();
        self.nodes
            .iter()
            .map(|n| self.params.psi * (n.position / z).ln())
            .collect()
    }

    /// Same schema as the branching-process tree export, with mapped times.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["node", "parent", "birth_time", "depth"])?;
        for (i, (n, t)) in self.nodes.iter().zip(self.mapped_birth_times()).enumerate() {
            let parent = n.parent.map(|p| p.to_string()).unwrap_or_default();
            out.write_record([i.to_string(), parent, t.to_string(), n.depth.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Children of a node at `x` with weight `gamma`, by inverting the
/// cumulative intensity `Λ(v) = γ((v/x)^ψ - 1)` at unit-Poisson arrivals.
pub fn offspring_positions(x: f64, gamma: f64, psi: f64, rng: &mut RngState) -> Vec<f64> {
    let total = gamma * (x.powf(-psi) - 1.0);
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        t += rng.exp1();
        if t > total {
            return out;
        }
        out.push((x * (1.0 + t / gamma).powf(1.0 / psi)).min(1.0));
    }
}

pub fn sample_polya_point_graph(params: &PolyaParams, rng: &mut RngState) -> Result<PolyaTree> {
    sample_polya_point_graph_with(params, DEFAULT_MAX_NODES, rng)
}

pub fn sample_polya_point_graph_with(
    params: &PolyaParams,
    max_nodes: usize,
    rng: &mut RngState,
) -> Result<PolyaTree> {
    let gamma = GammaSampler::new(params.gamma_shape())?;
    let root = rng.uniform_open().powf(params.chi);
    let mut nodes = vec![PolyaNode {
        parent: None,
        position: root,
        gamma: gamma.sample(rng),
        depth: 0,
    }];
    let mut next = 0;
    while next < nodes.len() {
        let node = nodes[next];
        for position in offspring_positions(node.position, node.gamma, params.psi, rng) {
            if nodes.len() >= max_nodes {
                return Err(Error::Resource { cap: max_nodes });
            }
            nodes.push(PolyaNode {
                parent: Some(next as u32),
                position,
                gamma: gamma.sample(rng),
                depth: node.depth + 1,
            });
        }
        next += 1;
    }
    Ok(PolyaTree {
        params: *params,
        nodes,
    })
}

/// `S_i = log(1 + T_i/γ)`.
pub fn yule_arrivals_from_gamma_poisson(gamma: f64, arrivals: &[f64]) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param(format!("gamma must be positive, got {gamma}")));
    }
    if arrivals.first().is_some_and(|&t| !(t > 0.0)) || arrivals.windows(2).any(|w| !(w[0] < w[1]))
    {
        return Err(Error::param(
            "arrival times must be positive and strictly increasing",
        ));
    }
    Ok(arrivals.iter().map(|t| (t / gamma).ln_1p()).collect())
}

/// `σ̃ = (m/(m+β)) log(σ/z)`.
pub fn birth_time_map(z: f64, sigma: f64, m: usize, beta: f64) -> Result<f64> {
    check_m_beta(m, beta)?;
    if !(z > 0.0 && z <= sigma && sigma <= 1.0) {
        return Err(Error::param(format!(
            "need 0 < z <= sigma <= 1, got z={z}, sigma={sigma}"
        )));
    }
    Ok(m as f64 / (m as f64 + beta) * (sigma / z).ln())
}

pub fn polya_limit_pair(tree: &PolyaTree, c: f64) -> Result<LimitPair> {
    check_damping(c)?;
    let depths = tree.depth_counts();
    Ok(LimitPair {
        in_degree: depths.get(1),
        pagerank: pagerank_from_depths(&depths, c, tree.params.m),
    })
}

/// `(D⁻, R)` of the root of a freshly sampled Pólya point graph.
pub fn coupled_limit_pair_polya(
    params: &PolyaParams,
    c: f64,
    rng: &mut RngState,
) -> Result<LimitPair> {
    check_damping(c)?;
    polya_limit_pair(&sample_polya_point_graph(params, rng)?, c)
}

/// Depth-first version of [`coupled_limit_pair_polya`] that never stores
/// the tree and can prune light subtrees; see [`Truncation`].
pub fn sample_limit_pair_polya(
    params: &PolyaParams,
    c: f64,
    truncation: Truncation,
    rng: &mut RngState,
) -> Result<LimitPair> {
    sample_limit_pair_polya_with(params, c, truncation, DEFAULT_MAX_NODES, rng)
}

pub fn sample_limit_pair_polya_with(
    params: &PolyaParams,
    c: f64,
    truncation: Truncation,
    max_nodes: usize,
    rng: &mut RngState,
) -> Result<LimitPair> {
    check_damping(c)?;
    let gamma = GammaSampler::new(params.gamma_shape())?;
    let root = rng.uniform_open().powf(params.chi);
    // A node's remaining range ψ log(1/x) plays the role of its remaining time.
    let horizon = params.psi * (1.0 / root).ln();
    let mut acc = PrunedSum::new(
        WeightGrowth::new(params.m, params.beta, c),
        truncation,
        horizon,
        max_nodes,
    )?;
    let mut stack: Vec<(u32, f64)> = vec![(0, horizon)];
    let mut in_degree = 0;
    while let Some((depth, remaining)) = stack.pop() {
        let g = gamma.sample(rng);
        let total = g * remaining.exp_m1();
        let mut t = 0.0;
        let mut born = 0u64;
        loop {
            t += rng.exp1();
            if t > total {
                break;
            }
            born += 1;
            let left = (remaining - (t / g).ln_1p()).max(0.0);
            if acc.admit(depth + 1, left)? {
                stack.push((depth + 1, left));
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
