//! DPA(m, β) graph generation.
//!
//! Vertices are numbered `1..=n` in arrival order. Every non-root vertex
//! sends exactly `m` edges to older vertices; the `k`-th edge of `v_n`
//! lands on `v_i` with probability
//! `(D_i + β) / (2m(n-2) + k - 1 + β(n-1))`, where `D_i` is the total degree
//! of `v_i` including the edges of `v_n` already placed in this step.
//!
//! Sampling is O(1) per edge: the linear weight is split into a degree part
//! (a uniform pick from the flat list of edge endpoints) and a `β` part (a
//! uniform vertex).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngState;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpaParams {
    pub n: usize,
    pub m: usize,
    pub beta: f64,
    /// Damping factor, carried along for the PageRank stages.
    pub c: f64,
}

impl DpaParams {
    pub fn new(n: usize, m: usize, beta: f64, c: f64) -> Result<Self> {
        let p = DpaParams { n, m, beta, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::param("n must be at least 1"));
        }
        if self.n > u32::MAX as usize {
            return Err(Error::param("n must fit in 32 bits"));
        }
        check_m_beta(self.m, self.beta)?;
        check_damping(self.c)
    }
}

pub(crate) fn check_m_beta(m: usize, beta: f64) -> Result<()> {
    if m < 1 {
        return Err(Error::param("m must be at least 1"));
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::param(format!(
            "beta must be finite and >= 0, got {beta}"
        )));
    }
    Ok(())
}

pub(crate) fn check_damping(c: f64) -> Result<()> {
    if c > 0.0 && c < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "damping factor must lie in (0,1), got {c}"
        )))
    }
}

/// A DPA graph under construction, one vertex (and one edge) at a time.
#[derive(Clone, Debug)]
pub struct DpaGrowth {
    m: usize,
    beta: f64,
    /// Completed vertices.
    n: usize,
    /// Every endpoint of every edge among completed vertices, plus the
    /// targets already hit in the current step. Vertex ids are 0-based.
    endpoints: Vec<u32>,
    total_degree: Vec<u64>,
    /// Out-edge targets, `m` per vertex from `v_2` on, 0-based.
    targets: Vec<u32>,
    /// Edges already placed for the vertex being added, if a step is open.
    placed: Option<usize>,
}

impl DpaGrowth {
    /// Starts from `G_1`: the root and no edges.
    pub fn new(m: usize, beta: f64) -> Result<Self> {
        check_m_beta(m, beta)?;
        Ok(DpaGrowth {
            m,
            beta,
            n: 1,
            endpoints: Vec::new(),
            total_degree: vec![0],
            targets: Vec::new(),
            placed: None,
        })
    }

    pub fn with_capacity(m: usize, beta: f64, n: usize) -> Result<Self> {
        let mut g = Self::new(m, beta)?;
        g.endpoints.reserve(2 * m * n);
        g.total_degree.reserve(n);
        g.targets.reserve(m * n);
        Ok(g)
    }

    /// Number of completed vertices.
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Edges placed so far for the vertex currently being added (`k - 1`
    /// while the `k`-th edge is pending), or `None` between steps.
    pub fn edges_placed_in_step(&self) -> Option<usize> {
        self.placed
    }

    /// Current total degree of vertex `i` (1-based), counting edges of the
    /// open step.
    pub fn total_degree(&self, i: usize) -> Result<u64> {
        self.check_existing(i)?;
        Ok(self.total_degree[i - 1])
    }

    fn check_existing(&self, i: usize) -> Result<()> {
        if i >= 1 && i <= self.n {
            Ok(())
        } else {
            Err(Error::Index {
                index: i,
                len: self.n,
            })
        }
    }

    pub fn begin_vertex(&mut self) -> Result<()> {
        if self.placed.is_some() {
            return Err(Error::param("previous vertex still has unplaced edges"));
        }
        if self.n + 1 > u32::MAX as usize {
            return Err(Error::param("vertex count exceeds 32-bit range"));
        }
        self.placed = Some(0);
        Ok(())
    }

    fn open_step(&self) -> Result<usize> {
        match self.placed {
            Some(k) if k < self.m => Ok(k),
            Some(_) => Err(Error::param(
                "all m edges of this vertex are already placed",
            )),
            None => Err(Error::param(
                "no vertex step is open; call begin_vertex first",
            )),
        }
    }

    /// Probability that the next edge of the vertex being added lands on
    /// `target` (1-based, among the completed vertices).
    pub fn attachment_probability(&self, target: usize) -> Result<f64> {
        let placed = self.open_step()?;
        self.check_existing(target)?;
        if self.n == 1 {
            // G_2: all m edges go to the root.
            return Ok(1.0);
        }
        let weight = self.total_degree[target - 1] as f64 + self.beta;
        Ok(weight / self.denominator(placed))
    }

    fn denominator(&self, placed: usize) -> f64 {
        let n = self.n as f64;
        (2 * self.m * (self.n - 1) + placed) as f64 + self.beta * n
    }

    /// Places the next edge of the open step on a randomly chosen target and
    /// returns that target (1-based).
    pub fn place_edge(&mut self, rng: &mut RngState) -> Result<usize> {
        let placed = self.open_step()?;
        let target0 = if self.n == 1 {
            0
        } else {
            let degree_part = self.endpoints.len();
            debug_assert_eq!(degree_part, 2 * self.m * (self.n - 1) + placed);
            let p_degree = degree_part as f64 / self.denominator(placed);
            if self.beta == 0.0 || rng.bernoulli(p_degree) {
                self.endpoints[rng.index(0, degree_part)] as usize
            } else {
                rng.index(0, self.n)
            }
        };
        self.record_edge(target0);
        Ok(target0 + 1)
    }

    /// Places the next edge of the open step on a chosen target. Used to
    /// condition on a particular history.
    pub fn place_edge_to(&mut self, target: usize) -> Result<()> {
        self.open_step()?;
        self.check_existing(target)?;
        if self.n == 1 && target != 1 {
            return Err(Error::param("the second vertex attaches only to the root"));
        }
        self.record_edge(target - 1);
        Ok(())
    }

    fn record_edge(&mut self, target0: usize) {
        self.endpoints.push(target0 as u32);
        self.total_degree[target0] += 1;
        self.targets.push(target0 as u32);
        self.placed = self.placed.map(|k| k + 1);
    }

    /// Closes the open step once all `m` edges are placed; the new vertex
    /// becomes eligible as a target.
    pub fn finish_vertex(&mut self) -> Result<()> {
        if self.placed != Some(self.m) {
            return Err(Error::param("vertex step is not complete"));
        }
        let new = self.n as u32;
        self.endpoints.extend(std::iter::repeat_n(new, self.m));
        self.total_degree.push(self.m as u64);
        self.n += 1;
        self.placed = None;
        Ok(())
    }

    /// Adds one vertex with all of its edges; returns its targets (1-based
    /// vertex ids are `t + 1` for each returned 0-based `t`).
    pub fn add_vertex(&mut self, rng: &mut RngState) -> Result<&[u32]> {
        self.begin_vertex()?;
        for _ in 0..self.m {
            self.place_edge(rng)?;
        }
        self.finish_vertex()?;
        let start = self.targets.len() - self.m;
        Ok(&self.targets[start..])
    }

    pub fn into_graph(self) -> Result<DpaGraph> {
        if self.placed.is_some() {
            return Err(Error::param("cannot finalize with an open vertex step"));
        }
        Ok(DpaGraph::from_parts(
            self.n,
            self.m,
            self.beta,
            self.targets,
            self.total_degree,
        ))
    }
}

/// A finalized DPA graph with compressed in-adjacency.
#[derive(Clone, Debug)]
pub struct DpaGraph {
    n: usize,
    m: usize,
    beta: f64,
    /// `targets[(v - 2) * m + k]` is the 0-based target of the `k`-th edge of
    /// vertex `v` (1-based, `v >= 2`).
    targets: Vec<u32>,
    in_offsets: Vec<usize>,
    /// 0-based sources, grouped by target, ascending within a group.
    in_sources: Vec<u32>,
    total_degree: Vec<u64>,
}

impl DpaGraph {
    fn from_parts(
        n: usize,
        m: usize,
        beta: f64,
        targets: Vec<u32>,
        total_degree: Vec<u64>,
    ) -> Self {
        let mut in_offsets = vec![0usize; n + 1];
        for &t in &targets {
            in_offsets[t as usize + 1] += 1;
        }
        for i in 0..n {
            in_offsets[i + 1] += in_offsets[i];
        }
        let mut fill = in_offsets.clone();
        let mut in_sources = vec![0u32; targets.len()];
        for (e, &t) in targets.iter().enumerate() {
            let source = (e / m + 1) as u32;
            in_sources[fill[t as usize]] = source;
            fill[t as usize] += 1;
        }
        DpaGraph {
            n,
            m,
            beta,
            targets,
            in_offsets,
            in_sources,
            total_degree,
        }
    }

    /// Builds a graph from 1-based `(source, target)` pairs, checking the DPA
    /// shape: edges point from younger to older vertices, the root has no
    /// out-edges and every other vertex has the same out-degree.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("graph needs at least one vertex"));
        }
        if n == 1 {
            if !edges.is_empty() {
                return Err(Error::param("a one-vertex graph has no edges"));
            }
            return Ok(DpaGraph::from_parts(1, 1, 0.0, Vec::new(), vec![0]));
        }
        let mut out: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u > n || v < 1 {
                return Err(Error::Index {
                    index: u.max(v),
                    len: n,
                });
            }
            if u <= v {
                return Err(Error::param(format!(
                    "edge {u}->{v} does not point to an older vertex"
                )));
            }
            out[u - 1].push((v - 1) as u32);
        }
        let m = out[1].len();
        if m == 0 {
            return Err(Error::param("vertex 2 has no out-edges"));
        }
        if let Some(bad) = (1..n).find(|&v| out[v].len() != m) {
            return Err(Error::param(format!(
                "vertex {} has out-degree {}, expected {m}",
                bad + 1,
                out[bad].len()
            )));
        }
        let mut total_degree = vec![0u64; n];
        let mut targets = Vec::with_capacity(m * (n - 1));
        for (v, ts) in out.iter().enumerate().skip(1) {
            total_degree[v] += m as u64;
            for &t in ts {
                total_degree[t as usize] += 1;
                targets.push(t);
            }
        }
        Ok(DpaGraph::from_parts(n, m, f64::NAN, targets, total_degree))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// The β the graph was generated with; NaN for graphs read from an edge
    /// list.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    fn check(&self, i: usize) -> Result<()> {
        if i >= 1 && i <= self.n {
            Ok(())
        } else {
            Err(Error::Index {
                index: i,
                len: self.n,
            })
        }
    }

    pub fn in_degree(&self, i: usize) -> Result<usize> {
        self.check(i)?;
        Ok(self.in_degree0(i - 1))
    }

    pub(crate) fn in_degree0(&self, i0: usize) -> usize {
        self.in_offsets[i0 + 1] - self.in_offsets[i0]
    }

    pub fn out_degree(&self, i: usize) -> Result<usize> {
        self.check(i)?;
        Ok(if i == 1 { 0 } else { self.m })
    }

    pub fn total_degree(&self, i: usize) -> Result<u64> {
        self.check(i)?;
        Ok(self.total_degree[i - 1])
    }

    /// Sources of the in-edges of vertex `i`, with multiplicity, 1-based.
    pub fn in_neighbors(&self, i: usize) -> Result<impl Iterator<Item = usize> + '_> {
        self.check(i)?;
        Ok(self.in_sources0(i - 1).iter().map(|&s| s as usize + 1))
    }

    /// 0-based sources of the in-edges of the 0-based vertex `i0`.
    pub(crate) fn in_sources0(&self, i0: usize) -> &[u32] {
        &self.in_sources[self.in_offsets[i0]..self.in_offsets[i0 + 1]]
    }

    /// Targets of the out-edges of vertex `i`, 1-based, in placement order.
    pub fn out_neighbors(&self, i: usize) -> Result<impl Iterator<Item = usize> + '_> {
        self.check(i)?;
        let slice = if i == 1 {
            &self.targets[0..0]
        } else {
            &self.targets[(i - 2) * self.m..(i - 1) * self.m]
        };
        Ok(slice.iter().map(|&t| t as usize + 1))
    }

    /// All edges as 1-based `(source, target)` pairs, sources ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.targets
            .iter()
            .enumerate()
            .map(move |(e, &t)| (e / self.m + 2, t as usize + 1))
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.in_degree0(i)).collect()
    }

    pub fn uniform_vertex(&self, rng: &mut RngState) -> usize {
        rng.index(1, self.n + 1)
    }

    /// CSV edge list with header `source,target`; parallel edges repeat.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["source", "target"])?;
        for (u, v) in self.edges() {
            out.write_record([u.to_string(), v.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a `source,target` CSV. The vertex count is the largest id seen
    /// (at least 1).
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            source: usize,
            target: usize,
        }
        let mut rdr = csv::Reader::from_reader(r);
        let mut edges = Vec::new();
        let mut n = 1;
        for row in rdr.deserialize() {
            let row: Row = row?;
            n = n.max(row.source).max(row.target);
            edges.push((row.source, row.target));
        }
        Self::from_edges(n, &edges)
    }

    /// Little-endian `u32 n, u32 m`, then one `u32 source, u32 target` pair
    /// per edge (1-based).
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&(self.m as u32).to_le_bytes())?;
        for (u, v) in self.edges() {
            w.write_all(&(u as u32).to_le_bytes())?;
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < 8 || bytes.len() % 8 != 0 {
            return Err(Error::param("truncated binary edge list"));
        }
        let word =
            |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap()) as usize;
        let n = word(0);
        let m = word(1);
        let edges: Vec<(usize, usize)> = (1..bytes.len() / 8)
            .map(|e| (word(2 * e), word(2 * e + 1)))
            .collect();
        let g = Self::from_edges(n, &edges)?;
        if n > 1 && g.m != m {
            return Err(Error::param(format!(
                "header says m={m} but edges give m={}",
                g.m
            )));
        }
        Ok(g)
    }
}

pub fn generate(params: &DpaParams, rng: &mut RngState) -> Result<DpaGraph> {
    params.validate()?;
    let mut growth = DpaGrowth::with_capacity(params.m, params.beta, params.n)?;
    while growth.vertex_count() < params.n {
        growth.add_vertex(rng)?;
    }
    let mut g = growth.into_graph()?;
    g.beta = params.beta;
    Ok(g)
}
