//! Scale-free PageRank on DPA graphs.
//!
//! Every non-root vertex has out-degree `m`, so the damped walk matrix is
//! `(c/m) A` and the scale-free PageRank solves
//! `R_i = (1 - c) + (c/m) * sum_{j -> i} R_j`. Edges always point from a
//! younger vertex to an older one, so a single pass from `v_n` down to
//! `v_1` solves the system exactly.
//!
//! The root is the only dangling vertex. The canonical vector here drops its
//! teleport row; [`stationary_pagerank_with_dangling`] is the variant that
//! redistributes it uniformly.

use crate::error::{Error, Result};
use crate::graph::{check_damping, DpaGraph};

#[derive(Clone, Debug, PartialEq)]
pub struct PageRankVector {
    values: Vec<f64>,
    c: f64,
}

impl PageRankVector {
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// PageRank of vertex `i` (1-based).
    pub fn get(&self, i: usize) -> Result<f64> {
        if i >= 1 && i <= self.values.len() {
            Ok(self.values[i - 1])
        } else {
            Err(Error::Index {
                index: i,
                len: self.values.len(),
            })
        }
    }

    /// Values in vertex order; `as_slice()[0]` is `v_1`.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &PageRankVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn l1_diff(&self, other: &PageRankVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Writes `vertex,in_degree,pagerank` rows.
    pub fn write_csv<W: std::io::Write>(&self, graph: &DpaGraph, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["vertex", "in_degree", "pagerank"])?;
        for (i, r) in self.values.iter().enumerate() {
            out.write_record([
                (i + 1).to_string(),
                graph.in_degree0(i).to_string(),
                r.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// One backward pass of `R_i = base + (c/m) sum_{j -> i} R_j`.
fn backward_pass(graph: &DpaGraph, c: f64, base: f64) -> Vec<f64> {
    let w = c / graph.m() as f64;
    let mut r = vec![0.0; graph.n()];
    for i in (0..graph.n()).rev() {
        let inflow: f64 = graph.in_sources0(i).iter().map(|&j| r[j as usize]).sum();
        r[i] = base + w * inflow;
    }
    r
}

pub fn exact_pagerank(graph: &DpaGraph, c: f64) -> Result<PageRankVector> {
    check_damping(c)?;
    Ok(PageRankVector {
        values: backward_pass(graph, c, 1.0 - c),
        c,
    })
}

/// `R <- (1 - c) + (c/m) R A`, starting from `(1 - c) 1`.
fn power_step(graph: &DpaGraph, c: f64, r: &[f64], next: &mut [f64]) {
    let w = c / graph.m() as f64;
    for (i, slot) in next.iter_mut().enumerate() {
        let inflow: f64 = graph.in_sources0(i).iter().map(|&j| r[j as usize]).sum();
        *slot = (1.0 - c) + w * inflow;
    }
}

/// Fixed-point iteration of the PageRank equation. Independent of the
/// backward pass; used as its oracle.
pub fn power_iteration_pagerank(
    graph: &DpaGraph,
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PageRankVector> {
    check_damping(c)?;
    if !(tol > 0.0) {
        return Err(Error::param("tolerance must be positive"));
    }
    let mut r = vec![1.0 - c; graph.n()];
    let mut next = vec![0.0; graph.n()];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        power_step(graph, c, &r, &mut next);
        residual = r
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut r, &mut next);
        if residual < tol {
            return Ok(PageRankVector { values: r, c });
        }
    }
    Err(Error::IterationLimit {
        iterations: max_iter,
        residual,
    })
}

/// `k`-truncated PageRank `(1 - c) sum_{j <= k} (c/m)^j 1 A^j`.
pub fn truncated_pagerank(graph: &DpaGraph, c: f64, k: usize) -> Result<PageRankVector> {
    check_damping(c)?;
    let mut r = vec![1.0 - c; graph.n()];
    let mut next = vec![0.0; graph.n()];
    for _ in 0..k {
        power_step(graph, c, &r, &mut next);
        std::mem::swap(&mut r, &mut next);
    }
    Ok(PageRankVector { values: r, c })
}

/// `counts[k][i]` = number of directed paths of length `k` ending at vertex
/// `i`. Stored 0-based in both indices; row 0 is the all-ones vector.
#[derive(Clone, Debug)]
pub struct PathCountTable {
    rows: Vec<Vec<u128>>,
}

impl PathCountTable {
    pub fn k_max(&self) -> usize {
        self.rows.len() - 1
    }

    /// Paths of length `k` ending at vertex `i` (1-based).
    pub fn get(&self, k: usize, i: usize) -> Result<u128> {
        let row = self
            .rows
            .get(k)
            .ok_or_else(|| Error::param(format!("path length {k} beyond table")))?;
        if i >= 1 && i <= row.len() {
            Ok(row[i - 1])
        } else {
            Err(Error::Index {
                index: i,
                len: row.len(),
            })
        }
    }

    pub fn row(&self, k: usize) -> Option<&[u128]> {
        self.rows.get(k).map(|r| r.as_slice())
    }

    /// Total number of length-`k` paths in the graph.
    pub fn total(&self, k: usize) -> Option<u128> {
        self.rows.get(k).map(|r| r.iter().sum())
    }

    /// PageRank from the path-count series, truncated at `k_max`.
    pub fn series_pagerank(&self, c: f64, m: usize) -> Vec<f64> {
        let n = self.rows[0].len();
        let w = c / m as f64;
        let mut acc = vec![1.0; n];
        let mut weight = 1.0;
        for row in &self.rows[1..] {
            weight *= w;
            for (a, &p) in acc.iter_mut().zip(row) {
                *a += weight * p as f64;
            }
        }
        acc.into_iter().map(|a| (1.0 - c) * a).collect()
    }
}

pub fn path_counts(graph: &DpaGraph, k_max: usize) -> Result<PathCountTable> {
    if k_max < 1 {
        return Err(Error::param("k_max must be at least 1"));
    }
    let n = graph.n();
    let mut rows = Vec::with_capacity(k_max + 1);
    rows.push(vec![1u128; n]);
    for k in 1..=k_max {
        let prev = &rows[k - 1];
        let mut row = vec![0u128; n];
        for (i, slot) in row.iter_mut().enumerate() {
            let mut acc: u128 = 0;
            for &j in graph.in_sources0(i) {
                acc = acc.checked_add(prev[j as usize]).ok_or_else(|| {
                    Error::Arithmetic(format!("path count overflow at length {k}"))
                })?;
            }
            *slot = acc;
        }
        rows.push(row);
    }
    Ok(PathCountTable { rows })
}

/// Stationary scale-free PageRank when the dangling root teleports
/// uniformly: `R_i = (1 - c) + (c/m) sum_{j -> i} R_j + (c/n) R_1`.
///
/// Each sweep runs the backward pass with the root's dangling mass held at
/// its current value, then updates that value. Stops once both the update
/// and the deviation of `sum R` from `n` are below `tol`.
pub fn stationary_pagerank_with_dangling(
    graph: &DpaGraph,
    c: f64,
    tol: f64,
) -> Result<PageRankVector> {
    const MAX_SWEEPS: usize = 100_000;
    check_damping(c)?;
    if !(tol > 0.0) {
        return Err(Error::param("tolerance must be positive"));
    }
    let n = graph.n() as f64;
    let mut root = 1.0;
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        let r = backward_pass(graph, c, (1.0 - c) + c / n * root);
        let step = (r[0] - root).abs();
        root = r[0];
        residual = step.max((r.iter().sum::<f64>() - n).abs());
        if residual < tol {
            return Ok(PageRankVector { values: r, c });
        }
    }
    Err(Error::IterationLimit {
        iterations: MAX_SWEEPS,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star() -> DpaGraph {
        DpaGraph::from_edges(3, &[(2, 1), (3, 1)]).unwrap()
    }

    fn chain() -> DpaGraph {
        DpaGraph::from_edges(3, &[(2, 1), (3, 2)]).unwrap()
    }

    fn single() -> DpaGraph {
        DpaGraph::from_edges(1, &[]).unwrap()
    }

    #[test]
    fn single_vertex() {
        let r = exact_pagerank(&single(), 0.3).unwrap();
        assert_eq!(r.as_slice(), &[0.7]);
        let p = power_iteration_pagerank(&single(), 0.3, 1e-12, 10).unwrap();
        assert_eq!(p.as_slice(), &[0.7]);
        let s = stationary_pagerank_with_dangling(&single(), 0.3, 1e-13).unwrap();
        assert!((s.get(1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn star_values() {
        for &c in &[0.1, 0.5, 0.85] {
            let r = exact_pagerank(&star(), c).unwrap();
            let expected = [(1.0 - c) * (1.0 + 2.0 * c), 1.0 - c, 1.0 - c];
            for (a, b) in r.as_slice().iter().zip(expected) {
                assert!((a - b).abs() < 1e-15);
            }
            let p = power_iteration_pagerank(&star(), c, 1e-12, 100).unwrap();
            assert!(r.max_abs_diff(&p) < 1e-10);
        }
    }

    #[test]
    fn chain_values() {
        let r = exact_pagerank(&chain(), 0.5).unwrap();
        assert_eq!(r.as_slice(), &[0.875, 0.75, 0.5]);
        let t = truncated_pagerank(&chain(), 0.5, 1).unwrap();
        assert_eq!(t.as_slice(), &[0.75, 0.75, 0.5]);
        let t0 = truncated_pagerank(&chain(), 0.5, 0).unwrap();
        assert_eq!(t0.as_slice(), &[0.5, 0.5, 0.5]);
    }

    #[test]
    fn chain_paths() {
        let p = path_counts(&chain(), 3).unwrap();
        assert_eq!(p.row(1).unwrap(), &[1, 1, 0]);
        assert_eq!(p.row(2).unwrap(), &[1, 0, 0]);
        assert_eq!(p.total(3), Some(0));
        assert!(path_counts(&chain(), 0).is_err());
    }

    #[test]
    fn rejects_bad_damping() {
        assert!(exact_pagerank(&star(), 1.0).is_err());
        assert!(exact_pagerank(&star(), 0.0).is_err());
        assert!(power_iteration_pagerank(&star(), 0.5, 0.0, 10).is_err());
    }

    #[test]
    fn iteration_limit_reported() {
        // A 3-chain needs three sweeps to settle.
        let err = power_iteration_pagerank(&chain(), 0.5, 1e-12, 2).unwrap_err();
        assert!(matches!(err, Error::IterationLimit { iterations: 2, .. }));
    }

    #[test]
    fn dangling_two_vertex_system() {
        // R2 = 0.5 + 0.25 R1 and R1 = 0.5 + 0.5 R2 + 0.25 R1 give (1.2, 0.8).
        let g = DpaGraph::from_edges(2, &[(2, 1)]).unwrap();
        let r = stationary_pagerank_with_dangling(&g, 0.5, 1e-13).unwrap();
        assert!((r.get(1).unwrap() - 1.2).abs() < 1e-12);
        assert!((r.get(2).unwrap() - 0.8).abs() < 1e-12);
        assert!((r.sum() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn csv_export_header() {
        let mut buf = Vec::new();
        exact_pagerank(&star(), 0.5)
            .unwrap()
            .write_csv(&star(), &mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("vertex,in_degree,pagerank"));
        assert_eq!(text.lines().nth(1), Some("1,2,1"));
    }
}
