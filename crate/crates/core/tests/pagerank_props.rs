use dpa_core::ctbp::{sample_limit_pair, Truncation};
use dpa_core::graph::{generate, DpaGraph, DpaParams};
use dpa_core::pagerank::{
    exact_pagerank, path_counts, power_iteration_pagerank, stationary_pagerank_with_dangling,
    truncated_pagerank,
};
use dpa_core::{try_replicate, RngState};
use proptest::prelude::*;

fn small_graph(n: usize, m: usize, beta: f64, seed: u64) -> DpaGraph {
    generate(
        &DpaParams::new(n, m, beta, 0.5).unwrap(),
        &mut RngState::new(seed, 0),
    )
    .unwrap()
}

/// Dense Gaussian elimination on `(I - (c/m) A^T) R = (1 - c) 1`.
fn dense_solve(g: &DpaGraph, c: f64) -> Vec<f64> {
    let n = g.n();
    let w = c / g.m() as f64;
    let mut a = vec![vec![0.0; n + 1]; n];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
        row[n] = 1.0 - c;
    }
    for (u, v) in g.edges() {
        a[v - 1][u - 1] -= w;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            if r != col && f != 0.0 {
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * p;
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

#[test]
fn matches_dense_linear_solve() {
    for (s, &(m, beta, c)) in [(1usize, 0.0, 0.5), (2, 1.0, 0.85), (3, 0.5, 0.3)]
        .iter()
        .enumerate()
    {
        let g = small_graph(120, m, beta, s as u64);
        let exact = exact_pagerank(&g, c).unwrap();
        for (a, b) in exact.as_slice().iter().zip(dense_solve(&g, c)) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn mean_pagerank_matches_limit_mean() {
    // E[R] = 1 in the limit; the finite-graph mean is 1 - c R_1 / ((1-c) n).
    let (m, beta, c) = (1, 1.0, 0.2);
    let g = generate(
        &DpaParams::new(1_000_000, m, beta, c).unwrap(),
        &mut RngState::new(77, 0),
    )
    .unwrap();
    let graph_mean = exact_pagerank(&g, c).unwrap().sum() / g.n() as f64;
    let limit = try_replicate(78, 1_000_000, |rng| {
        sample_limit_pair(m, beta, c, Truncation::Exact, rng)
    })
    .unwrap();
    let limit_mean = limit.iter().map(|p| p.pagerank).sum::<f64>() / limit.len() as f64;
    assert!(
        (graph_mean / limit_mean - 1.0).abs() < 0.01,
        "graph {graph_mean} limit {limit_mean}"
    );
    assert!((limit_mean - 1.0).abs() < 0.01);
}

#[test]
fn dangling_variant_is_a_stationary_distribution() {
    let g = small_graph(300, 2, 1.0, 4);
    let c = 0.85;
    let r = stationary_pagerank_with_dangling(&g, c, 1e-11).unwrap();
    assert!((r.sum() - 300.0).abs() < 1e-9);
    let n = g.n() as f64;
    let root = r.get(1).unwrap();
    for i in 1..=g.n() {
        let inflow: f64 = g.in_neighbors(i).unwrap().map(|j| r.get(j).unwrap()).sum();
        let rhs = (1.0 - c) + c / 2.0 * inflow + c / n * root;
        assert!((r.get(i).unwrap() - rhs).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_equals_power_iteration(n in 1usize..400, m in 1usize..4, beta in 0.0f64..3.0, c in 0.01f64..0.95, seed in any::<u64>()) {
        let g = small_graph(n, m, beta, seed);
        let exact = exact_pagerank(&g, c).unwrap();
        let power = power_iteration_pagerank(&g, c, 1e-13, 100_000).unwrap();
        prop_assert!(exact.max_abs_diff(&power) < 1e-10);
    }

    #[test]
    fn exact_equals_path_series(n in 1usize..120, m in 1usize..4, beta in 0.0f64..3.0, c in 0.01f64..0.95, seed in any::<u64>()) {
        let g = small_graph(n, m, beta, seed);
        let exact = exact_pagerank(&g, c).unwrap();
        let series = path_counts(&g, n).unwrap().series_pagerank(c, m);
        for (a, b) in exact.as_slice().iter().zip(&series) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn mass_identity(n in 1usize..2000, m in 1usize..4, beta in 0.0f64..3.0, c in 0.01f64..0.95, seed in any::<u64>()) {
        let g = small_graph(n, m, beta, seed);
        let r = exact_pagerank(&g, c).unwrap();
        let want = n as f64 - c * r.get(1).unwrap() / (1.0 - c);
        prop_assert!((r.sum() - want).abs() < 1e-9 * n as f64);
        prop_assert!(r.as_slice().iter().all(|&x| x >= 1.0 - c));
    }

    #[test]
    fn truncation_increases_to_exact(n in 2usize..300, m in 1usize..4, beta in 0.0f64..3.0, c in 0.01f64..0.95, seed in any::<u64>()) {
        let g = small_graph(n, m, beta, seed);
        let exact = exact_pagerank(&g, c).unwrap();
        let mut prev = truncated_pagerank(&g, c, 0).unwrap();
        prop_assert!(prev.as_slice().iter().all(|&x| (x - (1.0 - c)).abs() < 1e-15));
        for k in 1..=12 {
            let next = truncated_pagerank(&g, c, k).unwrap();
            for ((a, b), e) in prev.as_slice().iter().zip(next.as_slice()).zip(exact.as_slice()) {
                prop_assert!(*b >= a - 1e-12 && *b <= e + 1e-12);
            }
            prop_assert!(exact.l1_diff(&next) / n as f64 <= c.powi(k as i32 + 1) + 1e-12);
            prev = next;
        }
    }
}
