use std::collections::HashMap;

use dpa_core::graph::{generate, DpaGraph, DpaGrowth, DpaParams};
use dpa_core::{try_replicate, RngState};
use proptest::prelude::*;

/// Law of the multiset of targets chosen by v_3 in DPA(m, β), by
/// enumerating every sequence of choices with the total-degree rule.
fn n3_target_law(m: usize, beta: f64) -> HashMap<Vec<usize>, f64> {
    fn walk(
        deg: [f64; 2],
        beta: f64,
        left: usize,
        prob: f64,
        picks: &mut Vec<usize>,
        out: &mut HashMap<Vec<usize>, f64>,
    ) {
        if left == 0 {
            let mut key = picks.clone();
            key.sort_unstable();
            *out.entry(key).or_insert(0.0) += prob;
            return;
        }
        let total = deg[0] + deg[1] + 2.0 * beta;
        for v in 0..2 {
            let mut next = deg;
            next[v] += 1.0;
            picks.push(v + 1);
            walk(
                next,
                beta,
                left - 1,
                prob * (deg[v] + beta) / total,
                picks,
                out,
            );
            picks.pop();
        }
    }
    let mut out = HashMap::new();
    walk(
        [m as f64, m as f64],
        beta,
        m,
        1.0,
        &mut Vec::new(),
        &mut out,
    );
    out
}

#[test]
fn enumeration_oracle_matches_hand_values() {
    let law = n3_target_law(1, 0.0);
    assert!((law[&vec![1]] - 0.5).abs() < 1e-15);
    // m=2, β=1: first edge 3/6 to v1; second edge 4/7 or 3/7.
    let law = n3_target_law(2, 1.0);
    assert!((law[&vec![1, 1]] - 2.0 / 7.0).abs() < 1e-15);
    assert!((law[&vec![1, 2]] - 3.0 / 7.0).abs() < 1e-15);
    assert!((law[&vec![2, 2]] - 2.0 / 7.0).abs() < 1e-15);
}

#[test]
fn three_vertex_law() {
    for (case, &(m, beta)) in [(1usize, 0.0), (1, 1.0), (2, 1.0), (3, 0.5)]
        .iter()
        .enumerate()
    {
        let want = n3_target_law(m, beta);
        let params = DpaParams::new(3, m, beta, 0.5).unwrap();
        let draws = try_replicate(40 + case as u64, 100_000, |rng| {
            let g = generate(&params, rng)?;
            let mut t: Vec<usize> = g.out_neighbors(3)?.collect();
            t.sort_unstable();
            Ok(t)
        })
        .unwrap();
        let mut freq: HashMap<Vec<usize>, f64> = HashMap::new();
        for d in &draws {
            *freq.entry(d.clone()).or_insert(0.0) += 1.0 / draws.len() as f64;
        }
        for (key, p) in &want {
            let got = freq.get(key).copied().unwrap_or(0.0);
            assert!(
                (got - p).abs() < 0.005,
                "m={m} β={beta} {key:?}: {got} vs {p}"
            );
        }
        assert_eq!(freq.len(), want.len());
    }
}

#[test]
fn attachment_probabilities_match_enumeration_inside_a_step() {
    let mut g = DpaGrowth::new(2, 1.0).unwrap();
    let mut rng = RngState::new(1, 0);
    g.add_vertex(&mut rng).unwrap();
    g.begin_vertex().unwrap();
    assert!((g.attachment_probability(1).unwrap() - 0.5).abs() < 1e-15);
    g.place_edge_to(1).unwrap();
    assert!((g.attachment_probability(1).unwrap() - 4.0 / 7.0).abs() < 1e-15);
    assert!((g.attachment_probability(2).unwrap() - 3.0 / 7.0).abs() < 1e-15);
}

#[test]
fn uniform_vertex_frequencies() {
    let g = generate(
        &DpaParams::new(10, 2, 0.0, 0.5).unwrap(),
        &mut RngState::new(2, 0),
    )
    .unwrap();
    let mut rng = RngState::new(3, 0);
    let mut counts = [0usize; 11];
    let draws = 200_000;
    for _ in 0..draws {
        counts[g.uniform_vertex(&mut rng)] += 1;
    }
    assert_eq!(counts[0], 0);
    for &c in &counts[1..] {
        assert!((c as f64 / draws as f64 - 0.1).abs() < 0.003, "{counts:?}");
    }
}

#[test]
fn same_seed_same_graph() {
    let p = DpaParams::new(2000, 3, 0.7, 0.5).unwrap();
    let a = generate(&p, &mut RngState::new(9, 4)).unwrap();
    let b = generate(&p, &mut RngState::new(9, 4)).unwrap();
    assert!(a.edges().eq(b.edges()));
    let c = generate(&p, &mut RngState::new(9, 5)).unwrap();
    assert!(!a.edges().eq(c.edges()));
}

#[test]
fn file_round_trips() {
    let g = generate(
        &DpaParams::new(500, 2, 1.0, 0.5).unwrap(),
        &mut RngState::new(5, 0),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("edges.csv");
    g.write_csv(std::fs::File::create(&csv_path).unwrap())
        .unwrap();
    let back = DpaGraph::read_csv(std::fs::File::open(&csv_path).unwrap()).unwrap();
    assert!(g.edges().eq(back.edges()));
    let bin_path = dir.path().join("edges.bin");
    g.write_binary(std::fs::File::create(&bin_path).unwrap())
        .unwrap();
    let back = DpaGraph::read_binary(std::fs::File::open(&bin_path).unwrap()).unwrap();
    assert!(g.edges().eq(back.edges()));
    assert_eq!(back.m(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn structural_invariants(n in 1usize..300, m in 1usize..5, beta in 0.0f64..5.0, seed in any::<u64>()) {
        let g = generate(&DpaParams::new(n, m, beta, 0.5).unwrap(), &mut RngState::new(seed, 0)).unwrap();
        prop_assert_eq!(g.n(), n);
        prop_assert_eq!(g.edge_count(), m * (n - 1));
        prop_assert_eq!(g.in_degrees().iter().sum::<usize>(), m * (n - 1));
        for (u, v) in g.edges() {
            prop_assert!(v < u, "edge {} -> {} does not point to an older vertex", u, v);
        }
        for i in 1..=n {
            let expected_out = if i == 1 { 0 } else { m };
            prop_assert_eq!(g.out_degree(i).unwrap(), expected_out);
            prop_assert_eq!(g.total_degree(i).unwrap(), (g.in_degree(i).unwrap() + expected_out) as u64);
            prop_assert_eq!(g.in_neighbors(i).unwrap().count(), g.in_degree(i).unwrap());
        }
        if n >= 2 {
            prop_assert!(g.out_neighbors(2).unwrap().all(|t| t == 1));
        }
    }

    #[test]
    fn step_probabilities_sum_to_one(m in 1usize..4, beta in 0.0f64..3.0, steps in 1usize..40, seed in any::<u64>()) {
        let mut g = DpaGrowth::new(m, beta).unwrap();
        let mut rng = RngState::new(seed, 0);
        for _ in 0..steps {
            g.add_vertex(&mut rng).unwrap();
        }
        g.begin_vertex().unwrap();
        for _ in 0..m {
            let total: f64 = (1..=g.vertex_count()).map(|i| g.attachment_probability(i).unwrap()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            g.place_edge(&mut rng).unwrap();
        }
        g.finish_vertex().unwrap();
    }
}
