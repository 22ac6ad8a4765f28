use dpa_core::ctbp::{
    depth_counts, limit_horizon_rate, limit_pair, sample_limit_tree, sample_limit_tree_with,
    CtbpTree, LimitPair, Truncation,
};
use dpa_core::error::Error;
use dpa_core::polya::{
    coupled_limit_pair_polya, offspring_positions, sample_limit_pair_polya,
    sample_polya_point_graph_with, yule_arrivals_from_gamma_poisson, PolyaParams, PolyaTree,
};
use dpa_core::rng::{sample_gamma, unit_poisson_arrivals};
use dpa_core::tailstats::{ks_one_sample, ks_two_sample};
use dpa_core::{replicate, try_replicate, Result};

const PAIRS: [(usize, f64); 6] = [(1, 0.0), (1, 1.0), (2, 0.0), (2, 1.0), (3, 0.0), (3, 1.0)];
const CAP: usize = 10_000;

type Capped = Option<(usize, (f64, f64, f64))>;

fn capped<T>(r: Result<T>) -> Option<T> {
    match r {
        Ok(t) => Some(t),
        Err(Error::Resource { .. }) => None,
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn root_position_law() {
    for &(m, beta) in &PAIRS[..2] {
        let p = PolyaParams::new(m, beta).unwrap();
        let roots = try_replicate(1, 100_000, |rng| {
            Ok(sample_polya_point_graph_with(&p, usize::MAX, rng)?.root_position())
        })
        .unwrap();
        let ks = ks_one_sample(&roots, |x| x.clamp(0.0, 1.0).powf(1.0 / p.chi)).unwrap();
        assert!(ks.p_value > 0.01, "({m},{beta}) {ks:?}");
    }
}

#[test]
fn remaining_range_of_root_is_exponential() {
    for &(m, beta) in &[(1usize, 0.0), (1, 1.0), (1, 3.0)] {
        let p = PolyaParams::new(m, beta).unwrap();
        let alpha = limit_horizon_rate(m, beta);
        let taus = try_replicate(2, 100_000, |rng| {
            Ok(sample_polya_point_graph_with(&p, usize::MAX, rng)?.horizon())
        })
        .unwrap();
        let ks = ks_one_sample(&taus, |t| 1.0 - (-alpha * t).exp()).unwrap();
        assert!(ks.p_value > 0.01, "({m},{beta}) {ks:?}");
    }
}

#[test]
fn offspring_count_given_position() {
    let p = PolyaParams::new(2, 1.0).unwrap();
    let edges = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
    let draws = replicate(3, 1_000_000, |rng| {
        let x = 0.05 + 0.75 * rng.uniform();
        let g = sample_gamma(rng, p.gamma_shape()).unwrap();
        let kids = offspring_positions(x, g, p.psi, rng);
        assert!(kids.windows(2).all(|w| w[0] <= w[1]) && kids.iter().all(|&v| v > x && v <= 1.0));
        (x, kids.len() as f64)
    });
    for w in edges.windows(2) {
        let bin: Vec<_> = draws
            .iter()
            .filter(|(x, _)| *x >= w[0] && *x < w[1])
            .collect();
        let emp = bin.iter().map(|(_, n)| n).sum::<f64>() / bin.len() as f64;
        let want = bin
            .iter()
            .map(|(x, _)| p.gamma_shape() * (x.powf(-p.psi) - 1.0))
            .sum::<f64>()
            / bin.len() as f64;
        assert!(
            (emp / want - 1.0).abs() < 0.02,
            "bin {w:?}: {emp} vs {want}"
        );
    }
}

#[test]
fn gamma_poisson_arrivals_are_a_yule_process() {
    // log(1 + T/γ) with γ ~ Gamma(1 + b) turns unit Poisson arrivals into a
    // b-Yule process; the first gap is Exp(1 + b).
    let b = 1.5;
    let first = replicate(4, 100_000, |rng| {
        let g = sample_gamma(rng, 1.0 + b).unwrap();
        let arrivals = unit_poisson_arrivals(rng, 50.0).unwrap();
        yule_arrivals_from_gamma_poisson(g, &arrivals).unwrap()[0]
    });
    let ks = ks_one_sample(&first, |s| 1.0 - (-(1.0 + b) * s).exp()).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn unit_out_degree_pairs_agree() {
    let n = 100_000;
    for (s, &(beta, c)) in [(0.0, 0.3), (0.0, 0.85), (1.0, 0.3), (1.0, 0.85)]
        .iter()
        .enumerate()
    {
        let p = PolyaParams::new(1, beta).unwrap();
        let yule = try_replicate(10 + s as u64, n, |rng| {
            limit_pair(&sample_limit_tree(1, beta, rng)?, c)
        })
        .unwrap();
        let polya = try_replicate(20 + s as u64, n, |rng| {
            sample_limit_pair_polya(&p, c, Truncation::Exact, rng)
        })
        .unwrap();
        let stored =
            try_replicate(30 + s as u64, n, |rng| coupled_limit_pair_polya(&p, c, rng)).unwrap();
        let r = |v: &[LimitPair]| v.iter().map(|x| x.pagerank).collect::<Vec<_>>();
        let d = |v: &[LimitPair]| v.iter().map(|x| x.in_degree as f64).collect::<Vec<_>>();
        for (label, a, b) in [
            ("R", r(&yule), r(&polya)),
            ("R stored", r(&yule), r(&stored)),
            ("D", d(&yule), d(&polya)),
            ("D stored", d(&yule), d(&stored)),
        ] {
            let ks = ks_two_sample(&a, &b).unwrap();
            assert!(ks.p_value > 0.01, "(1,{beta},{c}) {label} {ks:?}");
        }
    }
}

fn depth_profile(tree: &PolyaTree) -> (f64, f64, f64) {
    let d = tree.depth_counts();
    (d.get(1) as f64, d.get(2) as f64, d.max_depth() as f64)
}

fn ctbp_profile(tree: &CtbpTree) -> (f64, f64, f64) {
    let d = depth_counts(tree);
    (d.get(1) as f64, d.get(2) as f64, d.max_depth() as f64)
}

#[test]
fn size_and_depth_profile_agree_under_a_cap() {
    let n = 100_000;
    for (s, &(m, beta)) in PAIRS.iter().enumerate() {
        let p = PolyaParams::new(m, beta).unwrap();
        let polya = replicate(40 + s as u64, n, |rng| {
            capped(sample_polya_point_graph_with(&p, CAP, rng))
                .map(|t| (t.len(), depth_profile(&t)))
        });
        let yule = replicate(50 + s as u64, n, |rng| {
            capped(sample_limit_tree_with(m, beta, CAP, rng)).map(|t| (t.len(), ctbp_profile(&t)))
        });
        let size = |v: &[Capped]| {
            v.iter()
                .map(|o| o.map_or(CAP + 1, |t| t.0) as f64)
                .collect::<Vec<_>>()
        };
        let ks = ks_two_sample(&size(&polya), &size(&yule)).unwrap();
        assert!(ks.p_value > 0.01, "({m},{beta}) size {ks:?}");
        let below = |v: &[Capped]| v.iter().flatten().map(|t| t.1).collect::<Vec<_>>();
        let (a, b) = (below(&polya), below(&yule));
        for (label, f) in [("depth 1", 0usize), ("depth 2", 1), ("height", 2)] {
            let pick =
                |v: &[(f64, f64, f64)]| v.iter().map(|t| [t.0, t.1, t.2][f]).collect::<Vec<_>>();
            let ks = ks_two_sample(&pick(&a), &pick(&b)).unwrap();
            assert!(ks.p_value > 0.01, "({m},{beta}) {label} {ks:?}");
        }
    }
}

#[test]
fn mapped_birth_times_of_root_children() {
    let n = 20_000;
    for (s, &(m, beta)) in [(1usize, 1.0), (2, 0.5)].iter().enumerate() {
        let p = PolyaParams::new(m, beta).unwrap();
        let polya = replicate(60 + s as u64, n, |rng| {
            capped(sample_polya_point_graph_with(&p, CAP, rng)).map(|t| {
                let times = t.mapped_birth_times();
                let mut kids: Vec<f64> = (1..t.len())
                    .filter(|&i| t.nodes[i].depth == 1)
                    .map(|i| times[i])
                    .collect();
                kids.sort_by(f64::total_cmp);
                kids.first().copied().unwrap_or(f64::INFINITY)
            })
        });
        let yule = replicate(70 + s as u64, n, |rng| {
            capped(sample_limit_tree_with(m, beta, CAP, rng)).map(|t| {
                t.children_birth_times(0)
                    .first()
                    .copied()
                    .unwrap_or(f64::INFINITY)
            })
        });
        let a: Vec<f64> = polya.into_iter().flatten().collect();
        let b: Vec<f64> = yule.into_iter().flatten().collect();
        let ks = ks_two_sample(&a, &b).unwrap();
        assert!(ks.p_value > 0.01, "({m},{beta}) {ks:?}");
    }
}
