use std::fs::File;
use std::io::{self, BufReader, Read};
use std::path::Path;

use dpa_core::ctbp::{sample_limit_pair, LimitPair, Truncation};
use dpa_core::graph::{generate, DpaGraph, DpaParams};
use dpa_core::martingale::{martingale_suite, MartingaleParams, MomentQuantity};
use dpa_core::pagerank::{
    exact_pagerank, power_iteration_pagerank, stationary_pagerank_with_dangling,
};
use dpa_core::polya::{sample_limit_pair_polya, PolyaParams};
use dpa_core::rng::derive_seed;
use dpa_core::tailstats::{
    ccdf_regression, default_hill_k, default_joint_grid, geometric_checkpoints, graph_pairs,
    hill_estimator, hill_plot, joint_tail, joint_tail_compare, ks_two_sample,
    root_growth_experiment, theoretical_exponents, TailFit,
};
use dpa_core::{try_replicate, RngState};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::output::{emit, summary, Format};
use crate::{
    Command, ExponentsArgs, GenerateArgs, JointArgs, LimitArgs, MartingaleArgs, Method,
    PagerankArgs, RootGrowthArgs, TailFitArgs,
};

#[derive(Serialize)]
struct EdgeRow {
    source: usize,
    target: usize,
}

#[derive(Serialize)]
struct VertexRow {
    vertex: usize,
    in_degree: usize,
    pagerank: f64,
}

#[derive(Serialize)]
struct PairRow {
    replica: usize,
    in_degree: u64,
    pagerank: f64,
}

#[derive(Serialize)]
struct KsRow {
    quantity: &'static str,
    statistic: f64,
    p_value: f64,
}

#[derive(Serialize)]
struct MomentOut {
    quantity: &'static str,
    k: u32,
    t: f64,
    empirical_moment: f64,
    bound: f64,
}

#[derive(Serialize)]
struct FitRow {
    method: &'static str,
    k: usize,
    exponent: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct HillPlotRow {
    k: usize,
    exponent: f64,
}

#[derive(Serialize)]
struct JointRow {
    k: u64,
    r: f64,
    graph: f64,
    limit: f64,
    abs_diff: f64,
}

#[derive(Serialize)]
struct SlopeRow {
    replica: usize,
    slope: f64,
}

#[derive(Serialize)]
struct ExponentRow {
    indegree: f64,
    pagerank: f64,
    root_growth: Option<f64>,
}

pub fn run(cmd: &Command) -> Result<()> {
    if let Some(jobs) = cmd.common().jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    match cmd {
        Command::Generate(a) => run_generate(a, cmd),
        Command::Pagerank(a) => run_pagerank(a, cmd),
        Command::LimitSample(a) => run_limit_sample(a, cmd, false),
        Command::PolyaSample(a) => run_limit_sample(a, cmd, true),
        Command::CoupleTest(a) => run_couple_test(a, cmd),
        Command::MartingaleTest(a) => run_martingale(a, cmd),
        Command::TailFit(a) => run_tail_fit(a, cmd),
        Command::JointCompare(a) => run_joint(a, cmd),
        Command::RootGrowth(a) => run_root_growth(a, cmd),
        Command::Exponents(a) => run_exponents(a, cmd),
    }
}

fn truncation(m: usize, epsilon: Option<f64>) -> Truncation {
    match epsilon {
        Some(0.0) => Truncation::Exact,
        Some(e) => Truncation::Relative(e),
        None if m == 1 => Truncation::Exact,
        None => Truncation::Relative(1e-6),
    }
}

fn grow(n: usize, m: usize, beta: f64, seed: u64) -> Result<DpaGraph> {
    // The damping factor plays no part in growth.
    let params = DpaParams::new(n, m, beta, 0.5)?;
    Ok(generate(&params, &mut RngState::new(seed, 0))?)
}

fn run_generate(a: &GenerateArgs, cmd: &Command) -> Result<()> {
    let g = grow(a.n, a.model.m, a.model.beta, a.common.seed)?;
    let rows: Vec<EdgeRow> = g
        .edges()
        .map(|(source, target)| EdgeRow { source, target })
        .collect();
    emit(&rows, a.common.format, a.common.out.as_deref(), cmd)?;
    summary(
        a.common.out.is_some(),
        &format!(
            "generated n={} m={} beta={} edges={}",
            g.n(),
            g.m(),
            a.model.beta,
            g.edge_count()
        ),
    );
    Ok(())
}

fn load_graph(path: &Path) -> Result<DpaGraph> {
    let file = File::open(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    DpaGraph::read_csv(BufReader::new(file))
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn run_pagerank(a: &PagerankArgs, cmd: &Command) -> Result<()> {
    let g = match (&a.input, a.n) {
        (Some(path), _) => load_graph(path)?,
        (None, Some(n)) => grow(n, a.model.m, a.model.beta, a.common.seed)?,
        (None, None) => return Err(CliError::usage("need --input or --n")),
    };
    let r = match a.method {
        Method::Exact => exact_pagerank(&g, a.c)?,
        Method::Power => power_iteration_pagerank(&g, a.c, a.tol, a.max_iter)?,
        Method::Dangling => stationary_pagerank_with_dangling(&g, a.c, a.tol)?,
    };
    let in_degrees = g.in_degrees();
    let rows: Vec<VertexRow> = r
        .as_slice()
        .iter()
        .zip(&in_degrees)
        .enumerate()
        .map(|(i, (&pagerank, &in_degree))| VertexRow {
            vertex: i + 1,
            in_degree,
            pagerank,
        })
        .collect();
    emit(&rows, a.common.format, a.common.out.as_deref(), cmd)?;
    let top = rows
        .iter()
        .max_by(|x, y| x.pagerank.total_cmp(&y.pagerank))
        .map_or((0, f64::NAN), |row| (row.vertex, row.pagerank));
    summary(
        a.common.out.is_some(),
        &format!(
            "pagerank n={} c={} sum={:.6} max={:.6} at vertex {}",
            g.n(),
            a.c,
            r.sum(),
            top.1,
            top.0
        ),
    );
    Ok(())
}

fn limit_pairs(a: &LimitArgs, seed: u64, polya: bool) -> Result<Vec<LimitPair>> {
    let (m, beta) = (a.model.m, a.model.beta);
    let trunc = truncation(m, a.epsilon);
    if polya {
        let p = PolyaParams::new(m, beta)?;
        Ok(try_replicate(seed, a.replicas, |rng| {
            sample_limit_pair_polya(&p, a.c, trunc, rng)
        })?)
    } else {
        Ok(try_replicate(seed, a.replicas, |rng| {
            sample_limit_pair(m, beta, a.c, trunc, rng)
        })?)
    }
}

fn pair_rows(pairs: &[LimitPair]) -> Vec<PairRow> {
    pairs
        .iter()
        .enumerate()
        .map(|(replica, p)| PairRow {
            replica,
            in_degree: p.in_degree,
            pagerank: p.pagerank,
        })
        .collect()
}

fn run_limit_sample(a: &LimitArgs, cmd: &Command, polya: bool) -> Result<()> {
    let pairs = limit_pairs(a, a.common.seed, polya)?;
    emit(
        &pair_rows(&pairs),
        a.common.format,
        a.common.out.as_deref(),
        cmd,
    )?;
    let n = pairs.len().max(1) as f64;
    let mean_d = pairs.iter().map(|p| p.in_degree as f64).sum::<f64>() / n;
    let mean_r = pairs.iter().map(|p| p.pagerank).sum::<f64>() / n;
    summary(
        a.common.out.is_some(),
        &format!(
            "{} samples={} mean_in_degree={mean_d:.4} mean_pagerank={mean_r:.4}",
            if polya { "polya" } else { "limit" },
            pairs.len()
        ),
    );
    Ok(())
}

fn run_couple_test(a: &LimitArgs, cmd: &Command) -> Result<()> {
    let yule = limit_pairs(a, derive_seed(a.common.seed, 1), false)?;
    let polya = limit_pairs(a, derive_seed(a.common.seed, 2), true)?;
    let col = |v: &[LimitPair], f: fn(&LimitPair) -> f64| v.iter().map(f).collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (quantity, f) in [
        (
            "in_degree",
            (|p: &LimitPair| p.in_degree as f64) as fn(&LimitPair) -> f64,
        ),
        ("pagerank", |p: &LimitPair| p.pagerank),
    ] {
        let ks = ks_two_sample(&col(&yule, f), &col(&polya, f))?;
        rows.push(KsRow {
            quantity,
            statistic: ks.statistic,
            p_value: ks.p_value,
        });
    }
    emit(&rows, a.common.format, a.common.out.as_deref(), cmd)?;
    let line = rows
        .iter()
        .map(|r| format!("{} D={:.4} p={:.4}", r.quantity, r.statistic, r.p_value))
        .collect::<Vec<_>>()
        .join(" ");
    summary(
        a.common.out.is_some(),
        &format!("couple-test samples={} {line}", a.replicas),
    );
    Ok(())
}

fn run_martingale(a: &MartingaleArgs, cmd: &Command) -> Result<()> {
    let params = MartingaleParams::new(a.model.m, a.model.beta, a.c)?;
    let report = martingale_suite(&params, &a.t_grid, a.replicas, a.max_moment, a.common.seed)?;
    emit(&report.rows, a.common.format, a.common.out.as_deref(), cmd)?;
    if let Some(path) = &a.moments_out {
        let rows: Vec<MomentOut> = report
            .moments
            .iter()
            .map(|r| MomentOut {
                quantity: match r.quantity {
                    MomentQuantity::Discounted => "U",
                    MomentQuantity::Martingale => "M",
                },
                k: r.k,
                t: r.t,
                empirical_moment: r.empirical_moment,
                bound: r.bound,
            })
            .collect();
        emit(&rows, a.common.format, Some(path), cmd)?;
    }
    let worst = report
        .rows
        .iter()
        .map(|r| r.mean_mstar.abs() / r.se)
        .fold(0.0, f64::max);
    let violations = report
        .moments
        .iter()
        .filter(|r| r.empirical_moment > r.bound)
        .count();
    summary(
        a.common.out.is_some(),
        &format!(
            "martingale-test replicas={} max |mean M*|/se={worst:.2} bound violations={violations}",
            a.replicas
        ),
    );
    Ok(())
}

fn read_column(input: Option<&Path>, column: &str) -> Result<Vec<f64>> {
    let mut text = String::new();
    match input {
        Some(p) => File::open(p)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?,
        None => io::stdin().read_to_string(&mut text)?,
    };
    let bad = |line: usize, what: &str| CliError::usage(format!("line {line}: {what}"));
    if text.trim_start().starts_with('{') {
        let mut out = Vec::new();
        for (i, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let v: serde_json::Value =
                serde_json::from_str(line).map_err(|e| bad(i + 1, &e.to_string()))?;
            let x = v
                .get(column)
                .and_then(|x| x.as_f64())
                .ok_or_else(|| bad(i + 1, &format!("no numeric field {column:?}")))?;
            out.push(x);
        }
        return Ok(out);
    }
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let idx = rdr
        .headers()
        .map_err(|e| CliError::usage(e.to_string()))?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| CliError::usage(format!("no column {column:?} in input")))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::usage(e.to_string()))?;
        let x = rec
            .get(idx)
            .and_then(|f| f.trim().parse::<f64>().ok())
            .ok_or_else(|| bad(i + 2, &format!("{column:?} is not a number")))?;
        out.push(x);
    }
    Ok(out)
}

fn fit_row(f: &TailFit) -> FitRow {
    FitRow {
        method: f.method.as_str(),
        k: f.k_used,
        exponent: f.exponent,
        stderr: f.stderr,
    }
}

fn run_tail_fit(a: &TailFitArgs, cmd: &Command) -> Result<()> {
    let raw = read_column(a.input.as_deref(), &a.column)?;
    let mut rng = RngState::new(a.common.seed, 0);
    let xs: Vec<f64> = raw
        .iter()
        .map(|&x| {
            let x = if a.jitter { x + rng.uniform_open() } else { x };
            x - a.shift
        })
        .filter(|&x| x > 0.0)
        .collect();
    let dropped = raw.len() - xs.len();
    let k = a.k.unwrap_or_else(|| default_hill_k(xs.len()));
    let hill = hill_estimator(&xs, k)?;
    let mut rows = vec![fit_row(&hill)];
    let window = (a.window[0], a.window[1]);
    let ccdf = match ccdf_regression(&xs, window) {
        Ok(f) => {
            rows.push(fit_row(&f));
            format!("ccdf={:.4}±{:.4}", f.exponent, f.stderr)
        }
        Err(e @ dpa_core::Error::InsufficientData(_)) => format!("ccdf skipped ({e})"),
        Err(e) => return Err(e.into()),
    };
    emit(&rows, a.common.format, a.common.out.as_deref(), cmd)?;
    if !a.hill_plot.is_empty() {
        let plot: Vec<HillPlotRow> = hill_plot(&xs, &a.hill_plot)?
            .into_iter()
            .map(|(k, exponent)| HillPlotRow { k, exponent })
            .collect();
        match &a.plot_out {
            Some(p) => emit(&plot, a.common.format, Some(p), cmd)?,
            None => emit(&plot, a.common.format, None, cmd)?,
        }
    }
    summary(
        a.common.out.is_some(),
        &format!(
            "tail-fit n={} dropped={dropped} hill={:.4}±{:.4} k={}{} {ccdf}",
            xs.len(),
            hill.exponent,
            hill.stderr,
            hill.k_used,
            if hill.plateau_unstable {
                " (no stable plateau)"
            } else {
                ""
            }
        ),
    );
    Ok(())
}

fn run_joint(a: &JointArgs, cmd: &Command) -> Result<()> {
    let (m, beta) = (a.model.m, a.model.beta);
    let g = grow(a.n, m, beta, a.common.seed)?;
    let graph = graph_pairs(&g, &exact_pagerank(&g, a.c)?);
    let trunc = truncation(m, a.epsilon);
    let limit = try_replicate(derive_seed(a.common.seed, 1), a.replicas, |rng| {
        sample_limit_pair(m, beta, a.c, trunc, rng)
    })?;
    let grid = default_joint_grid();
    let rows: Vec<JointRow> = grid
        .iter()
        .map(|&(k, r)| {
            let (x, y) = (joint_tail(&graph, k, r), joint_tail(&limit, k, r));
            JointRow {
                k,
                r,
                graph: x,
                limit: y,
                abs_diff: (x - y).abs(),
            }
        })
        .collect();
    let worst = joint_tail_compare(&graph, &limit, &grid)?;
    emit(&rows, a.common.format, a.common.out.as_deref(), cmd)?;
    summary(
        a.common.out.is_some(),
        &format!(
            "joint-compare n={} limit_samples={} max_discrepancy={worst:.5}",
            a.n, a.replicas
        ),
    );
    Ok(())
}

fn run_root_growth(a: &RootGrowthArgs, cmd: &Command) -> Result<()> {
    let checkpoints = geometric_checkpoints(a.lo, a.hi, a.per_decade)?;
    let res = root_growth_experiment(a.beta, a.c, &checkpoints, a.replicas, a.common.seed)?;
    let rows: Vec<SlopeRow> = res
        .slopes
        .iter()
        .enumerate()
        .map(|(replica, &slope)| SlopeRow { replica, slope })
        .collect();
    emit(&rows, a.common.format, a.common.out.as_deref(), cmd)?;
    summary(
        a.common.out.is_some(),
        &format!(
            "root-growth replicas={} mean_slope={:.4}±{:.4} target={:.4}",
            a.replicas, res.mean_slope, res.stderr, res.target
        ),
    );
    Ok(())
}

/// Four decimals with trailing zeros removed.
fn short(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn run_exponents(a: &ExponentsArgs, cmd: &Command) -> Result<()> {
    let e = theoretical_exponents(a.model.m, a.model.beta, a.c)?;
    let line = format!(
        "indegree={} pagerank={} root_growth={}",
        short(e.indegree_tail),
        short(e.pagerank_tail),
        e.root_growth.map_or("unsupported".to_string(), short)
    );
    let row = ExponentRow {
        indegree: e.indegree_tail,
        pagerank: e.pagerank_tail,
        root_growth: e.root_growth,
    };
    match (&a.common.out, a.common.format) {
        (None, Format::Csv) => println!("{line}"),
        (out, format) => {
            emit(&[row], format, out.as_deref(), cmd)?;
            summary(out.is_some(), &line);
        }
    }
    Ok(())
}
