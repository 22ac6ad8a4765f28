//! Tail-exponent estimation, Kolmogorov–Smirnov tests, the closed-form
//! exponents, and the experiments that compare them.

use serde::Serialize;

use crate::ctbp::LimitPair;
use crate::error::{Error, Result};
use crate::graph::{check_damping, check_m_beta, DpaGraph, DpaGrowth};
use crate::pagerank::PageRankVector;
use crate::replica::try_replicate;
use crate::rng::RngState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    Hill,
    CcdfRegression,
}

impl TailMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TailMethod::Hill => "hill",
            TailMethod::CcdfRegression => "ccdf_regression",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailFit {
    pub exponent: f64,
    pub stderr: f64,
    pub k_used: usize,
    pub method: TailMethod,
    /// Hill only: estimates at `k/4` and `4k` disagree by more than 20%.
    pub plateau_unstable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoreticalExponents {
    pub indegree_tail: f64,
    pub pagerank_tail: f64,
    pub root_growth: Option<f64>,
}

impl TheoreticalExponents {
    pub fn root_growth(&self) -> Result<f64> {
        self.root_growth.ok_or_else(|| {
            Error::Unsupported("the root growth exponent is only known for m = 1".into())
        })
    }
}

/// In-degree tail `2 + β/m`, PageRank tail `(2 + β/m)/(1 + (m+β)c/m)` and,
/// for `m = 1`, the root growth rate `(1 + (1+β)c)/(2+β)`.
pub fn theoretical_exponents(m: usize, beta: f64, c: f64) -> Result<TheoreticalExponents> {
    check_m_beta(m, beta)?;
    check_damping(c)?;
    let mf = m as f64;
    let alpha = 2.0 + beta / mf;
    let theta = 1.0 + (mf + beta) * c / mf;
    let root_growth = (m == 1).then(|| (1.0 + (1.0 + beta) * c) / (2.0 + beta));
    Ok(TheoreticalExponents {
        indegree_tail: alpha,
        pagerank_tail: alpha / theta,
        root_growth,
    })
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::param("samples must be positive and finite"));
    }
    Ok(())
}

fn sorted_desc(samples: &[f64]) -> Vec<f64> {
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(|a, b| b.total_cmp(a));
    xs
}

fn hill_sorted(desc: &[f64], k: usize) -> f64 {
    let anchor = desc[k].ln();
    let s: f64 = desc[..k].iter().map(|x| x.ln() - anchor).sum();
    k as f64 / s
}

pub fn default_hill_k(n: usize) -> usize {
    (n as f64).powf(0.6).ceil() as usize
}

/// Hill estimate `k / sum_{i<=k} log(X_(i) / X_(k+1))` from the top `k`
/// order statistics, stderr `α/√k`.
pub fn hill_estimator(samples: &[f64], k: usize) -> Result<TailFit> {
    check_samples(samples)?;
    if k < 10 || k >= samples.len() {
        return Err(Error::param(format!(
            "Hill needs 10 <= k < {}, got {k}",
            samples.len()
        )));
    }
    let desc = sorted_desc(samples);
    let exponent = hill_sorted(&desc, k);
    if !(exponent.is_finite() && exponent > 0.0) {
        return Err(Error::Numeric(format!(
            "top {k} order statistics are tied; Hill is undefined"
        )));
    }
    let probe: Vec<f64> = [k / 4, k, (4 * k).min(desc.len() - 1)]
        .into_iter()
        .filter(|&j| j >= 10)
        .map(|j| hill_sorted(&desc, j))
        .collect();
    let lo = probe.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = probe.iter().copied().fold(0.0, f64::max);
    Ok(TailFit {
        exponent,
        stderr: exponent / (k as f64).sqrt(),
        k_used: k,
        method: TailMethod::Hill,
        plateau_unstable: (hi - lo) / exponent > 0.2,
    })
}

/// `(k, Hill estimate)` over the given `k` values; each must satisfy `1 <= k < N`.
pub fn hill_plot(samples: &[f64], ks: &[usize]) -> Result<Vec<(usize, f64)>> {
    check_samples(samples)?;
    let desc = sorted_desc(samples);
    ks.iter()
        .map(|&k| {
            if k == 0 || k >= desc.len() {
                Err(Error::param(format!(
                    "k = {k} out of range for {} samples",
                    desc.len()
                )))
            } else {
                Ok((k, hill_sorted(&desc, k)))
            }
        })
        .collect()
}

/// Least-squares slope of `log P(X >= v)` against `log v` over the distinct
/// values `v` between the `lo` and `hi` sample quantiles.
pub fn ccdf_regression(samples: &[f64], window: (f64, f64)) -> Result<TailFit> {
    check_samples(samples)?;
    let (lo, hi) = window;
    if !(0.5 <= lo && lo < hi && hi < 1.0) {
        return Err(Error::param(format!(
            "quantile window must satisfy 0.5 <= lo < hi < 1, got ({lo}, {hi})"
        )));
    }
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len();
    let q = |p: f64| xs[((p * n as f64).floor() as usize).min(n - 1)];
    let (v_lo, v_hi) = (q(lo), q(hi));
    let mut points = Vec::new();
    let mut i = 0;
    while i < n {
        let v = xs[i];
        let mut j = i;
        while j < n && xs[j] == v {
            j += 1;
        }
        if v >= v_lo && v <= v_hi {
            points.push((v.ln(), ((n - i) as f64 / n as f64).ln()));
        }
        i = j;
    }
    if points.len() < 50 {
        return Err(Error::InsufficientData(format!(
            "{} distinct values in the quantile window, need 50",
            points.len()
        )));
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = points
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum();
    let stderr = (resid / (k - 2.0) / sxx).sqrt();
    if !(slope < 0.0) {
        return Err(Error::Numeric(format!(
            "CCDF slope {slope} is not negative"
        )));
    }
    Ok(TailFit {
        exponent: -slope,
        stderr,
        k_used: points.len(),
        method: TailMethod::CcdfRegression,
        plateau_unstable: false,
    })
}

/// Kolmogorov distribution survival function `P(K > λ)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let y = (-pi2 / (8.0 * lambda * lambda)).exp();
        let s: f64 = (0..20).map(|j| y.powi((2 * j + 1) * (2 * j + 1))).sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|j: i32| {
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (j * j) as f64 * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let root = n_eff.sqrt();
    kolmogorov_survival((root + 0.12 + 0.11 / root) * d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample KS statistic with the asymptotic p-value (Stephens'
/// small-sample correction). Ties are handled exactly in the statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::param("both samples must be nonempty"));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::param("samples contain NaN"));
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_unstable_by(f64::total_cmp);
    xb.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let v = xa[i].min(xb[j]);
        while i < na && xa[i] == v {
            i += 1;
        }
        while j < nb && xb[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let n_eff = (na * nb) as f64 / (na + nb) as f64;
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, n_eff),
    })
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::param("sample must be nonempty"));
    }
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    })
}

/// `(D⁻, R)` of every vertex of a graph, i.e. of a uniformly chosen vertex.
pub fn graph_pairs(graph: &DpaGraph, pagerank: &PageRankVector) -> Vec<LimitPair> {
    graph
        .in_degrees()
        .into_iter()
        .zip(pagerank.as_slice())
        .map(|(d, &r)| LimitPair {
            in_degree: d as u64,
            pagerank: r,
        })
        .collect()
}

pub fn default_joint_grid() -> Vec<(u64, f64)> {
    let mut grid = Vec::new();
    for &k in &[0u64, 1, 2, 5, 10] {
        for &r in &[0.5, 1.0, 2.0, 5.0] {
            grid.push((k, r));
        }
    }
    grid
}

/// Empirical `P(D⁻ >= k, R > r)`.
pub fn joint_tail(samples: &[LimitPair], k: u64, r: f64) -> f64 {
    samples
        .iter()
        .filter(|p| p.in_degree >= k && p.pagerank > r)
        .count() as f64
        / samples.len() as f64
}

/// `max over (k, r) in grid of |P̂(D⁻ >= k, R > r) - P̃(D⁻ >= k, R > r)|`.
pub fn joint_tail_compare(
    graph_samples: &[LimitPair],
    limit_samples: &[LimitPair],
    grid: &[(u64, f64)],
) -> Result<f64> {
    if graph_samples.is_empty() || limit_samples.is_empty() {
        return Err(Error::param("both sample sets must be nonempty"));
    }
    Ok(grid
        .iter()
        .map(|&(k, r)| (joint_tail(graph_samples, k, r) - joint_tail(limit_samples, k, r)).abs())
        .fold(0.0, f64::max))
}

/// About `per_decade` log-spaced integers from `lo` to `hi`, both included.
pub fn geometric_checkpoints(lo: usize, hi: usize, per_decade: usize) -> Result<Vec<usize>> {
    if lo < 2 || hi <= lo || per_decade == 0 {
        return Err(Error::param(
            "checkpoints need 2 <= lo < hi and per_decade >= 1",
        ));
    }
    let steps = ((hi as f64 / lo as f64).log10() * per_decade as f64).ceil() as usize;
    let ratio = (hi as f64 / lo as f64).powf(1.0 / steps as f64);
    let mut out: Vec<usize> = (0..=steps)
        .map(|s| (lo as f64 * ratio.powi(s as i32)).round() as usize)
        .collect();
    *out.last_mut().unwrap() = hi;
    out.dedup();
    Ok(out)
}

/// `R_1(n)` at each checkpoint along one DPA(1, β) trajectory, using
/// `R_1 = (1-c) sum_v c^{dist(v, 1)}` on the tree.
pub fn root_pagerank_trajectory(
    beta: f64,
    c: f64,
    checkpoints: &[usize],
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    check_m_beta(1, beta)?;
    check_damping(c)?;
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints[0] < 1
    {
        return Err(Error::param(
            "checkpoints must be positive and strictly increasing",
        ));
    }
    let n_max = *checkpoints.last().unwrap();
    let mut growth = DpaGrowth::with_capacity(1, beta, n_max)?;
    let mut powers = vec![1.0];
    let mut depth: Vec<u32> = Vec::with_capacity(n_max);
    depth.push(0);
    let mut sum = 1.0;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    for n in 1..=n_max {
        if n > 1 {
            let d = depth[growth.add_vertex(rng)?[0] as usize] + 1;
            depth.push(d);
            while powers.len() <= d as usize {
                powers.push(powers.last().unwrap() * c);
            }
            sum += powers[d as usize];
        }
        if n == checkpoints[next] {
            out.push((1.0 - c) * sum);
            next += 1;
        }
    }
    Ok(out)
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, Serialize)]
pub struct RootGrowthResult {
    pub slopes: Vec<f64>,
    pub mean_slope: f64,
    pub stderr: f64,
    pub target: f64,
}

/// Per-trajectory least-squares slope of `log R_1(n)` on `log n` over the
/// checkpoints in the top decade.
pub fn root_growth_experiment(
    beta: f64,
    c: f64,
    checkpoints: &[usize],
    replicas: usize,
    seed: u64,
) -> Result<RootGrowthResult> {
    let target = theoretical_exponents(1, beta, c)?.root_growth()?;
    if replicas < 2 {
        return Err(Error::param("need at least two replicas"));
    }
    let n_max = *checkpoints
        .last()
        .ok_or_else(|| Error::param("no checkpoints"))?;
    let fit: Vec<usize> = (0..checkpoints.len())
        .filter(|&i| checkpoints[i] * 10 >= n_max)
        .collect();
    if fit.len() < 2 {
        return Err(Error::param(
            "need at least two checkpoints in the top decade",
        ));
    }
    let xs: Vec<f64> = fit.iter().map(|&i| (checkpoints[i] as f64).ln()).collect();
    let slopes = try_replicate(seed, replicas, |rng| {
        let r = root_pagerank_trajectory(beta, c, checkpoints, rng)?;
        let ys: Vec<f64> = fit.iter().map(|&i| r[i].ln()).collect();
        Ok(ols_slope(&xs, &ys))
    })?;
    let n = slopes.len() as f64;
    let mean_slope = slopes.iter().sum::<f64>() / n;
    let var = slopes.iter().map(|s| (s - mean_slope).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(RootGrowthResult {
        slopes,
        mean_slope,
        stderr: (var / n).sqrt(),
        target,
    })
}

/// One draw of the depth-`depth` unrolling of
/// `ℛ = (1-c) + (c/m) sum_{i <= 𝒟⁻} ℛ_i` with independent subtrees and
/// base case `1 - c`.
pub fn dcm_fixed_point_sample<F>(
    indegree_sampler: &mut F,
    c: f64,
    m: usize,
    depth: u32,
    rng: &mut RngState,
) -> Result<f64>
where
    F: FnMut(&mut RngState) -> Result<u64>,
{
    check_damping(c)?;
    if m == 0 {
        return Err(Error::param("m must be at least 1"));
    }
    if depth == 0 {
        return Err(Error::param("depth must be at least 1"));
    }
    fn unroll<F: FnMut(&mut RngState) -> Result<u64>>(
        s: &mut F,
        c: f64,
        w: f64,
        depth: u32,
        rng: &mut RngState,
    ) -> Result<f64> {
        if depth == 0 {
            return Ok(1.0 - c);
        }
        let d = s(rng)?;
        let mut acc = 0.0;
        for _ in 0..d {
            acc += unroll(s, c, w, depth - 1, rng)?;
        }
        Ok(1.0 - c + w * acc)
    }
    unroll(indegree_sampler, c, c / m as f64, depth, rng)
}

/// Writes `method,k,exponent,stderr`.
pub fn write_tail_fits_csv<W: std::io::Write>(fits: &[TailFit], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["method", "k", "exponent", "stderr"])?;
    for f in fits {
        out.write_record([
            f.method.as_str().to_string(),
            f.k_used.to_string(),
            f.exponent.to_string(),
            f.stderr.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `k,exponent`.
pub fn write_hill_plot_csv<W: std::io::Write>(plot: &[(usize, f64)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["k", "exponent"])?;
    for (k, e) in plot {
        out.write_record([k.to_string(), e.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
