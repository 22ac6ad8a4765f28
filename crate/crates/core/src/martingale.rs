//! Continuous-time PageRank `P*(t) = sum_k (c/m)^k P_k(t)` of the
//! branching process, its compensator, and the martingales built from them.
//!
//! `P = (P_1, P_2, ...)` jumps like a linear Markov chain with generator
//! `Q = I + (m+β) N` (`N` the lower shift) plus the constant input
//! `(m+β) e_1`, so `e^{-Qt} P(t) - φ(t)` is a martingale coordinatewise and
//! `e^{-θt} P*(t) - ν(1 - e^{-θt})` is one in aggregate.

use serde::Serialize;

use crate::ctbp::{simulate_ctbp_with, BirthEvent, CtbpTree, DepthCounts, DEFAULT_MAX_NODES};
use crate::error::{Error, Result};
use crate::graph::{check_damping, check_m_beta};
use crate::replica::try_replicate;
use crate::rng::RngState;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MartingaleParams {
    pub m: usize,
    pub beta: f64,
    pub c: f64,
    pub theta: f64,
    pub nu: f64,
    pub alpha: f64,
}

impl MartingaleParams {
    pub fn new(m: usize, beta: f64, c: f64) -> Result<Self> {
        check_m_beta(m, beta)?;
        check_damping(c)?;
        let mf = m as f64;
        let theta = 1.0 + (mf + beta) * c / mf;
        let nu = (mf + beta) * c / (theta * mf);
        if (nu * theta * mf - (mf + beta) * c).abs() >= 1e-12 {
            return Err(Error::Numeric("nu * theta * m != (m + beta) c".into()));
        }
        Ok(MartingaleParams {
            m,
            beta,
            c,
            theta,
            nu,
            alpha: 2.0 + beta / mf,
        })
    }

    pub fn weight(&self) -> f64 {
        self.c / self.m as f64
    }

    fn offset(&self) -> f64 {
        self.m as f64 + self.beta
    }
}

/// `sum_k (c/m)^k P_k`.
pub fn pstar(depths: &DepthCounts, c: f64, m: usize) -> f64 {
    let w = c / m as f64;
    let mut weight = 1.0;
    let mut acc = 0.0;
    for (_, p) in depths.iter() {
        weight *= w;
        acc += weight * p as f64;
    }
    acc
}

/// `P_k(t)` for a tree simulated to at least `t`.
pub fn depth_counts_at(tree: &CtbpTree, t: f64) -> DepthCounts {
    let mut counts: Vec<u64> = Vec::new();
    for node in tree.nodes.iter().skip(1).take_while(|n| n.birth_time <= t) {
        let d = node.depth as usize;
        if counts.len() < d {
            counts.resize(d, 0);
        }
        counts[d - 1] += 1;
    }
    DepthCounts::from_counts(counts)
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!(
            "time must be finite and >= 0, got {t}"
        )))
    }
}

fn check_observed(tree: &CtbpTree, t: f64) -> Result<()> {
    check_time(t)?;
    if t > tree.horizon {
        return Err(Error::param(format!(
            "tree observed to {} but t = {t}",
            tree.horizon
        )));
    }
    Ok(())
}

/// `ν (1 - e^{-θt})`.
pub fn phistar(t: f64, params: &MartingaleParams) -> Result<f64> {
    check_time(t)?;
    Ok(-params.nu * (-params.theta * t).exp_m1())
}

/// `U(t) = e^{-θt} P*(t)`.
pub fn discounted_pstar(tree: &CtbpTree, t: f64, params: &MartingaleParams) -> Result<f64> {
    check_observed(tree, t)?;
    Ok((-params.theta * t).exp() * pstar(&depth_counts_at(tree, t), params.c, params.m))
}

/// `M*(t) = e^{-θt} P*(t) - φ*(t)`.
pub fn mstar(tree: &CtbpTree, t: f64, params: &MartingaleParams) -> Result<f64> {
    Ok(discounted_pstar(tree, t, params)? - phistar(t, params)?)
}

/// `(e^{-Qt})_{ij} = (m+β)^{i-j} (-t)^{i-j} / (i-j)! e^{-t}` for `i >= j`.
pub fn neg_q_exp_entry(i: usize, j: usize, t: f64, offset: f64) -> f64 {
    if j > i {
        return 0.0;
    }
    let k = i - j;
    let mut term = (-t).exp();
    for r in 1..=k {
        term *= -offset * t / r as f64;
    }
    term
}

fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    (a, fa): (f64, f64),
    (b, fb): (f64, f64),
    (mid, fm): (f64, f64),
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let lm = 0.5 * (a + mid);
    let rm = 0.5 * (mid + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numeric(format!(
            "adaptive quadrature did not converge on [{a}, {b}]"
        )));
    }
    Ok(
        simpson_step(f, (a, fa), (mid, fm), (lm, flm), left, 0.5 * tol, depth - 1)?
            + simpson_step(
                f,
                (mid, fm),
                (b, fb),
                (rm, frm),
                right,
                0.5 * tol,
                depth - 1,
            )?,
    )
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mid = 0.5 * (a + b);
    let (fa, fb, fm) = (f(a), f(b), f(mid));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let out = simpson_step(&f, (a, fa), (b, fb), (mid, fm), whole, tol, 50)?;
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::Numeric(
            "quadrature produced a non-finite value".into(),
        ))
    }
}

/// `φ_i(t) = (m+β) ∫_0^t (e^{-Qs})_{i1} ds`, by quadrature.
pub fn phi_coordinate(i: usize, t: f64, params: &MartingaleParams) -> Result<f64> {
    check_time(t)?;
    if i == 0 {
        return Err(Error::param("coordinate index starts at 1"));
    }
    let offset = params.offset();
    adaptive_simpson(|s| offset * neg_q_exp_entry(i, 1, s, offset), 0.0, t, 1e-10)
}

/// Coordinate martingales `M_1(t), ..., M_{i_max}(t)` at one time, with the
/// compensators computed once.
#[derive(Clone, Debug)]
pub struct CoordinateMartingales {
    params: MartingaleParams,
    t: f64,
    phis: Vec<f64>,
}

impl CoordinateMartingales {
    pub fn new(params: &MartingaleParams, t: f64, i_max: usize) -> Result<Self> {
        let phis = (1..=i_max)
            .map(|i| phi_coordinate(i, t, params))
            .collect::<Result<Vec<_>>>()?;
        Ok(CoordinateMartingales {
            params: *params,
            t,
            phis,
        })
    }

    pub fn i_max(&self) -> usize {
        self.phis.len()
    }

    pub fn phi(&self, i: usize) -> f64 {
        self.phis[i - 1]
    }

    /// `M_i(t) = sum_{j <= i} (e^{-Qt})_{ij} P_j(t) - φ_i(t)`.
    pub fn evaluate(&self, depths: &DepthCounts, i: usize) -> Result<f64> {
        if i == 0 || i > self.i_max() {
            return Err(Error::Index {
                index: i,
                len: self.i_max(),
            });
        }
        let offset = self.params.offset();
        let drift: f64 = (1..=i)
            .map(|j| neg_q_exp_entry(i, j, self.t, offset) * depths.get(j) as f64)
            .sum();
        Ok(drift - self.phi(i))
    }

    /// `sum_{i <= i_max} (c/m)^i M_i(t)`, which tends to `M*(t)`.
    pub fn weighted_sum(&self, depths: &DepthCounts) -> Result<f64> {
        let w = self.params.weight();
        let mut acc = 0.0;
        for i in 1..=self.i_max() {
            acc += w.powi(i as i32) * self.evaluate(depths, i)?;
        }
        Ok(acc)
    }
}

pub fn coordinate_martingale(
    tree: &CtbpTree,
    t: f64,
    i: usize,
    params: &MartingaleParams,
    i_max: usize,
) -> Result<f64> {
    check_observed(tree, t)?;
    if i > i_max {
        return Err(Error::Index {
            index: i,
            len: i_max,
        });
    }
    CoordinateMartingales::new(params, t, i_max)?.evaluate(&depth_counts_at(tree, t), i)
}

fn finite_or_overflow(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Arithmetic(format!("{what} overflows f64")))
    }
}

/// `D_l = ((m+β+θ)/θ)^l 2^{(l+1)(l+2)/2}`.
pub fn moment_bound_d(l: u32, params: &MartingaleParams) -> Result<f64> {
    if l == 0 {
        return Err(Error::param("moment order must be at least 1"));
    }
    let ratio = (params.offset() + params.theta) / params.theta;
    let exponent = (l as f64 + 1.0) * (l as f64 + 2.0) / 2.0;
    finite_or_overflow(ratio.powi(l as i32) * exponent.exp2(), "D_l")
}

/// `H_k = 2^k [ν^k + D_k]`.
pub fn moment_bound_h(k: u32, params: &MartingaleParams) -> Result<f64> {
    let d = moment_bound_d(k, params)?;
    finite_or_overflow((k as f64).exp2() * (params.nu.powi(k as i32) + d), "H_k")
}

/// `e^{-a[c(1+b)+b]} / (c+1)`.
pub fn exptail_closed_form(a: f64, b: f64, c: f64) -> f64 {
    (-a * (c * (1.0 + b) + b)).exp() / (c + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExptailCheck {
    pub mc_estimate: f64,
    pub standard_error: f64,
    pub closed_form: f64,
    pub abs_error: f64,
}

/// Monte Carlo estimate of `E[1(E > ab) e^{-(a+E)c}]` for `E ~ Exp(1)`.
pub fn exptail_identity_check(
    a: f64,
    b: f64,
    c: f64,
    n_samples: usize,
    rng: &mut RngState,
) -> Result<ExptailCheck> {
    for (name, v) in [("a", a), ("b", b), ("c", c)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(format!("{name} must be positive, got {v}")));
        }
    }
    if n_samples < 2 {
        return Err(Error::param("need at least two samples"));
    }
    let cut = a * b;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_samples {
        let e = rng.exp1();
        let x = if e > cut { (-(a + e) * c).exp() } else { 0.0 };
        sum += x;
        sum_sq += x * x;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    let closed = exptail_closed_form(a, b, c);
    Ok(ExptailCheck {
        mc_estimate: mean,
        standard_error: (var / n).sqrt(),
        closed_form: closed,
        abs_error: (mean - closed).abs(),
    })
}

/// `P_i(t) - ∫_0^t (P_i(s) + (m+β) P_{i-1}(s)) ds` for `i = 1..=i_max`
/// (`P_0 = 1`), replayed from a birth log. Each is a mean-zero martingale
/// exactly when the logged jump rates are those of the generator.
pub fn generator_residuals(
    log: &[BirthEvent],
    t: f64,
    m: usize,
    beta: f64,
    i_max: usize,
) -> Result<Vec<f64>> {
    check_m_beta(m, beta)?;
    check_time(t)?;
    let offset = m as f64 + beta;
    let mut depth = vec![0u32];
    let mut count = vec![0.0; i_max + 1];
    // ∫_0^t P_i(s) ds, with level 0 holding the root alone.
    let mut occupation = vec![0.0; i_max + 1];
    occupation[0] = t;
    for ev in log.iter().take_while(|ev| ev.time <= t) {
        let d = depth[ev.parent as usize] + 1;
        depth.push(d);
        let d = d as usize;
        if d <= i_max {
            count[d] += 1.0;
            occupation[d] += t - ev.time;
        }
    }
    Ok((1..=i_max)
        .map(|i| count[i] - occupation[i] - offset * occupation[i - 1])
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MartingaleRow {
    pub t: f64,
    pub mean_mstar: f64,
    pub se: f64,
    pub replicas: usize,
    pub mean_u: f64,
    pub se_u: f64,
    pub phistar: f64,
    pub max_identity_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MomentQuantity {
    /// `E[U(t)^k]` against `D_k`.
    Discounted,
    /// `E[|M*(t)|^k]` against `H_k`.
    Martingale,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub quantity: MomentQuantity,
    pub k: u32,
    pub t: f64,
    pub empirical_moment: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct MartingaleReport {
    pub rows: Vec<MartingaleRow>,
    pub moments: Vec<MomentRow>,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `replicas` branching processes to `max(t_grid)` and evaluates
/// `M*`, `U` and their first `max_moment` moments at each grid time.
pub fn martingale_suite(
    params: &MartingaleParams,
    t_grid: &[f64],
    replicas: usize,
    max_moment: u32,
    seed: u64,
) -> Result<MartingaleReport> {
    if replicas < 2 {
        return Err(Error::param("need at least two replicas"));
    }
    if t_grid.is_empty() {
        return Err(Error::param("empty time grid"));
    }
    for &t in t_grid {
        check_time(t)?;
    }
    let horizon = t_grid.iter().copied().fold(0.0, f64::max);
    // Per replica: (M*, U, |identity error|) at each grid time.
    let samples = try_replicate(seed, replicas, |rng| {
        let tree =
            simulate_ctbp_with(params.m, params.beta, horizon, DEFAULT_MAX_NODES, rng, None)?;
        t_grid
            .iter()
            .map(|&t| {
                let p = pstar(&depth_counts_at(&tree, t), params.c, params.m);
                let phi = phistar(t, params)?;
                let u = (-params.theta * t).exp() * p;
                let ms = u - phi;
                let back = (params.theta * t).exp() * (ms + phi);
                Ok((ms, u, (back - p).abs() / p.max(1.0)))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut report = MartingaleReport::default();
    for (g, &t) in t_grid.iter().enumerate() {
        let ms: Vec<f64> = samples.iter().map(|s| s[g].0).collect();
        let us: Vec<f64> = samples.iter().map(|s| s[g].1).collect();
        let (mean_mstar, se) = mean_se(&ms);
        let (mean_u, se_u) = mean_se(&us);
        let max_identity_error = samples.iter().map(|s| s[g].2).fold(0.0, f64::max);
        report.rows.push(MartingaleRow {
            t,
            mean_mstar,
            se,
            replicas,
            mean_u,
            se_u,
            phistar: phistar(t, params)?,
            max_identity_error,
        });
        for k in 1..=max_moment {
            let n = replicas as f64;
            let u_moment = us.iter().map(|u| u.powi(k as i32)).sum::<f64>() / n;
            let m_moment = ms.iter().map(|m| m.abs().powi(k as i32)).sum::<f64>() / n;
            report.moments.push(MomentRow {
                quantity: MomentQuantity::Discounted,
                k,
                t,
                empirical_moment: u_moment,
                bound: moment_bound_d(k, params)?,
            });
            report.moments.push(MomentRow {
                quantity: MomentQuantity::Martingale,
                k,
                t,
                empirical_moment: m_moment,
                bound: moment_bound_h(k, params)?,
            });
        }
    }
    Ok(report)
}

/// Writes `t,mean_mstar,se,replicas`.
pub fn write_martingale_csv<W: std::io::Write>(rows: &[MartingaleRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "mean_mstar", "se", "replicas"])?;
    for r in rows {
        out.write_record([
            r.t.to_string(),
            r.mean_mstar.to_string(),
            r.se.to_string(),
            r.replicas.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `quantity,k,t,empirical_moment,bound` with quantity `U` or `M`.
pub fn write_moments_csv<W: std::io::Write>(rows: &[MomentRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["quantity", "k", "t", "empirical_moment", "bound"])?;
    for r in rows {
        let q = match r.quantity {
            MomentQuantity::Discounted => "U",
            MomentQuantity::Martingale => "M",
        };
        out.write_record([
            q.to_string(),
            r.k.to_string(),
            r.t.to_string(),
            r.empirical_moment.to_string(),
            r.bound.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
