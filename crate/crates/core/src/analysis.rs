//! Space-time norms, log–log decay fits and the scattering probe.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nls::Trajectory;
use crate::propagator::{propagate_spectral, PropagatorPlan};
use crate::tree::RadialFunction;

/// Minimum number of samples per unit time for a trajectory to be integrated.
pub const MIN_SAMPLES_PER_UNIT_TIME: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log–log fit.
    pub residual: f64,
    pub stderr: f64,
    /// 95% confidence interval for the slope.
    pub ci: (f64, f64),
    pub points: usize,
}

/// Two-sided 97.5% quantiles of Student's t for 1..=30 degrees of freedom.
const T_QUANTILES: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160,
    2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056,
    2.052, 2.048, 2.045, 2.042,
];

fn t_quantile(dof: usize) -> f64 {
    if dof == 0 {
        f64::INFINITY
    } else if dof <= 30 {
        T_QUANTILES[dof - 1]
    } else {
        1.96 + 2.4 / dof as f64
    }
}

/// Least squares of `ln value` against `ln t`.
///
/// Needs at least 8 points with positive times and values, spanning at least
/// one decade in `t`.
pub fn fit_decay(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::Fit("times and values differ in length".into()));
    }
    let n = times.len();
    if n < 8 {
        return Err(Error::Fit(format!("need at least 8 points, got {n}")));
    }
    if times.iter().chain(values).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Fit("times and values must be positive and finite".into()));
    }
    let t_min = times.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = times.iter().copied().fold(0.0, f64::max);
    if t_max < 10.0 * t_min * (1.0 - 1e-12) {
        return Err(Error::Fit(format!("time range [{t_min}, {t_max}] spans less than a decade")));
    }
    let x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let stderr = (ss / (nf - 2.0) / sxx).sqrt();
    let half = t_quantile(n - 2) * stderr;
    Ok(DecayFit {
        slope,
        intercept,
        residual: (ss / nf).sqrt(),
        stderr,
        ci: (slope - half, slope + half),
        points: n,
    })
}

/// Local maxima of an oscillating sampled signal (interior points at least as
/// large as both neighbours).
pub fn local_maxima(times: &[f64], values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        if values[i] >= values[i - 1] && values[i] >= values[i + 1] && values[i] > 0.0 {
            ts.push(times[i]);
            vs.push(values[i]);
        }
    }
    (ts, vs)
}

/// `n` logarithmically spaced points from `a` to `b`.
pub fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Exponent pair stored as reciprocals `(1/p, 1/q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissiblePair {
    pub inv_p: f64,
    pub inv_q: f64,
}

impl AdmissiblePair {
    /// Accepts exactly the square `(0, ½] × [0, ½) ∪ {(0, ½)}`.
    pub fn new(inv_p: f64, inv_q: f64) -> Result<Self> {
        if Self::is_admissible(inv_p, inv_q) {
            Ok(Self { inv_p, inv_q })
        } else {
            Err(Error::Domain(format!(
                "(1/p, 1/q) = ({inv_p}, {inv_q}) is outside the square (0,1/2]x[0,1/2) ∪ {{(0,1/2)}}"
            )))
        }
    }

    /// From exponents, `f64::INFINITY` allowed.
    pub fn from_exponents(p: f64, q: f64) -> Result<Self> {
        Self::new(1.0 / p, 1.0 / q)
    }

    pub fn is_admissible(inv_p: f64, inv_q: f64) -> bool {
        (inv_p > 0.0 && inv_p <= 0.5 && inv_q >= 0.0 && inv_q < 0.5) || (inv_p == 0.0 && inv_q == 0.5)
    }

    pub fn p(&self) -> f64 {
        1.0 / self.inv_p
    }

    pub fn q(&self) -> f64 {
        1.0 / self.inv_q
    }

    /// Label such as `4,4` or `inf,2`.
    pub fn label(&self) -> String {
        let fmt = |v: f64| if v.is_infinite() { "inf".to_string() } else { format!("{v}") };
        format!("{},{}", fmt(self.p()), fmt(self.q()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowNorm {
    pub start: f64,
    pub end: f64,
    /// `||u||_{L^p([start,end]; L^q)}`.
    pub norm: f64,
    /// `∫_start^end ||u||_q^p dt` (for `p = ∞`, the window maximum).
    pub increment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub pair: AdmissiblePair,
    pub windows: Vec<WindowNorm>,
    /// Norm over the union of the first `k+1` windows.
    pub cumulative: Vec<f64>,
    /// Relative change of the total when every other sample is dropped.
    pub stride_check: f64,
    /// Fit of the increments against the window start, when there are enough windows.
    pub tail_fit: Option<DecayFit>,
}

fn trapezoid(ts: &[f64], vs: &[f64]) -> f64 {
    ts.windows(2)
        .zip(vs.windows(2))
        .map(|(t, v)| (t[1] - t[0]) * (v[0] + v[1]) / 2.0)
        .sum()
}

fn window_increment(ts: &[f64], vs: &[f64], inv_p: f64, start: f64, end: f64) -> f64 {
    let idx: Vec<usize> = (0..ts.len())
        .filter(|&i| ts[i] >= start - 1e-9 && ts[i] <= end + 1e-9)
        .collect();
    let t: Vec<f64> = idx.iter().map(|&i| ts[i]).collect();
    let v: Vec<f64> = idx.iter().map(|&i| vs[i]).collect();
    if inv_p == 0.0 {
        v.iter().copied().fold(0.0, f64::max)
    } else {
        trapezoid(&t, &v)
    }
}

/// `L^p_t L^q_x` norms of a trajectory over the given time windows.
pub fn strichartz_norm(traj: &Trajectory, pair: AdmissiblePair, windows: &[(f64, f64)]) -> Result<NormReport> {
    AdmissiblePair::new(pair.inv_p, pair.inv_q)?;
    let ts = &traj.times;
    let span = ts[ts.len() - 1] - ts[0];
    if ts.len() < 2 || (ts.len() - 1) as f64 / span < MIN_SAMPLES_PER_UNIT_TIME * (1.0 - 1e-9) {
        return Err(Error::Domain(format!(
            "trajectory has {} samples over {span} time units; need at least {MIN_SAMPLES_PER_UNIT_TIME} per unit",
            ts.len()
        )));
    }
    for &(a, b) in windows {
        if !(a < b) || a < ts[0] - 1e-9 || b > ts[ts.len() - 1] + 1e-9 {
            return Err(Error::Domain(format!("window [{a}, {b}] is not inside the trajectory")));
        }
    }
    let q = pair.q();
    let p = pair.p();
    let norms = traj
        .states
        .par_iter()
        .map(|s| s.lp_norm(q))
        .collect::<Result<Vec<f64>>>()?;
    let integrand: Vec<f64> = if pair.inv_p == 0.0 {
        norms.clone()
    } else {
        norms.iter().map(|v| v.powf(p)).collect()
    };
    let to_norm = |inc: f64| if pair.inv_p == 0.0 { inc } else { inc.powf(1.0 / p) };

    let mut out = Vec::with_capacity(windows.len());
    let mut cumulative = Vec::with_capacity(windows.len());
    let mut acc = 0.0f64;
    for &(a, b) in windows {
        let inc = window_increment(ts, &integrand, pair.inv_p, a, b);
        acc = if pair.inv_p == 0.0 { acc.max(inc) } else { acc + inc };
        out.push(WindowNorm {
            start: a,
            end: b,
            norm: to_norm(inc),
            increment: inc,
        });
        cumulative.push(to_norm(acc));
    }

    let (lo, hi) = windows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), w| (l.min(w.0), h.max(w.1)));
    let full = window_increment(ts, &integrand, pair.inv_p, lo, hi);
    let half_ts: Vec<f64> = ts.iter().step_by(2).copied().collect();
    let half_vs: Vec<f64> = integrand.iter().step_by(2).copied().collect();
    let coarse = window_increment(&half_ts, &half_vs, pair.inv_p, lo, hi);
    let stride_check = if full > 0.0 {
        (to_norm(coarse) - to_norm(full)).abs() / to_norm(full)
    } else {
        0.0
    };

    let tail_fit = if windows.len() >= 8 {
        let starts: Vec<f64> = windows.iter().map(|w| w.0).collect();
        let incs: Vec<f64> = out.iter().map(|w| w.increment).collect();
        fit_decay(&starts, &incs).ok()
    } else {
        None
    };
    Ok(NormReport {
        pair,
        windows: out,
        cumulative,
        stride_check,
        tail_fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchyIncrement {
    pub t1: f64,
    pub t2: f64,
    /// `||z(t2) - z(t1)||_2`.
    pub distance: f64,
    /// `(∫_{t1}^{t2} ||u||_{1+γ}^{1+γ} dt)^{γ/(1+γ)}`, when computable from the records.
    pub strichartz_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatteringReport {
    pub ladder: Vec<f64>,
    /// Increments `d(T, 2T)` for ladder points whose double is also on the ladder.
    pub doubling: Vec<CauchyIncrement>,
    /// `d(t_j, t_k)` for all pairs `j < k` of the ladder.
    pub cauchy: Vec<CauchyIncrement>,
    /// `||u(T) - e^{iTL} u_+||_2` for each ladder time.
    pub residuals: Vec<(f64, f64)>,
    /// Largest `distance / strichartz_bound` over the doubling increments.
    pub k_ratio: Option<f64>,
    #[serde(skip)]
    pub u_plus: RadialFunction,
}

/// `z(t) = e^{-itL} u(t)` on a ladder of recorded times, its Cauchy table and
/// the candidate asymptotic state `u_+ = z(T_max)`.
pub fn scattering_probe(traj: &Trajectory, ladder: &[f64]) -> Result<ScatteringReport> {
    if ladder.is_empty() {
        return Err(Error::Domain("empty scattering ladder".into()));
    }
    let spacing = traj.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let idx = ladder
        .iter()
        .map(|&t| {
            traj.index_of(t, 1e-9 + spacing * 1e-6)
                .ok_or_else(|| Error::Domain(format!("ladder time {t} is not a recorded time")))
        })
        .collect::<Result<Vec<_>>>()?;
    let t_max = ladder.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let plan = PropagatorPlan::new(traj.params, t_max)?;
    let z = idx
        .par_iter()
        .zip(ladder)
        .map(|(&i, &t)| propagate_spectral(&traj.states[i], -t, &plan))
        .collect::<Result<Vec<_>>>()?;
    let last = ladder
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let u_plus = z[last].clone();

    let gamma = traj.nonlinearity.map(|s| s.gamma);
    let bound = |t1: f64, t2: f64| -> Option<f64> {
        let g = gamma?;
        let p = 1.0 + g;
        let i1 = traj.index_of(t1, 1e-9)?;
        let i2 = traj.index_of(t2, 1e-9)?;
        let ts = &traj.times[i1..=i2];
        let vs: Vec<f64> = traj.states[i1..=i2]
            .iter()
            .map(|s| s.lp_norm(p).map(|v| v.powf(p)).unwrap_or(f64::NAN))
            .collect();
        Some(trapezoid(ts, &vs).powf(g / p))
    };

    let mut cauchy = Vec::new();
    let mut doubling = Vec::new();
    for j in 0..ladder.len() {
        for k in j + 1..ladder.len() {
            let (a, b) = if ladder[j] < ladder[k] { (j, k) } else { (k, j) };
            let inc = CauchyIncrement {
                t1: ladder[a],
                t2: ladder[b],
                distance: z[a].l2_distance(&z[b]),
                strichartz_bound: None,
            };
            cauchy.push(inc);
            if (ladder[b] - 2.0 * ladder[a]).abs() < 1e-9 * ladder[b].abs().max(1.0) {
                doubling.push(CauchyIncrement {
                    strichartz_bound: bound(ladder[a], ladder[b]),
                    ..inc
                });
            }
        }
    }
    doubling.sort_by(|a, b| a.t1.total_cmp(&b.t1));

    let residuals = idx
        .par_iter()
        .zip(ladder)
        .map(|(&i, &t)| {
            let back = propagate_spectral(&u_plus, t, &PropagatorPlan::new(u_plus.params, t)?)?;
            Ok((t, traj.states[i].l2_distance(&back)))
        })
        .collect::<Result<Vec<_>>>()?;

    let k_ratio = doubling
        .iter()
        .filter_map(|d| d.strichartz_bound.filter(|b| *b > 0.0).map(|b| d.distance / b))
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
    Ok(ScatteringReport {
        ladder: ladder.to_vec(),
        doubling,
        cauchy,
        residuals,
        k_ratio,
        u_plus,
    })
}
