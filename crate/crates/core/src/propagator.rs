//! The linear flow `e^{itL}` on radial data.
//!
//! The spectral route multiplies `Hf` by `e^{it(1-γ(λ))}` and inverts; the
//! convolution route convolves with the kernel `s_t`. The spectral route is
//! the production path, the convolution route validates it.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{fit_decay, DecayFit};
use crate::error::{Error, Result};
use crate::kernel::{kernel_lq_norm, kernel_radius, schrodinger_kernel, schrodinger_kernel_auto};
use crate::nls::Trajectory;
use crate::spectral::{required_intervals, SpectralGrid};
use crate::tree::{radial_convolve, sphere_weights, RadialFunction, TreeParams};

/// Default relative mass allowed to leak past the output radius.
pub const DEFAULT_TAIL_TOL: f64 = 1e-9;

/// Relative size (in the unitary normalization) below which entries of a
/// step matrix are treated as zero.
const BAND_THRESHOLD: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagationRoute {
    Spectral,
    Convolution,
}

/// Radii by which the support of data can grow under `e^{itL}`: the front
/// `⌈γ(0)|t|⌉`, 32 radii, and six widths `(γ(0)|t|)^{1/3}` of the transition
/// layer beyond the front.
pub fn support_growth(q: u32, t: f64) -> usize {
    kernel_radius(q, t)
}

/// Largest radius at which the spherical functions (of size `~Q^{-n/2}`)
/// stay in the normal `f64` range.
pub fn max_representable_radius(q: u32) -> usize {
    (2.0 * 700.0 / (q as f64).ln()).floor() as usize
}

/// Precomputed grid and spherical-function tables for propagating data of
/// radius `<= params.n` by times `|t| <= t_max`.
#[derive(Debug, Clone)]
pub struct PropagatorPlan {
    pub params: TreeParams,
    pub output_radius: usize,
    pub t_max: f64,
    pub margin: usize,
    pub grid: SpectralGrid,
    pub route: PropagationRoute,
    pub tail_tol: f64,
    phi: Vec<Vec<f64>>,
    plancherel: Vec<f64>,
    gammas: Vec<f64>,
    weights: Vec<f64>,
}

impl PropagatorPlan {
    /// Plan whose output radius is the input radius plus the support growth.
    pub fn new(params: TreeParams, t_max: f64) -> Result<Self> {
        let margin = support_growth(params.q, t_max);
        Self::with_output_radius(params, params.n + margin, t_max)
    }

    /// Plan with a fixed output radius (e.g. equal to the input radius for a
    /// solver on a fixed truncated domain).
    pub fn with_output_radius(params: TreeParams, output_radius: usize, t_max: f64) -> Result<Self> {
        if !t_max.is_finite() {
            return Err(Error::Domain(format!("t_max must be finite, got {t_max}")));
        }
        let t_max = t_max.abs();
        let margin = support_growth(params.q, t_max);
        let table = params.n.max(output_radius);
        let limit = max_representable_radius(params.q);
        if table > limit {
            return Err(Error::Underflow {
                q: params.q,
                radius: table,
                limit,
            });
        }
        let grid = SpectralGrid::new(params.q, required_intervals(params.q, table + margin))?;
        let phi = grid.phi_table(table);
        let plancherel = grid.plancherel_weights();
        let gammas = grid.gammas();
        Ok(Self {
            params,
            output_radius: output_radius.max(1),
            t_max,
            margin,
            route: PropagationRoute::Spectral,
            tail_tol: DEFAULT_TAIL_TOL,
            phi,
            plancherel,
            gammas,
            weights: sphere_weights(params.q, table),
            grid,
        })
    }

    pub fn with_tail_tol(mut self, tail_tol: f64) -> Self {
        self.tail_tol = tail_tol;
        self
    }

    /// Uses a different inversion constant (normalization audit, fault injection).
    pub fn with_normalization(mut self, normalization: f64) -> Self {
        let ratio = normalization / self.grid.normalization;
        self.grid.normalization = normalization;
        for w in &mut self.plancherel {
            *w *= ratio;
        }
        self
    }

    fn check_input(&self, f: &RadialFunction, t: f64) -> Result<()> {
        if f.q() != self.params.q {
            return Err(Error::Domain(format!(
                "data has Q={} but the plan was built for Q={}",
                f.q(),
                self.params.q
            )));
        }
        if f.support_radius() > self.params.n {
            return Err(Error::Domain(format!(
                "data supported up to radius {} but the plan accepts radius <= {}",
                f.support_radius(),
                self.params.n
            )));
        }
        if !(t.abs() <= self.t_max * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!(
                "time {t} exceeds the plan's t_max={}",
                self.t_max
            )));
        }
        Ok(())
    }

    /// `Hf` at the grid nodes.
    pub(crate) fn transform(&self, f: &RadialFunction) -> Vec<Complex64> {
        let n_in = f.support_radius();
        let weighted: Vec<Complex64> = (0..=n_in).map(|n| f.values[n] * self.weights[n]).collect();
        self.phi
            .iter()
            .map(|row| weighted.iter().zip(row).map(|(w, p)| w * p).sum())
            .collect()
    }

    /// `H^{-1}` of node values, radii `0..=output_radius`.
    pub(crate) fn invert(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.output_radius + 1];
        for ((row, w), v) in self.phi.iter().zip(&self.plancherel).zip(values) {
            let a = v * w;
            for (o, p) in out.iter_mut().zip(row) {
                *o += a * p;
            }
        }
        out
    }

    pub(crate) fn multiplier(&self, t: f64) -> Vec<Complex64> {
        self.gammas
            .iter()
            .map(|g| Complex64::from_polar(1.0, t * (1.0 - g)))
            .collect()
    }
}

/// `e^{itL} f = H^{-1}(e^{it(1-γ)} Hf)`.
///
/// Fails with a truncation error if more than `plan.tail_tol` of the mass
/// (relative) is lost beyond the output radius.
pub fn propagate_spectral(f: &RadialFunction, t: f64, plan: &PropagatorPlan) -> Result<RadialFunction> {
    plan.check_input(f, t)?;
    let hf = plan.transform(f);
    let mult = plan.multiplier(t);
    let prod: Vec<Complex64> = hf.iter().zip(&mult).map(|(a, b)| a * b).collect();
    let values = plan.invert(&prod);
    let u = RadialFunction::from_values(plan.params.q, values)?;
    let mass_in = f.mass();
    if mass_in > 0.0 {
        let leaked = (mass_in - u.mass()) / mass_in;
        if leaked > plan.tail_tol {
            return Err(Error::Truncation {
                leaked,
                tolerance: plan.tail_tol,
            });
        }
    }
    Ok(u)
}

/// `e^{itL} f = f ∗ s_t` with the kernel computed to tolerance `tol`.
///
/// The result is exact (up to `tol`) on radii `<= N_s - N_f`, where `N_s` is
/// the kernel radius; `trusted` is set accordingly.
pub fn propagate_convolution(f: &RadialFunction, t: f64, tol: f64) -> Result<RadialFunction> {
    let q = f.q();
    let n_f = f.support_radius();
    let n_s = kernel_radius(q, t) + 2 * n_f;
    let s = schrodinger_kernel(TreeParams::new(q, n_s)?, t, tol)?;
    let g = f.resized(n_f.max(1));
    let mut out = radial_convolve(&g, &s.values)?;
    out.trusted = n_s - n_f;
    Ok(out)
}

/// `e^{itL_N}` for the radial Laplacian of the ball of radius `N` with
/// `u(N+1) = 0`, stored as the band matrix of `e^{itL_N} - I` so that rounding
/// of the entries scales with `t` rather than with 1.
///
/// In the `√w`-weighted coordinates `L_N` is a real symmetric tridiagonal
/// matrix `S`, and `e^{itS}` is evaluated by a Taylor series with scaling and
/// squaring, so the step is unitary up to rounding and conserves the
/// quadratic form of `L_N` exactly. On data far from the boundary it agrees
/// with [`propagate_spectral`].
#[derive(Debug, Clone)]
pub struct StepOperator {
    pub params: TreeParams,
    pub t: f64,
    pub bandwidth: usize,
    rows: Vec<(usize, Vec<Complex64>)>,
}

/// `√w`-weighted radial Laplacian: diagonal 1, off-diagonal entries.
fn symmetric_laplacian(q: u32, n: usize) -> Vec<f64> {
    let qf = q as f64;
    (0..n)
        .map(|k| if k == 0 { -1.0 / (qf + 1.0).sqrt() } else { -qf.sqrt() / (qf + 1.0) })
        .collect()
}

type Dense = Vec<Vec<Complex64>>;

fn dense_mul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut c = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (ci, ai) in c.iter_mut().zip(a) {
        for (aik, bk) in ai.iter().zip(b) {
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for (cij, bkj) in ci.iter_mut().zip(bk) {
                *cij += aik * bkj;
            }
        }
    }
    c
}

impl StepOperator {
    pub fn new(params: TreeParams, t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("step time must be finite, got {t}")));
        }
        let n = params.n;
        let limit = max_representable_radius(params.q);
        if n > limit {
            return Err(Error::Underflow {
                q: params.q,
                radius: n,
                limit,
            });
        }
        let off = symmetric_laplacian(params.q, n);
        // ||S|| <= 2; halve until |t| ||S|| <= 1/2.
        let mut squarings = 0u32;
        let mut h = t;
        while h.abs() * 2.0 > 0.5 {
            h /= 2.0;
            squarings += 1;
        }
        let ih = Complex64::new(0.0, h);
        let dim = n + 1;
        let mut term: Dense = (0..dim)
            .map(|a| {
                let mut row = vec![Complex64::new(0.0, 0.0); dim];
                row[a] = Complex64::new(1.0, 0.0);
                row
            })
            .collect();
        let mut sum: Dense = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
        for k in 1..60 {
            // term <- term · S · (ih / k), S tridiagonal.
            let scale = ih / k as f64;
            let next: Dense = term
                .iter()
                .map(|row| {
                    (0..dim)
                        .map(|b| {
                            let mut v = row[b];
                            if b > 0 {
                                v += row[b - 1] * off[b - 1];
                            }
                            if b < n {
                                v += row[b + 1] * off[b];
                            }
                            v * scale
                        })
                        .collect()
                })
                .collect();
            term = next;
            let mut size = 0.0f64;
            for (srow, trow) in sum.iter_mut().zip(&term) {
                for (s, v) in srow.iter_mut().zip(trow) {
                    *s += v;
                    size = size.max(v.norm());
                }
            }
            if size < 1e-18 {
                break;
            }
        }
        // (I + A)² - I = 2A + A².
        for _ in 0..squarings {
            let sq = dense_mul(&sum, &sum);
            for (srow, qrow) in sum.iter_mut().zip(&sq) {
                for (s, v) in srow.iter_mut().zip(qrow) {
                    *s = *s * 2.0 + v;
                }
            }
        }
        let mut bandwidth = 0;
        for (a, row) in sum.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                if v.norm() > BAND_THRESHOLD {
                    bandwidth = bandwidth.max(a.abs_diff(b));
                }
            }
        }
        let sqrt_w: Vec<f64> = sphere_weights(params.q, n).iter().map(|w| w.sqrt()).collect();
        let rows = (0..=n)
            .map(|a| {
                let start = a.saturating_sub(bandwidth);
                let end = (a + bandwidth).min(n);
                let entries = (start..=end).map(|b| sum[a][b] * (sqrt_w[b] / sqrt_w[a])).collect();
                (start, entries)
            })
            .collect();
        Ok(Self {
            params,
            t,
            bandwidth,
            rows,
        })
    }

    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .zip(u)
            .map(|((start, entries), ua)| {
                ua + entries.iter().zip(&u[*start..]).map(|(p, v)| p * v).sum::<Complex64>()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersiveRow {
    pub t: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersiveScan {
    pub q: f64,
    pub branching: u32,
    pub rows: Vec<DispersiveRow>,
    /// Fit of `ln ||s_t||_q` against `ln t` over the rows with `t >= 1`.
    pub fit: DecayFit,
}

/// `||s_t||_q` (the norm of `e^{itL}` applied to `δ_o`, a lower bound for
/// `||e^{itL}||_{q'→q}`) on a time grid, plus the log–log decay fit over
/// `t >= 1`.
pub fn dispersive_decay_scan(q: f64, t_grid: &[f64], branching: u32, tol: f64) -> Result<DispersiveScan> {
    if q.is_nan() || q <= 2.0 {
        return Err(Error::Domain(format!("dispersive scan needs q > 2, got {q}")));
    }
    if t_grid.is_empty() {
        return Err(Error::Fit("empty time grid".into()));
    }
    let rows = t_grid
        .par_iter()
        .map(|&t| {
            let s = schrodinger_kernel_auto(branching, t, tol)?;
            Ok(DispersiveRow {
                t,
                norm: kernel_lq_norm(&s, q)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (ts, norms): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.t >= 1.0)
        .map(|r| (r.t, r.norm))
        .unzip();
    let fit = fit_decay(&ts, &norms)?;
    Ok(DispersiveScan {
        q,
        branching,
        rows,
        fit,
    })
}

/// Conjugate exponent `p' = p/(p-1)` (with `∞' = 1`).
pub fn dual_exponent(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedNormReport {
    pub q: f64,
    pub q_tilde: f64,
    pub t: f64,
    pub seed: u64,
    pub ratios: Vec<f64>,
    pub sup_ratio: f64,
}

/// `||e^{itL} f||_q / ||f||_{q̃'}` for one radial datum.
pub fn mixed_norm_ratio(f: &RadialFunction, t: f64, q: f64, q_tilde: f64, plan: &PropagatorPlan) -> Result<f64> {
    let u = propagate_spectral(f, t, plan)?;
    Ok(u.lp_norm(q)? / f.lp_norm(dual_exponent(q_tilde))?)
}

/// Empirical constant `sup_f ||e^{itL} f||_q / ||f||_{q̃'}` over seeded random
/// radial data supported in radius `<= data_radius`.
pub fn mixed_norm_probe(
    q: f64,
    q_tilde: f64,
    t: f64,
    branching: u32,
    data_radius: usize,
    trials: usize,
    seed: u64,
) -> Result<MixedNormReport> {
    for (name, v) in [("q", q), ("q~", q_tilde)] {
        if v.is_nan() || v <= 2.0 {
            return Err(Error::Domain(format!("mixed-norm probe needs {name} > 2, got {v}")));
        }
    }
    let params = TreeParams::new(branching, data_radius.max(1))?;
    let plan = PropagatorPlan::new(params, t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(trials);
    for _ in 0..trials {
        let values = (0..=params.n)
            .map(|n| {
                if n <= data_radius {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let f = RadialFunction::from_values(branching, values)?;
        ratios.push(mixed_norm_ratio(&f, t, q, q_tilde, &plan)?);
    }
    let sup_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(MixedNormReport {
        q,
        q_tilde,
        t,
        seed,
        ratios,
        sup_ratio,
    })
}

/// Samples of the linear flow `e^{itL} f` at the given times (spectral route,
/// each time propagated directly from `f`).
pub fn linear_trajectory(f: &RadialFunction, times: &[f64]) -> Result<Trajectory> {
    let t_max = times.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let params = f.params.with_radius(f.support_radius().max(1));
    let plan = PropagatorPlan::new(params, t_max)?;
    let data = f.resized(params.n);
    let states = times
        .par_iter()
        .map(|&t| propagate_spectral(&data, t, &plan))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::from_states(times.to_vec(), states, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_time_is_identity() {
        let f = RadialFunction::from_real(2, &[0.5, -0.25, 1.0, 0.1]).unwrap();
        let plan = PropagatorPlan::new(f.params, 1.0).unwrap();
        let u = propagate_spectral(&f, 0.0, &plan).unwrap();
        assert!(u.max_abs_diff(&f) < 1e-13);
    }

    #[test]
    fn plan_rejects_long_times_and_wrong_q() {
        let f = RadialFunction::from_real(2, &[1.0, 0.0]).unwrap();
        let plan = PropagatorPlan::new(f.params, 1.0).unwrap();
        assert!(propagate_spectral(&f, 2.0, &plan).is_err());
        let g = RadialFunction::from_real(3, &[1.0, 0.0]).unwrap();
        assert!(propagate_spectral(&g, 0.5, &plan).is_err());
    }

    #[test]
    fn truncation_is_reported() {
        let f = RadialFunction::from_real(2, &[1.0, 0.0]).unwrap();
        let plan = PropagatorPlan::with_output_radius(f.params, 3, 20.0).unwrap();
        assert!(matches!(
            propagate_spectral(&f, 20.0, &plan),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn grid_satisfies_margin_invariant() {
        for t in [0.1, 5.0, 80.0] {
            let params = TreeParams::new(2, 10).unwrap();
            let plan = PropagatorPlan::new(params, t).unwrap();
            let needed = 10 + (params.gamma0() * t).ceil() as usize + 32;
            assert!(plan.grid.m >= needed);
        }
    }

    #[test]
    fn step_operator_matches_spectral_route() {
        let params = TreeParams::new(2, 30).unwrap();
        let f = RadialFunction::from_real(2, &[0.3, 1.0, -0.4, 0.2]).unwrap().resized(30);
        let op = StepOperator::new(params, 0.01).unwrap();
        assert!(op.bandwidth < 10, "bandwidth {}", op.bandwidth);
        let plan = PropagatorPlan::with_output_radius(params, 30, 0.01).unwrap();
        let a = propagate_spectral(&f, 0.01, &plan).unwrap();
        let b = op.apply(&f.values);
        for n in 0..=30 {
            assert!((a.values[n] - b[n]).norm() < 1e-14);
        }
        // Several squarings; the boundary at 30 is far beyond the front.
        let op = StepOperator::new(params, 3.0).unwrap();
        let plan = PropagatorPlan::with_output_radius(params, 30, 3.0).unwrap();
        let a = propagate_spectral(&f, 3.0, &plan).unwrap();
        let b = op.apply(&f.values);
        for n in 0..=30 {
            assert!((a.values[n] - b[n]).norm() < 1e-13);
        }
    }

    #[test]
    fn dual_exponents() {
        assert_eq!(dual_exponent(2.0), 2.0);
        assert_eq!(dual_exponent(f64::INFINITY), 1.0);
        assert!((dual_exponent(4.0) - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dispersive_scan_needs_a_decade() {
        assert!(dispersive_decay_scan(4.0, &[], 2, 1e-10).is_err());
        assert!(dispersive_decay_scan(4.0, &[1.0, 2.0, 3.0], 2, 1e-10).is_err());
        assert!(dispersive_decay_scan(2.0, &[1.0, 10.0], 2, 1e-10).is_err());
    }
}
