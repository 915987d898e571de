//! The Schrödinger kernel `s_t`, the radial convolution kernel of `e^{itL}`:
//!
//! `s_t(n) = e^{it} (2/π) Σ_{k≥0} Q^{-n/2-k} ∫_0^π e^{-iγ(0)t cos λ} sin λ sin((n+2k+1)λ) dλ`.
//!
//! Two independent evaluation routes are provided. The quadrature route
//! integrates the oscillatory integrals directly; the Bessel route uses
//! `sin λ sin mλ = ½[cos(m-1)λ - cos(m+1)λ]` and
//! `∫_0^π e^{ix cos λ} cos jλ dλ = π i^j J_j(x)`, which collapses each term to
//! `(-i)^{m-1} (π/2) (J_{m-1}(x) + J_{m+1}(x))` with `x = γ(0)t`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::bessel::{bessel_j, bessel_j_sequence};
use crate::error::{Error, Result};
use crate::tree::{sphere_weight, RadialFunction, TreeParams};

/// Default truncation tolerance of the `k`-series.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Pointwise-envelope constant `C*`: the maximum of `|s_t(n)| / envelope(t, n)`
/// over the calibration set `Q = 2`, `t ∈ {0.3, 1, 2, 5, 10, 50, 200}`,
/// `n <= 40`, as produced by [`calibrate_pointwise_constant`].
pub const POINTWISE_C_STAR: f64 = 5.755_063_254_524_13;

/// Times of the pointwise calibration set.
pub const POINTWISE_CALIBRATION_TIMES: [f64; 7] = [0.3, 1.0, 2.0, 5.0, 10.0, 50.0, 200.0];
/// Radii of the pointwise calibration set are `0..=POINTWISE_CALIBRATION_RADIUS`.
pub const POINTWISE_CALIBRATION_RADIUS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelRoute {
    Quadrature,
    Bessel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelMeta {
    /// Number of `k` terms kept is `k_terms + 1`.
    pub k_terms: usize,
    /// Quadrature nodes (0 for the Bessel route).
    pub nodes: usize,
    pub route: KernelRoute,
    pub tol: f64,
    /// Bound on the discarded `k`-series tail at `n = 0`.
    pub truncation_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchrodingerKernel {
    pub params: TreeParams,
    pub t: f64,
    pub values: RadialFunction,
    pub meta: KernelMeta,
}

/// `J(t, m) = ∫_0^π e^{ict cos λ} cos(mλ) dλ` by the trapezoid rule.
///
/// The integrand is even and `2π`-periodic, so the rule converges
/// geometrically once the node count exceeds `m + c|t|`. Starting from
/// `max(64, 8(m + ⌈c|t|⌉))` nodes, the count is doubled until two successive
/// estimates agree to `1e-15`.
pub fn oscillatory_j(t: f64, m: u32, c: f64) -> Complex64 {
    let x = c * t;
    let trapezoid = |p: usize| {
        let h = PI / p as f64;
        let f = |lam: f64| Complex64::from_polar(1.0, x * lam.cos()) * (m as f64 * lam).cos();
        let mut s = (f(0.0) + f(PI)) * 0.5;
        for j in 1..p {
            s += f(j as f64 * h);
        }
        s * h
    };
    let mut p = 64.max(8 * (m as usize + x.abs().ceil() as usize));
    let mut prev = trapezoid(p);
    for _ in 0..6 {
        p *= 2;
        let cur = trapezoid(p);
        if (cur - prev).norm() <= 1e-15 * (1.0 + cur.norm()) {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// `π i^m J_m(ct)`, the closed form of [`oscillatory_j`].
pub fn oscillatory_j_bessel(t: f64, m: u32, c: f64) -> Complex64 {
    Complex64::i().powu(m) * (PI * bessel_j(m, c * t))
}

/// Number of `k` terms beyond the first: `⌈ln(1/tol)/ln Q⌉ + 2`.
pub fn k_terms(q: u32, tol: f64) -> usize {
    ((1.0 / tol).ln() / (q as f64).ln()).ceil().max(0.0) as usize + 2
}

/// Default quadrature node count `8(n_max + 2K + 1 + ⌈γ(0)|t|⌉)`, at least 64.
pub fn quadrature_nodes(n_max: usize, k: usize, x: f64) -> usize {
    64.max(8 * (n_max + 2 * k + 1 + x.abs().ceil() as usize))
}

/// Radius beyond which `s_t` is negligible: the ballistic front `γ(0)|t|`
/// plus a margin covering the Airy transition layer of width `~(γ(0)|t|)^{1/3}`.
pub fn kernel_radius(q: u32, t: f64) -> usize {
    let x = TreeParams { q, n: 1 }.gamma0() * t.abs();
    (x.ceil() + 32.0 + 6.0 * x.cbrt().ceil()) as usize
}

/// `s_t` on radii `0..=params.n` by the Bessel route.
pub fn schrodinger_kernel(params: TreeParams, t: f64, tol: f64) -> Result<SchrodingerKernel> {
    schrodinger_kernel_with(params, t, tol, KernelRoute::Bessel)
}

pub fn schrodinger_kernel_with(
    params: TreeParams,
    t: f64,
    tol: f64,
    route: KernelRoute,
) -> Result<SchrodingerKernel> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Domain(format!("kernel tolerance must be in (0, 1), got {tol}")));
    }
    if !t.is_finite() {
        return Err(Error::Domain(format!("time must be finite, got {t}")));
    }
    let q = params.q;
    let qf = q as f64;
    let k = k_terms(q, tol);
    let n_max = params.n;
    let m_max = n_max + 2 * k + 1;
    let x = params.gamma0() * t;

    // term[m] = (2/π) ∫_0^π e^{-ix cos λ} sin λ sin(mλ) dλ for m = 1..=m_max.
    let (term, nodes) = match route {
        KernelRoute::Bessel => {
            let j = bessel_j_sequence(m_max + 1, x);
            let mut term = vec![Complex64::new(0.0, 0.0); m_max + 1];
            for m in 1..=m_max {
                // (-i)^{m-1}
                let phase = match (m - 1) % 4 {
                    0 => Complex64::new(1.0, 0.0),
                    1 => Complex64::new(0.0, -1.0),
                    2 => Complex64::new(-1.0, 0.0),
                    _ => Complex64::new(0.0, 1.0),
                };
                term[m] = phase * (j[m - 1] + j[m + 1]);
            }
            (term, 0)
        }
        KernelRoute::Quadrature => {
            let p = quadrature_nodes(n_max, k, x);
            let h = PI / p as f64;
            let mut acc = vec![Complex64::new(0.0, 0.0); m_max + 1];
            // Endpoints vanish (sin λ = 0).
            for jn in 1..p {
                let lam = jn as f64 * h;
                let base = Complex64::from_polar(h * lam.sin(), -x * lam.cos());
                let rotor = Complex64::from_polar(1.0, lam);
                let mut e = rotor;
                for a in acc.iter_mut().skip(1) {
                    *a += base * e.im;
                    e *= rotor;
                }
            }
            for a in acc.iter_mut() {
                *a *= 2.0 / PI;
            }
            (acc, p)
        }
    };

    let lead = Complex64::from_polar(1.0, t);
    let mut values = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut s = Complex64::new(0.0, 0.0);
        for kk in (0..=k).rev() {
            s += term[n + 2 * kk + 1] * qf.powi(-(kk as i32));
        }
        values.push(lead * s * qf.powf(-(n as f64) / 2.0));
    }
    let truncation_error = 4.0 / PI * qf.powi(-(k as i32 + 1)) / (1.0 - 1.0 / qf);
    Ok(SchrodingerKernel {
        params,
        t,
        values: RadialFunction {
            params,
            values,
            trusted: n_max,
        },
        meta: KernelMeta {
            k_terms: k,
            nodes,
            route,
            tol,
            truncation_error,
        },
    })
}

/// Kernel on radii `0..=kernel_radius(q, t)`.
pub fn schrodinger_kernel_auto(q: u32, t: f64, tol: f64) -> Result<SchrodingerKernel> {
    schrodinger_kernel(TreeParams::new(q, kernel_radius(q, t))?, t, tol)
}

/// Decay envelope of `|s_t(n)|`: `Q^{-n/2}` for `|t| < 1`,
/// `|t|^{-3/2} (1+n)² Q^{-n/2}` otherwise.
pub fn pointwise_envelope(q: u32, t: f64, n: usize) -> f64 {
    let decay = (q as f64).powf(-(n as f64) / 2.0);
    if t.abs() < 1.0 {
        decay
    } else {
        t.abs().powf(-1.5) * (1.0 + n as f64).powi(2) * decay
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseReport {
    pub t: f64,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

/// `|s_t(n)| / envelope(t, n)` for every stored radius.
pub fn kernel_pointwise_report(s: &SchrodingerKernel) -> PointwiseReport {
    let ratios: Vec<f64> = s
        .values
        .values
        .iter()
        .enumerate()
        .map(|(n, v)| v.norm() / pointwise_envelope(s.params.q, s.t, n))
        .collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    PointwiseReport {
        t: s.t,
        ratios,
        max_ratio,
    }
}

/// Maximum bound ratio over the declared calibration set.
pub fn calibrate_pointwise_constant() -> Result<f64> {
    let params = TreeParams::new(2, POINTWISE_CALIBRATION_RADIUS)?;
    let mut max = 0.0f64;
    for &t in &POINTWISE_CALIBRATION_TIMES {
        let s = schrodinger_kernel(params, t, DEFAULT_TOL)?;
        max = max.max(kernel_pointwise_report(&s).max_ratio);
    }
    Ok(max)
}

/// `||s_t||_q` by the weighted radial sum, `q ∈ (2, ∞]`.
pub fn kernel_lq_norm(s: &SchrodingerKernel, q: f64) -> Result<f64> {
    if q.is_nan() || q <= 2.0 {
        return Err(Error::Domain(format!(
            "kernel L^q norm needs q > 2 (Σ Q^{{n(1-q/2)}} diverges otherwise), got q={q}"
        )));
    }
    s.values.lp_norm(q)
}

/// Bound on the part of `||s_t||_q^q` beyond the stored radius, from the
/// pointwise envelope with constant `c_star`.
pub fn kernel_lq_tail_bound(s: &SchrodingerKernel, q: f64, c_star: f64) -> f64 {
    let mut total = 0.0;
    let mut n = s.params.n + 1;
    loop {
        let term = sphere_weight(s.params.q, n) * (c_star * pointwise_envelope(s.params.q, s.t, n)).powf(q);
        total += term;
        if term <= 1e-18 * total.max(1e-300) || n > s.params.n + 10_000 {
            break;
        }
        n += 1;
    }
    total
}
