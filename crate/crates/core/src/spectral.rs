//! Spherical analysis on the tree: spherical functions, the c-function, the
//! spherical transform `H` with its inversion and Plancherel formulas, the
//! Abel transform and the Fourier transform on `Z` (`H = F ∘ A`).
//!
//! Spectral parameters are real `λ`, with `Q^{iλ} = e^{iλ ln Q}`; internally
//! everything is evaluated in the angle `θ = λ ln Q ∈ [0, π]`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tree::{sphere_weight, RadialFunction};

/// `ε_c / τ`: relative width of the neighbourhood of `(τ/2)Z` where the
/// generic spherical-function formula is replaced by its limit.
pub const SINGULAR_FRACTION: f64 = 1e-6;

/// Decimal digits targeted by the weight-aliasing margin of a grid.
const ALIASING_DIGITS: f64 = 16.0;

/// Period `τ = 2π / ln Q` of `λ ↦ Q^{iλ}`.
pub fn tau(q: u32) -> f64 {
    2.0 * PI / (q as f64).ln()
}

fn sqrt_sum(q: u32) -> f64 {
    let s = (q as f64).sqrt();
    s + 1.0 / s
}

/// `(Q^{1/2} - Q^{-1/2}) / (Q^{1/2} + Q^{-1/2})`.
fn limit_slope(q: u32) -> f64 {
    let s = (q as f64).sqrt();
    (s - 1.0 / s) / (s + 1.0 / s)
}

/// Eigenvalue of the mean operator on `φ_λ`: `γ(λ) = γ(0) cos(λ ln Q)`.
pub fn gamma_eig(q: u32, lambda: f64) -> f64 {
    2.0 / sqrt_sum(q) * (lambda * (q as f64).ln()).cos()
}

fn singular_tolerance(q: u32) -> f64 {
    SINGULAR_FRACTION * tau(q)
}

/// Nearest multiple `m` of `τ/2` and the distance to it.
fn nearest_half_period(q: u32, z: Complex64) -> (i64, f64) {
    let half = tau(q) / 2.0;
    let m = (z.re / half).round();
    (m as i64, (z - Complex64::new(m * half, 0.0)).norm())
}

/// The c-function
/// `c(z) = (Q^{1/2+iz} - Q^{-1/2-iz}) / ((Q^{1/2}+Q^{-1/2})(Q^{iz} - Q^{-iz}))`.
///
/// Rejects arguments within `ε_c` of `(τ/2)Z`.
pub fn c_function(q: u32, z: Complex64) -> Result<Complex64> {
    let tol = singular_tolerance(q);
    let (_, dist) = nearest_half_period(q, z);
    if dist <= tol {
        return Err(Error::Singular {
            re: z.re,
            im: z.im,
            tolerance: tol,
        });
    }
    let s = (q as f64).sqrt();
    let e = (Complex64::i() * z * (q as f64).ln()).exp();
    let num = e * s - 1.0 / (e * s);
    let den = (e - 1.0 / e) * sqrt_sum(q);
    Ok(num / den)
}

/// Plancherel density `|c(λ)|^{-2}` as a function of `θ = λ ln Q`. It is
/// smooth and vanishes at `θ ∈ {0, π}`.
pub fn plancherel_density(q: u32, theta: f64) -> f64 {
    let qf = q as f64;
    let s = sqrt_sum(q);
    let sin = theta.sin();
    s * s * 4.0 * sin * sin / (qf + 1.0 / qf - 2.0 * (2.0 * theta).cos())
}

/// Spherical function `φ_λ(n)`.
///
/// Uses `c(λ)Q^{(-1/2+iλ)n} + c(-λ)Q^{(-1/2-iλ)n}` away from `(τ/2)Z` and the
/// limit `(-1)^{mn}(1 + n (Q^{1/2}-Q^{-1/2})/(Q^{1/2}+Q^{-1/2})) Q^{-n/2}` at
/// `λ = mτ/2` (within `ε_c`).
pub fn spherical_phi(q: u32, lambda: f64, n: usize) -> Complex64 {
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let z = Complex64::new(lambda, 0.0);
    let (m, dist) = nearest_half_period(q, z);
    let nf = n as f64;
    let decay = (q as f64).powf(-nf / 2.0);
    if dist <= singular_tolerance(q) {
        let sign = if (m * n as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        return Complex64::new(sign * (1.0 + limit_slope(q) * nf) * decay, 0.0);
    }
    let c_plus = c_function(q, z).expect("checked distance to the singular set");
    let c_minus = c_function(q, -z).expect("checked distance to the singular set");
    let phase = Complex64::from_polar(1.0, nf * lambda * (q as f64).ln());
    (c_plus * phase + c_minus * phase.conj()) * decay
}

/// `φ_θ(0..=n_max)` by the three-term eigenfunction recursion
/// `Q φ(n+1) = (Q+1) γ φ(n) - φ(n-1)`, with `γ = γ(0) cos θ`.
pub fn phi_by_recursion(q: u32, theta: f64, n_max: usize) -> Vec<f64> {
    let qf = q as f64;
    let gamma = 2.0 / sqrt_sum(q) * theta.cos();
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max >= 1 {
        out.push(gamma);
    }
    for n in 1..n_max {
        let next = ((qf + 1.0) * gamma * out[n] - out[n - 1]) / qf;
        out.push(next);
    }
    out
}

/// Smallest number of trapezoid intervals for which inversion of data
/// supported in radius `<= n` is accurate to double precision.
///
/// The Plancherel density's cosine coefficients decay like `Q^{-k}`, so the
/// grid needs `ln(10^16)/ln Q` intervals on top of the band limit `n + 1`.
pub fn required_intervals(q: u32, n: usize) -> usize {
    n + 1 + (ALIASING_DIGITS * 10f64.ln() / (q as f64).ln()).ceil() as usize
}

/// Uniform grid in `θ = λ ln Q` on `[0, π]` with trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    pub q: u32,
    pub tau: f64,
    /// Number of trapezoid intervals; there are `m + 1` nodes.
    pub m: usize,
    pub thetas: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Trapezoid weights in `θ` (sum to `π`).
    pub trapezoid: Vec<f64>,
    /// `|c(λ_j)|^{-2}`.
    pub density: Vec<f64>,
    /// Inversion constant multiplying the nominal Plancherel measure.
    pub normalization: f64,
}

impl SpectralGrid {
    pub fn new(q: u32, m: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::Domain(format!("branching number Q={q} must be at least 2")));
        }
        if m < 1 {
            return Err(Error::Domain("spectral grid needs at least one interval".into()));
        }
        let log_q = (q as f64).ln();
        let h = PI / m as f64;
        let thetas: Vec<f64> = (0..=m).map(|j| j as f64 * h).collect();
        let lambdas = thetas.iter().map(|t| t / log_q).collect();
        let trapezoid = (0..=m)
            .map(|j| if j == 0 || j == m { h / 2.0 } else { h })
            .collect();
        let density = thetas.iter().map(|&t| plancherel_density(q, t)).collect();
        Ok(Self {
            q,
            tau: tau(q),
            m,
            thetas,
            lambdas,
            trapezoid,
            density,
            normalization: 1.0,
        })
    }

    /// Grid large enough to invert data supported in radius `<= n`.
    pub fn for_radius(q: u32, n: usize) -> Result<Self> {
        Self::new(q, required_intervals(q, n))
    }

    /// Replaces the inversion constant (used by the normalization audit and
    /// by fault injection).
    pub fn with_normalization(mut self, normalization: f64) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Quadrature weights realizing
    /// `Q^{1/2}/(Q^{1/2}+Q^{-1/2}) · (1/τ) ∫_0^{τ/2} dλ |c(λ)|^{-2} (·)`.
    pub fn plancherel_weights(&self) -> Vec<f64> {
        let s = (self.q as f64).sqrt();
        let prefactor = self.normalization * s / sqrt_sum(self.q) / (2.0 * PI);
        self.trapezoid
            .iter()
            .zip(&self.density)
            .map(|(t, d)| prefactor * t * d)
            .collect()
    }

    /// `γ(λ_j)` at every node.
    pub fn gammas(&self) -> Vec<f64> {
        let g0 = 2.0 / sqrt_sum(self.q);
        self.thetas.iter().map(|t| g0 * t.cos()).collect()
    }

    /// Table `φ_{λ_j}(n)` for `n <= n_max`, row per node.
    pub fn phi_table(&self, n_max: usize) -> Vec<Vec<f64>> {
        self.thetas
            .iter()
            .map(|&t| phi_by_recursion(self.q, t, n_max))
            .collect()
    }

    /// Maps any real `λ` to its representative in `[0, τ/2]` under evenness
    /// and `τ`-periodicity.
    pub fn canonical_lambda(&self, lambda: f64) -> f64 {
        let r = lambda.abs().rem_euclid(self.tau);
        if r > self.tau / 2.0 {
            self.tau - r
        } else {
            r
        }
    }
}

/// Values on the nodes of a [`SpectralGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    pub grid: SpectralGrid,
    pub values: Vec<Complex64>,
}

impl SpectralFunction {
    /// Pointwise product with another function on the same grid.
    pub fn mul(&self, other: &SpectralFunction) -> Result<SpectralFunction> {
        if self.grid.q != other.grid.q || self.grid.m != other.grid.m {
            return Err(Error::Domain("spectral functions live on different grids".into()));
        }
        Ok(SpectralFunction {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &SpectralFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Evaluates at an arbitrary real `λ` by cosine interpolation of the node
    /// values (exact for trigonometric polynomials of degree `<= m`).
    pub fn evaluate(&self, lambda: f64) -> Complex64 {
        let theta = self.grid.canonical_lambda(lambda) * (self.grid.q as f64).ln();
        let coeffs = cosine_coefficients(&self.grid, &self.values, self.grid.m);
        let m = self.grid.m;
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                // The top mode is only seen at half weight by the trapezoid rule.
                let scale = if k == 0 || k == m { 1.0 } else { 2.0 };
                c * (scale * (k as f64 * theta).cos())
            })
            .sum()
    }
}

/// `Hf(λ) = Σ_n w(n) f(n) φ_λ(n)` at every grid node.
pub fn spherical_transform(f: &RadialFunction, grid: &SpectralGrid) -> SpectralFunction {
    let n = f.radius();
    let weighted: Vec<Complex64> = f
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| v * sphere_weight(f.q(), k))
        .collect();
    let values = grid
        .thetas
        .iter()
        .map(|&t| {
            let phi = phi_by_recursion(grid.q, t, n);
            weighted.iter().zip(&phi).map(|(w, p)| w * p).sum()
        })
        .collect();
    SpectralFunction {
        grid: grid.clone(),
        values,
    }
}

/// Inverse spherical transform by the Plancherel-weighted quadrature,
/// returning radii `0..=n_out`.
pub fn inverse_spherical(hf: &SpectralFunction, n_out: usize) -> Result<RadialFunction> {
    let grid = &hf.grid;
    let required = required_intervals(grid.q, n_out);
    if grid.m < required {
        return Err(Error::Resolution {
            required,
            got: grid.m,
        });
    }
    let weights = grid.plancherel_weights();
    let mut out = vec![Complex64::new(0.0, 0.0); n_out.max(1) + 1];
    for ((&t, w), v) in grid.thetas.iter().zip(&weights).zip(&hf.values) {
        let phi = phi_by_recursion(grid.q, t, n_out);
        let a = v * w;
        for (o, p) in out.iter_mut().zip(&phi) {
            *o += a * p;
        }
    }
    RadialFunction::from_values(grid.q, out)
}

/// `Σ_j weight_j |Hf(λ_j)|²`, the spectral side of the Plancherel identity.
pub fn plancherel_norm_sq(hf: &SpectralFunction) -> f64 {
    hf.grid
        .plancherel_weights()
        .iter()
        .zip(&hf.values)
        .map(|(w, v)| w * v.norm_sqr())
        .sum()
}

/// An even, finitely supported sequence on `Z`, stored as `g(0..=N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvenSequence {
    pub values: Vec<Complex64>,
}

impl EvenSequence {
    pub fn from_nonnegative(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    /// Accepts `g(-N..=N)` (odd length, index `N` is `n = 0`) and rejects
    /// sequences that are not even.
    pub fn from_two_sided(values: &[Complex64]) -> Result<Self> {
        if values.len() % 2 == 0 {
            return Err(Error::Domain(
                "two-sided sequence must have odd length 2N+1".into(),
            ));
        }
        let mid = values.len() / 2;
        for k in 1..=mid {
            let (a, b) = (values[mid + k], values[mid - k]);
            if (a - b).norm() > 1e-14 * (1.0 + a.norm().max(b.norm())) {
                return Err(Error::Domain(format!(
                    "sequence is not even: g({k}) != g(-{k})"
                )));
            }
        }
        Ok(Self {
            values: values[mid..].to_vec(),
        })
    }

    pub fn get(&self, n: i64) -> Complex64 {
        self.values
            .get(n.unsigned_abs() as usize)
            .copied()
            .unwrap_or_default()
    }

    pub fn radius(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn to_two_sided(&self) -> Vec<Complex64> {
        let n = self.radius() as i64;
        (-n..=n).map(|k| self.get(k)).collect()
    }
}

/// Abel transform
/// `Af(n) = Q^{|n|/2} f(|n|) + (1 - 1/Q) Σ_{k≥1} Q^{|n|/2+k} f(|n|+2k)`.
pub fn abel_transform(f: &RadialFunction) -> EvenSequence {
    let qf = f.q() as f64;
    let n_max = f.radius();
    let coef = 1.0 - 1.0 / qf;
    let values = (0..=n_max)
        .map(|n| {
            let base = qf.powf(n as f64 / 2.0);
            let mut acc = f.values[n] * base;
            let mut k = 1;
            while n + 2 * k <= n_max {
                acc += f.values[n + 2 * k] * (coef * base * qf.powi(k as i32));
                k += 1;
            }
            acc
        })
        .collect();
    EvenSequence { values }
}

/// Inverse Abel transform
/// `f(n) = Σ_{k≥0} Q^{-n/2-k} (g(n+2k) - g(n+2k+2))`, radii `0..=n_out`.
pub fn inverse_abel(g: &EvenSequence, q: u32, n_out: usize) -> Result<RadialFunction> {
    let qf = q as f64;
    let len = g.values.len();
    let values = (0..=n_out.max(1))
        .map(|n| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut k = 0;
            while n + 2 * k < len {
                let m = (n + 2 * k) as i64;
                let diff = g.get(m) - g.get(m + 2);
                acc += diff * qf.powf(-(n as f64) / 2.0 - k as f64);
                k += 1;
            }
            acc
        })
        .collect();
    RadialFunction::from_values(q, values)
}

/// `Fg(λ) = g(0) + 2 Σ_{n≥1} g(n) cos(n λ ln Q)` on the grid.
pub fn fourier_z(g: &EvenSequence, grid: &SpectralGrid) -> SpectralFunction {
    let values = grid
        .thetas
        .iter()
        .map(|&t| {
            g.values
                .iter()
                .enumerate()
                .map(|(n, v)| {
                    if n == 0 {
                        *v
                    } else {
                        v * (2.0 * (n as f64 * t).cos())
                    }
                })
                .sum()
        })
        .collect();
    SpectralFunction {
        grid: grid.clone(),
        values,
    }
}

/// `(1/π) ∫_0^π G(θ) cos(nθ) dθ` for `n <= n_out` by the trapezoid rule.
fn cosine_coefficients(grid: &SpectralGrid, values: &[Complex64], n_out: usize) -> Vec<Complex64> {
    (0..=n_out)
        .map(|n| {
            grid.thetas
                .iter()
                .zip(&grid.trapezoid)
                .zip(values)
                .map(|((&t, w), v)| v * (w * (n as f64 * t).cos()))
                .sum::<Complex64>()
                / PI
        })
        .collect()
}

/// Inverse of [`fourier_z`], exact for data of degree `<= n_out` when the
/// grid has at least `n_out + 1` intervals.
pub fn inverse_fourier_z(gf: &SpectralFunction, n_out: usize) -> Result<EvenSequence> {
    if gf.grid.m < n_out + 1 {
        return Err(Error::Resolution {
            required: n_out + 1,
            got: gf.grid.m,
        });
    }
    Ok(EvenSequence {
        values: cosine_coefficients(&gf.grid, &gf.values, n_out),
    })
}

/// `H^{-1} = A^{-1} ∘ F^{-1}`: inversion through the Abel transform, an
/// independent route to [`inverse_spherical`].
pub fn inverse_spherical_via_abel(hf: &SpectralFunction, n_out: usize) -> Result<RadialFunction> {
    let g = inverse_fourier_z(hf, hf.grid.m - 1)?;
    inverse_abel(&g, hf.grid.q, n_out)
}

/// Result of the normalization audit for one branching number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationAudit {
    pub q: u32,
    /// Value of `f(0)` recovered from `Hδ_0 ≡ 1` with the nominal constant.
    pub recovered_delta: f64,
    /// Factor the nominal constant must be multiplied by for an exact roundtrip.
    pub correction: f64,
}

/// Inverts `Hδ_0 ≡ 1` with the nominal inversion constant and reports the
/// correction factor needed for an exact roundtrip.
pub fn normalization_audit(q: u32) -> Result<NormalizationAudit> {
    let grid = SpectralGrid::for_radius(q, 1)?;
    let ones = SpectralFunction {
        values: vec![Complex64::new(1.0, 0.0); grid.len()],
        grid,
    };
    let f = inverse_spherical(&ones, 1)?;
    let recovered = f.values[0].re;
    Ok(NormalizationAudit {
        q,
        recovered_delta: recovered,
        correction: 1.0 / recovered,
    })
}
