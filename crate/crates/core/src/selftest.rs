//! Fast invariant checks across all modules, as run by `tree-dispersion selftest`.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::AdmissiblePair;
use crate::bessel::bessel_j;
use crate::error::Result;
use crate::kernel::{
    calibrate_pointwise_constant, oscillatory_j, schrodinger_kernel, schrodinger_kernel_with, KernelRoute,
    POINTWISE_C_STAR,
};
use crate::nls::{energy, energy_on_vertices, nls_evolve, EvolutionConfig, NonlinearitySpec, Trajectory};
use crate::propagator::{propagate_spectral, PropagatorPlan};
use crate::spectral::{
    abel_transform, fourier_z, inverse_abel, inverse_spherical, plancherel_norm_sq, spherical_transform, SpectralGrid,
};
use crate::tree::{build_truncated_tree, mean_apply, radial_convolve, vertex_convolve, RadialFunction, TreeParams, VertexField};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantResult {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub invariants: Vec<InvariantResult>,
    pub passed: bool,
}

impl SelftestReport {
    pub fn failed(&self) -> Vec<&str> {
        self.invariants
            .iter()
            .filter(|i| !i.passed)
            .map(|i| i.name.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelftestOptions {
    pub seed: u64,
    /// Multiplies the inversion constant (fault injection; 1 in normal runs).
    pub plancherel_scale: f64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            plancherel_scale: 1.0,
        }
    }
}

fn random_radial(rng: &mut ChaCha8Rng, q: u32, n: usize) -> RadialFunction {
    let values = (0..=n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    RadialFunction::from_values(q, values).expect("radius >= 1")
}

/// `max_n |b(n) - f(n)| / Σ_k Q^k |f(n+2k)|`: roundtrip error relative to the
/// size of the terms that the Abel transform sums at radius `n`.
pub fn abel_roundtrip_error(f: &RadialFunction, back: &RadialFunction) -> f64 {
    let q = f.q() as f64;
    let n_max = f.radius();
    (0..=n_max)
        .map(|n| {
            let scale: f64 = (n..=n_max)
                .step_by(2)
                .enumerate()
                .map(|(k, m)| q.powi(k as i32) * f.values[m].norm())
                .sum();
            (back.get(n) - f.values[n]).norm() / scale.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Runs every invariant; computation errors count as failures with an
/// infinite measured error.
pub fn run_selftest(options: &SelftestOptions) -> SelftestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let scale = options.plancherel_scale;
    let mut invariants = Vec::new();
    let mut check = |name: &str, tolerance: f64, measured: Result<f64>| {
        let measured = measured.unwrap_or(f64::INFINITY);
        invariants.push(InvariantResult {
            name: name.to_string(),
            measured,
            tolerance,
            passed: measured <= tolerance,
        });
    };

    let f = random_radial(&mut rng, 2, 30);
    check("spectral_roundtrip", 1e-10, (|| {
        let grid = SpectralGrid::for_radius(2, 30)?;
        let grid = grid.clone().with_normalization(grid.normalization * scale);
        let back = inverse_spherical(&spherical_transform(&f, &grid), 30)?;
        Ok(back.max_abs_diff(&f) / f.sup())
    })());

    check("plancherel", 1e-10, (|| {
        let grid = SpectralGrid::for_radius(2, 30)?;
        let grid = grid.clone().with_normalization(grid.normalization * scale);
        Ok(relative(plancherel_norm_sq(&spherical_transform(&f, &grid)), f.mass()))
    })());

    check("factorization_h_equals_f_abel", 1e-10, (|| {
        let mut worst = 0.0f64;
        for q in [2u32, 3] {
            let g = random_radial(&mut ChaCha8Rng::seed_from_u64(options.seed + q as u64), q, 25);
            let grid = SpectralGrid::for_radius(q, 25)?;
            let h = spherical_transform(&g, &grid);
            let fa = fourier_z(&abel_transform(&g), &grid);
            let size = h.values.iter().map(|v| v.norm()).fold(1.0, f64::max);
            worst = worst.max(h.max_abs_diff(&fa) / size);
        }
        Ok(worst)
    })());

    check("abel_roundtrip", 1e-13, (|| {
        let g = random_radial(&mut ChaCha8Rng::seed_from_u64(options.seed + 7), 3, 20);
        let back = inverse_abel(&abel_transform(&g), 3, 20)?;
        Ok(abel_roundtrip_error(&g, &back))
    })());

    check("eigenfunction_identity", 1e-12, (|| {
        let grid = SpectralGrid::new(2, 40)?;
        let phi = grid.phi_table(30);
        let gam = grid.gammas();
        let mut worst = 0.0f64;
        for (row, g) in phi.iter().zip(&gam) {
            let p = RadialFunction::from_real(2, row)?;
            let m = mean_apply(&p);
            for n in 0..=m.trusted.min(28) {
                worst = worst.max((m.values[n].re - g * row[n]).abs());
            }
        }
        Ok(worst)
    })());

    check("bessel_identity", 1e-10, (|| {
        let c = TreeParams::new(2, 1)?.gamma0();
        let mut worst = 0.0f64;
        for (t, m) in [(3.0, 2u32), (50.0, 7), (150.0, 40)] {
            let want = Complex64::i().powu(m) * (std::f64::consts::PI * bessel_j(m, c * t));
            worst = worst.max((oscillatory_j(t, m, c) - want).norm());
        }
        Ok(worst)
    })());

    check("kernel_route_agreement", 1e-9, (|| {
        let p = TreeParams::new(2, 40)?;
        let a = schrodinger_kernel_with(p, 5.0, 1e-10, KernelRoute::Bessel)?;
        let b = schrodinger_kernel_with(p, 5.0, 1e-10, KernelRoute::Quadrature)?;
        Ok(a.values.max_abs_diff(&b.values))
    })());

    check("kernel_spectral_symbol", 1e-8, (|| {
        let s = crate::kernel::schrodinger_kernel_auto(2, 5.0, 1e-10)?;
        let grid = SpectralGrid::for_radius(2, s.params.n)?;
        let h = spherical_transform(&s.values, &grid);
        Ok(h.values
            .iter()
            .zip(grid.gammas())
            .map(|(v, g)| (v - Complex64::from_polar(1.0, 5.0 * (1.0 - g))).norm())
            .fold(0.0, f64::max))
    })());

    check("pointwise_calibration", POINTWISE_C_STAR * 1e-9, (|| {
        Ok((calibrate_pointwise_constant()? - POINTWISE_C_STAR).max(0.0))
    })());

    let data = random_radial(&mut rng, 2, 6);
    check("unitarity", 1e-10, (|| {
        let plan = PropagatorPlan::new(data.params, 20.0)?;
        let plan = plan.clone().with_normalization(plan.grid.normalization * scale).with_tail_tol(f64::INFINITY);
        let u = propagate_spectral(&data, 20.0, &plan)?;
        Ok(relative(u.mass().sqrt(), data.mass().sqrt()))
    })());

    check("group_law", 1e-9, (|| {
        let plan = PropagatorPlan::new(data.params, 7.0)?;
        let u = propagate_spectral(&data, 3.0, &plan)?;
        let plan2 = PropagatorPlan::new(u.params, 4.0)?;
        let v = propagate_spectral(&u, 4.0, &plan2)?;
        let w = propagate_spectral(&data, 7.0, &plan)?;
        Ok(v.max_abs_diff(&w) / data.sup())
    })());

    check("convolution_oracle", 1e-12, (|| {
        let a = random_radial(&mut ChaCha8Rng::seed_from_u64(options.seed + 11), 2, 3);
        let b = random_radial(&mut ChaCha8Rng::seed_from_u64(options.seed + 12), 2, 3);
        let tree = Arc::new(build_truncated_tree(TreeParams::new(2, 9)?)?);
        let fv = VertexField::from_radial(tree, &a);
        let vc = vertex_convolve(&fv, &b)?;
        let rc = radial_convolve(&a, &b)?;
        let prof = vc.radial_profile()?;
        let size = rc.sup().max(1.0);
        Ok((0..=prof.trusted).map(|n| (prof.values[n] - rc.get(n)).norm()).fold(0.0, f64::max) / size)
    })());

    check("energy_vertex_oracle", 1e-12, (|| {
        let u = random_radial(&mut ChaCha8Rng::seed_from_u64(options.seed + 13), 2, 5);
        let spec = NonlinearitySpec::power(3.0, 1.0)?;
        let tree = Arc::new(build_truncated_tree(TreeParams::new(2, 5)?)?);
        let v = VertexField::from_radial(tree, &u);
        Ok(relative(energy(&u, &spec), energy_on_vertices(&v, &spec)))
    })());

    check("nls_mass_conservation", 1e-10, (|| {
        let f = RadialFunction::from_real(2, &[0.1, 0.0])?;
        let spec = NonlinearitySpec::power(3.0, 1.0)?;
        let cfg = EvolutionConfig {
            horizon: 1.0,
            ..Default::default()
        };
        let traj = nls_evolve(&f, &spec, &cfg)?;
        Ok(Trajectory::relative_drift(&traj.mass))
    })());

    check("admissible_square_gate", 0.0, (|| {
        let cases = [
            ((0.0, 0.5), true),
            ((0.5, 0.0), true),
            ((0.25, 0.25), true),
            ((0.5, 0.5), false),
            ((0.0, 0.25), false),
            ((0.6, 0.1), false),
            ((0.1, 0.5), false),
        ];
        let wrong = cases
            .iter()
            .filter(|((a, b), want)| AdmissiblePair::is_admissible(*a, *b) != *want)
            .count();
        Ok(wrong as f64)
    })());

    check("kernel_at_time_zero", 1e-14, (|| {
        let s = schrodinger_kernel(TreeParams::new(2, 8)?, 0.0, 1e-10)?;
        Ok(s.values.max_abs_diff(&RadialFunction::delta(s.params, 0)))
    })());

    let passed = invariants.iter().all(|i| i.passed);
    SelftestReport { invariants, passed }
}
