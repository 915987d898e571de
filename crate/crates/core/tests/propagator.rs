mod common;

use common::{random_padded, random_radial, rng};
use num_complex::Complex64;
use tree_dispersion::analysis::log_space;
use tree_dispersion::kernel::{schrodinger_kernel, DEFAULT_TOL};
use tree_dispersion::propagator::{
    dispersive_decay_scan, dual_exponent, max_representable_radius, linear_trajectory, mixed_norm_probe, propagate_convolution,
    propagate_spectral, support_growth, PropagatorPlan, StepOperator,
};
use tree_dispersion::tree::{laplacian_apply, RadialFunction, TreeParams};
use tree_dispersion::Error;

#[test]
fn time_zero_is_identity() {
    let f = random_radial(&mut rng(30), 2, 8);
    let plan = PropagatorPlan::new(f.params, 0.0).unwrap();
    let u = propagate_spectral(&f, 0.0, &plan).unwrap();
    assert!(u.max_abs_diff(&f) < 1e-12);
}

#[test]
fn delta_data_gives_the_kernel() {
    let p = TreeParams::new(2, 1).unwrap();
    let f = RadialFunction::delta(p, 0);
    let plan = PropagatorPlan::new(p, 5.0).unwrap();
    let u = propagate_spectral(&f, 5.0, &plan).unwrap();
    let s = schrodinger_kernel(TreeParams::new(2, u.radius()).unwrap(), 5.0, 1e-12).unwrap();
    assert!(u.max_abs_diff(&s.values) < 1e-9);
    let v = propagate_convolution(&f, 5.0, 1e-12).unwrap();
    for n in 0..=v.trusted.min(u.radius()) {
        assert!((v.get(n) - u.get(n)).norm() < 1e-9);
    }
}

#[test]
fn unitarity_on_seeded_data() {
    let mut r = rng(31);
    for q in [2u32, 3] {
        for t in [0.5, 7.0, 40.0] {
            let f = random_radial(&mut r, q, 6);
            let plan = PropagatorPlan::new(f.params, t).unwrap();
            let u = propagate_spectral(&f, t, &plan).unwrap();
            let rel = (u.mass() - f.mass()).abs() / f.mass();
            assert!(rel <= 1e-10, "q={q} t={t}: {rel}");
        }
    }
}

#[test]
fn group_law_and_inverse() {
    let f = random_radial(&mut rng(32), 2, 5);
    let p = f.params;
    let plan = PropagatorPlan::new(p, 9.0).unwrap();
    let a = propagate_spectral(&f, 4.0, &plan).unwrap();
    let b = propagate_spectral(&a, 5.0, &PropagatorPlan::new(a.params, 5.0).unwrap()).unwrap();
    let direct = propagate_spectral(&f, 9.0, &plan).unwrap();
    let n = b.radius().min(direct.radius());
    assert!(b.resized(n).max_abs_diff(&direct.resized(n)) <= 1e-9 * f.sup());
    let back = propagate_spectral(&a, -4.0, &PropagatorPlan::new(a.params, 4.0).unwrap()).unwrap();
    assert!(back.resized(p.n).max_abs_diff(&f) <= 1e-9 * f.sup());
}

#[test]
fn convolution_route_agrees_with_spectral_route() {
    let mut r = rng(33);
    for q in [2u32, 3] {
        for t in [2.0, 15.0, 50.0] {
            let f = random_radial(&mut r, q, 4);
            let plan = PropagatorPlan::new(f.params, t).unwrap();
            let u = propagate_spectral(&f, t, &plan).unwrap();
            let v = propagate_convolution(&f, t, DEFAULT_TOL).unwrap();
            let n = v.trusted.min(u.radius());
            let d = (0..=n).map(|k| (u.get(k) - v.get(k)).norm()).fold(0.0, f64::max);
            assert!(d <= 1e-8, "q={q} t={t}: {d}");
        }
    }
}

#[test]
fn generator_is_i_times_laplacian() {
    let f = random_padded(&mut rng(34), 2, 5, 12);
    let lf = laplacian_apply(&f);
    let err = |h: f64| -> f64 {
        let plan = PropagatorPlan::new(f.params, h).unwrap();
        let u = propagate_spectral(&f, h, &plan).unwrap();
        (0..=8)
            .map(|n| ((u.get(n) - f.get(n)) / h - Complex64::i() * lf.get(n)).norm())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1e-3), err(5e-4));
    let ratio = e1 / e2;
    assert!((ratio - 2.0).abs() < 0.4, "first-order difference quotient ratio {ratio}");
}

#[test]
fn step_operator_matches_spectral_route_away_from_the_boundary() {
    let p = TreeParams::new(2, 60).unwrap();
    let f = random_padded(&mut rng(35), 2, 4, 60);
    let step = StepOperator::new(p, 2.0).unwrap();
    let a = step.apply(&f.values);
    let plan = PropagatorPlan::with_output_radius(p, 60, 2.0).unwrap();
    let b = propagate_spectral(&f, 2.0, &plan).unwrap();
    for n in 0..=20 {
        assert!((a[n] - b.get(n)).norm() < 1e-12);
    }
    let mass: f64 = RadialFunction::from_values(2, a).unwrap().mass();
    assert!((mass - f.mass()).abs() / f.mass() < 1e-13);
}

#[test]
fn too_small_output_radius_is_a_truncation_error() {
    let f = RadialFunction::delta(TreeParams::new(2, 2).unwrap(), 0);
    let plan = PropagatorPlan::with_output_radius(f.params, 3, 20.0).unwrap();
    let err = propagate_spectral(&f, 20.0, &plan).unwrap_err();
    assert!(matches!(err, Error::Truncation { .. }), "{err:?}");
    assert!(support_growth(2, 20.0) >= 19 + 32);
}

#[test]
fn unrepresentable_radius_is_rejected() {
    let p = TreeParams::new(2, 1).unwrap();
    let limit = max_representable_radius(2);
    assert!(limit > 2000);
    let err = PropagatorPlan::new(p, 3000.0).unwrap_err();
    assert!(matches!(err, Error::Underflow { .. }), "{err:?}");
    assert!(PropagatorPlan::new(p, 1500.0).is_ok());
    let err = StepOperator::new(TreeParams::new(3, 2000).unwrap(), 0.1).unwrap_err();
    assert!(matches!(err, Error::Underflow { .. }), "{err:?}");
}

#[test]
fn small_time_norms_are_bounded() {
    let grid: Vec<f64> = (0..20).map(|k| k as f64 * 0.05).collect();
    for q in [4.0, f64::INFINITY] {
        let mut norms = Vec::new();
        for &t in &grid {
            let s = tree_dispersion::kernel::schrodinger_kernel_auto(2, t, DEFAULT_TOL).unwrap();
            norms.push(tree_dispersion::kernel::kernel_lq_norm(&s, q).unwrap());
        }
        let c = norms.iter().copied().fold(0.0, f64::max);
        assert!((c - 1.0).abs() < 1e-14, "calibrated small-time constant {c}");
        for t in [0.123, 0.5, 0.777, 0.999] {
            let s = tree_dispersion::kernel::schrodinger_kernel_auto(2, t, DEFAULT_TOL).unwrap();
            assert!(tree_dispersion::kernel::kernel_lq_norm(&s, q).unwrap() <= c);
        }
    }
}

#[test]
fn late_window_decay_rate() {
    for q in [4.0, f64::INFINITY] {
        let scan = dispersive_decay_scan(q, &log_space(100.0, 1e4, 12), 2, DEFAULT_TOL).unwrap();
        assert!((scan.fit.slope + 1.5).abs() <= 0.1, "q={q}: {}", scan.fit.slope);
    }
}

#[test]
fn dispersive_scan_rejects_bad_input() {
    assert!(matches!(dispersive_decay_scan(2.0, &[1.0], 2, DEFAULT_TOL), Err(Error::Domain(_))));
    assert!(dispersive_decay_scan(4.0, &[], 2, DEFAULT_TOL).is_err());
}

fn mixed_norm_factor(t1: f64, t2: f64) -> f64 {
    let a = mixed_norm_probe(4.0, 6.0, t1, 2, 3, 20, 5).unwrap();
    let b = mixed_norm_probe(4.0, 6.0, t2, 2, 3, 20, 5).unwrap();
    a.sup_ratio / b.sup_ratio
}

#[test]
fn mixed_norm_ratio_decays_at_the_asymptotic_rate() {
    let factor = mixed_norm_factor(100.0, 1000.0);
    let want = 10f64.powf(1.5);
    assert!(factor > want / 1.3 && factor < want * 1.3, "factor {factor}");
}

#[test]
fn mixed_norm_ratio_decays_slower_in_the_first_decade() {
    // Pre-asymptotic: t^{3/2}||s_t|| is still growing on [10, 100].
    let factor = mixed_norm_factor(10.0, 100.0);
    assert!(factor > 8.0 && factor < 10f64.powf(1.5) / 1.3, "factor {factor}");
}

#[test]
fn mixed_norm_ratio_at_time_zero() {
    let z = mixed_norm_probe(4.0, 6.0, 0.0, 2, 3, 20, 5).unwrap();
    assert!(z.sup_ratio <= 1.0 + 1e-12);
    assert_eq!(dual_exponent(f64::INFINITY), 1.0);
    assert_eq!(dual_exponent(4.0), 4.0 / 3.0);
}

#[test]
fn linear_trajectory_is_unitary() {
    let f = RadialFunction::delta(TreeParams::new(2, 1).unwrap(), 0);
    let traj = linear_trajectory(&f, &[0.0, 1.0, 2.0, 5.0]).unwrap();
    assert_eq!(traj.len(), 4);
    for m in &traj.mass {
        assert!((m - 1.0).abs() < 1e-10);
    }
}
