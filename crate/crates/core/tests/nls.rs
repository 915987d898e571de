mod common;

use std::sync::Arc;

use common::{c, random_radial, rng};
use num_complex::Complex64;
use rand::Rng;
use tree_dispersion::nls::{
    apply_nonlinearity, energy, energy_on_vertices, energy_plus, gradient_energy, nls_evolve, nls_step_strang,
    picard_solve, EvolutionConfig, NonlinearitySpec, PicardOptions, Scheme, Trajectory,
};
use tree_dispersion::propagator::{propagate_spectral, PropagatorPlan, StepOperator};
use tree_dispersion::tree::{build_truncated_tree, RadialFunction, TreeParams, VertexField};
use tree_dispersion::Error;

fn delta(amp: f64) -> RadialFunction {
    RadialFunction::from_real(2, &[amp, 0.0]).unwrap()
}

fn run(f: &RadialFunction, spec: &NonlinearitySpec, dt: f64, horizon: f64, stride: usize) -> Trajectory {
    let cfg = EvolutionConfig {
        dt,
        horizon,
        stride,
        ..Default::default()
    };
    nls_evolve(f, spec, &cfg).unwrap()
}

#[test]
fn nonlinearity_examples() {
    let spec = NonlinearitySpec::power(3.0, 1.0).unwrap();
    assert_eq!(spec.eval(c(0.0)), c(0.0));
    assert_eq!(spec.eval(c(2.0)), c(8.0));
    let u = RadialFunction::from_real(2, &[0.0, 2.0, 0.0]).unwrap();
    let fu = apply_nonlinearity(&u, &spec);
    assert_eq!(fu.values[1], c(8.0));
    assert!(NonlinearitySpec::power(1.0, 1.0).is_err());
    assert!(NonlinearitySpec::power(3.0, f64::NAN).is_err());
    assert!(spec.gauge_invariant());
    assert!(!NonlinearitySpec::non_gauge(3.0, 1.0).unwrap().gauge_invariant());
}

#[test]
fn growth_gauge_and_lipschitz_bounds() {
    let mut r = rng(40);
    for form in [NonlinearitySpec::power(2.5, -1.5), NonlinearitySpec::non_gauge(2.5, -1.5)] {
        let spec = form.unwrap();
        let mut lip = 0.0f64;
        let sample = |r: &mut rand_chacha::ChaCha8Rng| Complex64::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let pairs: Vec<(Complex64, Complex64)> = (0..2000).map(|_| (sample(&mut r), sample(&mut r))).collect();
        for (u, _) in &pairs {
            let f = spec.eval(*u);
            assert!(f.norm() <= spec.lambda.abs() * u.norm().powf(spec.gamma) * (1.0 + 1e-14));
            if spec.gauge_invariant() {
                assert!((f * u.conj()).im.abs() <= 1e-14 * (1.0 + f.norm() * u.norm()));
            }
        }
        // |F(u) - F(v)| <= C (|u|^{γ-1} + |v|^{γ-1}) |u - v|, C calibrated on the first half.
        let ratio = |(u, v): &(Complex64, Complex64)| {
            (spec.eval(*u) - spec.eval(*v)).norm()
                / ((u.norm().powf(spec.gamma - 1.0) + v.norm().powf(spec.gamma - 1.0)) * (u - v).norm())
        };
        for p in &pairs[..1000] {
            lip = lip.max(ratio(p));
        }
        assert!(lip.is_finite() && lip <= spec.gamma * spec.lambda.abs());
        for p in &pairs[1000..] {
            assert!(ratio(p) <= lip * 1.05);
        }
    }
}

#[test]
fn energy_of_delta() {
    let spec = NonlinearitySpec::linear();
    assert!((energy(&delta(1.0), &spec) - 1.5).abs() < 1e-15);
    assert_eq!(energy(&delta(0.0), &spec), 0.0);
    let tree = Arc::new(build_truncated_tree(TreeParams::new(2, 3).unwrap()).unwrap());
    let v = VertexField::delta_root(tree);
    assert!((energy_on_vertices(&v, &spec) - 1.5).abs() < 1e-15);
}

#[test]
fn energy_matches_vertex_double_sum() {
    let mut r = rng(41);
    for q in [2u32, 3] {
        let u = random_radial(&mut r, q, 5);
        let spec = NonlinearitySpec::power(3.0, 0.7).unwrap();
        let tree = Arc::new(build_truncated_tree(TreeParams::new(q, 5).unwrap()).unwrap());
        let v = VertexField::from_radial(tree, &u);
        let (a, b) = (energy(&u, &spec), energy_on_vertices(&v, &spec));
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "q={q}: {a} vs {b}");
        assert!(energy_plus(&u, &spec) >= gradient_energy(&u));
    }
}

#[test]
fn linear_step_matches_propagator() {
    let f = random_radial(&mut rng(42), 2, 3).resized(60);
    let step = StepOperator::new(f.params, 0.01).unwrap();
    let u = nls_step_strang(&f, 0.01, &NonlinearitySpec::linear(), &step).unwrap();
    let plan = PropagatorPlan::with_output_radius(f.params, 60, 0.01).unwrap();
    let v = propagate_spectral(&f, 0.01, &plan).unwrap();
    assert!(u.max_abs_diff(&v) < 1e-13);
    assert!(nls_step_strang(&f, 0.02, &NonlinearitySpec::linear(), &step).is_err());
}

#[test]
fn zero_coupling_trajectory_is_the_linear_flow() {
    let f = delta(1.0);
    let traj = run(&f, &NonlinearitySpec::linear(), 1e-2, 5.0, 50);
    let plan = PropagatorPlan::new(f.params, 5.0).unwrap();
    for (t, u) in traj.times.iter().zip(&traj.states) {
        let v = propagate_spectral(&f, *t, &plan).unwrap();
        let n = u.radius().min(v.radius());
        assert!(u.resized(n).max_abs_diff(&v.resized(n)) < 1e-10, "t={t}");
    }
}

#[test]
fn strang_is_second_order() {
    let f = delta(0.5);
    let spec = NonlinearitySpec::power(3.0, 1.0).unwrap();
    let finals: Vec<RadialFunction> = [0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|&dt| run(&f, &spec, dt, 1.0, 1).states.last().unwrap().clone())
        .collect();
    let errs: Vec<f64> = finals.windows(2).map(|w| w[0].l2_distance(&w[1])).collect();
    for e in errs.windows(2) {
        let slope = (e[0] / e[1]).log2();
        assert!((slope - 2.0).abs() <= 0.2, "slope {slope}, errors {errs:?}");
    }
}

#[test]
fn gauge_flow_conserves_mass_and_energy() {
    let spec = NonlinearitySpec::power(3.0, 1.0).unwrap();
    let traj = run(&delta(0.1), &spec, 1e-3, 10.0, 100);
    assert!(Trajectory::relative_drift(&traj.mass) <= 1e-6);
    assert!(Trajectory::relative_drift(&traj.energy) <= 1e-4);
}

#[test]
fn energy_stays_positive_for_small_data() {
    let spec = NonlinearitySpec::power(3.0, 1.0).unwrap();
    let traj = run(&delta(0.1), &spec, 1e-3, 5.0, 50);
    assert!(traj.energy.iter().all(|e| *e > 0.0));
}

#[test]
fn non_gauge_small_data_mass_stays_bounded() {
    let spec = NonlinearitySpec::non_gauge(3.0, 1.0).unwrap();
    let traj = run(&delta(0.1), &spec, 1e-3, 10.0, 100);
    let m0 = traj.mass[0];
    assert!(traj.mass.iter().all(|m| *m <= 2.0 * m0 && *m >= 0.5 * m0));
}

#[test]
fn non_gauge_large_data_trips_the_blow_up_guard() {
    let spec = NonlinearitySpec::non_gauge(3.0, 1.0).unwrap();
    let cfg = EvolutionConfig {
        dt: 1e-3,
        horizon: 5.0,
        stride: 10,
        ..Default::default()
    };
    let err = nls_evolve(&delta(3.0), &spec, &cfg).unwrap_err();
    assert!(matches!(err, Error::BlowUp { .. }), "{err:?}");
}

#[test]
fn small_radius_is_a_truncation_error() {
    let cfg = EvolutionConfig {
        dt: 1e-2,
        horizon: 30.0,
        extra_radius: 0,
        ..Default::default()
    };
    let err = nls_evolve(&delta(1.0), &NonlinearitySpec::linear(), &cfg).unwrap_err();
    assert!(matches!(err, Error::Truncation { .. }), "{err:?}");
}

#[test]
fn invalid_configs_are_rejected() {
    let spec = NonlinearitySpec::linear();
    for cfg in [
        EvolutionConfig { dt: 0.0, ..Default::default() },
        EvolutionConfig { horizon: -1.0, ..Default::default() },
        EvolutionConfig { stride: 0, ..Default::default() },
    ] {
        assert!(matches!(nls_evolve(&delta(1.0), &spec, &cfg), Err(Error::Config(_))));
    }
}

#[test]
fn picard_contracts_and_agrees_with_splitting() {
    let f = delta(0.05);
    let spec = NonlinearitySpec::power(3.0, 1.0).unwrap();
    let report = picard_solve(&f, &spec, 0.5, &PicardOptions::default()).unwrap();
    assert!(report.converged);
    assert!(report.ratios.iter().skip(1).all(|r| *r < 0.5), "{:?}", report.ratios);
    let traj = run(&f, &spec, 1e-3, 0.5, 500);
    let u = traj.states.last().unwrap();
    let n = u.radius().min(report.solution.radius());
    assert!(u.resized(n).max_abs_diff(&report.solution.resized(n)) <= 1e-5);
}

#[test]
fn picard_with_zero_coupling_is_linear_after_one_iteration() {
    let f = delta(1.0);
    let report = picard_solve(&f, &NonlinearitySpec::linear(), 0.5, &PicardOptions::default()).unwrap();
    assert!(report.converged);
    assert!(report.differences.iter().all(|d| *d == 0.0), "{:?}", report.differences);
    let plan = PropagatorPlan::new(f.params, 0.5).unwrap();
    let v = propagate_spectral(&f, 0.5, &plan).unwrap();
    let n = v.radius().min(report.solution.radius());
    assert!(v.resized(n).max_abs_diff(&report.solution.resized(n)) < 1e-12);
}

#[test]
fn picard_scheme_matches_strang() {
    let spec = NonlinearitySpec::power(3.0, 1.0).unwrap();
    let cfg = EvolutionConfig {
        dt: 5e-3,
        horizon: 1.0,
        stride: 100,
        scheme: Scheme::Picard,
        ..Default::default()
    };
    let p = nls_evolve(&delta(0.1), &spec, &cfg).unwrap();
    let s = run(&delta(0.1), &spec, 1e-3, 1.0, 500);
    let (a, b) = (p.states.last().unwrap(), s.states.last().unwrap());
    assert!(a.max_abs_diff(b) < 1e-7);
    assert!(Trajectory::relative_drift(&p.mass) < 1e-8);
}
