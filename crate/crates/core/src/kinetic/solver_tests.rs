use super::*;
use crate::dispersion::DispersionModel;
use crate::interface::{build_interface_coefficients, CoefficientPath, InterfaceCoefficients, NuOptions};
use crate::scattering::{DiscreteL, ScatteringKernel};

struct Setup {
    config: SimConfig,
    model: DispersionModel,
    dl: DiscreteL,
    coeffs: InterfaceCoefficients,
}

fn setup(eps: f64, n_y: usize, n_k: usize, temperature: f64) -> Setup {
    let mut config = SimConfig::headline(eps);
    config.n_y = n_y;
    config.n_k = n_k;
    config.temperature = temperature;
    let model = DispersionModel::sine();
    let grid = WavenumberGrid::new(n_k).unwrap();
    let dl = DiscreteL::assemble(&ScatteringKernel::uniform(), &grid);
    let coeffs = build_interface_coefficients(
        &model,
        config.gamma_therm,
        temperature,
        &grid,
        CoefficientPath::ClosedForm,
        &NuOptions::default(),
    )
    .unwrap();
    Setup {
        config,
        model,
        dl,
        coeffs,
    }
}

fn run(s: &Setup, w0: &KineticField, times: &[f64], opts: &FvOptions) -> FvRun {
    solve_fv(&s.config, &s.model, &s.dl, &s.coeffs, w0, times, opts).unwrap()
}

#[test]
fn equilibrium_is_stationary() {
    for relaxation in [Relaxation::BackwardEuler, Relaxation::Exponential] {
        let mut s = setup(0.2, 100, 16, 1.3);
        s.config.relaxation = relaxation;
        let w0 = KineticField::constant(100, 16, 1.3);
        let r = run(&s, &w0, &[0.1], &FvOptions::default());
        let w = &r.snapshots[0];
        assert!((w.max() - 1.3).abs() < 1e-12 && (w.min() - 1.3).abs() < 1e-12);
        assert!(r.steps.iter().all(|s| s.l2 < 1e-24));
    }
}

#[test]
fn zero_temperature_and_zero_data_stay_zero() {
    let s = setup(0.3, 60, 8, 0.0);
    let w0 = KineticField::constant(60, 8, 0.0);
    let r = run(&s, &w0, &[], &FvOptions::default());
    assert_eq!(r.snapshots[0].max(), 0.0);
    assert_eq!(r.snapshots[0].time, 0.5);
}

#[test]
fn maximum_principle() {
    let s = setup(0.2, 200, 16, 1.0);
    let y = s.config.y_grid();
    let w0 = KineticField::from_profile(&y, 16, &PiecewiseProfile::headline());
    let r = run(&s, &w0, &[0.25, 0.5], &FvOptions::default());
    for w in &r.snapshots {
        assert!(w.min() >= -1e-12, "min {}", w.min());
        assert!(w.max() <= 2.0 + 1e-12, "max {}", w.max());
    }
    assert_eq!(r.snapshots[0].time, 0.25);
}

#[test]
fn solution_is_affine_in_data_and_temperature() {
    let y = YGrid::new(100, 4.0);
    let a = setup(0.25, 100, 16, 1.0);
    let b = setup(0.25, 100, 16, 0.5);
    let ab = setup(0.25, 100, 16, 2.0 * 1.0 + 3.0 * 0.5);
    let grid = a.dl.grid().clone();
    let fa = KineticField::from_fn(&y, &grid, |yy, k| {
        (-(yy - 1.0).powi(2)).exp() * (1.0 + 0.3 * (2.0 * std::f64::consts::PI * k).cos())
    });
    let fb = KineticField::from_fn(&y, &grid, |yy, _| if yy < -1.0 { 0.7 } else { 0.1 });
    let mut fab = fa.clone();
    for (x, (p, q)) in fab.values.iter_mut().zip(fa.values.iter().zip(&fb.values)) {
        *x = 2.0 * p + 3.0 * q;
    }
    let opts = FvOptions {
        diagnostics: false,
        store_trajectory: false,
    };
    let ra = run(&a, &fa, &[0.2], &opts);
    let rb = run(&b, &fb, &[0.2], &opts);
    let rab = run(&ab, &fab, &[0.2], &opts);
    for i in 0..fa.values.len() {
        let lhs = rab.snapshots[0].values[i];
        let rhs = 2.0 * ra.snapshots[0].values[i] + 3.0 * rb.snapshots[0].values[i];
        assert!((lhs - rhs).abs() < 1e-11);
    }
}

#[test]
fn apriori_bounds_hold() {
    for relaxation in [Relaxation::BackwardEuler, Relaxation::Exponential] {
        let mut s = setup(0.2, 200, 32, 1.0);
        s.config.relaxation = relaxation;
        let y = s.config.y_grid();
        let w0 = KineticField::from_profile(&y, 32, &PiecewiseProfile::headline());
        let r = run(&s, &w0, &[0.5], &FvOptions::default());
        let rep = apriori_diagnostics(&r);
        assert!(rep.passed(), "{relaxation:?}: {rep:?}");
        assert!(rep.l2.last() < rep.l2.bound);
        assert!(rep.dirichlet.last() > 0.0 && rep.trace.last() > 0.0);
    }
}

#[test]
fn bad_inputs_are_rejected() {
    let s = setup(0.2, 100, 16, 1.0);
    let w0 = KineticField::constant(100, 8, 1.0);
    assert!(matches!(
        solve_fv(&s.config, &s.model, &s.dl, &s.coeffs, &w0, &[], &FvOptions::default()),
        Err(Error::GridMismatch(_))
    ));
    let w0 = KineticField::constant(100, 16, 1.0);
    let hot = s.coeffs.with_temperature(2.0);
    assert!(solve_fv(&s.config, &s.model, &s.dl, &hot, &w0, &[], &FvOptions::default()).is_err());
    assert!(solve_fv(
        &s.config,
        &s.model,
        &s.dl,
        &s.coeffs,
        &w0,
        &[0.7],
        &FvOptions::default()
    )
    .is_err());
}

fn trajectory(s: &Setup, w0: &KineticField, t: f64) -> FvRun {
    let opts = FvOptions {
        diagnostics: false,
        store_trajectory: true,
    };
    run(s, w0, &[t], &opts)
}

#[test]
fn weak_residual_vanishes_at_equilibrium() {
    let s = setup(0.3, 100, 16, 1.0);
    let w0 = KineticField::constant(100, 16, 1.0);
    let r = trajectory(&s, &w0, 0.2);
    let tests = vec![(1.0, SmoothTestFn::bump(1.5, 1.0))];
    let res = weak_residual(&r, &s.model, &s.dl, &tests).unwrap();
    assert!(res.abs() < 1e-14);
}

#[test]
fn weak_residual_is_linear_and_rejects_interface_support() {
    let s = setup(0.3, 100, 16, 1.0);
    let y = s.config.y_grid();
    let w0 = KineticField::from_profile(&y, 16, &PiecewiseProfile::headline());
    let r = trajectory(&s, &w0, 0.2);
    let p = SmoothTestFn::bump(1.5, 1.0);
    let q = SmoothTestFn::bump(-2.0, 0.8).with_profile(crate::testfn::KProfile::Sin { amp: 0.5, mode: 1 });
    let rp = weak_residual(&r, &s.model, &s.dl, &[(1.0, p.clone())]).unwrap();
    let rq = weak_residual(&r, &s.model, &s.dl, &[(1.0, q.clone())]).unwrap();
    let rpq = weak_residual(&r, &s.model, &s.dl, &[(2.0, p), (-0.5, q)]).unwrap();
    assert!((rpq - (2.0 * rp - 0.5 * rq)).abs() < 1e-12);
    let bad = SmoothTestFn::bump(0.5, 1.0);
    assert!(weak_residual(&r, &s.model, &s.dl, &[(1.0, bad)]).is_err());
    let no_traj = run(&s, &w0, &[0.2], &FvOptions::default());
    assert!(weak_residual(&no_traj, &s.model, &s.dl, &[]).is_err());
}

#[test]
fn weak_residual_decreases_under_refinement() {
    let phi = SmoothTestFn::bump(1.5, 1.0).with_profile(crate::testfn::KProfile::Cos { amp: 0.5, mode: 1 });
    let mut res = Vec::new();
    for n_y in [100, 200] {
        let s = setup(0.3, n_y, 16, 1.0);
        let y = s.config.y_grid();
        let w0 = KineticField::from_fn(&y, s.dl.grid(), |yy, _| 1.0 + (-(yy - 1.5).powi(2) * 4.0).exp());
        let r = trajectory(&s, &w0, 0.1);
        res.push(weak_residual(&r, &s.model, &s.dl, &[(1.0, phi.clone())]).unwrap().abs());
    }
    assert!(res[0] / res[1] >= 1.5, "{res:?}");
}

#[test]
fn mc_is_reproducible_and_exact_at_equilibrium() {
    let mut s = setup(0.3, 100, 16, 1.0);
    s.config.n_particles = 3000;
    let tests = vec![SmoothTestFn::bump(1.5, 1.0), SmoothTestFn::bump(-1.5, 1.0)];
    let eq = KineticField::constant(100, 16, 1.0);
    let r = solve_mc(&s.config, &s.model, &s.dl, &s.coeffs, &eq, &tests, &[0.2, 0.4]).unwrap();
    for e in &r.estimates {
        assert!((e.estimate - tests[e.phi_index].integral(e.time)).abs() < 1e-15);
        assert_eq!(e.stderr, 0.0);
    }

    let y = s.config.y_grid();
    let w0 = KineticField::from_profile(&y, 16, &PiecewiseProfile::headline());
    let a = solve_mc(&s.config, &s.model, &s.dl, &s.coeffs, &w0, &tests, &[0.2, 0.4]).unwrap();
    let b = solve_mc(&s.config, &s.model, &s.dl, &s.coeffs, &w0, &tests, &[0.2, 0.4]).unwrap();
    assert_eq!(a, b);
    assert!(a.crossings.transmitted + a.crossings.reflected + a.crossings.absorbed > 0);
    assert!(a.alive_fraction[1] <= a.alive_fraction[0] && a.alive_fraction[0] <= 1.0);
    s.config.seed = 7;
    let c = solve_mc(&s.config, &s.model, &s.dl, &s.coeffs, &w0, &tests, &[0.2, 0.4]).unwrap();
    assert_ne!(a.estimates, c.estimates);
}

#[test]
fn mc_agrees_with_fv() {
    let mut s = setup(0.3, 400, 16, 1.0);
    s.config.n_particles = 40_000;
    s.config.relaxation = Relaxation::Exponential;
    let y = s.config.y_grid();
    let w0 = KineticField::from_profile(&y, 16, &PiecewiseProfile::headline());
    let tests = vec![SmoothTestFn::bump(1.5, 1.0), SmoothTestFn::bump(-2.0, 1.0)];
    let mc = solve_mc(&s.config, &s.model, &s.dl, &s.coeffs, &w0, &tests, &[0.3]).unwrap();
    let fv = run(&s, &w0, &[0.3], &FvOptions::default());
    for e in &mc.estimates {
        let f = fv.snapshots[0].pairing(&y, s.dl.grid(), &tests[e.phi_index], 0.3);
        assert!(
            (e.estimate - f).abs() < 5.0 * e.stderr + 5e-3,
            "mc {} fv {f} se {}",
            e.estimate,
            e.stderr
        );
    }
}
