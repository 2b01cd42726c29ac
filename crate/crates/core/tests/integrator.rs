use std::f64::consts::PI;

use nalgebra::DMatrix;
use thinfilm_core::integrator::{integrate_system, step_system, StartPoint};
use thinfilm_core::{
    integrate, step, GalerkinState, IntegratorControls, OdeSystem, Result, Scheme, SpectralBasis,
    SystemParams,
};

struct Linear;

impl OdeSystem for Linear {
    fn dim(&self) -> usize {
        1
    }
    fn rhs(&self, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        dydt[0] = -y[0];
        Ok(())
    }
    fn jacobian(&self, _y: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_element(1, 1, -1.0))
    }
}

/// `y' = -y²`, solution `1 / (1 + t)`.
struct Riccati;

impl OdeSystem for Riccati {
    fn dim(&self) -> usize {
        1
    }
    fn rhs(&self, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        dydt[0] = -y[0] * y[0];
        Ok(())
    }
    fn jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_element(1, 1, -2.0 * y[0]))
    }
}

fn loose(scheme: Scheme) -> IntegratorControls {
    IntegratorControls {
        rel_tol: 1.0,
        abs_tol: 1.0,
        scheme,
        ..Default::default()
    }
}

/// Global error at `t = 1` with `steps` fixed steps.
fn fixed_step_error(system: &dyn OdeSystem, exact: f64, steps: usize, scheme: Scheme) -> f64 {
    let controls = loose(scheme);
    let h = 1.0 / steps as f64;
    let mut y = vec![1.0];
    for i in 0..steps {
        let r = step_system(system, &y, i as f64 * h, h, &controls, f64::INFINITY).unwrap();
        assert!(r.accepted);
        y = r.y;
    }
    (y[0] - exact).abs()
}

fn observed_order(system: &dyn OdeSystem, exact: f64, scheme: Scheme, coarse: usize) -> f64 {
    let e1 = fixed_step_error(system, exact, coarse, scheme);
    let e2 = fixed_step_error(system, exact, 2 * coarse, scheme);
    (e1 / e2).log2()
}

#[test]
fn scalar_step_matches_exponential() {
    let controls = IntegratorControls {
        scheme: Scheme::Dopri5,
        ..Default::default()
    };
    let r = step_system(&Linear, &[1.0], 0.0, 0.1, &controls, 0.0).unwrap();
    assert!(r.accepted);
    assert!(r.err_est <= 1.0);
    assert!((r.y[0] - (-0.1f64).exp()).abs() <= controls.rel_tol);
    assert!((r.y[0] - 0.904_837_418).abs() < 1e-9);
}

#[test]
fn dopri5_order_on_scalar_problem() {
    let p = observed_order(&Linear, (-1.0f64).exp(), Scheme::Dopri5, 8);
    assert!(p >= 4.5, "observed order {p}");
    let p = observed_order(&Riccati, 0.5, Scheme::Dopri5, 8);
    assert!(p >= 4.5, "observed order {p}");
}

#[test]
fn rodas3_order_on_scalar_problems() {
    let p = observed_order(&Linear, (-1.0f64).exp(), Scheme::Rodas3, 16);
    assert!(p >= 2.8, "observed order {p}");
    let p = observed_order(&Riccati, 0.5, Scheme::Rodas3, 16);
    assert!(p >= 2.8, "observed order {p}");
}

#[test]
fn adaptive_runs_reach_tolerance() {
    for scheme in [Scheme::Dopri5, Scheme::Rodas3] {
        let controls = IntegratorControls {
            t_final: 2.0,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            scheme,
            ..Default::default()
        };
        let rec =
            integrate_system(&Riccati, StartPoint::new(vec![1.0], 0.0), &controls, &mut ()).unwrap();
        assert!(rec.completed());
        let y = rec.final_snapshot().y[0];
        assert!((y - 1.0 / 3.0).abs() < 1e-7, "{scheme:?}: {y}");
    }
}

fn reference_state(basis: &SpectralBasis) -> GalerkinState {
    let xs = basis.quadrature().nodes();
    let f: Vec<f64> = xs.iter().map(|x| 0.5 + 0.3 * (PI * x).cos()).collect();
    let g: Vec<f64> = xs.iter().map(|x| 0.5 + 0.2 * (2.0 * PI * x).cos()).collect();
    GalerkinState::new(basis.project(&f).unwrap(), basis.project(&g).unwrap(), 0.0).unwrap()
}

#[test]
fn flat_state_is_a_fixed_point_of_one_step() {
    let basis = SpectralBasis::new(8, 1.0).unwrap();
    let params = SystemParams::new(1.0, 1.0, 1.0, 0.01).unwrap();
    let flat = GalerkinState::flat(8, 0.4, 0.7);
    for scheme in [Scheme::Dopri5, Scheme::Rodas3] {
        let controls = IntegratorControls {
            scheme,
            ..Default::default()
        };
        for dt in [1e-6, 0.1, 10.0] {
            let r = step(&flat, dt, &params, &basis, &controls).unwrap();
            assert!(r.accepted);
            for (a, b) in r.state.f.iter().zip(&flat.f) {
                assert!((a - b).abs() <= 1e-15);
            }
            assert_eq!(r.state.f[0], flat.f[0]);
        }
    }
}

#[test]
fn zero_horizon_keeps_only_the_initial_state() {
    let basis = SpectralBasis::new(4, 1.0).unwrap();
    let params = SystemParams::new(1.0, 1.0, 1.0, 0.1).unwrap();
    let controls = IntegratorControls {
        t_final: 0.0,
        ..Default::default()
    };
    let s = reference_state(&basis);
    let rec = integrate(&s, &params, &basis, &controls, &mut ()).unwrap();
    assert_eq!(rec.snapshots.len(), 1);
    assert_eq!(rec.final_state(), s);
}

#[test]
fn short_reference_run_conserves_mass_and_is_deterministic() {
    let basis = SpectralBasis::new(8, 1.0).unwrap();
    let params = SystemParams::new(1.0, 1.0, 1.0, 0.01).unwrap();
    let controls = IntegratorControls {
        t_final: 0.01,
        snapshot_every: 0.0,
        ..Default::default()
    };
    let s = reference_state(&basis);
    let a = integrate(&s, &params, &basis, &controls, &mut ()).unwrap();
    let b = integrate(&s, &params, &basis, &controls, &mut ()).unwrap();
    assert!(a.completed());
    assert_eq!(a, b);
    for snap in &a.snapshots {
        assert_eq!(snap.y[0], s.f[0]);
        assert_eq!(snap.y[9], s.g[0]);
    }
    for w in a.steps.windows(2) {
        assert!(w[1].energy <= w[0].energy + a.energy_slack);
    }
}

#[test]
fn dopri5_and_rodas3_agree_on_a_short_run() {
    let basis = SpectralBasis::new(6, 1.0).unwrap();
    let params = SystemParams::new(1.0, 1.0, 1.0, 0.01).unwrap();
    let s = reference_state(&basis);
    let run = |scheme| {
        let controls = IntegratorControls {
            t_final: 0.002,
            scheme,
            ..Default::default()
        };
        integrate(&s, &params, &basis, &controls, &mut ())
            .unwrap()
            .final_state()
    };
    let (a, b) = (run(Scheme::Dopri5), run(Scheme::Rodas3));
    for (x, y) in a.f.iter().chain(&a.g).zip(b.f.iter().chain(&b.g)) {
        assert!((x - y).abs() < 1e-7, "{x} vs {y}");
    }
}

/// `y' = y²` with a vector field that refuses states beyond `|y| = 10`.
struct Fragile;

impl OdeSystem for Fragile {
    fn dim(&self) -> usize {
        1
    }
    fn rhs(&self, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        if y[0].abs() > 10.0 {
            return Err(thinfilm_core::Error::NonFinite { field: "test flux", index: 0 });
        }
        dydt[0] = y[0] * y[0];
        Ok(())
    }
    fn jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_element(1, 1, 2.0 * y[0]))
    }
}

#[test]
fn blown_up_trial_steps_are_rejected_not_fatal() {
    for scheme in [Scheme::Dopri5, Scheme::Rodas3] {
        let controls = IntegratorControls { scheme, ..Default::default() };
        let r = step_system(&Fragile, &[1.0], 0.0, 0.95, &controls, f64::INFINITY).unwrap();
        assert!(!r.accepted, "{scheme:?}");
        assert_eq!(r.y, [1.0]);
        assert!(r.dt_next < 0.95);
        // A vector field that is broken at the start point is an error.
        assert!(step_system(&Fragile, &[11.0], 0.0, 1e-3, &controls, f64::INFINITY).is_err());
    }
}

#[test]
fn snapshots_land_on_the_absolute_time_grid() {
    let params = SystemParams::new(1.0, 1.0, 1.0, 0.01).unwrap();
    let basis = SpectralBasis::new(8, 1.0).unwrap();
    let controls = IntegratorControls {
        t_final: 1.0,
        snapshot_every: 0.1,
        ..Default::default()
    };
    // Flat data lets the controller grow the step far beyond the cadence.
    let record = integrate(&GalerkinState::flat(8, 0.4, 0.6), &params, &basis, &controls, &mut ()).unwrap();
    let ts: Vec<f64> = record.snapshots.iter().map(|s| s.t).collect();
    let expected: Vec<f64> = (0..=10).map(|k| if k == 0 { 0.0 } else { k as f64 * 0.1 }).collect();
    assert_eq!(ts[..10], expected[..10]);
    assert_eq!(ts[10], 1.0);

    // A run starting off the grid snapshots on the same grid.
    let mut late = GalerkinState::flat(8, 0.4, 0.6);
    late.t = 0.25;
    let record = integrate(&late, &params, &basis, &controls, &mut ()).unwrap();
    let ts: Vec<f64> = record.snapshots.iter().map(|s| s.t).collect();
    assert_eq!(ts[..3], [0.25, 3.0 * 0.1, 4.0 * 0.1]);
}
