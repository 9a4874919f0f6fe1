use std::f64::consts::PI;
use std::sync::Arc;

use pbc_core::analysis::{
    audit_trajectory, linearize, performance_metrics, spectral_abscissa, MetricsConfig,
};
use pbc_core::controllers::{
    linear_controller, msd_c1, static_gain_controller, tora_c1, tora_c2_controller,
};
use pbc_core::plants::{msd_model, tora_model};
use pbc_core::sector::BoundaryMode;
use pbc_core::{
    simulate, ClosedLoopState, ControllerModel, IntegratorConfig, PlantModel, Scenario,
    SectorBounds,
};

fn msd(
    controller: Arc<dyn ControllerModel>,
    initial: ClosedLoopState,
    cfg: IntegratorConfig,
    projection: bool,
) -> Scenario {
    Scenario::new(
        Arc::new(msd_model()),
        controller,
        SectorBounds::new(3.5, 6.0).unwrap(),
        initial,
        cfg,
        projection,
    )
    .unwrap()
}

fn tora(controller: Arc<dyn ControllerModel>, horizon: f64, projection: bool) -> Scenario {
    Scenario::new(
        Arc::new(tora_model(0.1, 10.0, 1.0).unwrap()),
        controller,
        SectorBounds::new(0.45, 0.6).unwrap(),
        ClosedLoopState::new(vec![PI / 6.0, 0.0, 0.5, 0.0], 0.0, vec![0.0]),
        IntegratorConfig::with_horizon(horizon),
        projection,
    )
    .unwrap()
}

fn msd_initial() -> ClosedLoopState {
    ClosedLoopState::new(vec![1.0, 0.0], 0.0, vec![0.0])
}

#[test]
fn projected_msd_stays_in_sector_and_converges() {
    let scn = msd(
        Arc::new(msd_c1()),
        msd_initial(),
        IntegratorConfig::with_horizon(20.0),
        true,
    );
    let traj = simulate(&scn);
    let audit = audit_trajectory(&traj, &scn.bounds);
    assert!(audit.pass, "{audit:?}");
    assert_eq!(audit.storage_monotone, Some(true));
    let m = performance_metrics(&traj, &MetricsConfig::default()).unwrap();
    assert!(m.converged, "{m:?}");
    assert!(m.final_norm <= 1e-2 * scn.initial.norm());
}

#[test]
fn runs_are_bitwise_deterministic() {
    let scn = msd(
        Arc::new(msd_c1()),
        msd_initial(),
        IntegratorConfig::with_horizon(2.0),
        true,
    );
    assert_eq!(simulate(&scn), simulate(&scn));
}

#[test]
fn unprojected_msd_c1_diverges_from_unstable_linearization() {
    let scn = msd(
        Arc::new(msd_c1()),
        msd_initial(),
        IntegratorConfig::with_horizon(20.0),
        false,
    );
    let traj = simulate(&scn);
    let div = traj
        .divergence
        .as_ref()
        .expect("unprojected loop must blow up");
    assert!(div.time > 0.0 && div.time < 20.0);
    let jac = linearize(
        scn.plant.as_ref(),
        scn.controller.as_ref(),
        &ClosedLoopState::zeros(2, 2),
        1e-6,
    )
    .unwrap();
    assert!(spectral_abscissa(&jac) > 0.0);
}

#[test]
fn interior_run_matches_unprojected_run() {
    let start = ClosedLoopState::new(vec![0.0, 1.0], 4.75, vec![0.0]);
    let cfg = IntegratorConfig {
        record_stride: 1,
        ..IntegratorConfig::with_horizon(0.02)
    };
    let on = simulate(&msd(Arc::new(msd_c1()), start.clone(), cfg, true));
    let off = simulate(&msd(Arc::new(msd_c1()), start, cfg, false));
    assert!(on
        .samples()
        .iter()
        .all(|s| s.mode == BoundaryMode::Interior));
    let states = |t: &pbc_core::Trajectory| {
        t.samples()
            .iter()
            .map(|s| s.state.clone())
            .collect::<Vec<_>>()
    };
    assert_eq!(states(&on), states(&off));
}

#[test]
fn step_halving_shows_fourth_order_on_smooth_segment() {
    let start = ClosedLoopState::new(vec![0.0, 1.0], 4.75, vec![0.0]);
    let end_state = |h: f64| {
        let cfg = IntegratorConfig {
            step: h,
            ..IntegratorConfig::with_horizon(0.02)
        };
        simulate(&msd(Arc::new(msd_c1()), start.clone(), cfg, true))
            .last()
            .unwrap()
            .state
            .to_vec()
    };
    let reference = end_state(1.25e-4);
    let err = |h: f64| {
        end_state(h)
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(2e-3), err(1e-3));
    let ratio = e1 / e2;
    assert!(
        ratio > 12.0 && ratio < 20.0,
        "ratio {ratio} (e1={e1:e}, e2={e2:e})"
    );
}

#[test]
fn static_gain_loop_stays_inside_the_sector() {
    let scn = msd(
        Arc::new(static_gain_controller(4.8).unwrap()),
        ClosedLoopState::new(vec![1.0, 0.0], 0.0, vec![]),
        IntegratorConfig::with_horizon(20.0),
        true,
    );
    assert!(!scn.projection_active());
    let traj = simulate(&scn);
    assert!(!traj.diverged());
    for s in traj.samples() {
        assert!((s.state.z1 - 4.8 * s.y).abs() <= 1e-9 * (1.0 + s.y.abs()));
    }
    let audit = audit_trajectory(&traj, &scn.bounds);
    assert!(audit.pass, "{audit:?}");
}

#[test]
fn projected_tora_loops_dissipate_and_stay_in_sector() {
    for controller in [
        Arc::new(tora_c1()) as Arc<dyn ControllerModel>,
        Arc::new(tora_c2_controller()),
    ] {
        let scn = tora(controller, 30.0, true);
        let traj = simulate(&scn);
        let audit = audit_trajectory(&traj, &scn.bounds);
        assert!(audit.pass, "{audit:?}");
        let v0 = traj.first().unwrap().storage.unwrap();
        let v_end = traj.last().unwrap().storage.unwrap();
        assert!(v_end < 0.5 * v0, "storage {v0} -> {v_end}");
    }
}

#[test]
fn unprojected_tora_c1_diverges() {
    let traj = simulate(&tora(Arc::new(tora_c1()), 100.0, false));
    assert!(traj.diverged());
}

#[test]
fn tora_energy_is_conserved_without_control() {
    let plant = Arc::new(tora_model(0.1, 0.0, 0.0).unwrap());
    let zero = linear_controller(&[0.0; 4], &[0.0, 0.0]).unwrap();
    let scn = Scenario::new(
        plant.clone(),
        Arc::new(zero),
        SectorBounds::new(0.45, 0.6).unwrap(),
        ClosedLoopState::new(vec![PI / 6.0, 0.3, 0.5, -0.2], 0.0, vec![0.0]),
        IntegratorConfig::with_horizon(10.0),
        false,
    )
    .unwrap();
    let traj = simulate(&scn);
    let e0 = plant.mechanical_energy(&traj.first().unwrap().state.x);
    let drift = traj
        .samples()
        .iter()
        .map(|s| (plant.mechanical_energy(&s.state.x) - e0).abs())
        .fold(0.0, f64::max);
    assert!(drift <= 1e-6, "energy drift {drift:e}");
    // with zero gains the storage is the mechanical energy
    let x = &traj.last().unwrap().state.x;
    assert!((plant.storage().unwrap().value(x) - plant.mechanical_energy(x)).abs() < 1e-12);
}
