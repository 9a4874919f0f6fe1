//! Fixed-step integration of the projected closed loop.
//!
//! Each RK4 stage state is repaired into the sector set before the projected
//! field is evaluated, and the combined step is repaired once more. The
//! projected field is discontinuous, so accuracy drops to first order on
//! steps that switch boundary modes.

use std::fmt;
use std::sync::Arc;

use crate::error::{PbcError, Result};
use crate::model::{
    check_dims, dot, unprojected_field_unchecked, ClosedLoopState, ControllerModel, Divergence,
    PlantModel, Sample, SectorBounds, Trajectory,
};
use crate::projection::{partial_project, repair_z1};
use crate::sector::{classify_mode, sector_residual, BoundaryMode};

/// Any state component above this magnitude counts as a blowup.
pub const BLOWUP_THRESHOLD: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Step size in seconds.
    pub step: f64,
    /// Final time in seconds.
    pub horizon: f64,
    pub mode_tol: f64,
    /// Largest sector residual tolerated on recorded samples.
    pub drift_budget: f64,
    /// Record every `record_stride` steps (the final step is always recorded).
    pub record_stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 1e-4,
            horizon: 20.0,
            mode_tol: 1e-9,
            drift_budget: 1e-7,
            record_stride: 10,
        }
    }
}

impl IntegratorConfig {
    pub fn with_horizon(horizon: f64) -> Self {
        Self {
            horizon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(PbcError::Config(format!(
                "step must be > 0, got {}",
                self.step
            )));
        }
        if !(self.horizon >= self.step) || !self.horizon.is_finite() {
            return Err(PbcError::Config(format!(
                "horizon must be finite and >= step, got {}",
                self.horizon
            )));
        }
        if !(self.mode_tol > 0.0) || !(self.drift_budget > 0.0) {
            return Err(PbcError::Config("tolerances must be > 0".into()));
        }
        if self.record_stride == 0 {
            return Err(PbcError::Config("record_stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }
}

/// A closed loop ready to integrate.
#[derive(Clone)]
pub struct Scenario {
    pub plant: Arc<dyn PlantModel>,
    pub controller: Arc<dyn ControllerModel>,
    pub bounds: SectorBounds,
    pub initial: ClosedLoopState,
    pub integrator: IntegratorConfig,
    pub projection_enabled: bool,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("plant_dim", &self.plant.dim())
            .field("controller_dim", &self.controller.dim())
            .field("bounds", &self.bounds)
            .field("initial", &self.initial)
            .field("integrator", &self.integrator)
            .field("projection_enabled", &self.projection_enabled)
            .finish()
    }
}

impl Scenario {
    /// Validates dimensions, integrator settings and (with projection) that
    /// the initial state lies in the sector set. Feedthrough controllers get
    /// `z1 = k v` at the initial state.
    pub fn new(
        plant: Arc<dyn PlantModel>,
        controller: Arc<dyn ControllerModel>,
        bounds: SectorBounds,
        initial: ClosedLoopState,
        integrator: IntegratorConfig,
        projection_enabled: bool,
    ) -> Result<Self> {
        check_dims(plant.as_ref(), controller.as_ref(), &initial)?;
        integrator.validate()?;
        let mut initial = initial;
        let v0 = plant.output(&initial.x);
        if let Some(k) = controller.feedthrough_gain() {
            initial.z1 = k * v0;
        }
        let scenario = Self {
            plant,
            controller,
            bounds,
            initial,
            integrator,
            projection_enabled,
        };
        if scenario.projection_active()
            && classify_mode(&bounds, v0, scenario.initial.z1, integrator.mode_tol)
                == BoundaryMode::Outside
        {
            return Err(PbcError::Config(format!(
                "initial state is outside the sector set (v={v0}, z1={}, residual={:e})",
                scenario.initial.z1,
                sector_residual(&bounds, v0, scenario.initial.z1)
            )));
        }
        Ok(scenario)
    }

    /// Projection applies unless disabled or bypassed by a feedthrough controller.
    pub fn projection_active(&self) -> bool {
        self.projection_enabled && self.controller.feedthrough_gain().is_none()
    }

    fn output_row(&self) -> &[f64] {
        self.plant.output_row()
    }

    fn repair(&self, xi: &mut ClosedLoopState) -> f64 {
        let v = dot(self.output_row(), &xi.x);
        let repaired = repair_z1(&self.bounds, v, xi.z1);
        let change = (repaired - xi.z1).abs();
        xi.z1 = repaired;
        change
    }

    /// `F(xi)`: the partially projected field when projection is active,
    /// otherwise the unprojected field.
    pub fn projected_field(&self, xi: &ClosedLoopState) -> Result<Vec<f64>> {
        let f = unprojected_field_unchecked(self.plant.as_ref(), self.controller.as_ref(), xi);
        if !self.projection_active() {
            return Ok(f);
        }
        let n = xi.x.len();
        let v_dot = dot(self.output_row(), &f[..n]);
        partial_project(
            &self.bounds,
            xi,
            self.output_row(),
            &f,
            v_dot,
            self.integrator.mode_tol,
        )
    }

    fn stage(&self, xi: &ClosedLoopState) -> Result<Vec<f64>> {
        let mut xi = xi.clone();
        if self.projection_active() {
            self.repair(&mut xi);
        }
        self.projected_field(&xi)
    }

    fn advance(&self, xi: &ClosedLoopState, time: f64) -> Result<(ClosedLoopState, f64)> {
        let n = xi.x.len();
        let h = self.integrator.step;
        let mut start = xi.clone();
        if self.projection_active() {
            self.repair(&mut start);
        }
        let base = start.to_vec();
        let offset = |k: &[f64], scale: f64| -> Result<ClosedLoopState> {
            let flat: Vec<f64> = base.iter().zip(k).map(|(b, d)| b + scale * d).collect();
            ClosedLoopState::from_slice(n, &flat)
        };
        let k1 = self.stage(&start)?;
        let k2 = self.stage(&offset(&k1, 0.5 * h)?)?;
        let k3 = self.stage(&offset(&k2, 0.5 * h)?)?;
        let k4 = self.stage(&offset(&k3, h)?)?;
        let flat: Vec<f64> = (0..base.len())
            .map(|i| base[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        if flat
            .iter()
            .any(|v| !v.is_finite() || v.abs() > BLOWUP_THRESHOLD)
        {
            return Err(PbcError::NumericalBlowup { time, state: flat });
        }
        let mut next = ClosedLoopState::from_slice(n, &flat)?;
        let repair = if self.projection_active() {
            self.repair(&mut next)
        } else {
            0.0
        };
        Ok((next, repair))
    }

    /// One RK4 step of `F`. A blowup error reports `time = NaN`; use
    /// [`simulate`] for time-stamped divergence.
    pub fn step(&self, xi: &ClosedLoopState) -> Result<ClosedLoopState> {
        self.advance(xi, f64::NAN).map(|(next, _)| next)
    }

    fn sample(&self, t: f64, xi: &ClosedLoopState) -> Sample {
        let v = self.plant.output(&xi.x);
        Sample {
            t,
            state: xi.clone(),
            u: -xi.z1,
            y: v,
            storage: self.plant.storage().map(|s| s.value(&xi.x)),
            mode: classify_mode(&self.bounds, v, xi.z1, self.integrator.mode_tol),
            residual: sector_residual(&self.bounds, v, xi.z1),
        }
    }
}

/// Free-function form of [`Scenario::step`].
pub fn step(scenario: &Scenario, xi: &ClosedLoopState) -> Result<ClosedLoopState> {
    scenario.step(xi)
}

/// Integrates over `[0, T]`. Blowups end the run early and are recorded in
/// [`Trajectory::divergence`]; the last finite state is always recorded.
pub fn simulate(scenario: &Scenario) -> Trajectory {
    let cfg = scenario.integrator;
    let steps = cfg.steps();
    let mut traj = Trajectory::new();
    traj.step = Some(cfg.step);
    traj.projection_enabled = scenario.projection_active();

    let mut xi = scenario.initial.clone();
    if scenario.projection_active() {
        scenario.repair(&mut xi);
    }
    // Times are strictly increasing by construction.
    let record = |traj: &mut Trajectory, i: usize, xi: &ClosedLoopState| {
        let _ = traj.push(scenario.sample(i as f64 * cfg.step, xi));
    };
    record(&mut traj, 0, &xi);
    let mut last_recorded = 0;

    for i in 1..=steps {
        match scenario.advance(&xi, i as f64 * cfg.step) {
            Ok((next, repair)) => {
                traj.max_repair = traj.max_repair.max(repair);
                xi = next;
            }
            Err(PbcError::NumericalBlowup { time, state }) => {
                if last_recorded != i - 1 {
                    record(&mut traj, i - 1, &xi);
                }
                traj.divergence = Some(Divergence { time, state });
                return traj;
            }
            Err(other) => {
                // Only reachable if repair failed to restore membership.
                if last_recorded != i - 1 {
                    record(&mut traj, i - 1, &xi);
                }
                traj.divergence = Some(Divergence {
                    time: i as f64 * cfg.step,
                    state: match other {
                        PbcError::StateLeftAdmissibleSet { .. } => xi.to_vec(),
                        _ => Vec::new(),
                    },
                });
                return traj;
            }
        }
        if i % cfg.record_stride == 0 || i == steps {
            record(&mut traj, i, &xi);
            last_recorded = i;
        }
    }
    traj
}

/// Fraction of recorded samples on the sector boundary (including the apex).
pub fn sliding_fraction(traj: &Trajectory) -> f64 {
    if traj.is_empty() {
        return 0.0;
    }
    let on = traj
        .samples()
        .iter()
        .filter(|s| s.mode.on_boundary())
        .count();
    on as f64 / traj.len() as f64
}
