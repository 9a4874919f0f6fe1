//! Empirical certification and run diagnostics.

use nalgebra::DMatrix;

use crate::error::{PbcError, Result};
use crate::model::{
    dot, unprojected_field, ClosedLoopState, ControllerModel, DissipativityTriple, PlantModel,
    SectorBounds, Trajectory,
};
use crate::sector::sector_residual;

/// Axis-aligned box of plant states and inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingBox {
    pub state: Vec<(f64, f64)>,
    pub input: (f64, f64),
}

impl SamplingBox {
    /// `|x_i| <= state_bounds[i]`, `|u| <= input_bound`.
    pub fn symmetric(state_bounds: &[f64], input_bound: f64) -> Self {
        Self {
            state: state_bounds.iter().map(|b| (-b.abs(), b.abs())).collect(),
            input: (-input_bound.abs(), input_bound.abs()),
        }
    }
}

const PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let base = base as u64;
    let inv = 1.0 / base as f64;
    let mut factor = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * factor;
        index /= base;
        factor *= inv;
    }
    out
}

/// Point `index` of the Halton sequence in `dim` dimensions.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(
        dim <= PRIMES.len(),
        "Halton sampling supports at most {} dimensions",
        PRIMES.len()
    );
    PRIMES[..dim]
        .iter()
        .map(|&p| radical_inverse(index, p))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipativityReport {
    pub n_samples: usize,
    /// Largest `(dV/dx f_p - supply) / (1 + |dV/dx f_p| + |supply|)` over samples.
    pub max_residual: f64,
    /// Unscaled residual at the worst sample.
    pub worst_raw_residual: f64,
    pub worst_point: (Vec<f64>, f64),
    pub tol: f64,
    pub pass: bool,
}

/// Samples `n` Halton points in `sample_box` and checks the dissipation inequality.
pub fn check_dissipativity(
    plant: &dyn PlantModel,
    triple: &DissipativityTriple,
    sample_box: &SamplingBox,
    n: usize,
    tol: f64,
) -> Result<DissipativityReport> {
    let storage = plant.storage().ok_or(PbcError::NotCheckable)?;
    let dim = plant.dim();
    if sample_box.state.len() != dim {
        return Err(PbcError::Config(format!(
            "sampling box has {} state ranges, plant has {dim} states",
            sample_box.state.len()
        )));
    }
    if n == 0 {
        return Err(PbcError::Config("need at least one sample".into()));
    }
    let mut worst: Option<(f64, f64, Vec<f64>, f64)> = None;
    for i in 0..n {
        let unit = halton(i as u64 + 1, dim + 1);
        let x: Vec<f64> = sample_box
            .state
            .iter()
            .zip(&unit)
            .map(|((lo, hi), t)| lo + t * (hi - lo))
            .collect();
        let (ulo, uhi) = sample_box.input;
        let u = ulo + unit[dim] * (uhi - ulo);
        let y = plant.output(&x);
        let v_dot = dot(&storage.gradient(&x), &plant.field(&x, u));
        let supply = triple.supply(u, y);
        let raw = v_dot - supply;
        let scaled = raw / (1.0 + v_dot.abs() + supply.abs());
        if worst.as_ref().is_none_or(|(s, ..)| scaled > *s) {
            worst = Some((scaled, raw, x, u));
        }
    }
    let (max_residual, worst_raw_residual, x, u) = worst.expect("n >= 1");
    Ok(DissipativityReport {
        n_samples: n,
        max_residual,
        worst_raw_residual,
        worst_point: (x, u),
        tol,
        pass: max_residual <= tol,
    })
}

/// Checks `V_p(0) = 0` and `V_p(x) > 0` at `n` Halton points of the box.
pub fn storage_positive_on_samples(
    plant: &dyn PlantModel,
    sample_box: &SamplingBox,
    n: usize,
) -> Result<bool> {
    let storage = plant.storage().ok_or(PbcError::NotCheckable)?;
    let dim = plant.dim();
    if storage.value(&vec![0.0; dim]) != 0.0 {
        return Ok(false);
    }
    Ok((0..n).all(|i| {
        let unit = halton(i as u64 + 1, dim);
        let x: Vec<f64> = sample_box
            .state
            .iter()
            .zip(&unit)
            .map(|((lo, hi), t)| lo + t * (hi - lo))
            .collect();
        x.iter().all(|v| *v == 0.0) || storage.value(&x) > 0.0
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditTolerances {
    /// Largest acceptable sector residual.
    pub residual: f64,
    /// Largest acceptable storage increase between consecutive samples.
    pub storage_step: f64,
    /// Largest acceptable cumulative increase, relative to the initial storage.
    pub storage_total_rel: f64,
}

impl Default for AuditTolerances {
    fn default() -> Self {
        Self {
            residual: 1e-7,
            storage_step: 1e-6,
            storage_total_rel: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryAudit {
    pub max_residual: f64,
    /// Largest single increase of the storage between samples (0 if none).
    pub max_storage_increment: f64,
    pub total_storage_increase: f64,
    /// `None` when the trajectory carries no storage values.
    pub storage_monotone: Option<bool>,
    pub diverged: bool,
    pub pass: bool,
}

pub fn audit_trajectory(traj: &Trajectory, bounds: &SectorBounds) -> TrajectoryAudit {
    audit_trajectory_with(traj, bounds, &AuditTolerances::default())
}

/// Residuals are recomputed from `(y, z1)` so the audit does not trust the
/// recorded residual column.
pub fn audit_trajectory_with(
    traj: &Trajectory,
    bounds: &SectorBounds,
    tols: &AuditTolerances,
) -> TrajectoryAudit {
    let max_residual = traj
        .samples()
        .iter()
        .map(|s| sector_residual(bounds, s.y, s.state.z1))
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);

    let (mut max_inc, mut total_inc) = (0.0f64, 0.0f64);
    let storage_monotone = if traj.has_storage() {
        let values: Vec<f64> = traj.samples().iter().filter_map(|s| s.storage).collect();
        for w in values.windows(2) {
            let inc = w[1] - w[0];
            if inc > 0.0 {
                max_inc = max_inc.max(inc);
                total_inc += inc;
            }
        }
        Some(max_inc <= tols.storage_step && total_inc <= tols.storage_total_rel * values[0])
    } else {
        None
    };
    let diverged = traj.diverged();
    TrajectoryAudit {
        max_residual,
        max_storage_increment: max_inc,
        total_storage_increase: total_inc,
        storage_monotone,
        diverged,
        pass: !diverged && max_residual <= tols.residual && storage_monotone != Some(false),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsConfig {
    /// Settling band as a fraction of the peak `|y|`.
    pub band: f64,
    /// Convergence threshold on `|xi(T)|`; `None` means `1e-2 |xi(0)|`.
    pub threshold: Option<f64>,
    /// State component used for overshoot and state zero crossings.
    pub designated_state: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            band: 0.02,
            threshold: None,
            designated_state: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceMetrics {
    /// Time after which `|y|` stays within `band * max|y|`, from the first sample.
    pub settling_time: f64,
    /// Excursion of the designated state beyond its final value, relative to
    /// the initial deviation from it.
    pub overshoot: f64,
    /// Sign changes of `y`.
    pub zero_crossings: usize,
    /// Sign changes of the designated state.
    pub state_zero_crossings: usize,
    pub final_norm: f64,
    pub converged: bool,
}

/// Relative dead-band under which a sample counts as zero for crossings.
pub const CROSSING_DEAD_BAND: f64 = 1e-9;

/// Strict sign changes between consecutive samples outside the dead-band
/// `CROSSING_DEAD_BAND * max|signal|`.
pub fn count_zero_crossings(signal: &[f64]) -> usize {
    let peak = signal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dead = CROSSING_DEAD_BAND * peak;
    let mut last_sign = 0.0;
    let mut count = 0;
    for v in signal.iter().filter(|v| v.abs() > dead) {
        let sign = v.signum();
        if last_sign != 0.0 && sign != last_sign {
            count += 1;
        }
        last_sign = sign;
    }
    count
}

pub fn performance_metrics(traj: &Trajectory, cfg: &MetricsConfig) -> Result<PerformanceMetrics> {
    let samples = traj.samples();
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return Err(PbcError::Config(
            "performance metrics need a non-empty trajectory".into(),
        ));
    };
    if cfg.designated_state >= first.state.len() {
        return Err(PbcError::Config(format!(
            "designated state {} out of range for state length {}",
            cfg.designated_state,
            first.state.len()
        )));
    }
    let t0 = first.t;
    let span = last.t - t0;
    let ys: Vec<f64> = samples.iter().map(|s| s.y).collect();
    let designated: Vec<f64> = samples
        .iter()
        .map(|s| s.state.to_vec()[cfg.designated_state])
        .collect();

    let peak = ys.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let limit = cfg.band * peak;
    let settled_from = match ys.iter().rposition(|y| y.abs() > limit) {
        None => Some(0),
        Some(i) if i + 1 < samples.len() => Some(i + 1),
        Some(_) => None,
    };
    let settling_time = settled_from.map_or(span, |i| samples[i].t - t0);

    let final_value = *designated.last().expect("non-empty");
    let initial_dev = designated[0] - final_value;
    let overshoot = if initial_dev == 0.0 {
        0.0
    } else {
        let dir = initial_dev.signum();
        designated
            .iter()
            .map(|s| (-dir * (s - final_value)).max(0.0))
            .fold(0.0, f64::max)
            / initial_dev.abs()
    };

    let final_norm = last.state.norm();
    let threshold = cfg.threshold.unwrap_or(1e-2 * first.state.norm());
    Ok(PerformanceMetrics {
        settling_time,
        overshoot,
        zero_crossings: count_zero_crossings(&ys),
        state_zero_crossings: count_zero_crossings(&designated),
        final_norm,
        converged: settled_from.is_some() && !traj.diverged() && final_norm <= threshold,
    })
}

/// Jacobian of the unprojected closed-loop field at `xi` by central differences.
pub fn linearize(
    plant: &dyn PlantModel,
    controller: &dyn ControllerModel,
    xi: &ClosedLoopState,
    delta: f64,
) -> Result<DMatrix<f64>> {
    let n = xi.x.len();
    let base = xi.to_vec();
    let dim = base.len();
    let mut jac = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[j] += delta;
        minus[j] -= delta;
        let fp = unprojected_field(plant, controller, &ClosedLoopState::from_slice(n, &plus)?)?;
        let fm = unprojected_field(plant, controller, &ClosedLoopState::from_slice(n, &minus)?)?;
        for i in 0..dim {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * delta);
        }
    }
    Ok(jac)
}

/// Largest real part of the eigenvalues of a square matrix.
pub fn spectral_abscissa(matrix: &DMatrix<f64>) -> f64 {
    matrix
        .complex_eigenvalues()
        .iter()
        .map(|c| c.re)
        .fold(f64::NEG_INFINITY, f64::max)
}
