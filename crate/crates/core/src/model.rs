//! Closed-loop domain types.
//!
//! The closed loop is the negative-feedback interconnection of a SISO plant
//!
//! ```text
//! x' = f_p(x, u),   y = G_p x
//! ```
//!
//! with a controller whose first state is its output,
//!
//! ```text
//! z1' = f1(z1, z2, v),   z2' = f2(z1, z2, v),   u_minus = z1
//! ```
//!
//! closed by `v = y` and `u = -u_minus`. The stacked state is `xi = (x, z1, z2)`.

use crate::error::{PbcError, Result};
use crate::sector::BoundaryMode;

/// Scalars of the quadratic supply rate `q u^2 + 2 s u y + r y^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipativityTriple {
    pub q: f64,
    pub s: f64,
    pub r: f64,
}

impl DissipativityTriple {
    pub const fn new(q: f64, s: f64, r: f64) -> Self {
        Self { q, s, r }
    }

    /// The symmetric supply matrix `[[q, s], [s, r]]`.
    pub fn supply_matrix(&self) -> [[f64; 2]; 2] {
        [[self.q, self.s], [self.s, self.r]]
    }

    pub fn supply(&self, u: f64, y: f64) -> f64 {
        self.q * u * u + 2.0 * self.s * u * y + self.r * y * y
    }
}

/// Slopes of the sector `(u - k1 v)(u - k2 v) <= 0`, with `k1 < k2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorBounds {
    k1: f64,
    k2: f64,
}

impl SectorBounds {
    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        if !k1.is_finite() || !k2.is_finite() {
            return Err(PbcError::Config(format!(
                "sector slopes must be finite, got k1={k1}, k2={k2}"
            )));
        }
        if k1 >= k2 {
            return Err(PbcError::Config(format!(
                "sector requires k1 < k2, got k1={k1}, k2={k2}"
            )));
        }
        Ok(Self { k1, k2 })
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }

    /// `k1 + k2`, the linear coefficient of the sector quadratic.
    pub fn sum(&self) -> f64 {
        self.k1 + self.k2
    }

    /// `k1 * k2`, the constant coefficient of the sector quadratic.
    pub fn product(&self) -> f64 {
        self.k1 * self.k2
    }
}

/// A sector together with the multiplier that certifies it against a supply rate.
///
/// Construction does not check anything; use [`crate::sector::verify_certificate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorCertificate {
    pub bounds: SectorBounds,
    pub lambda: f64,
    pub triple: DissipativityTriple,
}

impl SectorCertificate {
    /// `M - lambda * N` as `(a, b, d)` for the symmetric matrix `[[a, b], [b, d]]`.
    pub fn shifted_supply(&self) -> (f64, f64, f64) {
        let t = self.triple;
        let l = self.lambda;
        (
            t.q - l,
            t.s - l * 0.5 * self.bounds.sum(),
            t.r - l * self.bounds.product(),
        )
    }
}

/// Stacked closed-loop state `xi = (x, z1, z2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopState {
    pub x: Vec<f64>,
    pub z1: f64,
    pub z2: Vec<f64>,
}

impl ClosedLoopState {
    pub fn new(x: Vec<f64>, z1: f64, z2: Vec<f64>) -> Self {
        Self { x, z1, z2 }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            x: vec![0.0; n],
            z1: 0.0,
            z2: vec![0.0; m.saturating_sub(1)],
        }
    }

    /// Splits a flat `[x.., z1, z2..]` vector with plant dimension `n`.
    pub fn from_slice(n: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() <= n {
            return Err(PbcError::Config(format!(
                "flat state of length {} cannot hold {n} plant states and a controller",
                flat.len()
            )));
        }
        Ok(Self {
            x: flat[..n].to_vec(),
            z1: flat[n],
            z2: flat[n + 1..].to_vec(),
        })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.x);
        out.push(self.z1);
        out.extend_from_slice(&self.z2);
        out
    }

    /// `n + m`.
    pub fn len(&self) -> usize {
        self.x.len() + 1 + self.z2.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Controller dimension `m`.
    pub fn controller_dim(&self) -> usize {
        1 + self.z2.len()
    }

    pub fn norm(&self) -> f64 {
        let sq: f64 = self.x.iter().chain(&self.z2).map(|v| v * v).sum::<f64>() + self.z1 * self.z1;
        sq.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.z1.is_finite() && self.x.iter().chain(&self.z2).all(|v| v.is_finite())
    }
}

/// A continuously differentiable storage function `V_p` with its gradient.
pub trait Storage {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

/// SISO plant `x' = f_p(x, u)`, `y = G_p x`.
pub trait PlantModel: Send + Sync {
    fn dim(&self) -> usize;

    fn field(&self, x: &[f64], u: f64) -> Vec<f64>;

    fn output_row(&self) -> &[f64];

    fn output(&self, x: &[f64]) -> f64 {
        dot(self.output_row(), x)
    }

    /// The storage function, when the plant carries one.
    fn storage(&self) -> Option<&dyn Storage> {
        None
    }
}

/// SISO controller with state `(z1, z2)` and output `u_minus = z1`.
pub trait ControllerModel: Send + Sync {
    /// Controller dimension `m >= 1`.
    fn dim(&self) -> usize;

    fn f1(&self, z1: f64, z2: &[f64], v: f64) -> f64;

    fn f2(&self, z1: f64, z2: &[f64], v: f64) -> Vec<f64>;

    /// Memoryless controllers return their gain `k`; the loop then uses
    /// `u_minus = k v` directly and `z1` merely tracks `k v`.
    fn feedthrough_gain(&self) -> Option<f64> {
        None
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub(crate) fn check_dims(
    plant: &dyn PlantModel,
    controller: &dyn ControllerModel,
    xi: &ClosedLoopState,
) -> Result<()> {
    let n = plant.dim();
    if plant.output_row().len() != n {
        return Err(PbcError::Config(format!(
            "output row has length {}, plant dimension is {n}",
            plant.output_row().len()
        )));
    }
    if xi.x.len() != n {
        return Err(PbcError::Config(format!(
            "plant state has length {}, plant dimension is {n}",
            xi.x.len()
        )));
    }
    let m = controller.dim();
    if m == 0 || xi.controller_dim() != m {
        return Err(PbcError::Config(format!(
            "controller state has dimension {}, controller dimension is {m}",
            xi.controller_dim()
        )));
    }
    Ok(())
}

/// Closed-loop field before projection, stacked as `(x', z1', z2')`.
///
/// Applies `u = -z1` and `v = G_p x`. For feedthrough controllers the plant
/// input is `-k v` and `z1' = k v'`.
pub fn unprojected_field(
    plant: &dyn PlantModel,
    controller: &dyn ControllerModel,
    xi: &ClosedLoopState,
) -> Result<Vec<f64>> {
    check_dims(plant, controller, xi)?;
    Ok(unprojected_field_unchecked(plant, controller, xi))
}

pub(crate) fn unprojected_field_unchecked(
    plant: &dyn PlantModel,
    controller: &dyn ControllerModel,
    xi: &ClosedLoopState,
) -> Vec<f64> {
    let v = plant.output(&xi.x);
    let mut out = Vec::with_capacity(xi.len());
    match controller.feedthrough_gain() {
        Some(k) => {
            let fx = plant.field(&xi.x, -k * v);
            let v_dot = dot(plant.output_row(), &fx);
            out.extend_from_slice(&fx);
            out.push(k * v_dot);
        }
        None => {
            let fx = plant.field(&xi.x, -xi.z1);
            out.extend_from_slice(&fx);
            out.push(controller.f1(xi.z1, &xi.z2, v));
            out.extend(controller.f2(xi.z1, &xi.z2, v));
        }
    }
    out
}

/// Where a simulation stopped because the state stopped being finite or bounded.
#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub time: f64,
    pub state: Vec<f64>,
}

/// One recorded point of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: ClosedLoopState,
    /// Plant input `u = -z1`.
    pub u: f64,
    /// Plant output `y = G_p x`.
    pub y: f64,
    pub storage: Option<f64>,
    pub mode: BoundaryMode,
    pub residual: f64,
}

/// Recorded closed-loop run. Sample times are strictly increasing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    samples: Vec<Sample>,
    /// Integration step used to produce the run, if known.
    pub step: Option<f64>,
    pub projection_enabled: bool,
    pub divergence: Option<Divergence>,
    /// Largest `|dz1|` applied by post-step drift repair.
    pub max_repair: f64,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sample: Sample) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if !(sample.t > last.t) {
                return Err(PbcError::Config(format!(
                    "trajectory times must be strictly increasing ({} after {})",
                    sample.t, last.t
                )));
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn first(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn diverged(&self) -> bool {
        self.divergence.is_some()
    }

    pub fn has_storage(&self) -> bool {
        !self.samples.is_empty() && self.samples.iter().all(|s| s.storage.is_some())
    }
}
