//! Plant models: generic LTI, the mass-spring-damper benchmark and the
//! passivated TORA benchmark.

use nalgebra::DMatrix;

use crate::error::{PbcError, Result};
use crate::model::{PlantModel, Storage};

/// `x' = A x + B u`, `y = G_p x`, optional storage `V_p = x^T P x / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiPlant {
    n: usize,
    /// Row-major `n x n`.
    a: Vec<f64>,
    b: Vec<f64>,
    g: Vec<f64>,
    p: Option<Vec<f64>>,
}

impl LtiPlant {
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn p(&self) -> Option<&[f64]> {
        self.p.as_deref()
    }
}

/// Builds an LTI plant from row-major `A`, column `B`, row `G_p` and optional row-major `P`.
pub fn lti_model(a: &[f64], b: &[f64], g: &[f64], p: Option<&[f64]>) -> Result<LtiPlant> {
    let n = g.len();
    if n == 0 {
        return Err(PbcError::Config("plant needs at least one state".into()));
    }
    if a.len() != n * n {
        return Err(PbcError::Config(format!(
            "A has {} entries, expected {} for n={n}",
            a.len(),
            n * n
        )));
    }
    if b.len() != n {
        return Err(PbcError::Config(format!(
            "B has {} entries, expected {n}",
            b.len()
        )));
    }
    if let Some(p) = p {
        if p.len() != n * n {
            return Err(PbcError::Config(format!(
                "P has {} entries, expected {}",
                p.len(),
                n * n
            )));
        }
        let pm = DMatrix::from_row_slice(n, n, p);
        let asym = (&pm - pm.transpose()).amax();
        if asym > 1e-12 * pm.amax().max(1.0) {
            return Err(PbcError::Config("P must be symmetric".into()));
        }
        if pm.cholesky().is_none() {
            return Err(PbcError::Config("P must be positive definite".into()));
        }
    }
    Ok(LtiPlant {
        n,
        a: a.to_vec(),
        b: b.to_vec(),
        g: g.to_vec(),
        p: p.map(<[f64]>::to_vec),
    })
}

/// Mass-spring-damper with velocity output; storage is the total energy.
pub fn msd_model() -> LtiPlant {
    lti_model(
        &[0.0, 1.0, -10.0, -0.01],
        &[0.0, 1.0],
        &[0.0, 1.0],
        Some(&[10.0, 0.0, 0.0, 1.0]),
    )
    .expect("mass-spring-damper data is consistent")
}

impl PlantModel for LtiPlant {
    fn dim(&self) -> usize {
        self.n
    }

    fn field(&self, x: &[f64], u: f64) -> Vec<f64> {
        self.a
            .chunks_exact(self.n)
            .zip(&self.b)
            .map(|(row, bi)| row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + bi * u)
            .collect()
    }

    fn output_row(&self) -> &[f64] {
        &self.g
    }

    fn storage(&self) -> Option<&dyn Storage> {
        self.p.as_ref().map(|_| self as &dyn Storage)
    }
}

impl Storage for LtiPlant {
    fn value(&self, x: &[f64]) -> f64 {
        let px = self.gradient(x);
        0.5 * px.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let p = self.p.as_deref().unwrap_or(&[]);
        p.chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// TORA with the passivating inner loop; the remaining input is the auxiliary `w`.
///
/// State is `(theta, theta_dot, p, p_dot)` with `p` the normalized cart
/// position. With `zeta1 = p + eps sin(theta)` and
/// `zeta2 = p_dot + eps theta_dot cos(theta)`, the actuator torque is
/// `u = -h0 eps cos(theta) (-zeta1 + eps sin(theta)) - h1 theta + w` and
/// the storage
///
/// ```text
/// W = (h0 + 1)/2 [(zeta1 - eps sin(theta))^2 + zeta2^2] + h1/2 theta^2
///     + 1/2 theta_dot^2 (1 - eps^2 cos^2(theta))
/// ```
///
/// satisfies `W' = w theta_dot`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToraPlant {
    epsilon: f64,
    h0: f64,
    h1: f64,
}

const TORA_OUTPUT: [f64; 4] = [0.0, 1.0, 0.0, 0.0];

/// `h0 = h1 = 0` is accepted and leaves the bare mechanical system.
pub fn tora_model(epsilon: f64, h0: f64, h1: f64) -> Result<ToraPlant> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(PbcError::Config(format!(
            "TORA coupling must lie in (0, 1), got {epsilon}"
        )));
    }
    if !(h0 >= 0.0 && h1 >= 0.0) || !h0.is_finite() || !h1.is_finite() {
        return Err(PbcError::Config(format!(
            "TORA gains must be non-negative, got h0={h0}, h1={h1}"
        )));
    }
    Ok(ToraPlant { epsilon, h0, h1 })
}

impl ToraPlant {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn gains(&self) -> (f64, f64) {
        (self.h0, self.h1)
    }

    /// Torque produced by the passivating loop for auxiliary input `w`.
    pub fn actuator_torque(&self, s: &[f64], w: f64) -> f64 {
        let (theta, p) = (s[0], s[2]);
        let eps = self.epsilon;
        let zeta1 = p + eps * theta.sin();
        -self.h0 * eps * theta.cos() * (-zeta1 + eps * theta.sin()) - self.h1 * theta + w
    }

    /// Mass matrix `[[1, eps cos], [eps cos, 1]]` and right-hand side at `s` for torque `u`.
    pub fn mass_system(&self, s: &[f64], u: f64) -> ([[f64; 2]; 2], [f64; 2]) {
        let (theta, theta_dot, p) = (s[0], s[1], s[2]);
        let c = self.epsilon * theta.cos();
        (
            [[1.0, c], [c, 1.0]],
            [u, -p + self.epsilon * theta_dot * theta_dot * theta.sin()],
        )
    }

    pub fn mechanical_energy(&self, s: &[f64]) -> f64 {
        let (theta, td, p, pd) = (s[0], s[1], s[2], s[3]);
        0.5 * (td * td + pd * pd + 2.0 * self.epsilon * td * pd * theta.cos() + p * p)
    }
}

impl PlantModel for ToraPlant {
    fn dim(&self) -> usize {
        4
    }

    fn field(&self, s: &[f64], w: f64) -> Vec<f64> {
        let u = self.actuator_torque(s, w);
        let ([[_, c], _], [r1, r2]) = self.mass_system(s, u);
        let det = 1.0 - c * c;
        let theta_ddot = (r1 - c * r2) / det;
        let p_ddot = (r2 - c * r1) / det;
        vec![s[1], theta_ddot, s[3], p_ddot]
    }

    fn output_row(&self) -> &[f64] {
        &TORA_OUTPUT
    }

    fn storage(&self) -> Option<&dyn Storage> {
        Some(self)
    }
}

impl Storage for ToraPlant {
    fn value(&self, s: &[f64]) -> f64 {
        let (theta, td, p, pd) = (s[0], s[1], s[2], s[3]);
        let eps = self.epsilon;
        let (sin, cos) = theta.sin_cos();
        let zeta1 = p + eps * sin;
        let zeta2 = pd + eps * td * cos;
        let shifted = zeta1 - eps * sin;
        0.5 * (self.h0 + 1.0) * (shifted * shifted + zeta2 * zeta2)
            + 0.5 * self.h1 * theta * theta
            + 0.5 * td * td * (1.0 - eps * eps * cos * cos)
    }

    fn gradient(&self, s: &[f64]) -> Vec<f64> {
        let (theta, td, p, pd) = (s[0], s[1], s[2], s[3]);
        let eps = self.epsilon;
        let a = self.h0 + 1.0;
        let (sin, cos) = theta.sin_cos();
        let zeta2 = pd + eps * td * cos;
        vec![
            -a * zeta2 * eps * td * sin + self.h1 * theta + eps * eps * td * td * sin * cos,
            a * zeta2 * eps * cos + td * (1.0 - eps * eps * cos * cos),
            a * p,
            a * zeta2,
        ]
    }
}
