//! Controller models: generic linear bases, the nonlinear TORA controller and
//! the memoryless gain baseline.

use crate::error::{PbcError, Result};
use crate::model::ControllerModel;

/// `z' = A_c z + B_c v`; row 0 drives `z1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearController {
    m: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl LinearController {
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    fn row(&self, i: usize, z1: f64, z2: &[f64], v: f64) -> f64 {
        let row = &self.a[i * self.m..(i + 1) * self.m];
        row[0] * z1 + row[1..].iter().zip(z2).map(|(a, z)| a * z).sum::<f64>() + self.b[i] * v
    }
}

/// Row-major `A_c` (`m x m`) and column `B_c` (`m`).
pub fn linear_controller(a: &[f64], b: &[f64]) -> Result<LinearController> {
    let m = b.len();
    if m == 0 {
        return Err(PbcError::Config(
            "controller needs at least one state".into(),
        ));
    }
    if a.len() != m * m {
        return Err(PbcError::Config(format!(
            "A_c has {} entries, expected {} for m={m}",
            a.len(),
            m * m
        )));
    }
    Ok(LinearController {
        m,
        a: a.to_vec(),
        b: b.to_vec(),
    })
}

/// Linear base of the mass-spring-damper PBC (unstable on its own).
pub fn msd_c1() -> LinearController {
    linear_controller(&[1.0, -10.0, 0.0, -1.0], &[0.0, 1.0]).expect("static data")
}

/// Linear base of the first TORA PBC.
pub fn tora_c1() -> LinearController {
    linear_controller(&[3.0, -2.0, 0.0, -3.0], &[0.0, 1.0]).expect("static data")
}

impl ControllerModel for LinearController {
    fn dim(&self) -> usize {
        self.m
    }

    fn f1(&self, z1: f64, z2: &[f64], v: f64) -> f64 {
        self.row(0, z1, z2, v)
    }

    fn f2(&self, z1: f64, z2: &[f64], v: f64) -> Vec<f64> {
        (1..self.m).map(|i| self.row(i, z1, z2, v)).collect()
    }
}

/// Nonlinear TORA controller:
/// `z1' = 3 z1 - 2 z2`, `z2' = -z2 - 2 z2^3 + (1 + z2^2) v^2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ToraC2;

pub fn tora_c2_controller() -> ToraC2 {
    ToraC2
}

impl ControllerModel for ToraC2 {
    fn dim(&self) -> usize {
        2
    }

    fn f1(&self, z1: f64, z2: &[f64], _v: f64) -> f64 {
        3.0 * z1 - 2.0 * z2[0]
    }

    fn f2(&self, _z1: f64, z2: &[f64], v: f64) -> Vec<f64> {
        let z = z2[0];
        vec![-z + (-2.0 * z * z * z + (1.0 + z * z) * v * v)]
    }
}

/// Memoryless baseline `u_minus = k v`. Bypasses projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticGain {
    k: f64,
}

pub fn static_gain_controller(k: f64) -> Result<StaticGain> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(PbcError::Config(format!(
            "static gain must be positive, got {k}"
        )));
    }
    Ok(StaticGain { k })
}

impl StaticGain {
    pub fn gain(&self) -> f64 {
        self.k
    }

    pub fn output(&self, v: f64) -> f64 {
        self.k * v
    }
}

impl ControllerModel for StaticGain {
    fn dim(&self) -> usize {
        1
    }

    // z1 is slaved to k v by the loop; these are never consulted.
    fn f1(&self, _z1: f64, _z2: &[f64], _v: f64) -> f64 {
        0.0
    }

    fn f2(&self, _z1: f64, _z2: &[f64], _v: f64) -> Vec<f64> {
        Vec::new()
    }

    fn feedthrough_gain(&self) -> Option<f64> {
        Some(self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn msd_c1_examples() {
        let c = msd_c1();
        assert_eq!(
            (c.f1(0.0, &[0.0], 0.0), c.f2(0.0, &[0.0], 0.0)),
            (0.0, vec![0.0])
        );
        assert_eq!(
            (c.f1(1.0, &[0.0], 0.0), c.f2(1.0, &[0.0], 0.0)),
            (1.0, vec![0.0])
        );
    }

    #[test]
    fn tora_c2_examples() {
        let c = tora_c2_controller();
        assert_eq!(
            (c.f1(0.0, &[0.0], 0.0), c.f2(0.0, &[0.0], 0.0)),
            (0.0, vec![0.0])
        );
        assert_eq!(
            (c.f1(0.0, &[1.0], 0.0), c.f2(0.0, &[1.0], 0.0)),
            (-2.0, vec![-3.0])
        );
        assert_eq!(
            (c.f1(0.0, &[0.0], 1.0), c.f2(0.0, &[0.0], 1.0)),
            (0.0, vec![1.0])
        );
    }

    #[test]
    fn static_gain_examples() {
        assert_eq!(static_gain_controller(4.8).unwrap().output(1.0), 4.8);
        assert_eq!(static_gain_controller(0.5).unwrap().output(2.0), 1.0);
        assert_eq!(static_gain_controller(3.0).unwrap().output(0.0), 0.0);
        assert!(static_gain_controller(0.0).is_err());
        assert!(static_gain_controller(-1.0).is_err());
    }

    #[test]
    fn linear_dimension_checks() {
        assert!(linear_controller(&[1.0, 2.0, 3.0], &[0.0, 1.0]).is_err());
        assert!(linear_controller(&[], &[]).is_err());
    }

    #[test]
    fn split_matches_full_product() {
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..1000 {
            let m = rng.gen_range(1..5);
            let a: Vec<f64> = (0..m * m).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let z: Vec<f64> = (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let v = rng.gen_range(-5.0..5.0);
            let c = linear_controller(&a, &b).unwrap();
            let mut stacked = vec![c.f1(z[0], &z[1..], v)];
            stacked.extend(c.f2(z[0], &z[1..], v));
            for i in 0..m {
                let full =
                    a[i * m] * z[0] + (1..m).map(|j| a[i * m + j] * z[j]).sum::<f64>() + b[i] * v;
                assert_eq!(stacked[i], full);
            }
        }
    }

    #[test]
    fn controllers_are_continuous_at_samples() {
        let mut rng = StdRng::seed_from_u64(13);
        let c2 = tora_c2_controller();
        for _ in 0..200 {
            let (z1, z2, v) = (
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let d = 1e-8;
            let base = c2.f2(z1, &[z2], v)[0];
            let nudged = c2.f2(z1 + d, &[z2 + d], v + d)[0];
            assert!((base - nudged).abs() < 1e-6);
            assert!((c2.f1(z1, &[z2], v) - c2.f1(z1 + d, &[z2 + d], v + d)).abs() < 1e-6);
        }
    }

    #[test]
    fn tora_c1_z2_stays_bounded_under_bounded_inputs() {
        // z2' = -3 z2 + v with |v| <= 1 keeps |z2| <= max(|z2(0)|, 1/3).
        let c = tora_c1();
        let h = 1e-3;
        let mut z2 = 2.0f64;
        for i in 0..20_000 {
            let v = (i as f64 * h * 1.7).sin();
            z2 += h * c.f2(0.5, &[z2], v)[0];
            assert!(z2.abs() <= 2.0 + 1e-12);
        }
        assert!(z2.abs() <= 1.0 / 3.0 + 1e-3);
    }
}
