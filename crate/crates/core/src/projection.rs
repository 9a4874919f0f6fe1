//! Partial projection of the closed-loop field onto the tangent cone of the
//! lifted sector set.
//!
//! Corrections are restricted to controller coordinates and the sector
//! constraints only involve `(G_p x, z1)`, so the projection can only change
//! `z1'`. The feasible `z1'` values at a boundary point follow from the
//! first-order sign conditions on `s1 = z1 - k1 v` and `s2 = z1 - k2 v`:
//!
//! | mode          | v > 0               | v < 0               |
//! |---------------|---------------------|---------------------|
//! | `LowerActive` | `z1' >= k1 v'`      | `z1' <= k1 v'`      |
//! | `UpperActive` | `z1' <= k2 v'`      | `z1' >= k2 v'`      |
//! | `Apex`        | `z1'` between `k1 v'` and `k2 v'`         ||
//!
//! The set is a cone, so its tangent cone at the apex is the set itself.

use crate::error::{PbcError, Result};
use crate::model::{dot, ClosedLoopState, SectorBounds};
use crate::sector::{classify_mode, sector_residual, BoundaryMode};

/// Projected `z1'` given the unprojected rate `f1` and output velocity `v_dot`.
pub fn project_z1_rate(
    bounds: &SectorBounds,
    v: f64,
    z1: f64,
    f1: f64,
    v_dot: f64,
    tol: f64,
) -> Result<f64> {
    let (lo_rate, hi_rate) = (bounds.k1() * v_dot, bounds.k2() * v_dot);
    Ok(match classify_mode(bounds, v, z1, tol) {
        BoundaryMode::Interior => f1,
        BoundaryMode::LowerActive if v > 0.0 => f1.max(lo_rate),
        BoundaryMode::LowerActive => f1.min(lo_rate),
        BoundaryMode::UpperActive if v > 0.0 => f1.min(hi_rate),
        BoundaryMode::UpperActive => f1.max(hi_rate),
        BoundaryMode::Apex => f1.clamp(lo_rate.min(hi_rate), lo_rate.max(hi_rate)),
        BoundaryMode::Outside => {
            return Err(PbcError::StateLeftAdmissibleSet {
                v,
                z1,
                residual: sector_residual(bounds, v, z1),
            })
        }
    })
}

/// Applies the partial projection to a stacked field `f` at `xi`.
///
/// `v_dot` must be `G_p` applied to the plant part of `f`. Only the `z1`
/// component of the result can differ from `f`.
pub fn partial_project(
    bounds: &SectorBounds,
    xi: &ClosedLoopState,
    output_row: &[f64],
    f: &[f64],
    v_dot: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    let n = xi.x.len();
    check_field_len(xi, f)?;
    let v = dot(output_row, &xi.x);
    let rate = project_z1_rate(bounds, v, xi.z1, f[n], v_dot, tol)?;
    let mut out = f.to_vec();
    out[n] = rate;
    Ok(out)
}

fn check_field_len(xi: &ClosedLoopState, f: &[f64]) -> Result<()> {
    if f.len() != xi.len() {
        return Err(PbcError::Config(format!(
            "field has length {}, state has length {}",
            f.len(),
            xi.len()
        )));
    }
    Ok(())
}

/// Clamps `z1` into `[min(k1 v, k2 v), max(k1 v, k2 v)]`, leaving `x` and `z2` alone.
pub fn repair_state(
    bounds: &SectorBounds,
    xi: &ClosedLoopState,
    output_row: &[f64],
) -> ClosedLoopState {
    let v = dot(output_row, &xi.x);
    let mut out = xi.clone();
    out.z1 = repair_z1(bounds, v, xi.z1);
    out
}

pub(crate) fn repair_z1(bounds: &SectorBounds, v: f64, z1: f64) -> f64 {
    let (a, b) = (bounds.k1() * v, bounds.k2() * v);
    z1.clamp(a.min(b), a.max(b))
}

/// Number of points in the oracle's search grid.
pub const ORACLE_GRID_POINTS: usize = 1_000_000;

/// Half-width of the oracle search window around `f1`.
pub fn oracle_radius(bounds: &SectorBounds, f1: f64, v_dot: f64) -> f64 {
    10.0 * (1.0 + f1.abs() + (bounds.k1() * v_dot).abs() + (bounds.k2() * v_dot).abs())
}

/// Spacing of the oracle search grid.
pub fn oracle_grid_step(bounds: &SectorBounds, f1: f64, v_dot: f64) -> f64 {
    2.0 * oracle_radius(bounds, f1, v_dot) / (ORACLE_GRID_POINTS - 1) as f64
}

/// Brute-force reference for [`project_z1_rate`].
///
/// Searches the grid `f1 - R + i * step`, `i < ORACLE_GRID_POINTS`, for the
/// feasible point closest to `f1` (lower index on ties). Feasibility is the
/// first-order condition that the product `s1 * s2` does not increase through
/// the active constraints: `s1' s2 <= 0` on the lower ray, `s2' s1 <= 0` on the
/// upper ray and `s1' s2' <= 0` at the apex. Returns `None` outside the set or
/// when no grid point is feasible.
pub fn oracle_z1_rate(
    bounds: &SectorBounds,
    v: f64,
    z1: f64,
    f1: f64,
    v_dot: f64,
    tol: f64,
) -> Option<f64> {
    let s1 = z1 - bounds.k1() * v;
    let s2 = z1 - bounds.k2() * v;
    let mode = classify_mode(bounds, v, z1, tol);
    let feasible = |w: f64| {
        let r1 = w - bounds.k1() * v_dot;
        let r2 = w - bounds.k2() * v_dot;
        match mode {
            BoundaryMode::Interior => true,
            BoundaryMode::LowerActive => r1 * s2 <= 0.0,
            BoundaryMode::UpperActive => r2 * s1 <= 0.0,
            BoundaryMode::Apex => r1 * r2 <= 0.0,
            BoundaryMode::Outside => false,
        }
    };
    if mode == BoundaryMode::Outside {
        return None;
    }

    let radius = oracle_radius(bounds, f1, v_dot);
    let lo = f1 - radius;
    let step = oracle_grid_step(bounds, f1, v_dot);
    let point = |i: usize| lo + step * i as f64;
    let last = ORACLE_GRID_POINTS - 1;

    // Visit grid points in order of distance from f1.
    let centre = (((f1 - lo) / step).floor() as usize).min(last);
    let mut left = Some(centre);
    let mut right = (centre < last).then_some(centre + 1);
    loop {
        let pick = match (left, right) {
            (None, None) => return None,
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (Some(l), Some(r)) => {
                if (point(l) - f1).abs() <= (point(r) - f1).abs() {
                    l
                } else {
                    r
                }
            }
        };
        if feasible(point(pick)) {
            return Some(point(pick));
        }
        if Some(pick) == left {
            left = pick.checked_sub(1);
        } else {
            right = (pick < last).then_some(pick + 1);
        }
    }
}

/// Stacked-field form of [`oracle_z1_rate`].
pub fn project_oracle(
    bounds: &SectorBounds,
    xi: &ClosedLoopState,
    output_row: &[f64],
    f: &[f64],
    v_dot: f64,
    tol: f64,
) -> Option<Vec<f64>> {
    check_field_len(xi, f).ok()?;
    let n = xi.x.len();
    let v = dot(output_row, &xi.x);
    let rate = oracle_z1_rate(bounds, v, xi.z1, f[n], v_dot, tol)?;
    let mut out = f.to_vec();
    out[n] = rate;
    Some(out)
}
