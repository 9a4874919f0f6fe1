//! Sector geometry and sector design from a supply rate.
//!
//! A sector `S = {(v, u) : (u - k1 v)(u - k2 v) <= 0}` is certified against a
//! `(q, s, r)` supply rate by a multiplier `lambda >= 0` with
//!
//! ```text
//! [[q, s], [s, r]] - lambda * [[1, (k1 + k2)/2], [(k1 + k2)/2, k1 k2]]  negative definite
//! ```
//!
//! in which case `q u^2 + 2 s u y + r y^2 < 0` for every nonzero `(y, -u)` in `S`.
//! Everything here is 2x2, so definiteness is decided by leading minors.

use crate::error::{PbcError, Result};
use crate::model::{DissipativityTriple, SectorBounds, SectorCertificate};

/// Which sector constraints are active at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryMode {
    Interior,
    /// `u = k1 v` is active.
    LowerActive,
    /// `u = k2 v` is active.
    UpperActive,
    /// `v = 0`, `u = 0`: both constraints active.
    Apex,
    Outside,
}

impl BoundaryMode {
    pub fn letter(self) -> char {
        match self {
            BoundaryMode::Interior => 'I',
            BoundaryMode::LowerActive => 'L',
            BoundaryMode::UpperActive => 'U',
            BoundaryMode::Apex => 'A',
            BoundaryMode::Outside => 'O',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        Some(match c {
            'I' => BoundaryMode::Interior,
            'L' => BoundaryMode::LowerActive,
            'U' => BoundaryMode::UpperActive,
            'A' => BoundaryMode::Apex,
            'O' => BoundaryMode::Outside,
            _ => return None,
        })
    }

    pub fn on_boundary(self) -> bool {
        matches!(
            self,
            BoundaryMode::LowerActive | BoundaryMode::UpperActive | BoundaryMode::Apex
        )
    }
}

/// `(u_minus - k1 v)(u_minus - k2 v)`; non-positive exactly on the sector.
pub fn sector_residual(bounds: &SectorBounds, v: f64, u_minus: f64) -> f64 {
    (u_minus - bounds.k1() * v) * (u_minus - bounds.k2() * v)
}

/// Classifies `(v, u_minus)` with a tolerance scaled by `max(1, |v|, |u_minus|)`.
///
/// A point within tolerance of both rays is reported as `Apex`.
pub fn classify_mode(bounds: &SectorBounds, v: f64, u_minus: f64, tol: f64) -> BoundaryMode {
    if v.abs() <= tol && u_minus.abs() <= tol {
        return BoundaryMode::Apex;
    }
    let scale = 1f64.max(v.abs()).max(u_minus.abs());
    let residual = sector_residual(bounds, v, u_minus);
    let near_lower = (u_minus - bounds.k1() * v).abs() <= tol * scale && residual <= tol;
    let near_upper = (u_minus - bounds.k2() * v).abs() <= tol * scale && residual <= tol;
    match (near_lower, near_upper) {
        (true, true) => BoundaryMode::Apex,
        (true, false) => BoundaryMode::LowerActive,
        (false, true) => BoundaryMode::UpperActive,
        (false, false) if residual > tol * scale * scale => BoundaryMode::Outside,
        (false, false) => BoundaryMode::Interior,
    }
}

/// Negative definiteness of `[[a, b], [b, d]]` by leading principal minors.
pub fn is_negative_definite_2x2(a: f64, b: f64, d: f64) -> bool {
    a < 0.0 && a * d - b * b > 0.0
}

pub fn verify_certificate(cert: &SectorCertificate) -> bool {
    if !(cert.lambda >= 0.0) || !cert.lambda.is_finite() {
        return false;
    }
    let (a, b, d) = cert.shifted_supply();
    is_negative_definite_2x2(a, b, d)
}

/// The analytic design cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignCase {
    /// `M` itself is negative definite; every sector works with `lambda = 0`.
    NegativeDefinite,
    /// `q = 0`, `r = 0`, `s > 0`.
    Passive,
    /// `q = 0`, `r < 0`, `s > 0`.
    OutputStrictlyPassive,
    /// `q > 0`, `q r - s^2 < 0`.
    General,
}

/// Open interval of admissible sector slopes for a supply rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleInterval {
    pub case: DesignCase,
    /// May be `-inf`.
    pub lower: f64,
    /// `None` means unbounded above.
    pub upper: Option<f64>,
}

impl AdmissibleInterval {
    pub fn contains(&self, bounds: &SectorBounds) -> bool {
        bounds.k1() > self.lower && self.upper.is_none_or(|hi| bounds.k2() < hi)
    }
}

pub fn admissible_interval(triple: &DissipativityTriple) -> Result<AdmissibleInterval> {
    let DissipativityTriple { q, s, r } = *triple;
    let not_designable = || PbcError::NotSectorDesignable { q, s, r };
    if ![q, s, r].iter().all(|v| v.is_finite()) {
        return Err(not_designable());
    }
    let det = q * r - s * s;
    if is_negative_definite_2x2(q, s, r) {
        return Ok(AdmissibleInterval {
            case: DesignCase::NegativeDefinite,
            lower: f64::NEG_INFINITY,
            upper: None,
        });
    }
    if q == 0.0 && s > 0.0 {
        if r == 0.0 {
            return Ok(AdmissibleInterval {
                case: DesignCase::Passive,
                lower: 0.0,
                upper: None,
            });
        }
        if r < 0.0 {
            return Ok(AdmissibleInterval {
                case: DesignCase::OutputStrictlyPassive,
                lower: r / (2.0 * s),
                upper: None,
            });
        }
    }
    if q > 0.0 && det < 0.0 {
        let root = (s * s - q * r).sqrt();
        return Ok(AdmissibleInterval {
            case: DesignCase::General,
            lower: (s - root) / q,
            upper: Some((s + root) / q),
        });
    }
    Err(not_designable())
}

/// Places a sector inside the admissible interval and finds its multiplier.
///
/// Bounded intervals `(lo, hi)` get `k1, k2` at relative positions `margin`
/// and `1 - margin` (so `margin` must be below 0.5). Unbounded intervals start
/// from `base = max(lower, 0)`: `k1 = base + margin * max(1, |base|)` and
/// `k2 = k1 (1 + 1/margin)`.
pub fn design_sector(triple: &DissipativityTriple, margin: f64) -> Result<SectorCertificate> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(PbcError::Config(format!(
            "margin must lie in (0, 1), got {margin}"
        )));
    }
    let interval = admissible_interval(triple)?;
    let (k1, k2) = match interval.upper {
        Some(hi) => {
            if margin >= 0.5 {
                return Err(PbcError::Config(format!(
                    "margin {margin} leaves no room inside the bounded interval ({}, {hi})",
                    interval.lower
                )));
            }
            let width = hi - interval.lower;
            (
                interval.lower + margin * width,
                interval.lower + (1.0 - margin) * width,
            )
        }
        None => {
            let base = interval.lower.max(0.0);
            let k1 = base + margin * base.abs().max(1.0);
            (k1, k1 * (1.0 + 1.0 / margin))
        }
    };
    let bounds = SectorBounds::new(k1, k2)
        .map_err(|_| PbcError::search_failed(None, "admissible interval collapsed numerically"))?;
    let lambda = find_multiplier(triple, &bounds)
        .ok_or_else(|| PbcError::search_failed(Some(bounds), "no lambda >= 0 found"))?;
    Ok(SectorCertificate {
        bounds,
        lambda,
        triple: *triple,
    })
}

/// Searches `lambda >= 0` certifying `bounds` against `triple`.
///
/// `det(M - lambda N)` is a concave quadratic in `lambda`; feasibility is the
/// part of its positive range above `max(q, 0)`. The midpoint of that range is
/// tried first, then an evenly spaced scan of it.
pub fn find_multiplier(triple: &DissipativityTriple, bounds: &SectorBounds) -> Option<f64> {
    let check = |lambda: f64| {
        verify_certificate(&SectorCertificate {
            bounds: *bounds,
            lambda,
            triple: *triple,
        })
    };
    if check(0.0) {
        return Some(0.0);
    }
    let (q, s, r) = (triple.q, triple.s, triple.r);
    let (c, d) = (bounds.sum(), bounds.product());
    let a2 = d - 0.25 * c * c;
    let a1 = s * c - q * d - r;
    let a0 = q * r - s * s;
    let disc = a1 * a1 - 4.0 * a2 * a0;
    if !(a2 < 0.0) || !(disc > 0.0) {
        return None;
    }
    let sq = disc.sqrt();
    let (r1, r2) = ((-a1 + sq) / (2.0 * a2), (-a1 - sq) / (2.0 * a2));
    let lo = r1.min(r2).max(q).max(0.0);
    let hi = r1.max(r2);
    if !(hi > lo) {
        return None;
    }
    let mid = 0.5 * (lo + hi);
    if check(mid) {
        return Some(mid);
    }
    (1..200)
        .map(|i| lo + (hi - lo) * i as f64 / 200.0)
        .find(|&l| check(l))
}

/// Grid for [`synthesize_certificate_search`] over `(lambda_bar, c, d)`,
/// `lambda_bar = 1/lambda`, `c = k1 + k2`, `d = k1 k2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchGrid {
    pub lambda_bar: (f64, f64, usize),
    pub c: (f64, f64, usize),
    pub d: (f64, f64, usize),
    /// Points per axis in the single refinement pass.
    pub refine_points: usize,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            lambda_bar: (1e-3, 1e3, 61),
            c: (-20.0, 20.0, 201),
            d: (-100.0, 100.0, 201),
            refine_points: 21,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n)
        .into_iter()
        .map(f64::exp)
        .collect()
}

/// Robustness of a grid cell, `None` if infeasible.
///
/// Feasible means `lambda_bar M - N` negative definite and distinct sector
/// roots (`c^2 - 4d > 0`); the score is the smaller of `-lambda_max` and
/// `c^2 - 4d`.
fn cell_score(triple: &DissipativityTriple, lambda_bar: f64, c: f64, d: f64) -> Option<f64> {
    let a = lambda_bar * triple.q - 1.0;
    let b = lambda_bar * triple.s - 0.5 * c;
    let e = lambda_bar * triple.r - d;
    let spread = c * c - 4.0 * d;
    if !is_negative_definite_2x2(a, b, e) || !(spread > 0.0) {
        return None;
    }
    let half = 0.5 * (a - e);
    let lambda_max = 0.5 * (a + e) + (half * half + b * b).sqrt();
    Some((-lambda_max).min(spread))
}

fn best_cell(
    triple: &DissipativityTriple,
    lambdas: &[f64],
    cs: &[f64],
    ds: &[f64],
) -> Option<(usize, usize, usize, f64)> {
    let mut best: Option<(usize, usize, usize, f64)> = None;
    for (i, &lb) in lambdas.iter().enumerate() {
        for (j, &c) in cs.iter().enumerate() {
            for (k, &d) in ds.iter().enumerate() {
                if let Some(score) = cell_score(triple, lb, c, d) {
                    // Strict improvement keeps the lexicographically smallest cell on ties.
                    if best.is_none_or(|(.., s)| score > s) {
                        best = Some((i, j, k, score));
                    }
                }
            }
        }
    }
    best
}

fn certificate_from_cell(
    triple: &DissipativityTriple,
    lambda_bar: f64,
    c: f64,
    d: f64,
) -> Option<SectorCertificate> {
    let root = (c * c - 4.0 * d).sqrt();
    let bounds = SectorBounds::new(0.5 * (c - root), 0.5 * (c + root)).ok()?;
    let cert = SectorCertificate {
        bounds,
        lambda: 1.0 / lambda_bar,
        triple: *triple,
    };
    verify_certificate(&cert).then_some(cert)
}

/// Grid search over the linearized matrix inequality with the default grid.
pub fn synthesize_certificate_search(triple: &DissipativityTriple) -> Result<SectorCertificate> {
    synthesize_with_grid(triple, &SearchGrid::default())
}

pub fn synthesize_with_grid(
    triple: &DissipativityTriple,
    grid: &SearchGrid,
) -> Result<SectorCertificate> {
    let lambdas = logspace(grid.lambda_bar.0, grid.lambda_bar.1, grid.lambda_bar.2);
    let cs = linspace(grid.c.0, grid.c.1, grid.c.2);
    let ds = linspace(grid.d.0, grid.d.1, grid.d.2);

    let Some((i, j, k, _)) = best_cell(triple, &lambdas, &cs, &ds) else {
        return Err(PbcError::search_failed(
            None,
            "no feasible cell on the search grid",
        ));
    };
    let coarse = certificate_from_cell(triple, lambdas[i], cs[j], ds[k]);

    let around = |axis: &[f64], idx: usize| {
        let lo = axis[idx.saturating_sub(1)];
        let hi = axis[(idx + 1).min(axis.len() - 1)];
        (lo, hi)
    };
    let (l_lo, l_hi) = around(&lambdas, i);
    let (c_lo, c_hi) = around(&cs, j);
    let (d_lo, d_hi) = around(&ds, k);
    let fine_l = logspace(l_lo, l_hi, grid.refine_points);
    let fine_c = linspace(c_lo, c_hi, grid.refine_points);
    let fine_d = linspace(d_lo, d_hi, grid.refine_points);
    let refined = best_cell(triple, &fine_l, &fine_c, &fine_d)
        .and_then(|(a, b, c, _)| certificate_from_cell(triple, fine_l[a], fine_c[b], fine_d[c]));

    refined
        .or(coarse)
        .ok_or_else(|| PbcError::search_failed(None, "best grid cell failed verification"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix2;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn b(k1: f64, k2: f64) -> SectorBounds {
        SectorBounds::new(k1, k2).unwrap()
    }

    fn cert(q: f64, s: f64, r: f64, k1: f64, k2: f64, lambda: f64) -> SectorCertificate {
        SectorCertificate {
            bounds: b(k1, k2),
            lambda,
            triple: DissipativityTriple::new(q, s, r),
        }
    }

    #[test]
    fn residual_examples() {
        let s = b(3.5, 6.0);
        assert_eq!(sector_residual(&s, 1.0, 4.0), -1.0);
        assert!((sector_residual(&s, 0.0, 0.1) - 0.01).abs() < 1e-17);
        assert_eq!(sector_residual(&b(-2.0, 7.0), 0.0, 0.0), 0.0);
    }

    #[test]
    fn classify_examples() {
        let s = b(3.5, 6.0);
        assert_eq!(classify_mode(&s, 1.0, 3.5, 1e-9), BoundaryMode::LowerActive);
        assert_eq!(classify_mode(&s, 1.0, 5.0, 1e-9), BoundaryMode::Interior);
        assert_eq!(classify_mode(&s, 0.0, 0.0, 1e-9), BoundaryMode::Apex);
        assert_eq!(classify_mode(&s, 1.0, 6.0, 1e-9), BoundaryMode::UpperActive);
        assert_eq!(
            classify_mode(&s, -1.0, -3.5, 1e-9),
            BoundaryMode::LowerActive
        );
        assert_eq!(classify_mode(&s, 1.0, 6.2, 1e-9), BoundaryMode::Outside);
        assert_eq!(classify_mode(&s, 0.0, 0.1, 1e-9), BoundaryMode::Outside);
    }

    #[test]
    fn mode_letters_round_trip() {
        for m in [
            BoundaryMode::Interior,
            BoundaryMode::LowerActive,
            BoundaryMode::UpperActive,
            BoundaryMode::Apex,
            BoundaryMode::Outside,
        ] {
            assert_eq!(BoundaryMode::from_letter(m.letter()), Some(m));
        }
        assert_eq!(BoundaryMode::from_letter('x'), None);
    }

    #[test]
    fn verify_examples() {
        assert!(verify_certificate(&cert(0.0, 0.5, 0.0, 1.0, 2.0, 0.5)));
        assert!(verify_certificate(&cert(0.0, 0.5, -0.01, 3.5, 6.0, 1.0)));
        assert!(!verify_certificate(&cert(0.0, 0.5, 0.0, -1.0, 2.0, 0.3)));
        assert!(!verify_certificate(&cert(0.0, 0.5, 0.0, 1.0, 2.0, -0.5)));
    }

    #[test]
    fn verify_determinant_values() {
        let (a, bb, d) = cert(0.0, 0.5, 0.0, 1.0, 2.0, 0.5).shifted_supply();
        assert!((a * d - bb * bb - 0.4375).abs() < 1e-15);
        let (a, bb, d) = cert(0.0, 0.5, -0.01, 3.5, 6.0, 1.0).shifted_supply();
        assert!((a * d - bb * bb - 2.9475).abs() < 1e-12);
    }

    #[test]
    fn admissible_intervals() {
        let i = admissible_interval(&DissipativityTriple::new(0.0, 0.5, -0.01)).unwrap();
        assert_eq!(i.case, DesignCase::OutputStrictlyPassive);
        assert!((i.lower + 0.01).abs() < 1e-15);
        let i = admissible_interval(&DissipativityTriple::new(1.0, 0.0, -4.0)).unwrap();
        assert_eq!(i.case, DesignCase::General);
        assert_eq!((i.lower, i.upper), (-2.0, Some(2.0)));
        assert!(matches!(
            admissible_interval(&DissipativityTriple::new(1.0, 1.0, 1.0)),
            Err(PbcError::NotSectorDesignable { .. })
        ));
        assert!(admissible_interval(&DissipativityTriple::new(0.0, -0.5, 0.0)).is_err());
    }

    #[test]
    fn design_passive() {
        let c = design_sector(&DissipativityTriple::new(0.0, 0.5, 0.0), 0.25).unwrap();
        assert!(c.bounds.k1() > 0.0 && c.bounds.k1() < c.bounds.k2());
        assert!(verify_certificate(&c));
    }

    #[test]
    fn design_general_case() {
        let c = design_sector(&DissipativityTriple::new(1.0, 0.0, -4.0), 0.25).unwrap();
        assert!(c.bounds.k1() > -2.0 && c.bounds.k2() < 2.0);
        assert!(verify_certificate(&c));
        // the hand-checked candidate from the same family
        assert!(verify_certificate(&cert(1.0, 0.0, -4.0, -1.0, 1.0, 2.0)));
    }

    #[test]
    fn design_negative_definite_uses_zero_multiplier() {
        let c = design_sector(&DissipativityTriple::new(-1.0, 0.0, -1.0), 0.25).unwrap();
        assert_eq!(c.lambda, 0.0);
        assert!(verify_certificate(&c));
    }

    #[test]
    fn design_rejects_bad_inputs() {
        let t = DissipativityTriple::new(0.0, 0.5, 0.0);
        assert!(matches!(design_sector(&t, 0.0), Err(PbcError::Config(_))));
        assert!(matches!(design_sector(&t, 1.0), Err(PbcError::Config(_))));
        let g = DissipativityTriple::new(1.0, 0.0, -4.0);
        assert!(matches!(design_sector(&g, 0.6), Err(PbcError::Config(_))));
        assert!(matches!(
            design_sector(&DissipativityTriple::new(1.0, 1.0, 1.0), 0.25),
            Err(PbcError::NotSectorDesignable { .. })
        ));
    }

    #[test]
    fn benchmark_sectors_certify() {
        let msd = DissipativityTriple::new(0.0, 0.5, -0.01);
        assert!(find_multiplier(&msd, &b(3.5, 6.0)).is_some());
        let tora = DissipativityTriple::new(0.0, 0.5, 0.0);
        let lambda = find_multiplier(&tora, &b(0.45, 0.6)).unwrap();
        assert!(verify_certificate(&SectorCertificate {
            bounds: b(0.45, 0.6),
            lambda,
            triple: tora
        }));
    }

    #[test]
    fn search_passive() {
        let c = synthesize_certificate_search(&DissipativityTriple::new(0.0, 0.5, 0.0)).unwrap();
        assert!(verify_certificate(&c));
        assert!(c.bounds.k1() > 0.0);
    }

    #[test]
    fn search_output_strictly_passive() {
        let c = synthesize_certificate_search(&DissipativityTriple::new(0.0, 0.5, -0.01)).unwrap();
        assert!(verify_certificate(&c));
        assert!(c.bounds.k1() > -0.01);
    }

    #[test]
    fn search_fails_for_positive_semidefinite_supply() {
        assert!(matches!(
            synthesize_certificate_search(&DissipativityTriple::new(1.0, 1.0, 1.0)),
            Err(PbcError::CertificateSearchFailed(_))
        ));
    }

    fn random_triple(rng: &mut StdRng, case: DesignCase) -> DissipativityTriple {
        match case {
            DesignCase::Passive => DissipativityTriple::new(0.0, rng.gen_range(0.05..5.0), 0.0),
            DesignCase::OutputStrictlyPassive => {
                DissipativityTriple::new(0.0, rng.gen_range(0.05..5.0), -rng.gen_range(0.001..5.0))
            }
            DesignCase::General => {
                let q = rng.gen_range(0.05..5.0);
                let s = rng.gen_range(-5.0..5.0);
                // q r - s^2 < 0 with some room
                let r = s * s / q - rng.gen_range(0.01..5.0);
                DissipativityTriple::new(q, s, r)
            }
            DesignCase::NegativeDefinite => {
                let q: f64 = -rng.gen_range(0.05..5.0);
                let r = -rng.gen_range(0.05..5.0);
                let smax = (q * r).sqrt() * 0.99;
                DissipativityTriple::new(q, rng.gen_range(-smax..smax), r)
            }
        }
    }

    fn assert_supply_negative(cert: &SectorCertificate, rng: &mut StdRng, n: usize) {
        let (k1, k2) = (cert.bounds.k1(), cert.bounds.k2());
        for _ in 0..n {
            let v = rng.gen_range(1e-3..1e3) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let u_minus = v * (k1 + rng.gen_range(0.0..=1.0) * (k2 - k1));
            assert!(sector_residual(&cert.bounds, v, u_minus) <= 1e-9 * v * v);
            let supply = cert.triple.supply(-u_minus, v);
            assert!(supply < 0.0, "{cert:?} v={v} u-={u_minus} supply={supply}");
        }
    }

    #[test]
    fn designed_certificates_pass_and_make_supply_negative() {
        let mut rng = StdRng::seed_from_u64(7);
        for case in [
            DesignCase::Passive,
            DesignCase::OutputStrictlyPassive,
            DesignCase::General,
            DesignCase::NegativeDefinite,
        ] {
            for _ in 0..100 {
                let t = random_triple(&mut rng, case);
                let c = design_sector(&t, 0.25).unwrap_or_else(|e| panic!("{t:?}: {e}"));
                assert_eq!(admissible_interval(&t).unwrap().case, case);
                assert!(verify_certificate(&c), "{c:?}");
                assert!(admissible_interval(&t).unwrap().contains(&c.bounds));
                assert_supply_negative(&c, &mut rng, 200);
            }
        }
    }

    #[test]
    fn searched_certificates_always_verify() {
        let mut rng = StdRng::seed_from_u64(11);
        let mut found = 0;
        for case in [
            DesignCase::Passive,
            DesignCase::OutputStrictlyPassive,
            DesignCase::General,
        ] {
            for _ in 0..100 {
                let t = random_triple(&mut rng, case);
                if let Ok(c) = synthesize_certificate_search(&t) {
                    found += 1;
                    assert!(verify_certificate(&c), "{c:?}");
                    let interval = admissible_interval(&t).unwrap();
                    assert!(c.bounds.k1() >= interval.lower - 1e-9);
                    if let Some(hi) = interval.upper {
                        assert!(c.bounds.k2() <= hi + 1e-9);
                    }
                    assert_supply_negative(&c, &mut rng, 100);
                }
            }
        }
        // passive and output-strictly passive triples are always covered by the grid
        assert!(found >= 200, "only {found} searches succeeded");
    }

    #[test]
    fn general_case_endpoints_are_quadratic_roots() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..1000 {
            let t = random_triple(&mut rng, DesignCase::General);
            let i = admissible_interval(&t).unwrap();
            for k in [i.lower, i.upper.unwrap()] {
                let value = t.q * k * k - 2.0 * t.s * k + t.r;
                let scale = 1f64
                    .max(t.q * k * k)
                    .max((2.0 * t.s * k).abs())
                    .max(t.r.abs());
                assert!(value.abs() <= 1e-9 * scale, "{t:?} k={k} value={value}");
            }
        }
    }

    #[test]
    fn minor_test_matches_eigenvalues() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..1000 {
            let (a, bb, d) = (
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let eig = Matrix2::new(a, bb, bb, d).symmetric_eigenvalues();
            let by_eigen = eig[0] < 0.0 && eig[1] < 0.0;
            assert_eq!(is_negative_definite_2x2(a, bb, d), by_eigen, "{a} {bb} {d}");
        }
    }

    proptest! {
        #[test]
        fn residual_is_odd_symmetric(
            k1 in -10.0f64..10.0,
            gap in 0.01f64..10.0,
            v in -100.0f64..100.0,
            u in -100.0f64..100.0,
        ) {
            let s = b(k1, k1 + gap);
            prop_assert_eq!(sector_residual(&s, v, u), sector_residual(&s, -v, -u));
        }

        #[test]
        fn classification_is_a_single_mode(
            k1 in -5.0f64..5.0,
            gap in 0.01f64..5.0,
            v in -10.0f64..10.0,
            t in -0.5f64..1.5,
        ) {
            let s = b(k1, k1 + gap);
            let u = v * (k1 + t * gap);
            let mode = classify_mode(&s, v, u, 1e-9);
            let inside = sector_residual(&s, v, u) <= 0.0;
            if mode == BoundaryMode::Outside {
                prop_assert!(!inside);
            }
            if inside {
                prop_assert_ne!(mode, BoundaryMode::Outside);
            }
        }
    }
}
