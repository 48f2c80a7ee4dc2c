//! Obstructions to quasiconformal equivalence near infinity.
//!
//! Two maps with different numbers of fixed rays, or whose matched fixed rays
//! carry disk automorphisms of different squared trace, are not
//! quasiconformally conjugate near infinity. For a common direction
//! `θ ∈ [0, π/2)` distinct stretches are never equivalent. The converse is
//! not known, so the report never claims equivalence.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fixed_rays::{self, RegimeReport, Stability};
use crate::params::MapParams;

/// Default relative tolerance for comparing squared traces.
pub const TRACE_REL_TOL: f64 = 1e-8;
/// A simple ray with `|H̃′ − 1|` below this is too close to the bifurcation
/// to trust the regime.
pub const AMBIGUOUS_BAND: f64 = 1e-6;
const SAME_DIRECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason")]
pub enum ObstructionReason {
    RayCountMismatch { left: usize, right: usize },
    /// Positions in the canonical order whose squared traces differ.
    TraceMismatch { indices: Vec<usize> },
    CorollaryFixedTheta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason")]
pub enum Verdict {
    Obstructed(ObstructionReason),
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayTrace {
    pub angle: f64,
    pub trace_sq: f64,
    pub stability: Stability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub verdict: Verdict,
    /// Every obstruction found; the verdict carries the first.
    pub reasons: Vec<ObstructionReason>,
    /// Rays in canonical order: decreasing angle, after mirroring `θ < 0`.
    pub traces_left: Vec<RayTrace>,
    pub traces_right: Vec<RayTrace>,
    pub k_theta_left: Option<f64>,
    pub k_theta_right: Option<f64>,
    pub diagnostics: Vec<String>,
}

fn canonical_traces(r: &RegimeReport) -> Vec<RayTrace> {
    r.canonical_order()
        .iter()
        .map(|ray| RayTrace {
            angle: ray.angle.value(),
            trace_sq: ray.trace_sq,
            stability: ray.stability,
        })
        .collect()
}

fn ambiguous_rays(r: &RegimeReport) -> Vec<f64> {
    r.rays
        .iter()
        .filter(|ray| {
            ray.multiplicity == 1
                && ray.stability != Stability::Neutral
                && (ray.multiplier - 1.0).abs() < AMBIGUOUS_BAND
        })
        .map(|ray| ray.angle.value())
        .collect()
}

fn differ(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() > tol * a.abs().max(b.abs())
}

/// Compare two parameter pairs; `tol` is relative.
pub fn obstruction_report(p1: &MapParams, p2: &MapParams, tol: f64) -> Result<ObstructionReport> {
    let r1 = fixed_rays::fixed_rays(p1)?;
    let r2 = fixed_rays::fixed_rays(p2)?;
    let traces_left = canonical_traces(&r1);
    let traces_right = canonical_traces(&r2);
    let mut reasons = Vec::new();
    let mut diagnostics = Vec::new();

    let mut ambiguous = false;
    for (side, r) in [("left", &r1), ("right", &r2)] {
        for phi in ambiguous_rays(r) {
            ambiguous = true;
            diagnostics.push(format!(
                "{side}: ray at {phi} is within {AMBIGUOUS_BAND:e} of neutral; regime-based tests skipped"
            ));
        }
    }

    if !ambiguous {
        if traces_left.len() != traces_right.len() {
            reasons.push(ObstructionReason::RayCountMismatch {
                left: traces_left.len(),
                right: traces_right.len(),
            });
        } else {
            let indices: Vec<usize> = traces_left
                .iter()
                .zip(&traces_right)
                .enumerate()
                .filter(|(_, (a, b))| differ(a.trace_sq, b.trace_sq, tol))
                .map(|(i, _)| i)
                .collect();
            if !indices.is_empty() {
                reasons.push(ObstructionReason::TraceMismatch { indices });
            }
        }
    }

    let theta = p1.theta();
    let same_direction = (theta - p2.theta()).abs() <= SAME_DIRECTION_TOL;
    if same_direction && (0.0..FRAC_PI_2).contains(&theta) && differ(p1.k(), p2.k(), tol) {
        reasons.push(ObstructionReason::CorollaryFixedTheta);
    }

    let verdict = reasons
        .first()
        .cloned()
        .map_or(Verdict::Inconclusive, Verdict::Obstructed);
    Ok(ObstructionReport {
        verdict,
        reasons,
        traces_left,
        traces_right,
        k_theta_left: r1.k_theta,
        k_theta_right: r2.k_theta,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(k: f64, t: f64) -> MapParams {
        MapParams::new(k, t).unwrap()
    }

    fn report(a: (f64, f64), b: (f64, f64)) -> ObstructionReport {
        obstruction_report(&params(a.0, a.1), &params(b.0, b.1), TRACE_REL_TOL).unwrap()
    }

    fn is_obstructed(r: &ObstructionReport) -> bool {
        matches!(r.verdict, Verdict::Obstructed(_))
    }

    #[test]
    fn ray_count_mismatch() {
        let r = report((1.5, 0.0), (4.0, 0.0));
        assert_eq!(
            r.verdict,
            Verdict::Obstructed(ObstructionReason::RayCountMismatch { left: 1, right: 3 })
        );
        assert!(r.reasons.contains(&ObstructionReason::CorollaryFixedTheta));
    }

    #[test]
    fn trace_mismatch_at_zero_ray() {
        let r = report((2.5, 0.0), (3.0, 0.0));
        assert_eq!(r.traces_left.len(), 3);
        let Verdict::Obstructed(ObstructionReason::TraceMismatch { indices }) = &r.verdict else {
            panic!("{:?}", r.verdict);
        };
        assert!(indices.contains(&1));
        assert!((r.traces_left[1].trace_sq - 4.9).abs() < 1e-12);
        assert!((r.traces_right[1].trace_sq - 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn self_and_mirror_are_inconclusive() {
        for &(k, t) in &[(4.0, 0.3), (1.5, -0.7), (9.0, 1.2), (3.0, std::f64::consts::FRAC_PI_2)] {
            let r = report((k, t), (k, t));
            assert_eq!(r.verdict, Verdict::Inconclusive);
            let m = report((k, t), (k, -t));
            assert_eq!(m.verdict, Verdict::Inconclusive, "{k} {t}");
            let mut a: Vec<f64> = m.traces_left.iter().map(|x| x.trace_sq).collect();
            let mut b: Vec<f64> = m.traces_right.iter().map(|x| x.trace_sq).collect();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12 * x);
            }
        }
    }

    #[test]
    fn near_bifurcation_downgrades() {
        let t = 0.4;
        let k = fixed_rays::k_theta(t).unwrap();
        let r = report((k * (1.0 + 1e-12), t), (1.5, 0.9));
        if !r.diagnostics.is_empty() {
            assert_eq!(r.verdict, Verdict::Inconclusive);
        }
    }

    proptest! {
        #[test]
        fn verdict_is_symmetric(k1 in 1.1f64..30.0, t1 in -1.5f64..1.5, k2 in 1.1f64..30.0, t2 in -1.5f64..1.5) {
            let a = report((k1, t1), (k2, t2));
            let b = report((k2, t2), (k1, t1));
            prop_assert_eq!(is_obstructed(&a), is_obstructed(&b));
        }

        #[test]
        fn fixed_direction_is_always_obstructed(k1 in 1.1f64..30.0, k2 in 1.1f64..30.0, t in 0.0f64..1.5) {
            prop_assume!((k1 - k2).abs() > 1e-6);
            let r = report((k1, t), (k2, t));
            prop_assert!(is_obstructed(&r));
        }
    }
}
