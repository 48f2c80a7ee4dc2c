//! The induced circle endomorphism `H̃` and its derivatives, preimages,
//! forward orbits and backward trees.
//!
//! `H` maps the ray at angle `φ` onto the ray at angle
//! `H̃(φ) = 2θ + 2·atan(tan(φ−θ)/K)`, evaluated here on the continuous branch.
//! `H̃` is a degree-two, `π`-periodic, strictly increasing circle map.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle::{self, CircleAngle};
use crate::error::{Error, Result};
use crate::fixed_rays::{FixedRay, RegimeReport, Stability};
use crate::params::MapParams;

/// Deepest backward tree we are willing to build (`2^20` leaves).
pub const MAX_TREE_DEPTH: u32 = 20;
/// Preimages closer than this are treated as one point.
pub const TREE_DEDUP: f64 = 1e-13;

/// Continuous lift of `H̃` to the real line.
///
/// Satisfies `lift(φ + 2π) = lift(φ) + 4π` and is strictly increasing.
pub fn lift(p: &MapParams, phi: f64) -> f64 {
    let u = phi - p.theta();
    let m = (u / PI).round();
    let v = u - m * PI;
    // cos v ≥ 0 on [−π/2, π/2], so atan2 stays on the principal branch
    2.0 * p.theta() + 2.0 * (v.sin().atan2(p.k() * v.cos()) + m * PI)
}

/// An angle whose image is this close to itself is treated as fixed.
pub const PIN_TOL: f64 = 1e-12;

/// One step of `H̃` that stays put on a numerically fixed angle.
///
/// Fixed rays are mostly repelling, so plain iteration multiplies the
/// rounding error of a fixed angle by the multiplier at every step.
pub fn pinned_step(p: &MapParams, phi: f64) -> f64 {
    let next = circle_map(p, phi);
    if next.distance(CircleAngle::new(phi)) < PIN_TOL {
        angle::normalize(phi)
    } else {
        next.value()
    }
}

/// `H̃(φ)` reduced to `(−π, π]`.
pub fn circle_map(p: &MapParams, phi: f64) -> CircleAngle {
    CircleAngle::new(lift(p, phi))
}

/// `H̃′(φ) = 2K / (1 + (K²−1)cos²(φ−θ))`.
pub fn derivative(p: &MapParams, phi: f64) -> f64 {
    2.0 * p.k() / p.radial_factor(phi)
}

/// `H̃″(φ) = 2K(K²−1)·sin(2(φ−θ)) / (1 + (K²−1)cos²(φ−θ))²`.
pub fn second_derivative(p: &MapParams, phi: f64) -> f64 {
    let k = p.k();
    let d = p.radial_factor(phi);
    2.0 * k * (k * k - 1.0) * (2.0 * (phi - p.theta())).sin() / (d * d)
}

/// The two angles mapped onto `psi`; they differ by exactly `π`.
pub fn preimages(p: &MapParams, psi: f64) -> [CircleAngle; 2] {
    let v = 0.5 * angle::normalize(psi - 2.0 * p.theta());
    let base = p.theta() + (p.k() * v.sin()).atan2(v.cos());
    [CircleAngle::new(base), CircleAngle::new(base + PI)]
}

/// `[φ, H̃(φ), …, H̃ⁿ(φ)]`.
pub fn orbit(p: &MapParams, phi: f64, n: usize) -> Vec<CircleAngle> {
    let mut out = Vec::with_capacity(n + 1);
    let mut x = CircleAngle::new(phi);
    out.push(x);
    for _ in 0..n {
        x = circle_map(p, x.value());
        out.push(x);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitConfig {
    pub max_iter: usize,
    pub tol: f64,
    /// Consecutive hits required before convergence is reported.
    pub confirm: usize,
}

impl Default for LimitConfig {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-9,
            confirm: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "angle")]
pub enum LimitOutcome {
    ConvergedTo(CircleAngle),
    LandedOnRepeller(CircleAngle),
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub outcome: LimitOutcome,
    /// Step at which the deciding event started.
    pub iterations: usize,
    pub final_angle: CircleAngle,
}

/// Follow the forward orbit of `phi` until it settles on the non-repelling
/// fixed ray, lands on another fixed ray, or the budget runs out.
///
/// An attracting target is reached when the orbit stays within `tol` of it
/// for `confirm` steps. A neutral target attracts only polynomially, so it is
/// reached once the orbit stays inside its immediate basin for `confirm`
/// steps; every point of that interval converges to the neutral ray.
pub fn classify_limit(
    p: &MapParams,
    report: &RegimeReport,
    phi: f64,
    cfg: &LimitConfig,
) -> LimitReport {
    let target = report.non_repelling();
    let basin = report.immediate_basin().ok();
    let others: Vec<&FixedRay> = report
        .rays
        .iter()
        .filter(|r| target.is_none_or(|t| !std::ptr::eq(*r, t)))
        .collect();

    let mut x = CircleAngle::new(phi);
    let mut streak = 0usize;
    let mut streak_start = 0usize;
    for i in 0..=cfg.max_iter {
        if let Some(t) = target {
            let near = x.distance(t.angle) < cfg.tol;
            let hit = match t.stability {
                Stability::Neutral => {
                    near || basin.as_ref().is_some_and(|b| b.contains(x.value()))
                }
                _ => near,
            };
            if hit {
                if streak == 0 {
                    streak_start = i;
                }
                streak += 1;
                if streak >= cfg.confirm.max(1) {
                    return LimitReport {
                        outcome: LimitOutcome::ConvergedTo(t.angle),
                        iterations: streak_start,
                        final_angle: x,
                    };
                }
            } else {
                streak = 0;
            }
        }
        if streak == 0 {
            if let Some(r) = others.iter().find(|r| x.distance(r.angle) < cfg.tol) {
                return LimitReport {
                    outcome: LimitOutcome::LandedOnRepeller(r.angle),
                    iterations: i,
                    final_angle: x,
                };
            }
        }
        if i < cfg.max_iter {
            x = circle_map(p, x.value());
        }
    }
    LimitReport {
        outcome: LimitOutcome::Undecided,
        iterations: cfg.max_iter,
        final_angle: x,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackwardTree {
    pub depth: u32,
    /// Preimages at exactly `depth`, sorted ascending in `(−π, π]`.
    pub angles: Vec<CircleAngle>,
    /// Largest circular gap between neighbours, wraparound included.
    pub max_gap: f64,
}

/// All angles `ψ` with `H̃^depth(ψ) = φ`.
pub fn backward_tree(p: &MapParams, phi: f64, depth: u32) -> Result<BackwardTree> {
    if depth > MAX_TREE_DEPTH {
        return Err(Error::ResourceLimit(format!(
            "backward tree depth {depth} exceeds {MAX_TREE_DEPTH}"
        )));
    }
    let mut level = vec![CircleAngle::new(phi)];
    for _ in 0..depth {
        let mut next: Vec<CircleAngle> = level
            .par_iter()
            .flat_map_iter(|a| preimages(p, a.value()))
            .collect();
        sort_dedup(&mut next);
        level = next;
    }
    sort_dedup(&mut level);
    let max_gap = max_circular_gap(&level);
    Ok(BackwardTree {
        depth,
        angles: level,
        max_gap,
    })
}

fn sort_dedup(v: &mut Vec<CircleAngle>) {
    v.sort_by(|a, b| a.value().total_cmp(&b.value()));
    v.dedup_by(|b, a| b.value() - a.value() < TREE_DEDUP);
    if v.len() > 1 {
        let wrap = v[0].value() + TAU - v[v.len() - 1].value();
        if wrap < TREE_DEDUP {
            v.pop();
        }
    }
}

/// Largest gap of a sorted list of circle points; `2π` for fewer than two.
pub fn max_circular_gap(sorted: &[CircleAngle]) -> f64 {
    if sorted.len() < 2 {
        return TAU;
    }
    let inner = sorted
        .windows(2)
        .map(|w| w[1].value() - w[0].value())
        .fold(0.0, f64::max);
    inner.max(sorted[0].value() + TAU - sorted[sorted.len() - 1].value())
}

/// True when `H̃′ > 1` everywhere, which holds exactly for `K < 2`.
pub fn is_expanding(p: &MapParams) -> bool {
    p.k() < 2.0
}
