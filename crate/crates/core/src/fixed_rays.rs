//! Fixed rays of `H`: the cubic whose roots locate them, their stability,
//! the critical stretch `K_θ` and the contracting interval `J`.
//!
//! A fixed ray at angle `φ` corresponds to a real root `t = tan((φ−θ)/2)` of
//!
//! ```text
//! P(t) = K t³ + (2−K) tan(θ/2) t² + (2−K) t + K tan(θ/2).
//! ```
//!
//! For `θ ∈ [0, π/2)` there is a `K_θ ≥ 2` with one repelling ray below it,
//! a repelling plus a neutral ray at it, and one attracting between two
//! repelling rays above it. Negative `θ` mirrors this through `z ↦ z̄`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angle::{self, CircleAngle};
use crate::circle;
use crate::error::{invalid, Error, Result};
use crate::mobius;
use crate::params::MapParams;

/// Roots of the cubic closer than this are one root of higher multiplicity.
pub const ROOT_MERGE_TOL: f64 = 1e-7;
/// A simple root with `|H̃′ − 1|` below this is classified neutral.
pub const NEUTRAL_BAND: f64 = 1e-9;
/// Largest admissible fixed-point residual on the circle.
pub const FIXED_RESIDUAL_TOL: f64 = 1e-8;
const SECTOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Attracting,
    Repelling,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedRay {
    pub angle: CircleAngle,
    /// `H̃′` at the fixed angle.
    pub multiplier: f64,
    pub stability: Stability,
    /// Squared trace of the disk automorphism driving the dilatation on the ray.
    pub trace_sq: f64,
    pub contraction_k: f64,
    /// Multiplicity of the corresponding root of the cubic.
    pub multiplicity: u8,
}

impl FixedRay {
    fn new(p: &MapParams, phi: f64, multiplicity: u8) -> Self {
        let multiplier = circle::derivative(p, phi);
        let stability = if multiplicity > 1 || (multiplier - 1.0).abs() < NEUTRAL_BAND {
            Stability::Neutral
        } else if multiplier < 1.0 {
            Stability::Attracting
        } else {
            Stability::Repelling
        };
        let trace_sq = ray_trace_sq(p, phi);
        let contraction_k = mobius::contraction_k(trace_sq).unwrap_or(1.0);
        Self {
            angle: CircleAngle::new(phi),
            multiplier,
            stability,
            trace_sq,
            contraction_k,
            multiplicity,
        }
    }
}

/// `(K+1)²(1+cos φ)/(2K)`.
pub fn ray_trace_sq(p: &MapParams, phi: f64) -> f64 {
    let k = p.k();
    (k + 1.0) * (k + 1.0) * (1.0 + phi.cos()) / (2.0 * k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    OneRepelling,
    OneParabolic,
    TwoWithNeutral,
    Three,
}

impl Regime {
    pub fn ray_count(self) -> usize {
        match self {
            Regime::OneRepelling | Regime::OneParabolic => 1,
            Regime::TwoWithNeutral => 2,
            Regime::Three => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub params: MapParams,
    pub regime: Regime,
    /// Sorted by ascending angle; for three rays this is `φ₂ < φ₀ < φ₁`.
    pub rays: Vec<FixedRay>,
    /// Critical stretch for `|θ| < π/2`; `None` when `θ = π/2`.
    pub k_theta: Option<f64>,
}

/// Interval of the circle on which every point converges to the
/// non-repelling fixed ray without leaving the interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasinInterval {
    pub lower: f64,
    pub upper: f64,
    pub attractor: CircleAngle,
    pub includes_lower: bool,
    pub includes_upper: bool,
}

impl BasinInterval {
    /// Margin kept from both endpoints by [`BasinInterval::contains`].
    pub const MARGIN: f64 = 1e-9;

    /// Open-interval membership with a `1e-9` margin at both ends.
    pub fn contains(&self, phi: f64) -> bool {
        let x = angle::normalize(phi);
        x > self.lower + Self::MARGIN && x < self.upper - Self::MARGIN
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

impl RegimeReport {
    /// The attracting or neutral ray whose basin is dense, if any.
    pub fn non_repelling(&self) -> Option<&FixedRay> {
        match self.regime {
            Regime::TwoWithNeutral => self.rays.iter().find(|r| r.stability == Stability::Neutral),
            Regime::Three => self
                .rays
                .iter()
                .min_by(|a, b| a.multiplier.total_cmp(&b.multiplier)),
            _ => None,
        }
    }

    /// Immediate basin of the non-repelling ray: the interval between the
    /// two outer rays when there are three, or between the repelling and the
    /// neutral ray (closed at the neutral end) when there are two.
    pub fn immediate_basin(&self) -> Result<BasinInterval> {
        let attractor = self.non_repelling().ok_or_else(|| {
            Error::NoBasin(format!("regime {:?} has no non-repelling fixed ray", self.regime))
        })?;
        let lower = self.rays[0].angle.value();
        let upper = self.rays[self.rays.len() - 1].angle.value();
        let (includes_lower, includes_upper) = match self.regime {
            Regime::TwoWithNeutral => (
                self.rays[0].stability == Stability::Neutral,
                self.rays[self.rays.len() - 1].stability == Stability::Neutral,
            ),
            _ => (false, false),
        };
        Ok(BasinInterval {
            lower,
            upper,
            attractor: attractor.angle,
            includes_lower,
            includes_upper,
        })
    }

    /// Rays listed in decreasing angle after mirroring negative directions
    /// to positive ones: `φ₁ > φ₀ > φ₂` for three rays, `φ₁ > φ₂` for two.
    pub fn canonical_order(&self) -> Vec<FixedRay> {
        let mut v = self.rays.clone();
        let sign = if self.params.theta() < 0.0 { -1.0 } else { 1.0 };
        v.sort_by(|a, b| (sign * b.angle.value()).total_cmp(&(sign * a.angle.value())));
        v
    }
}

/// Coefficients `(a, b, c, d)` of `P(t) = at³ + bt² + ct + d`.
pub fn cubic_coeffs(p: &MapParams) -> [f64; 4] {
    let k = p.k();
    let tt = (0.5 * p.theta()).tan();
    [k, (2.0 - k) * tt, 2.0 - k, k * tt]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealRoot {
    pub value: f64,
    pub multiplicity: u8,
}

fn eval_cubic(c: &[f64; 4], t: Complex64) -> Complex64 {
    ((t * c[0] + c[1]) * t + c[2]) * t + c[3]
}

fn eval_cubic_deriv(c: &[f64; 4], t: Complex64) -> Complex64 {
    (t * (3.0 * c[0]) + 2.0 * c[1]) * t + c[2]
}

/// The three complex roots by the closed-form cubic formula, each polished
/// by up to two Newton steps that are kept only when they reduce `|P|`.
pub fn complex_roots(c: &[f64; 4]) -> Result<[Complex64; 3]> {
    let [a, b, cc, d] = *c;
    if a == 0.0 || !c.iter().all(|x| x.is_finite()) {
        return Err(invalid("cubic needs a finite, nonzero leading coefficient"));
    }
    let d0 = b * b - 3.0 * a * cc;
    let d1 = 2.0 * b * b * b - 9.0 * a * b * cc + 27.0 * a * a * d;
    let disc = Complex64::new(d1 * d1 - 4.0 * d0 * d0 * d0, 0.0).sqrt();
    let d1c = Complex64::new(d1, 0.0);
    let plus = d1c + disc;
    let minus = d1c - disc;
    let big = if plus.norm() >= minus.norm() { plus } else { minus };
    let shift = -b / (3.0 * a);
    let mut roots = if big.norm() == 0.0 {
        [Complex64::new(shift, 0.0); 3]
    } else {
        let cbrt = (big * 0.5).powf(1.0 / 3.0);
        let xi = Complex64::new(-0.5, 0.75f64.sqrt());
        let mut out = [Complex64::new(0.0, 0.0); 3];
        let mut rot = Complex64::new(1.0, 0.0);
        for r in out.iter_mut() {
            let cr = rot * cbrt;
            *r = -(Complex64::new(b, 0.0) + cr + d0 / cr) / (3.0 * a);
            rot *= xi;
        }
        out
    };
    for r in roots.iter_mut() {
        for _ in 0..2 {
            let f = eval_cubic(c, *r);
            let df = eval_cubic_deriv(c, *r);
            if df.norm() == 0.0 {
                break;
            }
            let cand = *r - f / df;
            if eval_cubic(c, cand).norm() < f.norm() {
                *r = cand;
            }
        }
    }
    Ok(roots)
}

/// Real roots in ascending order with multiplicities. Roots within
/// [`ROOT_MERGE_TOL`] of each other are merged, which turns a nearly
/// degenerate complex pair into one real double root.
pub fn solve_cubic(c: &[f64; 4]) -> Result<Vec<RealRoot>> {
    let roots = complex_roots(c)?;
    let mut groups: Vec<(Complex64, u8)> = Vec::new();
    let mut used = [false; 3];
    for i in 0..3 {
        if used[i] {
            continue;
        }
        let mut sum = roots[i];
        let mut n = 1u8;
        used[i] = true;
        for j in i + 1..3 {
            if !used[j] && (roots[j] - roots[i]).norm() < ROOT_MERGE_TOL {
                used[j] = true;
                sum += roots[j];
                n += 1;
            }
        }
        groups.push((sum / n as f64, n));
    }
    // A repeated root of a real cubic is real: its conjugate would need
    // the same multiplicity.
    let mut real: Vec<RealRoot> = groups
        .into_iter()
        .filter(|(z, m)| *m > 1 || z.im.abs() <= 1e-9 * (1.0 + z.re.abs()))
        .map(|(z, m)| RealRoot {
            value: z.re,
            multiplicity: m,
        })
        .collect();
    real.sort_by(|x, y| x.value.total_cmp(&y.value));
    if real.is_empty() {
        return Err(Error::NumericalFailure(
            "real cubic produced no real root".into(),
        ));
    }
    Ok(real)
}

/// Compute and classify every fixed ray of `H`.
pub fn fixed_rays(p: &MapParams) -> Result<RegimeReport> {
    let coeffs = cubic_coeffs(p);
    let roots = solve_cubic(&coeffs)?;
    let mut rays = Vec::with_capacity(3);
    for root in &roots {
        let phi = angle::normalize(p.theta() + 2.0 * root.value.atan());
        let residual = circle::circle_map(p, phi).distance(CircleAngle::new(phi));
        if residual > FIXED_RESIDUAL_TOL {
            return Err(Error::NumericalFailure(format!(
                "root t={} gives angle {phi} with fixed-point residual {residual:e}",
                root.value
            )));
        }
        check_sector(p, phi)?;
        rays.push(FixedRay::new(p, phi, root.multiplicity));
    }
    rays.sort_by(|a, b| a.angle.value().total_cmp(&b.angle.value()));
    let regime = match rays.len() {
        1 if rays[0].stability == Stability::Neutral => Regime::OneParabolic,
        1 => Regime::OneRepelling,
        2 => Regime::TwoWithNeutral,
        3 => Regime::Three,
        n => {
            return Err(Error::NumericalFailure(format!("{n} fixed rays found")));
        }
    };
    let k_theta = k_theta(p.theta()).ok();
    Ok(RegimeReport {
        params: *p,
        regime,
        rays,
        k_theta,
    })
}

/// Fixed rays for `θ ∈ (0, π/2)` lie in `(2θ, θ+π/2)` or `(θ−π/2, 0)`.
fn check_sector(p: &MapParams, phi: f64) -> Result<()> {
    let (theta, x) = if p.theta() < 0.0 {
        (-p.theta(), -phi)
    } else {
        (p.theta(), phi)
    };
    if theta == 0.0 || theta >= FRAC_PI_2 {
        return Ok(());
    }
    let s = SECTOR_SLACK;
    let upper = x > 2.0 * theta - s && x < theta + FRAC_PI_2 + s;
    let lower = x > theta - FRAC_PI_2 - s && x < s;
    if upper || lower {
        Ok(())
    } else {
        Err(Error::NumericalFailure(format!(
            "fixed angle {phi} outside the admissible sectors for θ={}",
            p.theta()
        )))
    }
}

/// The direction whose critical stretch is `K`:
/// `θ = arccos[((2K−1)/(K²−1))^{3/2}(K−1)]`, defined for `K ≥ 2`.
pub fn theta_of_k(k: f64) -> Result<f64> {
    if !(k.is_finite() && k >= 2.0) {
        return Err(invalid(format!("critical stretch needs K ≥ 2, got {k}")));
    }
    let f = ((2.0 * k - 1.0) / (k * k - 1.0)).powf(1.5) * (k - 1.0);
    Ok(f.clamp(-1.0, 1.0).acos())
}

/// The critical stretch `K_θ`, found by bisection on [`theta_of_k`], which
/// is increasing on `(2, ∞)`. Symmetric in `θ`; `K_0 = 2`.
pub fn k_theta(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(invalid("non-finite direction"));
    }
    let t = theta.abs();
    if t >= FRAC_PI_2 {
        return Err(invalid(format!(
            "no neutral fixed ray exists for |θ| = {t} ≥ π/2"
        )));
    }
    if t == 0.0 {
        return Ok(2.0);
    }
    let mut lo = 2.0;
    let mut hi = 1e6;
    while theta_of_k(hi)? < t {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "could not bracket the critical stretch for θ = {theta}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if theta_of_k(mid)? < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = (theta_of_k(lo)? - t).abs();
    let b = (theta_of_k(hi)? - t).abs();
    Ok(if a <= b { lo } else { hi })
}

/// Half-width `η` of the interval `J = (θ−η, θ+η)` where `H̃′ < 1`.
/// `None` for `K < 2`; zero at `K = 2`, where `J` shrinks to `{θ}`.
pub fn contraction_half_width(k: f64) -> Option<f64> {
    if k < 2.0 {
        None
    } else if k == 2.0 {
        Some(0.0)
    } else {
        Some(((2.0 * k - 1.0) / (k * k - 1.0)).sqrt().acos())
    }
}

/// `J = (θ−η, θ+η)`, empty for `K < 2`.
pub fn interval_j(p: &MapParams) -> Option<(f64, f64)> {
    contraction_half_width(p.k()).map(|eta| (p.theta() - eta, p.theta() + eta))
}
