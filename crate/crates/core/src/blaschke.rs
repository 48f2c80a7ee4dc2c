//! The degree-two Blaschke product that realizes `H̃` on the unit circle,
//! `B(z) = (z² + μ)/(1 + μ̄ z²)`, and sampling of its Julia set.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::angle::CircleAngle;
use crate::circle;
use crate::error::{invalid, Result};
use crate::fixed_rays::{self, BasinInterval, Regime, Stability};
use crate::params::MapParams;

/// Backward steps taken before the sampler starts recording.
pub const JULIA_BURN_IN: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlaschkeMap {
    mu: Complex64,
    zero: Complex64,
}

impl BlaschkeMap {
    pub fn new(p: &MapParams) -> Self {
        let k = p.k();
        let zero = Complex64::from_polar(
            ((k - 1.0) / (k + 1.0)).sqrt(),
            p.theta() - std::f64::consts::FRAC_PI_2,
        );
        Self { mu: p.mu(), zero }
    }

    pub fn mu(&self) -> Complex64 {
        self.mu
    }

    /// One of the two zeros `±a`, `a = e^{i(θ−π/2)}√((K−1)/(K+1))`.
    pub fn zero(&self) -> Complex64 {
        self.zero
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        let z2 = z * z;
        (z2 + self.mu) / (1.0 + self.mu.conj() * z2)
    }

    /// `B` as the product of the two disk factors vanishing at `±a`.
    pub fn apply_factored(&self, z: Complex64) -> Complex64 {
        let a = self.zero;
        let one = Complex64::new(1.0, 0.0);
        (z - a) / (one - a.conj() * z) * ((z + a) / (one + a.conj() * z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JuliaKind {
    FullCircle,
    CantorOnCircle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JuliaClassification {
    pub kind: JuliaKind,
    pub regime: Regime,
}

/// The Julia set of `B` is all of `S¹` when `H` has one fixed ray and a
/// Cantor subset of `S¹` when it has two or three.
pub fn julia_classification(p: &MapParams) -> Result<JuliaClassification> {
    let regime = fixed_rays::fixed_rays(p)?.regime;
    let kind = match regime {
        Regime::OneRepelling | Regime::OneParabolic => JuliaKind::FullCircle,
        Regime::TwoWithNeutral | Regime::Three => JuliaKind::CantorOnCircle,
    };
    Ok(JuliaClassification { kind, regime })
}

/// `count` points of the Julia set by random inverse iteration from a
/// repelling fixed angle (the parabolic angle when none is repelling).
/// Identical seeds give identical output.
pub fn julia_sample(p: &MapParams, count: usize, seed: u64) -> Result<Vec<CircleAngle>> {
    if count == 0 {
        return Err(invalid("sample count must be at least 1"));
    }
    let report = fixed_rays::fixed_rays(p)?;
    let start = report
        .rays
        .iter()
        .find(|r| r.stability == Stability::Repelling)
        .unwrap_or(&report.rays[0])
        .angle;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = start;
    let mut out = Vec::with_capacity(count);
    for i in 0..JULIA_BURN_IN + count {
        x = circle::preimages(p, x.value())[rng.gen_range(0..2)];
        if i >= JULIA_BURN_IN {
            out.push(x);
        }
    }
    Ok(out)
}

/// Immediate basin of the non-repelling fixed ray.
pub fn immediate_basin(p: &MapParams) -> Result<BasinInterval> {
    fixed_rays::fixed_rays(p)?.immediate_basin()
}
