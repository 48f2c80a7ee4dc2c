//! Map parameters, the affine stretch `h` and the quadratic map `H = h²`.
//!
//! For `K > 1` and a direction `θ ∈ (−π/2, π/2]` the stretch is
//!
//! ```text
//! h(z) = ((K+1)/2)·z + e^{2iθ}·((K−1)/2)·z̄
//! ```
//!
//! which multiplies lengths by `K` along `e^{iθ}` and fixes the orthogonal
//! direction. Its complex dilatation is the constant
//! `μ = e^{2iθ}(K−1)/(K+1)`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Points of the plane. Polar access goes through `to_polar` / `from_polar`.
pub type ComplexPoint = Complex64;

/// Reduce an angle to `(−π/2, π/2]` by adding integer multiples of `π`.
pub fn normalize_direction(theta: f64) -> f64 {
    let mut t = theta - PI * ((theta - FRAC_PI_2) / PI).ceil();
    if t <= -FRAC_PI_2 {
        t += PI;
    }
    if t > FRAC_PI_2 {
        t -= PI;
    }
    t
}

/// The pair `(K, θ)` together with the derived dilatation `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    k: f64,
    theta: f64,
    mu: Complex64,
}

impl MapParams {
    pub fn new(k: f64, theta: f64) -> Result<Self> {
        if !k.is_finite() || !theta.is_finite() {
            return Err(invalid(format!("non-finite parameters K={k}, θ={theta}")));
        }
        if k <= 1.0 {
            return Err(invalid(format!(
                "stretch factor K={k} must exceed 1 (K=1 is the identity, K<1 is degenerate)"
            )));
        }
        let theta = normalize_direction(theta);
        let mu = Complex64::from_polar((k - 1.0) / (k + 1.0), 2.0 * theta);
        Ok(Self { k, theta, mu })
    }

    /// Recover `(K, θ)` from a dilatation `0 < |μ| < 1`.
    pub fn from_mu(mu: Complex64) -> Result<Self> {
        let m = mu.norm();
        if !m.is_finite() || m == 0.0 {
            return Err(invalid("dilatation μ = 0 is the holomorphic case"));
        }
        if m >= 1.0 {
            return Err(invalid(format!("|μ| = {m} must be below 1")));
        }
        let k = (1.0 + m) / (1.0 - m);
        Self::new(k, 0.5 * mu.arg())
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn mu(&self) -> Complex64 {
        self.mu
    }

    /// The mirrored parameters `(K, −θ)`, conjugate to `self` by `z ↦ z̄`.
    pub fn reflected(&self) -> Self {
        Self::new(self.k, -self.theta).expect("reflection keeps K > 1")
    }

    /// `h(z)`.
    pub fn h(&self, z: ComplexPoint) -> ComplexPoint {
        let rot = Complex64::from_polar(1.0, 2.0 * self.theta);
        0.5 * (self.k + 1.0) * z + rot * (0.5 * (self.k - 1.0)) * z.conj()
    }

    /// `H(z) = h(z)²`.
    pub fn map(&self, z: ComplexPoint) -> ComplexPoint {
        let w = self.h(z);
        w * w
    }

    /// Radial factor `1 + (K²−1)cos²(φ−θ)`; `|H(re^{iφ})| = r²` times this.
    pub fn radial_factor(&self, phi: f64) -> f64 {
        let c = (phi - self.theta).cos();
        1.0 + (self.k * self.k - 1.0) * c * c
    }

    /// `H` in polar coordinates: `(r, φ) ↦ (r', φ')` with `φ'` in `(−π, π]`.
    pub fn map_polar(&self, r: f64, phi: f64) -> (f64, f64) {
        let u = phi - self.theta;
        let angle = 2.0 * self.theta + 2.0 * (u.sin()).atan2(self.k * u.cos());
        (r * r * self.radial_factor(phi), crate::angle::normalize(angle))
    }

    /// Pointwise distortion `(1+|μ|)/(1−|μ|)`, which equals `K`.
    pub fn distortion(&self) -> f64 {
        self.k
    }
}
