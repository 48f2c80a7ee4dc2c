//! Angles on the circle, stored in `(−π, π]`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Reduce to `(−π, π]`.
pub fn normalize(a: f64) -> f64 {
    let mut r = a % TAU;
    if r <= -PI {
        r += TAU;
    } else if r > PI {
        r -= TAU;
    }
    r
}

/// Distance measured along the circle, in `[0, π]`.
pub fn distance(a: f64, b: f64) -> f64 {
    normalize(a - b).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CircleAngle(f64);

impl CircleAngle {
    pub fn new(radians: f64) -> Self {
        Self(normalize(radians))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn distance(self, other: CircleAngle) -> f64 {
        distance(self.0, other.0)
    }
}

impl From<f64> for CircleAngle {
    fn from(v: f64) -> Self {
        Self::new(v)
    }
}

impl fmt::Display for CircleAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
