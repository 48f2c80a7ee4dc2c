//! Automorphisms of the unit disk and the dilatation of iterates of `H`.
//!
//! The complex dilatation of `Hⁿ` at `z` is a composition of disk
//! automorphisms applied to `μ`. On a fixed ray all factors coincide, so the
//! hyperbolic distance from `0` grows linearly with slope `log(1/k)`, where
//! `k` is the contraction factor of the factor.
//!
//! Compositions are accumulated as `SU(1,1)` matrices with a separate log
//! scale. This keeps the hyperbolic distance exact long after `1 − |μ|` has
//! underflowed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angle::{self, CircleAngle};
use crate::circle;
use crate::error::{invalid, Error, Result};
use crate::fixed_rays::{self, FIXED_RESIDUAL_TOL};
use crate::params::{ComplexPoint, MapParams};

/// Slack in the `trace² > 4` hyperbolicity test.
pub const HYPERBOLIC_SLACK: f64 = 1e-12;
/// Iterates dropped from the start of every growth fit.
pub const GROWTH_BURN_IN: usize = 5;
/// Smallest admissible growth-fit window `n_hi − n_lo`.
pub const MIN_FIT_SPAN: usize = 10;

const RESCALE_ABOVE: f64 = 1e100;

/// `w ↦ (a w + b) / (b̄ w + ā)` with `|a|² − |b|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskMobius {
    a: Complex64,
    b: Complex64,
}

impl DiskMobius {
    /// Normalize `(a, b)` so that `|a|² − |b|² = 1`.
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        let det = a.norm_sqr() - b.norm_sqr();
        if !det.is_finite() || det <= 0.0 {
            return Err(invalid(format!(
                "coefficients a={a}, b={b} do not define a disk automorphism"
            )));
        }
        let s = det.sqrt();
        Ok(Self { a: a / s, b: b / s })
    }

    pub fn identity() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
        }
    }

    /// The automorphism sending `0` to `c`, `w ↦ (w + c)/(c̄ w + 1)`.
    pub fn translation_to(c: Complex64) -> Result<Self> {
        Self::new(Complex64::new(1.0, 0.0), c)
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    pub fn apply(&self, w: Complex64) -> Complex64 {
        (self.a * w + self.b) / (self.b.conj() * w + self.a.conj())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &DiskMobius) -> DiskMobius {
        DiskMobius {
            a: self.a * other.a + self.b * other.b.conj(),
            b: self.a * other.b + self.b * other.a.conj(),
        }
    }

    pub fn inverse(&self) -> DiskMobius {
        DiskMobius {
            a: self.a.conj(),
            b: -self.b,
        }
    }

    pub fn trace_sq(&self) -> f64 {
        let t = 2.0 * self.a.re;
        t * t
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.trace_sq() > 4.0 + HYPERBOLIC_SLACK
    }

    /// Hyperbolic translation length `log(1/k)`; `None` unless hyperbolic.
    pub fn translation_length(&self) -> Option<f64> {
        contraction_k(self.trace_sq()).ok().map(|k| -k.ln())
    }
}

/// Contraction factor `k ∈ (0, 1)` of a hyperbolic map with squared trace
/// `T`, the root of `k + 1/k + 2 = T` below one.
pub fn contraction_k(trace_sq: f64) -> Result<f64> {
    if !(trace_sq.is_finite() && trace_sq > 4.0) {
        return Err(invalid(format!(
            "squared trace {trace_sq} is not above 4, so the map is not hyperbolic"
        )));
    }
    // (T−2−√(T²−4T))/2 written without cancellation
    let t = trace_sq;
    Ok(2.0 / (t - 2.0 + (t * t - 4.0 * t).sqrt()))
}

/// `1 − |w|²` with the factorization that keeps accuracy near the circle.
fn one_minus_norm_sqr(w: Complex64) -> f64 {
    let r = w.norm();
    (1.0 - r) * (1.0 + r)
}

/// Poincaré distance on the unit disk, curvature `−1`.
pub fn hyperbolic_dist(w1: Complex64, w2: Complex64) -> Result<f64> {
    for w in [w1, w2] {
        if w.norm().is_nan() || w.norm() >= 1.0 {
            return Err(invalid(format!("|{w}| is not inside the unit disk")));
        }
    }
    let denom = Complex64::new(1.0, 0.0) - w1.conj() * w2;
    let delta = (w1 - w2).norm() / denom.norm();
    // 1 − δ² = (1−|w1|²)(1−|w2|²)/|1 − w̄1 w2|²
    let gap = one_minus_norm_sqr(w1) * one_minus_norm_sqr(w2) / denom.norm_sqr();
    Ok(2.0 * delta.ln_1p() - gap.ln())
}

/// Dilatation of an iterate together with its hyperbolic distance from `0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dilatation {
    pub mu: Complex64,
    /// `d_h(0, μ) = log((1+|μ|)/(1−|μ|))`, finite even once `|μ|` rounds to 1.
    pub log_distortion: f64,
}

impl Dilatation {
    /// `(1+|μ|)/(1−|μ|)`.
    pub fn distortion(&self) -> f64 {
        self.log_distortion.exp()
    }
}

/// Composition of disk automorphisms, stored as `e^{scale}·(a, b)`.
#[derive(Debug, Clone, Copy)]
struct ScaledChain {
    a: Complex64,
    b: Complex64,
    log_scale: f64,
}

impl ScaledChain {
    fn new() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            log_scale: 0.0,
        }
    }

    /// Right-multiply by `m`.
    fn push(&mut self, m: &DiskMobius) {
        let a = self.a * m.a + self.b * m.b.conj();
        let b = self.a * m.b + self.b * m.a.conj();
        self.a = a;
        self.b = b;
        let big = self.a.norm().max(self.b.norm());
        if big > RESCALE_ABOVE {
            self.a /= big;
            self.b /= big;
            self.log_scale += big.ln();
        }
    }

    /// Image of `0` and its distance from `0`.
    fn at_origin(&self) -> Dilatation {
        Dilatation {
            mu: self.b / self.a.conj(),
            log_distortion: 2.0 * (self.log_scale + (self.a.norm() + self.b.norm()).ln()),
        }
    }
}

/// The factor `w ↦ (μ + e^{−iφ} w)/(1 + e^{−iφ} μ̄ w)` for the ray at `φ`.
fn ray_factor(p: &MapParams, phi: f64) -> DiskMobius {
    let mu = p.mu();
    let s = one_minus_norm_sqr(mu).sqrt();
    let half = Complex64::from_polar(1.0, -0.5 * phi);
    DiskMobius {
        a: half / s,
        b: mu * half.conj() / s,
    }
}

fn check_fixed(p: &MapParams, phi: f64) -> Result<()> {
    let residual = circle::circle_map(p, phi).distance(CircleAngle::new(phi));
    if residual > FIXED_RESIDUAL_TOL {
        return Err(invalid(format!(
            "angle {phi} is not a fixed ray (residual {residual:e})"
        )));
    }
    Ok(())
}

/// The automorphism that advances the dilatation by one iterate on the
/// fixed ray at `φ`; its squared trace is `(K+1)²(1+cos φ)/(2K)`.
pub fn fixed_ray_mobius(p: &MapParams, phi: f64) -> Result<DiskMobius> {
    check_fixed(p, phi)?;
    Ok(ray_factor(p, phi))
}

/// `μ_{H¹}, …, μ_{H^{n_max}}` for the chain whose `i`-th factor is the ray
/// factor at `angles[i−1]`, in one pass.
fn series(p: &MapParams, mut angles: impl FnMut() -> f64, n_max: usize) -> Result<Vec<Dilatation>> {
    let start = DiskMobius::translation_to(p.mu())?;
    let mut prefix = ScaledChain::new();
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        if n > 1 {
            prefix.push(&ray_factor(p, angles()));
        }
        let mut m = prefix;
        m.push(&start);
        out.push(m.at_origin());
    }
    Ok(out)
}

/// Dilatations of `H¹, …, H^{n_max}` on the fixed ray at `φ`.
pub fn dilatation_series_on_ray(p: &MapParams, phi: f64, n_max: usize) -> Result<Vec<Dilatation>> {
    check_fixed(p, phi)?;
    series(p, || phi, n_max)
}

/// Dilatation of `Hⁿ` on the fixed ray at `φ`: `A^{n−1}(μ)`.
pub fn dilatation_on_ray(p: &MapParams, phi: f64, n: usize) -> Result<Dilatation> {
    if n == 0 {
        return Err(invalid("iterate count must be at least 1"));
    }
    Ok(*dilatation_series_on_ray(p, phi, n)?.last().expect("n ≥ 1"))
}

/// Dilatations of `H¹, …, H^{n_max}` at `z ≠ 0`:
/// `μ_{Hⁿ}(z) = A₁ ∘ … ∘ A_{n−1}(μ)`, where `A_i` is the ray factor at
/// `arg Hⁱ(z)`.
///
/// Only the arguments of the orbit are used, taken from the circle map, so
/// the chain is immune to overflow of `|Hⁱ(z)|`. Orbit angles within
/// [`circle::PIN_TOL`] of a fixed ray are snapped onto it and kept there.
pub fn dilatation_series(p: &MapParams, z: ComplexPoint, n_max: usize) -> Result<Vec<Dilatation>> {
    if z == Complex64::new(0.0, 0.0) || !z.is_finite() {
        return Err(invalid("the chain is defined only for finite z ≠ 0"));
    }
    let fixed: Vec<f64> = fixed_rays::fixed_rays(p)?
        .rays
        .iter()
        .map(|r| r.angle.value())
        .collect();
    let mut phi = z.arg();
    let mut pinned = false;
    series(
        p,
        || {
            if !pinned {
                phi = circle::circle_map(p, phi).value();
                if let Some(&f) = fixed
                    .iter()
                    .find(|&&f| angle::distance(phi, f) < circle::PIN_TOL)
                {
                    phi = f;
                    pinned = true;
                }
            }
            phi
        },
        n_max,
    )
}

/// Dilatation of `Hⁿ` at `z ≠ 0`; see [`dilatation_series`].
pub fn dilatation_chain(p: &MapParams, z: ComplexPoint, n: usize) -> Result<Dilatation> {
    if n == 0 {
        return Err(invalid("iterate count must be at least 1"));
    }
    Ok(*dilatation_series(p, z, n)?.last().expect("n ≥ 1"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    /// Least-squares growth of `d_h(0, μ_{Hⁿ})` per iterate.
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation from the fitted line.
    pub residual: f64,
    pub n_lo: usize,
    pub n_hi: usize,
}

fn fit_window(n_lo: usize, n_hi: usize) -> Result<(usize, usize)> {
    let lo = n_lo.max(GROWTH_BURN_IN + 1);
    if n_hi < lo + MIN_FIT_SPAN {
        return Err(invalid(format!(
            "growth window [{lo}, {n_hi}] spans fewer than {MIN_FIT_SPAN} iterates"
        )));
    }
    Ok((lo, n_hi))
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).abs())
        .fold(0.0, f64::max);
    (slope, intercept, residual)
}

fn fit_series(lo: usize, hi: usize, seq: &[Dilatation]) -> Result<GrowthFit> {
    let points: Vec<(f64, f64)> = (lo..=hi)
        .map(|n| (n as f64, seq[n - 1].log_distortion))
        .collect();
    if points.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::NumericalFailure(
            "non-finite hyperbolic distance in growth window".into(),
        ));
    }
    let (slope, intercept, residual) = least_squares(&points);
    Ok(GrowthFit {
        slope,
        intercept,
        residual,
        n_lo: lo,
        n_hi: hi,
    })
}

/// Growth fit of the dilatation on the fixed ray at `φ`.
pub fn growth_fit_ray(p: &MapParams, phi: f64, n_lo: usize, n_hi: usize) -> Result<GrowthFit> {
    let (lo, hi) = fit_window(n_lo, n_hi)?;
    fit_series(lo, hi, &dilatation_series_on_ray(p, phi, hi)?)
}

/// Growth fit of the dilatation along the orbit of `z`.
pub fn growth_fit_point(
    p: &MapParams,
    z: ComplexPoint,
    n_lo: usize,
    n_hi: usize,
) -> Result<GrowthFit> {
    let (lo, hi) = fit_window(n_lo, n_hi)?;
    fit_series(lo, hi, &dilatation_series(p, z, hi)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed_rays::fixed_rays;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(k: f64, t: f64) -> MapParams {
        MapParams::new(k, t).unwrap()
    }

    /// Complex dilatation `f_z̄ / f_z` of `Hⁿ` by central differences.
    fn numeric_dilatation(p: &MapParams, z: Complex64, n: usize) -> Complex64 {
        let f = |w: Complex64| (0..n).fold(w, |acc, _| p.map(acc));
        let h = 1e-6 * z.norm();
        let fx = (f(z + c(h, 0.0)) - f(z - c(h, 0.0))) / (2.0 * h);
        let fy = (f(z + c(0.0, h)) - f(z - c(0.0, h))) / (2.0 * h);
        let fz = 0.5 * (fx - c(0.0, 1.0) * fy);
        let fzb = 0.5 * (fx + c(0.0, 1.0) * fy);
        fzb / fz
    }

    #[test]
    fn identity_and_inverse() {
        let id = DiskMobius::identity();
        assert_eq!(id.trace_sq(), 4.0);
        assert!(!id.is_hyperbolic());
        let m = DiskMobius::new(c(1.3, 0.4), c(0.2, -0.7)).unwrap();
        let e = m.compose(&m.inverse());
        assert!((e.a() - c(1.0, 0.0)).norm() < 1e-12 && e.b().norm() < 1e-12);
        assert!(DiskMobius::new(c(0.5, 0.0), c(1.0, 0.0)).is_err());
        assert!(DiskMobius::new(c(1.0, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn composition_matches_application() {
        let m1 = DiskMobius::new(c(1.1, 0.3), c(0.4, 0.1)).unwrap();
        let m2 = DiskMobius::new(c(-0.2, 2.0), c(1.0, -0.5)).unwrap();
        let m3 = DiskMobius::new(c(0.9, -0.8), c(0.3, 0.3)).unwrap();
        for w in [c(0.0, 0.0), c(0.3, -0.5), c(-0.9, 0.1)] {
            let got = m1.compose(&m2).apply(w);
            assert!((got - m1.apply(m2.apply(w))).norm() < 1e-12);
            let l = m1.compose(&m2).compose(&m3).apply(w);
            let r = m1.compose(&m2.compose(&m3)).apply(w);
            assert!((l - r).norm() < 1e-12);
        }
    }

    #[test]
    fn contraction_examples() {
        assert!((contraction_k(4.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(contraction_k(4.0).is_err());
        assert!(contraction_k(3.0).is_err());
        assert!(contraction_k(f64::NAN).is_err());
        assert!(contraction_k(4.0 + 1e-10).unwrap() > 0.9999);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(hyperbolic_dist(c(0.0, 0.0), c(0.0, 0.0)).unwrap(), 0.0);
        let p = params(2.0, 0.0);
        let d = hyperbolic_dist(c(0.0, 0.0), p.mu()).unwrap();
        assert!((d.exp() - 2.0).abs() < 1e-12);
        assert!((d - 2f64.ln()).abs() < 1e-15);
        assert!(hyperbolic_dist(c(1.0, 0.0), c(0.0, 0.0)).is_err());
        // 1 − |w| ≈ 1e-15 still yields a finite, accurate distance
        let w = c(1.0 - 1e-15, 0.0);
        let d = hyperbolic_dist(c(0.0, 0.0), w).unwrap();
        let exact = (2.0f64 / 1e-15).ln();
        assert!((d - exact).abs() < 0.2, "{d} vs {exact}");
    }

    #[test]
    fn ray_factor_example() {
        let p = params(2.0, 0.0);
        let a = fixed_ray_mobius(&p, 0.0).unwrap();
        assert!((a.trace_sq() - 4.5).abs() < 1e-12);
        assert!((contraction_k(a.trace_sq()).unwrap() - 0.5).abs() < 1e-12);
        for w in [c(0.0, 0.0), c(0.2, 0.5)] {
            let want = (c(1.0 / 3.0, 0.0) + w) / (c(1.0, 0.0) + w / 3.0);
            assert!((a.apply(w) - want).norm() < 1e-14);
        }
        assert!(matches!(
            fixed_ray_mobius(&p, 0.5),
            Err(Error::InvalidParameter(_))
        ));
        assert!((a.translation_length().unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ray_traces_match_closed_form() {
        for &(k, t) in &[(4.0, 0.0), (9.0, 0.7), (1.3, -0.4), (5.0, std::f64::consts::FRAC_PI_2)] {
            let p = params(k, t);
            for r in &fixed_rays(&p).unwrap().rays {
                let a = fixed_ray_mobius(&p, r.angle.value()).unwrap();
                assert!((a.trace_sq() - r.trace_sq).abs() < 1e-10 * r.trace_sq);
                assert!(a.is_hyperbolic());
            }
        }
    }

    #[test]
    fn dilatation_on_ray_examples() {
        let p = params(2.0, 0.0);
        let d1 = dilatation_on_ray(&p, 0.0, 1).unwrap();
        assert!((d1.mu - p.mu()).norm() < 1e-15);
        assert!((d1.distortion() - 2.0).abs() < 1e-12);
        let mut prev = 0.0;
        for n in 1..40 {
            let d = dilatation_on_ray(&p, 0.0, n).unwrap();
            assert!(d.log_distortion > prev);
            assert!(d.mu.norm() <= 1.0);
            if n > 5 {
                assert!((d.log_distortion - prev - 2f64.ln()).abs() < 1e-3);
            }
            prev = d.log_distortion;
        }
        // distance keeps growing after 1 − |μ| has underflowed
        let far = dilatation_on_ray(&p, 0.0, 2000).unwrap();
        assert!((far.log_distortion / 2000.0 - 2f64.ln()).abs() < 1e-3);
        assert!(dilatation_on_ray(&p, 0.0, 0).is_err());
    }

    #[test]
    fn chain_matches_finite_differences() {
        for &(k, t) in &[(2.0, 0.0), (3.0, 0.5), (1.4, -1.0)] {
            let p = params(k, t);
            for z in [c(0.3, 0.4), c(-0.5, 0.2), c(0.1, -0.6)] {
                for n in 1..=3 {
                    let chain = dilatation_chain(&p, z, n).unwrap().mu;
                    let fd = numeric_dilatation(&p, z, n);
                    assert!((chain - fd).norm() < 1e-6, "{k} {t} {z} {n}: {chain} vs {fd}");
                }
            }
        }
    }

    #[test]
    fn chain_agrees_on_fixed_rays() {
        let p = params(4.0, 0.3);
        for r in &fixed_rays(&p).unwrap().rays {
            let phi = r.angle.value();
            let z = Complex64::from_polar(0.7, phi);
            for n in [1, 2, 10, 50] {
                let a = dilatation_chain(&p, z, n).unwrap();
                let b = dilatation_on_ray(&p, phi, n).unwrap();
                assert!((a.mu - b.mu).norm() < 1e-10);
                assert!((a.log_distortion - b.log_distortion).abs() < 1e-9 * b.log_distortion.max(1.0));
            }
        }
        assert!(dilatation_chain(&p, c(0.0, 0.0), 3).is_err());
        let d = dilatation_chain(&p, c(0.2, 0.9), 1).unwrap();
        assert!((d.mu - p.mu()).norm() < 1e-15);
    }

    #[test]
    fn series_matches_single_evaluations() {
        let p = params(3.0, 0.2);
        let z = c(0.4, -0.3);
        let seq = dilatation_series(&p, z, 30).unwrap();
        for n in [1, 2, 7, 30] {
            assert_eq!(seq[n - 1], dilatation_chain(&p, z, n).unwrap());
        }
        assert!(dilatation_series(&p, z, 0).unwrap().is_empty());
    }

    #[test]
    fn growth_examples() {
        let p = params(2.0, 0.0);
        let g = growth_fit_ray(&p, 0.0, 10, 60).unwrap();
        assert!((g.slope / 2f64.ln() - 1.0).abs() < 0.01);
        assert!(g.residual.is_finite());
        assert!(growth_fit_ray(&p, 0.0, 10, 15).is_err());

        let p = params(4.0, 0.0);
        let k0 = fixed_rays(&p).unwrap().rays[1].contraction_k;
        let g = growth_fit_point(&p, c(0.3, 0.1), 20, 80).unwrap();
        assert!((g.slope / (1.0 / k0).ln() - 1.0).abs() < 0.01, "{g:?}");

        let p = params(1.0 + 1e-6, 0.0);
        let g = growth_fit_ray(&p, 0.0, 10, 40).unwrap();
        assert!(g.slope.abs() < 1e-2);
    }

    proptest! {
        #[test]
        fn contraction_round_trip(t in 4.0001f64..100.0) {
            let k = contraction_k(t).unwrap();
            prop_assert!(k > 0.0 && k < 1.0);
            prop_assert!((k + 1.0 / k + 2.0 - t).abs() < 1e-12 * t);
        }

        #[test]
        fn distance_is_invariant(
            ar in -2.0f64..2.0, ai in -2.0f64..2.0, br in -1.0f64..1.0, bi in -1.0f64..1.0,
            r1 in 0.0f64..0.95, t1 in -3.1f64..3.1, r2 in 0.0f64..0.95, t2 in -3.1f64..3.1,
        ) {
            let a = c(ar, ai);
            let b = c(br, bi);
            prop_assume!(a.norm_sqr() - b.norm_sqr() > 0.05);
            let m = DiskMobius::new(a, b).unwrap();
            let w1 = Complex64::from_polar(r1, t1);
            let w2 = Complex64::from_polar(r2, t2);
            let d = hyperbolic_dist(w1, w2).unwrap();
            let dm = hyperbolic_dist(m.apply(w1), m.apply(w2)).unwrap();
            prop_assert!((d - dm).abs() < 1e-10 * (1.0 + d));
        }

        #[test]
        fn distortion_identity(r in 0.0f64..0.999_999, t in -3.1f64..3.1) {
            let w = Complex64::from_polar(r, t);
            let d = hyperbolic_dist(c(0.0, 0.0), w).unwrap();
            let k = (1.0 + r) / (1.0 - r);
            prop_assert!((d.exp() - k).abs() < 1e-12 * k);
        }
    }
}
