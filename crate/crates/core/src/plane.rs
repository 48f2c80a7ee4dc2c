//! Partition of the plane into the escaping set and the basin of `0`.
//!
//! Since `|z|² ≤ |H(z)| ≤ K²|z|²`, an orbit that leaves the disk of radius
//! [`ESCAPE_RADIUS`] escapes monotonically and one that enters the disk of
//! radius `1/(2K²)` converges to `0`. Points that do neither within the
//! iteration budget stay `Undecided`.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle::CircleAngle;
use crate::circle;
use crate::error::{invalid, Error, Result};
use crate::fixed_rays::FIXED_RESIDUAL_TOL;
use crate::params::{ComplexPoint, MapParams};

pub const ESCAPE_RADIUS: f64 = 2.0;
/// Largest grid side accepted by [`render_grid`].
pub const MAX_GRID_SIDE: usize = 8192;

/// `1/(2K²)`.
pub fn attract_radius(p: &MapParams) -> f64 {
    0.5 / (p.k() * p.k())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", content = "n")]
pub enum PointClass {
    /// `|Hⁿ(z)| > 2` at the recorded `n`.
    Escaped(u32),
    /// `|Hⁿ(z)| < 1/(2K²)` at the recorded `n`.
    Attracted(u32),
    Undecided,
}

pub fn classify_point(p: &MapParams, z: ComplexPoint, max_iter: u32) -> PointClass {
    let r_att = attract_radius(p);
    let mut w = z;
    for n in 0..=max_iter {
        let r = w.norm();
        if r > ESCAPE_RADIUS {
            return PointClass::Escaped(n);
        }
        if r < r_att {
            return PointClass::Attracted(n);
        }
        if n < max_iter {
            w = p.map(w);
        }
    }
    PointClass::Undecided
}

/// [`classify_point`] for the point `r·e^{iφ}`, iterated in polar form.
///
/// The argument follows [`circle::pinned_step`], so a point on a fixed ray
/// stays on it and its label reflects the radial dynamics on that ray.
pub fn classify_polar(p: &MapParams, r: f64, phi: f64, max_iter: u32) -> PointClass {
    let r_att = attract_radius(p);
    let (mut r, mut phi) = (r, phi);
    for n in 0..=max_iter {
        if r > ESCAPE_RADIUS {
            return PointClass::Escaped(n);
        }
        if r < r_att {
            return PointClass::Attracted(n);
        }
        if n < max_iter {
            r = r * r * p.radial_factor(phi);
            phi = circle::pinned_step(p, phi);
        }
    }
    PointClass::Undecided
}

/// The fixed point `r = 1/(1+(K²−1)cos²(φ−θ))` on the fixed ray at `φ`;
/// inside it the ray is attracted to `0`, outside it escapes.
pub fn radial_fixed_point(p: &MapParams, phi: f64) -> Result<f64> {
    let residual = circle::circle_map(p, phi).distance(CircleAngle::new(phi));
    if residual > FIXED_RESIDUAL_TOL {
        return Err(invalid(format!(
            "angle {phi} is not a fixed ray (residual {residual:e})"
        )));
    }
    Ok(1.0 / p.radial_factor(phi))
}

/// Axis-aligned rectangle of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let ok = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite())
            && x_min < x_max
            && y_min < y_max;
        if !ok {
            return Err(invalid(format!(
                "window [{x_min}, {x_max}]×[{y_min}, {y_max}] is empty or not finite"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    pub fn centered(center: Complex64, width: f64, height: f64) -> Result<Self> {
        Self::new(
            center.re - 0.5 * width,
            center.re + 0.5 * width,
            center.im - 0.5 * height,
            center.im + 0.5 * height,
        )
    }

    /// Center of pixel `(col, row)`; row 0 is the top edge.
    pub fn pixel_center(&self, col: usize, row: usize, width: usize, height: usize) -> Complex64 {
        let dx = (self.x_max - self.x_min) / width as f64;
        let dy = (self.y_max - self.y_min) / height as f64;
        Complex64::new(
            self.x_min + (col as f64 + 0.5) * dx,
            self.y_max - (row as f64 + 0.5) * dy,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridStats {
    pub escaped: usize,
    pub attracted: usize,
    pub undecided: usize,
    pub escaped_fraction: f64,
    pub attracted_fraction: f64,
    pub undecided_fraction: f64,
    pub escape_radius: f64,
    pub attract_radius: f64,
    pub max_iter: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneGrid {
    pub params: MapParams,
    pub window: Window,
    pub width: usize,
    pub height: usize,
    pub max_iter: u32,
    /// Row-major, top row first.
    pub cells: Vec<PointClass>,
}

impl PlaneGrid {
    pub fn get(&self, col: usize, row: usize) -> PointClass {
        self.cells[row * self.width + col]
    }

    pub fn stats(&self) -> GridStats {
        let mut counts = [0usize; 3];
        for c in &self.cells {
            counts[match c {
                PointClass::Escaped(_) => 0,
                PointClass::Attracted(_) => 1,
                PointClass::Undecided => 2,
            }] += 1;
        }
        let total = self.cells.len() as f64;
        GridStats {
            escaped: counts[0],
            attracted: counts[1],
            undecided: counts[2],
            escaped_fraction: counts[0] as f64 / total,
            attracted_fraction: counts[1] as f64 / total,
            undecided_fraction: counts[2] as f64 / total,
            escape_radius: ESCAPE_RADIUS,
            attract_radius: attract_radius(&self.params),
            max_iter: self.max_iter,
        }
    }
}

/// Classify the center of every pixel. Rows are computed in parallel and
/// assembled in order, so the result does not depend on scheduling.
pub fn render_grid(
    p: &MapParams,
    window: Window,
    width: usize,
    height: usize,
    max_iter: u32,
) -> Result<PlaneGrid> {
    if width == 0 || height == 0 {
        return Err(invalid("grid needs at least one pixel per side"));
    }
    if width > MAX_GRID_SIDE || height > MAX_GRID_SIDE {
        return Err(Error::ResourceLimit(format!(
            "grid {width}×{height} exceeds {MAX_GRID_SIDE} pixels per side"
        )));
    }
    let cells: Vec<PointClass> = (0..height)
        .into_par_iter()
        .flat_map_iter(|row| {
            (0..width)
                .map(move |col| classify_point(p, window.pixel_center(col, row, width, height), max_iter))
        })
        .collect();
    Ok(PlaneGrid {
        params: *p,
        window,
        width,
        height,
        max_iter,
        cells,
    })
}

fn hue_to_rgb(h: f64) -> [u8; 3] {
    let h6 = (h.rem_euclid(1.0)) * 6.0;
    let x = 1.0 - (h6 % 2.0 - 1.0).abs();
    let (r, g, b) = match h6 as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [(r * 255.0) as u8, (g * 255.0) as u8, (b * 255.0) as u8]
}

/// Pixel colour: escaped by hue of `log₂ n`, attracted in grey by `n`,
/// undecided black.
pub fn pixel_color(c: PointClass) -> [u8; 3] {
    match c {
        PointClass::Escaped(n) => hue_to_rgb(0.15 * ((n + 1) as f64).log2()),
        PointClass::Attracted(n) => {
            let v = 255u32.saturating_sub(12 * n).max(40) as u8;
            [v, v, v]
        }
        PointClass::Undecided => [0, 0, 0],
    }
}

/// Binary PPM (P6) rendering of the grid.
pub fn write_ppm<W: Write>(grid: &PlaneGrid, mut out: W) -> io::Result<()> {
    write!(out, "P6\n{} {}\n255\n", grid.width, grid.height)?;
    let bytes: Vec<u8> = grid.cells.iter().flat_map(|c| pixel_color(*c)).collect();
    out.write_all(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed_rays::fixed_rays;
    use proptest::prelude::*;

    fn params(k: f64, t: f64) -> MapParams {
        MapParams::new(k, t).unwrap()
    }

    #[test]
    fn classify_examples() {
        for &(k, t) in &[(2.0, 0.0), (7.0, 1.0)] {
            let p = params(k, t);
            assert!(matches!(
                classify_point(&p, Complex64::new(3.0, 0.0), 10),
                PointClass::Escaped(0)
            ));
            assert_eq!(classify_point(&p, Complex64::new(0.0, 0.0), 10), PointClass::Attracted(0));
        }
        let p = params(2.0, 0.0);
        for budget in [1, 100, 5000] {
            assert_eq!(classify_point(&p, Complex64::new(0.25, 0.0), budget), PointClass::Undecided);
        }
    }

    #[test]
    fn radial_fixed_point_examples() {
        let p = params(2.0, 0.0);
        assert_eq!(radial_fixed_point(&p, 0.0).unwrap(), 0.25);
        let p = params(3.0, std::f64::consts::FRAC_PI_2);
        assert!((radial_fixed_point(&p, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(radial_fixed_point(&params(2.0, 0.0), 0.3).is_err());
        for &(k, t) in &[(4.0, 0.0), (8.0, 0.5), (1.7, -0.9)] {
            let p = params(k, t);
            for ray in &fixed_rays(&p).unwrap().rays {
                let phi = ray.angle.value();
                let r = radial_fixed_point(&p, phi).unwrap();
                let z = Complex64::from_polar(r, phi);
                assert!((p.map(z) - z).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn labels_flip_at_radial_fixed_point() {
        let p = params(4.0, 0.0);
        for ray in &fixed_rays(&p).unwrap().rays {
            let phi = ray.angle.value();
            let r = radial_fixed_point(&p, phi).unwrap();
            let inside = classify_polar(&p, r * (1.0 - 1e-6), phi, 200);
            let outside = classify_polar(&p, r * (1.0 + 1e-6), phi, 200);
            assert!(matches!(inside, PointClass::Attracted(_)));
            assert!(matches!(outside, PointClass::Escaped(_)));
        }
    }

    #[test]
    fn render_examples() {
        let p = params(2.0, 0.0);
        let far = Window::new(10.0, 12.0, 10.0, 12.0).unwrap();
        assert_eq!(render_grid(&p, far, 16, 16, 5).unwrap().stats().escaped_fraction, 1.0);
        let r = 0.5 * attract_radius(&p);
        let tiny = Window::new(-r, r, -r, r).unwrap();
        assert_eq!(render_grid(&p, tiny, 16, 16, 5).unwrap().stats().attracted_fraction, 1.0);
        assert!(matches!(
            render_grid(&p, far, MAX_GRID_SIDE + 1, 1, 5),
            Err(Error::ResourceLimit(_))
        ));
        assert!(Window::new(1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn unit_window_render() {
        let p = params(4.0, 0.0);
        let w = Window::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        let lo = render_grid(&p, w, 96, 96, 20).unwrap().stats();
        let hi = render_grid(&p, w, 96, 96, 100).unwrap();
        let s = hi.stats();
        assert!(s.escaped > 0 && s.attracted > 0);
        assert!(s.undecided_fraction < 0.05);
        assert!(s.undecided <= lo.undecided);
        assert_eq!(hi, render_grid(&p, w, 96, 96, 100).unwrap());

        let mut buf = Vec::new();
        write_ppm(&hi, &mut buf).unwrap();
        assert!(buf.starts_with(b"P6\n96 96\n255\n"));
        assert_eq!(buf.len(), b"P6\n96 96\n255\n".len() + 96 * 96 * 3);
    }

    #[test]
    fn polar_matches_cartesian_off_rays() {
        let p = params(3.0, 0.4);
        for i in 0..200 {
            let r = 0.02 + 0.01 * i as f64;
            let phi = -3.0 + 0.031 * i as f64;
            let a = classify_point(&p, Complex64::from_polar(r, phi), 60);
            let b = classify_polar(&p, r, phi, 60);
            if a != PointClass::Undecided && b != PointClass::Undecided {
                assert_eq!(std::mem::discriminant(&a), std::mem::discriminant(&b), "{r} {phi}");
            }
        }
    }

    proptest! {
        #[test]
        fn labels_are_stable_under_larger_budget(
            k in 1.1f64..8.0, t in -1.5f64..1.5, x in -1.5f64..1.5, y in -1.5f64..1.5,
        ) {
            let p = params(k, t);
            let z = Complex64::new(x, y);
            let a = classify_point(&p, z, 30);
            if a != PointClass::Undecided {
                prop_assert_eq!(a, classify_point(&p, z, 300));
            }
        }

        #[test]
        fn labels_agree_with_preimage(
            k in 1.1f64..8.0, t in -1.5f64..1.5, r in 0.01f64..3.0, phi in -3.1f64..3.1, branch in 0usize..2,
        ) {
            let p = params(k, t);
            let z = Complex64::from_polar(r, phi);
            let pre_angle = circle::preimages(&p, phi)[branch].value();
            let pre_r = (r / p.radial_factor(pre_angle)).sqrt();
            let w = Complex64::from_polar(pre_r, pre_angle);
            prop_assert!((p.map(w) - z).norm() < 1e-9 * (1.0 + r));
            let a = classify_point(&p, z, 100);
            let b = classify_point(&p, w, 101);
            match (a, b) {
                (PointClass::Escaped(_), c) => prop_assert!(matches!(c, PointClass::Escaped(_))),
                (PointClass::Attracted(_), c) => prop_assert!(matches!(c, PointClass::Attracted(_))),
                _ => {}
            }
        }
    }
}
