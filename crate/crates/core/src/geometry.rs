//! Points and axis-aligned windows in ℝ^d for d ∈ {1, 2}.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 2;

pub(crate) fn check_dim(module: &'static str, dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::invalid(
            module,
            format!("dimension must be 1 or 2, got {dim}"),
        ));
    }
    Ok(())
}

/// A vector in ℝ^d. Coordinates beyond the active dimension are kept at zero,
/// so points of the same dimension compare and hash consistently.
#[derive(Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point(pub [f64; MAX_DIM]);

impl Point {
    pub const ORIGIN: Point = Point([0.0; MAX_DIM]);

    pub fn d1(x: f64) -> Self {
        Point([x, 0.0])
    }

    pub fn d2(x: f64, y: f64) -> Self {
        Point([x, y])
    }

    /// Builds a point from a slice of length 1 or 2.
    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        check_dim("geometry", coords.len())?;
        let mut p = [0.0; MAX_DIM];
        p[..coords.len()].copy_from_slice(coords);
        Ok(Point(p))
    }

    /// Same value in every active coordinate.
    pub fn splat(dim: usize, v: f64) -> Self {
        let mut p = [0.0; MAX_DIM];
        p[..dim.min(MAX_DIM)].iter_mut().for_each(|c| *c = v);
        Point(p)
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.0[0]
    }

    #[inline]
    pub fn coord(&self, axis: usize) -> f64 {
        self.0[axis]
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1]
    }

    pub fn scale(&self, s: f64) -> Point {
        Point([self.0[0] * s, self.0[1] * s])
    }

    /// Max-norm over the active coordinates.
    pub fn max_norm(&self) -> f64 {
        self.0[0].abs().max(self.0[1].abs())
    }

    /// Lexicographic total order (NaN-free inputs assumed).
    pub fn lex_cmp(&self, other: &Point) -> std::cmp::Ordering {
        self.0[0]
            .total_cmp(&other.0[0])
            .then(self.0[1].total_cmp(&other.0[1]))
    }

    /// True when every coordinate differs by at most `tol`.
    pub fn close_to(&self, other: &Point, tol: f64) -> bool {
        (self.0[0] - other.0[0]).abs() <= tol && (self.0[1] - other.0[1]).abs() <= tol
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0[0], self.0[1])
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1]])
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1]])
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point([-self.0[0], -self.0[1]])
    }
}

/// Axis-aligned closed box `center + Π [−h_i, h_i]`.
///
/// Zero half-widths are allowed (a degenerate window such as `K = {0}`);
/// operations that divide by the volume reject them.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    dim: usize,
    center: Point,
    half_widths: Point,
}

impl fmt::Debug for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Window[")?;
        for axis in 0..self.dim {
            if axis > 0 {
                write!(f, " x ")?;
            }
            write!(f, "[{}, {}]", self.lo(axis), self.hi(axis))?;
        }
        write!(f, "]")
    }
}

impl Window {
    pub fn new(dim: usize, center: Point, half_widths: Point) -> Result<Self> {
        check_dim("geometry", dim)?;
        for axis in 0..dim {
            let h = half_widths.coord(axis);
            if !(h >= 0.0) || !h.is_finite() || !center.coord(axis).is_finite() {
                return Err(Error::invalid(
                    "geometry",
                    format!("half-widths must be finite and nonnegative, got {h}"),
                ));
            }
        }
        let mut hw = [0.0; MAX_DIM];
        let mut c = [0.0; MAX_DIM];
        hw[..dim].copy_from_slice(&half_widths.0[..dim]);
        c[..dim].copy_from_slice(&center.0[..dim]);
        Ok(Window {
            dim,
            center: Point(c),
            half_widths: Point(hw),
        })
    }

    /// The cube `[−n, n]^d`.
    pub fn centered_cube(dim: usize, half_width: f64) -> Result<Self> {
        Window::new(dim, Point::ORIGIN, Point::splat(dim, half_width))
    }

    /// The interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if hi < lo {
            return Err(Error::invalid("geometry", format!("empty interval [{lo}, {hi}]")));
        }
        Window::new(1, Point::d1(0.5 * (lo + hi)), Point::d1(0.5 * (hi - lo)))
    }

    /// Box from per-axis bounds.
    pub fn from_bounds(lo: Point, hi: Point, dim: usize) -> Result<Self> {
        check_dim("geometry", dim)?;
        let mut c = [0.0; MAX_DIM];
        let mut h = [0.0; MAX_DIM];
        for axis in 0..dim {
            if hi.coord(axis) < lo.coord(axis) {
                return Err(Error::invalid("geometry", "upper bound below lower bound"));
            }
            c[axis] = 0.5 * (lo.coord(axis) + hi.coord(axis));
            h[axis] = 0.5 * (hi.coord(axis) - lo.coord(axis));
        }
        Window::new(dim, Point(c), Point(h))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn half_widths(&self) -> Point {
        self.half_widths
    }

    pub fn half_width(&self, axis: usize) -> f64 {
        self.half_widths.coord(axis)
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.center.coord(axis) - self.half_widths.coord(axis)
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.center.coord(axis) + self.half_widths.coord(axis)
    }

    pub fn lo_corner(&self) -> Point {
        self.center - self.half_widths
    }

    pub fn hi_corner(&self) -> Point {
        self.center + self.half_widths
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| 2.0 * self.half_widths.coord(a)).product()
    }

    /// Closed membership: boundary points belong to the window.
    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim).all(|a| p.coord(a) >= self.lo(a) && p.coord(a) <= self.hi(a))
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        (0..self.dim).all(|a| other.lo(a) >= self.lo(a) && other.hi(a) <= self.hi(a))
    }

    pub fn translate(&self, t: Point) -> Window {
        Window {
            center: self.center + t,
            ..*self
        }
    }

    /// `−B`.
    pub fn reflect(&self) -> Window {
        Window {
            center: -self.center,
            ..*self
        }
    }

    /// Minkowski sum `B + K`.
    pub fn minkowski_sum(&self, k: &Window) -> Window {
        Window {
            dim: self.dim,
            center: self.center + k.center,
            half_widths: self.half_widths + k.half_widths,
        }
    }

    /// Grow every side by `margin` (Minkowski sum with `[−margin, margin]^d`).
    pub fn expand(&self, margin: f64) -> Window {
        let m = Point::splat(self.dim, margin.max(0.0));
        Window {
            half_widths: self.half_widths + m,
            ..*self
        }
    }

    /// Erosion `B ⊖ K = {x : x + K ⊆ B}`; `None` when empty.
    pub fn erode(&self, k: &Window) -> Option<Window> {
        let mut h = [0.0; MAX_DIM];
        for (axis, slot) in h.iter_mut().enumerate().take(self.dim) {
            let v = self.half_widths.coord(axis) - k.half_widths.coord(axis);
            if v < 0.0 {
                return None;
            }
            *slot = v;
        }
        Some(Window {
            dim: self.dim,
            center: self.center - k.center,
            half_widths: Point(h),
        })
    }

    /// Shrink every side by `margin`; `None` when empty.
    pub fn shrink(&self, margin: f64) -> Option<Window> {
        let k = Window {
            dim: self.dim,
            center: Point::ORIGIN,
            half_widths: Point::splat(self.dim, margin),
        };
        self.erode(&k)
    }

    pub fn intersect(&self, other: &Window) -> Option<Window> {
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            lo[axis] = self.lo(axis).max(other.lo(axis));
            hi[axis] = self.hi(axis).min(other.hi(axis));
            if hi[axis] < lo[axis] {
                return None;
            }
        }
        Window::from_bounds(Point(lo), Point(hi), self.dim).ok()
    }

    /// Largest extent over the axes (`2·max h_i`).
    pub fn diameter(&self) -> f64 {
        (0..self.dim)
            .map(|a| 2.0 * self.half_widths.coord(a))
            .fold(0.0, f64::max)
    }

    /// Smallest side length.
    pub fn min_side(&self) -> f64 {
        (0..self.dim)
            .map(|a| 2.0 * self.half_widths.coord(a))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `outer \ int(inner)` split into disjoint boxes (slabs), given `inner ⊆ outer`.
///
/// The slabs overlap only on their boundaries, so the volumes add up exactly.
pub fn box_difference(outer: &Window, inner: Option<&Window>) -> Vec<Window> {
    let Some(inner) = inner else {
        return vec![*outer];
    };
    let dim = outer.dim();
    let mut pieces = Vec::new();
    // Slab decomposition: along axis i the slab lies outside inner's range,
    // earlier axes are clipped to inner's range, later axes span outer.
    for axis in 0..dim {
        for side in 0..2 {
            let mut lo = outer.lo_corner();
            let mut hi = outer.hi_corner();
            for a in 0..axis {
                lo.0[a] = inner.lo(a);
                hi.0[a] = inner.hi(a);
            }
            if side == 0 {
                hi.0[axis] = inner.lo(axis);
            } else {
                lo.0[axis] = inner.hi(axis);
            }
            if hi.0[axis] > lo.0[axis] {
                if let Ok(w) = Window::from_bounds(lo, hi, dim) {
                    pieces.push(w);
                }
            }
        }
    }
    pieces
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_membership() {
        let b = Window::interval(-2.0, 2.0).unwrap();
        assert!(b.contains(&Point::d1(2.0)));
        assert!(b.contains(&Point::d1(-2.0)));
        assert!(!b.contains(&Point::d1(2.0 + 1e-12)));
    }

    #[test]
    fn minkowski_and_erosion() {
        let b = Window::centered_cube(2, 3.0).unwrap();
        let k = Window::centered_cube(2, 1.0).unwrap();
        assert_eq!(b.minkowski_sum(&k).volume(), 64.0);
        assert_eq!(b.erode(&k).unwrap().volume(), 16.0);
        assert!(k.erode(&b).is_none());
    }

    #[test]
    fn difference_volume_is_exact() {
        let outer = Window::centered_cube(2, 4.0).unwrap();
        let inner = Window::from_bounds(Point::d2(-1.0, 0.0), Point::d2(2.0, 3.0), 2).unwrap();
        let pieces = box_difference(&outer, Some(&inner));
        let vol: f64 = pieces.iter().map(Window::volume).sum();
        assert_eq!(vol, 64.0 - 9.0);
    }

    #[test]
    fn rejects_bad_dimension() {
        assert!(Window::centered_cube(3, 1.0).is_err());
        assert!(Point::from_slice(&[]).is_err());
    }
}
