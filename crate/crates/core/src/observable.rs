//! Observables on the space of measures and their evaluation along orbits.
//!
//! Orbit convention: `(T^t h)(ω) = h(α_{−t} ω)`, and `α_{−t}` moves every atom
//! by `−t`. For the pairing observable this gives
//! `f_φ(α_{−t} ω) = Σ_x w_x φ(t − x)`.

use num_complex::Complex64;

use crate::geometry::{Point, Window};
use crate::measure::AtomicMeasure;
use crate::testfn::TestFunction;

/// Bounded Lipschitz map `z ↦ clamp(Σ_k c_k (Re z)^k, lo, hi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClampedPolynomial {
    pub coeffs: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl ClampedPolynomial {
    /// `clamp(x, lo, hi)`.
    pub fn clamp(lo: f64, hi: f64) -> Self {
        ClampedPolynomial {
            coeffs: vec![0.0, 1.0],
            lo,
            hi,
        }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        let x = z.re;
        let v = self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        Complex64::new(v.clamp(self.lo, self.hi), 0.0)
    }
}

/// The supported observable forms.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Constant(Complex64),
    /// `f_φ`.
    Pairing(TestFunction),
    /// `g ∘ f_φ`.
    Composed { map: ClampedPolynomial, phi: TestFunction },
    /// Finite product of the above.
    Product(Vec<Observable>),
}

impl Observable {
    pub fn pairing(phi: TestFunction) -> Self {
        Observable::Pairing(phi)
    }

    pub fn composed(map: ClampedPolynomial, phi: TestFunction) -> Self {
        Observable::Composed { map, phi }
    }

    pub fn constant(c: f64) -> Self {
        Observable::Constant(Complex64::new(c, 0.0))
    }

    fn test_functions(&self) -> Vec<&TestFunction> {
        match self {
            Observable::Constant(_) => Vec::new(),
            Observable::Pairing(phi) | Observable::Composed { phi, .. } => vec![phi],
            Observable::Product(fs) => fs.iter().flat_map(|f| f.test_functions()).collect(),
        }
    }

    /// Dimension implied by the test functions (`None` for constants).
    pub fn dim(&self) -> Option<usize> {
        self.test_functions().first().map(|p| p.dim())
    }

    /// `h(α_{−t} ω)`.
    pub fn orbit_value(&self, omega: &AtomicMeasure, t: &Point) -> Complex64 {
        match self {
            Observable::Constant(c) => *c,
            Observable::Pairing(phi) => orbit_pairing(phi, omega, t),
            Observable::Composed { map, phi } => map.apply(orbit_pairing(phi, omega, t)),
            Observable::Product(fs) => fs
                .iter()
                .fold(Complex64::new(1.0, 0.0), |acc, f| acc * f.orbit_value(omega, t)),
        }
    }

    /// Region of atom positions that `orbit_value` reads for `t ∈ region`:
    /// the union over test functions of `region − supp φ`. `None` when the
    /// observable reads no atoms.
    pub fn reach(&self, region: &Window) -> Option<Window> {
        self.test_functions()
            .into_iter()
            .map(|phi| region.minkowski_sum(&phi.support().reflect()))
            .reduce(|a, b| hull(&a, &b))
    }

    /// Kink locations along `axis` of `t ↦ h(α_{−t} ω)` within `[lo, hi]`.
    pub fn breakpoints(&self, omega: &AtomicMeasure, axis: usize, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for phi in self.test_functions() {
            let w = phi.half_widths().coord(axis);
            let s = phi.shift().coord(axis);
            // φ(t − x) has kinks at t = x + s + {−w, 0, w}
            let atoms: &[crate::measure::Atom] = if axis == 0 {
                omega.atoms_in_x_range(lo - s - w, hi - s + w)
            } else {
                omega.atoms()
            };
            for a in atoms {
                let base = a.position.coord(axis) + s;
                for k in [base - w, base, base + w] {
                    if k > lo && k < hi {
                        out.push(k);
                    }
                }
            }
        }
        out
    }
}

/// Smallest box containing both.
pub(crate) fn hull(a: &Window, b: &Window) -> Window {
    let dim = a.dim();
    let mut lo = Point::ORIGIN;
    let mut hi = Point::ORIGIN;
    for ax in 0..dim {
        lo.0[ax] = a.lo(ax).min(b.lo(ax));
        hi.0[ax] = a.hi(ax).max(b.hi(ax));
    }
    Window::from_bounds(lo, hi, dim).expect("ordered bounds")
}

/// `f_φ(α_{−t} ω) = Σ_x w_x φ(t − x)`.
pub fn orbit_pairing(phi: &TestFunction, omega: &AtomicMeasure, t: &Point) -> Complex64 {
    let s = phi.shift().x();
    let w = phi.half_widths().x();
    let lo = t.x() - s - w;
    let hi = t.x() - s + w;
    omega
        .atoms_in_x_range(lo, hi)
        .iter()
        .map(|a| a.weight * phi.eval(&(*t - a.position)))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Window;

    #[test]
    fn pairing_orbit_matches_translated_pairing() {
        let omega = AtomicMeasure::from_positions(1, [-1.0, 0.3, 2.0].map(Point::d1)).unwrap();
        let phi = TestFunction::tent(1.5).unwrap().with_shift(Point::d1(0.2));
        let h = Observable::pairing(phi);
        for t in [-1.0, 0.0, 0.7, 2.5] {
            let t = Point::d1(t);
            let direct = omega.translate(-t).pair(&phi).unwrap();
            assert!((h.orbit_value(&omega, &t) - direct).norm() < 1e-14);
        }
    }

    #[test]
    fn clamp_map() {
        let g = ClampedPolynomial::clamp(0.0, 1.0);
        assert_eq!(g.apply(Complex64::new(1.7, 0.0)).re, 1.0);
        assert_eq!(g.apply(Complex64::new(-0.2, 0.0)).re, 0.0);
        assert_eq!(g.apply(Complex64::new(0.4, 0.0)).re, 0.4);
    }

    #[test]
    fn reach_covers_test_function_support() {
        let phi = TestFunction::tent(0.5).unwrap().with_shift(Point::d1(1.0));
        let h = Observable::pairing(phi);
        let r = h.reach(&Window::interval(-2.0, 2.0).unwrap()).unwrap();
        assert_eq!((r.lo(0), r.hi(0)), (-3.5, 1.5));
        assert!(Observable::constant(1.0).reach(&Window::interval(0.0, 1.0).unwrap()).is_none());
    }
}
