//! Tent test functions with closed-form reflection, Fourier transform and
//! exact (piecewise polynomial) convolutions.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{check_dim, Point, Window};
use crate::numerics::pairwise_sum;

/// `φ(x) = a · Π_i max(0, 1 − |x_i − s_i| / w_i)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestFunction {
    dim: usize,
    half_widths: Point,
    shift: Point,
    amplitude: Complex64,
}

impl TestFunction {
    /// Unit-amplitude tent of half-width `w`, centred at 0, in one dimension.
    pub fn tent(w: f64) -> Result<Self> {
        Self::new(1, Point::d1(w), Point::ORIGIN, Complex64::new(1.0, 0.0))
    }

    pub fn tent_2d(wx: f64, wy: f64) -> Result<Self> {
        Self::new(2, Point::d2(wx, wy), Point::ORIGIN, Complex64::new(1.0, 0.0))
    }

    pub fn new(dim: usize, half_widths: Point, shift: Point, amplitude: Complex64) -> Result<Self> {
        check_dim("measure-core", dim)?;
        for axis in 0..dim {
            let w = half_widths.coord(axis);
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::invalid(
                    "measure-core",
                    format!("tent half-width must be positive, got {w}"),
                ));
            }
        }
        Ok(TestFunction {
            dim,
            half_widths,
            shift,
            amplitude,
        })
    }

    pub fn with_shift(mut self, shift: Point) -> Self {
        self.shift = shift;
        self
    }

    pub fn with_amplitude(mut self, amplitude: Complex64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_widths(&self) -> Point {
        self.half_widths
    }

    pub fn shift(&self) -> Point {
        self.shift
    }

    pub fn amplitude(&self) -> Complex64 {
        self.amplitude
    }

    pub fn eval(&self, x: &Point) -> Complex64 {
        let mut v = 1.0;
        for axis in 0..self.dim {
            let r = (x.coord(axis) - self.shift.coord(axis)).abs() / self.half_widths.coord(axis);
            if r >= 1.0 {
                return Complex64::new(0.0, 0.0);
            }
            v *= 1.0 - r;
        }
        self.amplitude * v
    }

    /// Closed support `shift + Π [−w_i, w_i]`.
    pub fn support(&self) -> Window {
        Window::new(self.dim, self.shift, self.half_widths).expect("validated on construction")
    }

    /// `∫ φ`.
    pub fn integral(&self) -> Complex64 {
        self.amplitude * (0..self.dim).map(|a| self.half_widths.coord(a)).product::<f64>()
    }

    /// `φ̃(s) = conj(φ(−s))`.
    pub fn reflected(&self) -> TestFunction {
        TestFunction {
            shift: -self.shift,
            amplitude: self.amplitude.conj(),
            ..*self
        }
    }

    /// `φ_t(s) = φ(s + t)`, so that `f_φ(α_{−t} μ) = f_{φ_t}(μ)`.
    pub fn orbit_translate(&self, t: Point) -> TestFunction {
        TestFunction {
            shift: self.shift - t,
            ..*self
        }
    }

    /// `φ̂(λ) = ∫ φ(x) e^{−2πi λ·x} dx`, per axis `w · sinc²(wλ) · e^{−2πi λ s}`.
    pub fn fourier(&self, lambda: &Point) -> Complex64 {
        let mut mag = 1.0;
        for axis in 0..self.dim {
            let w = self.half_widths.coord(axis);
            mag *= w * sinc(w * lambda.coord(axis)).powi(2);
        }
        let phase = -2.0 * PI * lambda.dot(&self.shift);
        self.amplitude * Complex64::from_polar(mag, phase)
    }

    /// One-dimensional unit-amplitude factor along `axis` as a piecewise
    /// polynomial.
    pub fn axis_factor(&self, axis: usize) -> PiecewisePolynomial {
        let w = self.half_widths.coord(axis);
        let s = self.shift.coord(axis);
        let c = |x: f64| Complex64::new(x, 0.0);
        PiecewisePolynomial {
            breakpoints: vec![s - w, s, s + w],
            coeffs: vec![vec![c(0.0), c(1.0 / w)], vec![c(1.0), c(-1.0 / w)]],
        }
    }
}

/// `sin(πx)/(πx)` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - (PI * x).powi(2) / 6.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Closed-form `φ̂(λ)` for a tent.
pub fn tent_fourier(phi: &TestFunction, lambda: &Point) -> Complex64 {
    phi.fourier(lambda)
}

/// Compactly supported piecewise polynomial in one variable. On
/// `[b_i, b_{i+1}]` the value is `Σ_k c_{i,k} (t − b_i)^k`; outside
/// `[b_0, b_last]` it vanishes.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePolynomial {
    breakpoints: Vec<f64>,
    coeffs: Vec<Vec<Complex64>>,
}

impl PiecewisePolynomial {
    pub fn new(breakpoints: Vec<f64>, coeffs: Vec<Vec<Complex64>>) -> Result<Self> {
        if breakpoints.len() < 2 || coeffs.len() + 1 != breakpoints.len() {
            return Err(Error::invalid(
                "measure-core",
                "piecewise polynomial needs k+1 breakpoints for k pieces",
            ));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("measure-core", "breakpoints must be strictly increasing"));
        }
        Ok(PiecewisePolynomial { breakpoints, coeffs })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn coeffs(&self) -> &[Vec<Complex64>] {
        &self.coeffs
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().expect("nonempty"))
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().map(|c| c.len().saturating_sub(1)).max().unwrap_or(0)
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let (lo, hi) = self.support();
        if !(t >= lo && t <= hi) {
            return Complex64::new(0.0, 0.0);
        }
        let idx = self
            .breakpoints
            .partition_point(|&b| b <= t)
            .saturating_sub(1)
            .min(self.coeffs.len() - 1);
        let u = t - self.breakpoints[idx];
        self.coeffs[idx]
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * u + c)
    }

    /// Value just left and right of each interior breakpoint.
    pub fn jumps(&self) -> Vec<f64> {
        (1..self.coeffs.len())
            .map(|i| {
                let h = self.breakpoints[i] - self.breakpoints[i - 1];
                let left = self.coeffs[i - 1]
                    .iter()
                    .rev()
                    .fold(Complex64::new(0.0, 0.0), |acc, c| acc * h + c);
                (left - self.coeffs[i][0]).norm()
            })
            .collect()
    }

    pub fn integral(&self) -> Complex64 {
        let parts: Vec<Complex64> = self
            .coeffs
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(c, w)| {
                let h = w[1] - w[0];
                c.iter()
                    .enumerate()
                    .map(|(k, ck)| ck * h.powi(k as i32 + 1) / (k as f64 + 1.0))
                    .sum()
            })
            .collect();
        pairwise_sum(&parts)
    }

    /// Exact convolution `(f ∗ g)(t) = ∫ f(x) g(t − x) dx`.
    ///
    /// The result is piecewise polynomial of degree `deg f + deg g + 1` with
    /// breakpoints at all sums `b_i + c_j`. Each piece is recovered by exact
    /// breakpoint-aligned Gauss–Legendre integration at `degree + 1`
    /// Chebyshev nodes followed by interpolation.
    pub fn convolve(&self, other: &PiecewisePolynomial) -> PiecewisePolynomial {
        let degree = self.degree() + other.degree() + 1;
        let mut bps: Vec<f64> = self
            .breakpoints
            .iter()
            .flat_map(|b| other.breakpoints.iter().map(move |c| b + c))
            .collect();
        bps.sort_by(f64::total_cmp);
        let scale = 1e-12 * (1.0 + bps.iter().fold(0.0f64, |m, b| m.max(b.abs())));
        bps.dedup_by(|a, b| (*a - *b).abs() <= scale);

        let conv_at = |t: f64| -> Complex64 {
            // integrand x ↦ f(x) g(t − x); kinks at b_i and t − c_j
            let mut edges: Vec<f64> = self.breakpoints.clone();
            edges.extend(other.breakpoints.iter().map(|c| t - c));
            edges.sort_by(f64::total_cmp);
            let (flo, fhi) = self.support();
            let mut acc = Vec::with_capacity(edges.len());
            for w in edges.windows(2) {
                let (a, b) = (w[0].max(flo), w[1].min(fhi));
                if b > a {
                    acc.push(gauss_legendre(|x| self.eval(x) * other.eval(t - x), a, b));
                }
            }
            pairwise_sum(&acc)
        };

        let coeffs = bps
            .windows(2)
            .map(|w| {
                let h = w[1] - w[0];
                let nodes: Vec<f64> = (0..=degree)
                    .map(|k| {
                        let theta = PI * (2 * k + 1) as f64 / (2 * (degree + 1)) as f64;
                        0.5 * h * (1.0 - theta.cos())
                    })
                    .collect();
                let values: Vec<Complex64> = nodes.iter().map(|&u| conv_at(w[0] + u)).collect();
                interpolate_monomial(&nodes, &values)
            })
            .collect();
        PiecewisePolynomial { breakpoints: bps, coeffs }
    }
}

// 6-point Gauss–Legendre; exact to degree 11 (piece products here are ≤ 6).
fn gauss_legendre<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64) -> Complex64 {
    const NODES: [f64; 6] = [
        -0.932_469_514_203_152,
        -0.661_209_386_466_264_5,
        -0.238_619_186_083_196_9,
        0.238_619_186_083_196_9,
        0.661_209_386_466_264_5,
        0.932_469_514_203_152,
    ];
    const WEIGHTS: [f64; 6] = [
        0.171_324_492_379_170_3,
        0.360_761_573_048_138_6,
        0.467_913_934_572_691,
        0.467_913_934_572_691,
        0.360_761_573_048_138_6,
        0.171_324_492_379_170_3,
    ];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    NODES
        .iter()
        .zip(WEIGHTS.iter())
        .map(|(x, w)| f(mid + half * x) * *w)
        .sum::<Complex64>()
        * half
}

/// Monomial coefficients of the interpolating polynomial (Newton form,
/// expanded).
fn interpolate_monomial(nodes: &[f64], values: &[Complex64]) -> Vec<Complex64> {
    let n = nodes.len();
    let mut dd = values.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (nodes[i] - nodes[i - level]);
        }
    }
    // Horner expansion of Σ dd_k Π_{j<k} (u − x_j)
    let mut poly = vec![Complex64::new(0.0, 0.0); n];
    for k in (0..n).rev() {
        // poly = poly * (u − x_k) + dd_k
        let mut next = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            if i + 1 < n {
                next[i + 1] += poly[i];
            }
            next[i] -= poly[i] * nodes[k];
        }
        next[0] += dd[k];
        poly = next;
    }
    poly
}

/// Separable kernel `a · Π_i p_i(t_i)`, the product form of a tent
/// convolution in `d` dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    dim: usize,
    factors: Vec<PiecewisePolynomial>,
    amplitude: Complex64,
}

impl Kernel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factor(&self, axis: usize) -> &PiecewisePolynomial {
        &self.factors[axis]
    }

    pub fn amplitude(&self) -> Complex64 {
        self.amplitude
    }

    pub fn eval(&self, t: &Point) -> Complex64 {
        let mut v = self.amplitude;
        for (axis, f) in self.factors.iter().enumerate() {
            let fv = f.eval(t.coord(axis));
            if fv == Complex64::new(0.0, 0.0) {
                return fv;
            }
            v *= fv;
        }
        v
    }

    pub fn support(&self) -> Window {
        let lo: Vec<f64> = self.factors.iter().map(|f| f.support().0).collect();
        let hi: Vec<f64> = self.factors.iter().map(|f| f.support().1).collect();
        Window::from_bounds(
            Point::from_slice(&lo).expect("dim checked"),
            Point::from_slice(&hi).expect("dim checked"),
            self.dim,
        )
        .expect("ordered bounds")
    }

    /// Largest |coordinate| reached by the support.
    pub fn reach(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| {
                let (lo, hi) = f.support();
                lo.abs().max(hi.abs())
            })
            .fold(0.0, f64::max)
    }
}

/// `φ ∗ ψ` for two tents, exact per axis.
pub fn tent_convolve(phi: &TestFunction, psi: &TestFunction) -> Result<Kernel> {
    if phi.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            module: "measure-core",
            expected: phi.dim(),
            got: psi.dim(),
        });
    }
    let factors = (0..phi.dim())
        .map(|axis| phi.axis_factor(axis).convolve(&psi.axis_factor(axis)))
        .collect();
    Ok(Kernel {
        dim: phi.dim(),
        factors,
        amplitude: phi.amplitude() * psi.amplitude(),
    })
}

/// The correlation kernel `φ̃ ∗ ψ` pairing against autocorrelations.
pub fn correlation_kernel(phi: &TestFunction, psi: &TestFunction) -> Result<Kernel> {
    tent_convolve(&phi.reflected(), psi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tent_values_and_support() {
        let t = TestFunction::tent(2.0).unwrap().with_shift(Point::d1(1.0));
        assert_eq!(t.eval(&Point::d1(1.0)), Complex64::new(1.0, 0.0));
        assert_eq!(t.eval(&Point::d1(3.0)), Complex64::new(0.0, 0.0));
        assert_eq!(t.eval(&Point::d1(2.0)), Complex64::new(0.5, 0.0));
        let s = t.support();
        assert_eq!((s.lo(0), s.hi(0)), (-1.0, 3.0));
        assert!(TestFunction::tent(0.0).is_err());
    }

    #[test]
    fn fourier_examples() {
        let t1 = TestFunction::tent(1.0).unwrap();
        assert!((t1.fourier(&Point::d1(0.0)) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(t1.fourier(&Point::d1(1.0)).norm() < 1e-15);
        let half = TestFunction::tent(0.5).unwrap();
        let expected = 2.0 / (PI * PI);
        assert!((half.fourier(&Point::d1(1.0)).re - expected).abs() < 1e-15);
        assert!((expected - 0.202_642).abs() < 1e-6);
    }

    #[test]
    fn tent_self_convolution() {
        let w = 0.75;
        let t = TestFunction::tent(w).unwrap();
        let k = tent_convolve(&t, &t).unwrap();
        let f = k.factor(0);
        assert!((f.eval(0.0).re - 2.0 * w / 3.0).abs() < 1e-14);
        assert_eq!(f.support(), (-2.0 * w, 2.0 * w));
        assert!(f.eval(2.0 * w).norm() < 1e-14);
        assert_eq!(f.degree(), 3);
        assert!(f.jumps().iter().all(|&j| j < 1e-13));
        assert!((f.integral().re - w * w).abs() < 1e-14);
    }

    #[test]
    fn reflection_conjugates_amplitude() {
        let t = TestFunction::tent(1.0)
            .unwrap()
            .with_shift(Point::d1(0.3))
            .with_amplitude(Complex64::new(0.0, 2.0));
        let r = t.reflected();
        let x = Point::d1(0.1);
        assert_eq!(r.eval(&x), t.eval(&(-x)).conj());
    }

    #[test]
    fn interpolation_recovers_cubic() {
        let nodes = [0.0, 0.3, 0.9, 1.4];
        let p = |u: f64| 1.0 - 2.0 * u + 0.5 * u * u * u;
        let values: Vec<Complex64> = nodes.iter().map(|&u| Complex64::new(p(u), 0.0)).collect();
        let c = interpolate_monomial(&nodes, &values);
        let expect = [1.0, -2.0, 0.0, 0.5];
        for (a, b) in c.iter().zip(expect) {
            assert!((a.re - b).abs() < 1e-12);
        }
    }
}
