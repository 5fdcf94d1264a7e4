//! Dynamical side: eigenfunction averages, orbit autocovariances of
//! observables and the ε-almost-period search on sampled correlations.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autocorrelation::{smoothed_autocorr_many, AutocorrEstimate};
use crate::averaging::{integrate_over, observable_breaks, BoxSequence};
use crate::error::{Error, Result};
use crate::generators::Patch;
use crate::geometry::Point;
use crate::observable::{hull, Observable};
use crate::testfn::TestFunction;

/// `A_n(λ) = (1/|B_n|) ∫_{B_n} e^{−2πi λ·t} f_φ(α_{−t}ω) dt`.
pub fn eigen_average(omega_big: &Patch, phi: &TestFunction, lambda: &Point, seq: &BoxSequence, n: usize) -> Result<Complex64> {
    let bn = seq.get(n)?;
    if phi.dim() != omega_big.dim() || bn.dim() != omega_big.dim() {
        return Err(Error::DimensionMismatch {
            module: "diffraction-spectral",
            expected: omega_big.dim(),
            got: phi.dim(),
        });
    }
    let h = Observable::pairing(*phi);
    let reach = h.reach(bn).expect("pairing reads atoms");
    omega_big.require_covers(&reach, "diffraction-spectral", "eigen average")?;
    let f = |t: &Point| {
        let (s, c) = (-2.0 * PI * lambda.dot(t)).sin_cos();
        Complex64::new(c, s) * h.orbit_value(&omega_big.measure, t)
    };
    let breaks = observable_breaks(&h, omega_big, bn, Point::ORIGIN);
    Ok(integrate_over(&f, bn, breaks) / bn.volume())
}

/// `C_h(t) = (1/|B_n|) ∫_{B_n} conj(h(α_{−s}ω)) h(α_{−s−t}ω) ds`.
pub fn orbit_autocovariance(omega_big: &Patch, h: &Observable, seq: &BoxSequence, n: usize, t: &Point) -> Result<Complex64> {
    let bn = seq.get(n)?;
    if let Some(d) = h.dim() {
        if d != omega_big.dim() {
            return Err(Error::DimensionMismatch {
                module: "diffraction-spectral",
                expected: omega_big.dim(),
                got: d,
            });
        }
    }
    if let (Some(a), Some(b)) = (h.reach(bn), h.reach(&bn.translate(*t))) {
        omega_big.require_covers(&hull(&a, &b), "diffraction-spectral", "orbit autocovariance")?;
    }
    Ok(autocovariance_unchecked(omega_big, h, bn, t))
}

fn autocovariance_unchecked(omega_big: &Patch, h: &Observable, bn: &crate::geometry::Window, t: &Point) -> Complex64 {
    let omega = &omega_big.measure;
    let f = |s: &Point| h.orbit_value(omega, s).conj() * h.orbit_value(omega, &(*s + *t));
    let mut breaks = observable_breaks(h, omega_big, bn, Point::ORIGIN);
    let shifted = observable_breaks(h, omega_big, bn, *t);
    for (b, s) in breaks.iter_mut().zip(shifted) {
        b.extend(s);
    }
    integrate_over(&f, bn, breaks) / bn.volume()
}

const SUBSTEPS: usize = 8;

/// A correlation sampled at `t_i = i / per_unit`, `i = −m..=m` (1d).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledCorrelation {
    pub per_unit: usize,
    /// Values for `i = −m..=m`.
    pub values: Vec<Complex64>,
}

impl SampledCorrelation {
    pub fn half_len(&self) -> usize {
        self.values.len() / 2
    }

    /// Largest `|t|` sampled.
    pub fn range(&self) -> f64 {
        self.half_len() as f64 / self.per_unit as f64
    }

    pub fn t(&self, i: isize) -> f64 {
        i as f64 / self.per_unit as f64
    }

    pub fn at(&self, i: isize) -> Complex64 {
        self.values[(i + self.half_len() as isize) as usize]
    }

    fn indices(per_unit: usize, range: f64) -> Result<Vec<isize>> {
        if per_unit == 0 || !(range >= 0.0) {
            return Err(Error::invalid("diffraction-spectral", "sampling needs per_unit > 0 and range ≥ 0"));
        }
        let m = (range * per_unit as f64).ceil() as isize;
        Ok((-m..=m).collect())
    }

    /// Samples `(φ̃ ∗ ψ ∗ γ)(t)` over `[−range, range]`.
    pub fn from_autocorr(
        gamma: &AutocorrEstimate,
        phi: &TestFunction,
        psi: &TestFunction,
        per_unit: usize,
        range: f64,
    ) -> Result<Self> {
        let ts: Vec<Point> = Self::indices(per_unit, range)?
            .into_iter()
            .map(|i| Point::d1(i as f64 / per_unit as f64))
            .collect();
        Ok(SampledCorrelation {
            per_unit,
            values: smoothed_autocorr_many(gamma, phi, psi, &ts)?,
        })
    }

    /// Samples `C_h(t)` over `[−range, range]`. The integral over `B_n` is a
    /// midpoint rule with `SUBSTEPS` nodes per lag step, so each lag reuses
    /// one table of orbit values.
    pub fn from_observable(
        omega_big: &Patch,
        h: &Observable,
        seq: &BoxSequence,
        n: usize,
        per_unit: usize,
        range: f64,
    ) -> Result<Self> {
        let bn = seq.get(n)?;
        if bn.dim() != 1 {
            return Err(Error::invalid("diffraction-spectral", "sampled correlations are one-dimensional"));
        }
        let idx = Self::indices(per_unit, range)?;
        let extreme = Point::d1(idx[0] as f64 / per_unit as f64);
        if let Some(r) = h.reach(&bn.minkowski_sum(&crate::geometry::Window::interval(extreme.x(), -extreme.x())?)) {
            omega_big.require_covers(&r, "diffraction-spectral", "sampled autocovariance")?;
        }
        let m = idx.len() / 2;
        let ds = 1.0 / (per_unit * SUBSTEPS) as f64;
        let inner = ((bn.hi(0) - bn.lo(0)) / ds).round() as usize;
        let pad = m * SUBSTEPS;
        let start = bn.lo(0) - pad as f64 * ds;
        let table: Vec<Complex64> = (0..inner + 2 * pad)
            .into_par_iter()
            .map(|j| h.orbit_value(&omega_big.measure, &Point::d1(start + (j as f64 + 0.5) * ds)))
            .collect();
        let scale = ds / bn.volume();
        let values = idx
            .par_iter()
            .map(|&i| {
                let off = (pad as isize + i * SUBSTEPS as isize) as usize;
                let terms: Vec<Complex64> = (0..inner).map(|j| table[pad + j].conj() * table[off + j]).collect();
                crate::numerics::pairwise_sum(&terms) * scale
            })
            .collect();
        Ok(SampledCorrelation { per_unit, values })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostPeriods {
    pub periods: Vec<f64>,
    /// Largest gap between consecutive accepted `t` in `[−T, T]`, counting
    /// the gaps to the ends of the scan range; infinite if none accepted.
    pub max_gap: f64,
    pub epsilon: f64,
    pub scan: f64,
    pub overlap: f64,
}

impl AlmostPeriods {
    /// Relative-denseness gate.
    pub fn passes(&self, gap_limit: f64) -> bool {
        !self.periods.is_empty() && self.max_gap <= gap_limit
    }
}

/// Grid points `t ∈ [−scan, scan]` with `sup_{|s| ≤ overlap} |g(t+s) − g(s)| < ε`.
pub fn almost_periods(g: &SampledCorrelation, scan: f64, overlap: f64, epsilon: f64) -> Result<AlmostPeriods> {
    if !(epsilon > 0.0) || !(scan >= 0.0) || !(overlap >= 0.0) {
        return Err(Error::invalid("diffraction-spectral", "need ε > 0 and nonnegative ranges"));
    }
    let pu = g.per_unit as f64;
    let mt = (scan * pu).floor() as isize;
    let ms = (overlap * pu).floor() as isize;
    if (mt + ms) as usize > g.half_len() {
        return Err(Error::invalid(
            "diffraction-spectral",
            format!(
                "insufficient sample range: need {} but correlation is sampled to {}",
                scan + overlap,
                g.range()
            ),
        ));
    }
    let accepted: Vec<bool> = (-mt..=mt)
        .into_par_iter()
        .map(|i| (-ms..=ms).all(|s| (g.at(i + s) - g.at(s)).norm() < epsilon))
        .collect();
    let periods: Vec<f64> = (-mt..=mt)
        .zip(&accepted)
        .filter(|(_, &a)| a)
        .map(|(i, _)| g.t(i))
        .collect();
    let t_end = mt as f64 / pu;
    let max_gap = if periods.is_empty() {
        f64::INFINITY
    } else {
        let mut gap: f64 = (periods[0] + t_end).max(t_end - periods[periods.len() - 1]);
        for w in periods.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        gap
    };
    Ok(AlmostPeriods {
        periods,
        max_gap,
        epsilon,
        scan,
        overlap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autocorrelation::{autocorr_for, smoothed_autocorr, AutocorrOptions};
    use crate::generators::GeneratorSpec;
    use crate::geometry::Window;
    use crate::measure::AtomicMeasure;
    use crate::observable::ClampedPolynomial;

    fn lattice_patch(half: f64) -> Patch {
        Patch::generate(&GeneratorSpec::lattice(1.0), &Window::interval(-half, half).unwrap()).unwrap()
    }

    #[test]
    fn eigen_average_lattice() {
        let n = 200;
        let seq = BoxSequence::integer_cubes(1, n).unwrap();
        let patch = lattice_patch(n as f64 + 2.0);
        let phi = TestFunction::tent(0.5).unwrap();
        let a = eigen_average(&patch, &phi, &Point::d1(1.0), &seq, n).unwrap();
        let want = 4.0 / PI.powi(4);
        assert!((a.norm_sqr() - want).abs() < 0.02 * want, "{}", a.norm_sqr());
        let tau = crate::generators::TAU;
        let irr = eigen_average(&patch, &phi, &Point::d1(1.0 / tau), &seq, n).unwrap();
        assert!(irr.norm() <= 10.0 / n as f64);
        let empty = Patch::new(AtomicMeasure::empty(1), patch.window).unwrap();
        assert_eq!(eigen_average(&empty, &phi, &Point::d1(1.0), &seq, n).unwrap().norm(), 0.0);
        assert!(eigen_average(&lattice_patch(n as f64), &phi, &Point::d1(1.0), &seq, n).is_err());
    }

    #[test]
    fn autocovariance_cases() {
        let n = 40;
        let seq = BoxSequence::integer_cubes(1, n).unwrap();
        let patch = lattice_patch(60.0);
        let one = Observable::constant(1.0);
        assert!((orbit_autocovariance(&patch, &one, &seq, n, &Point::d1(2.3)).unwrap().re - 1.0).abs() < 1e-12);

        let phi = TestFunction::tent(0.5).unwrap();
        let g = Observable::composed(ClampedPolynomial::clamp(0.0, 1.0), phi);
        let c0 = orbit_autocovariance(&patch, &g, &seq, n, &Point::ORIGIN).unwrap();
        let c3 = orbit_autocovariance(&patch, &g, &seq, n, &Point::d1(3.0)).unwrap();
        assert!((c0 - c3).norm() < 1e-12);

        let h = Observable::pairing(phi);
        let gamma = autocorr_for(&patch, &seq, n, AutocorrOptions::default()).unwrap();
        for t in [0.0, 0.25, 1.0, 2.5] {
            let t = Point::d1(t);
            let a = orbit_autocovariance(&patch, &h, &seq, n, &t).unwrap();
            let b = smoothed_autocorr(&gamma, &phi, &phi, &t).unwrap();
            assert!((a - b).norm() <= 20.0 / n as f64);
        }
    }

    #[test]
    fn tabulated_matches_quadrature() {
        let n = 30;
        let seq = BoxSequence::integer_cubes(1, n).unwrap();
        let patch = Patch::generate(&GeneratorSpec::fibonacci(), &Window::interval(-45.0, 45.0).unwrap()).unwrap();
        let phi = TestFunction::tent(1.0).unwrap();
        let h = Observable::composed(ClampedPolynomial::clamp(0.0, 0.5), phi);
        let g = SampledCorrelation::from_observable(&patch, &h, &seq, n, 4, 5.0).unwrap();
        for i in [-20isize, -3, 0, 7, 13] {
            let exact = orbit_autocovariance(&patch, &h, &seq, n, &Point::d1(g.t(i))).unwrap();
            assert!((g.at(i) - exact).norm() < 1e-4, "{i}: {} vs {exact}", g.at(i));
        }
    }

    #[test]
    fn lattice_almost_periods_are_integers() {
        let n = 20;
        let seq = BoxSequence::integer_cubes(1, n).unwrap();
        let patch = lattice_patch(40.0);
        let h = Observable::pairing(TestFunction::tent(0.5).unwrap());
        let g = SampledCorrelation::from_observable(&patch, &h, &seq, n, 8, 12.0).unwrap();
        for eps in [1e-3, 1e-6, 1e-9] {
            let ap = almost_periods(&g, 10.0, 2.0, eps).unwrap();
            assert_eq!(ap.periods, (-10..=10).map(|k| k as f64).collect::<Vec<_>>());
            assert_eq!(ap.max_gap, 1.0);
        }
        assert!(almost_periods(&g, 11.0, 2.0, 1e-3).is_err());
    }

    #[test]
    fn max_gap_counts_scan_edges() {
        let mut values = vec![Complex64::new(0.0, 0.0); 41];
        values[20] = Complex64::new(1.0, 0.0);
        let g = SampledCorrelation { per_unit: 1, values };
        let ap = almost_periods(&g, 10.0, 0.0, 0.5).unwrap();
        assert_eq!(ap.max_gap, 10.0);
        let none = almost_periods(&g, 10.0, 1.0, 0.5).unwrap();
        assert_eq!(none.periods, vec![0.0]);
        assert!(!none.passes(5.0));
    }
}
