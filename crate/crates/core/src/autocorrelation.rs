//! Empirical autocorrelations `γ_n = (ω̃_B ∗ ω_B)/|B|`, their smoothing by
//! correlation kernels `φ̃ ∗ ψ`, and the ensemble side `⟨f_φ, T^t f_ψ⟩`.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaging::BoxSequence;
use crate::error::{Error, Result};
use crate::generators::{generate, replicate, GeneratorSpec, Patch};
use crate::geometry::{Point, Window};
use crate::measure::{Atom, AtomicMeasure, DEFAULT_PAIR_LIMIT, MERGE_TOL};
use crate::numerics::pairwise_sum;
use crate::observable::{hull, orbit_pairing};
use crate::testfn::{correlation_kernel, Kernel, TestFunction};

/// Default range of retained pair differences.
pub const DEFAULT_R_MAX: f64 = 20.0;

/// `γ_n`, truncated to differences with max-norm at most `r_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct AutocorrEstimate {
    pub differences: AtomicMeasure,
    pub norm_volume: f64,
    pub window_index: Option<usize>,
    pub r_max: f64,
    pub estimator: Estimator,
}

/// Which finite-window estimator of the autocorrelation to form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// `ω̃_B ∗ ω_B / |B|`.
    #[default]
    Restricted,
    /// `(ω̃ ∗ ω_B + ω̃_B ∗ ω) / (2|B|)`: pairs with one end in `B`, the other
    /// anywhere within `r_max`. Needs `ω` on `B + [−r_max, r_max]^d`; has no
    /// `(1 − |z|/diam B)` edge taper.
    OneSided,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Restricted => "restricted",
            Estimator::OneSided => "one_sided",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AutocorrOptions {
    pub r_max: f64,
    pub pair_limit: usize,
    pub estimator: Estimator,
}

impl Default for AutocorrOptions {
    fn default() -> Self {
        AutocorrOptions {
            r_max: DEFAULT_R_MAX,
            pair_limit: DEFAULT_PAIR_LIMIT,
            estimator: Estimator::Restricted,
        }
    }
}

impl AutocorrOptions {
    pub fn with_r_max(r_max: f64) -> Self {
        AutocorrOptions {
            r_max,
            ..Self::default()
        }
    }

    pub fn one_sided(mut self) -> Self {
        self.estimator = Estimator::OneSided;
        self
    }
}

/// Rebuilds a measure from its lexicographically nonnegative half so that
/// `γ(−z) = conj(γ(z))` holds bit for bit.
fn hermitian_from_half(dim: usize, half: &AtomicMeasure) -> AtomicMeasure {
    let mut all = Vec::with_capacity(2 * half.len());
    for a in half.atoms() {
        if a.position.max_norm() <= MERGE_TOL {
            all.push(Atom::new(Point::ORIGIN, Complex64::new(a.weight.re, 0.0)));
        } else if a.position.lex_cmp(&Point::ORIGIN) == Ordering::Greater {
            all.push(*a);
            all.push(Atom::new(-a.position, a.weight.conj()));
        }
    }
    AtomicMeasure::from_unsorted(dim, all)
}

/// Atoms `(y − x, conj(w_x) w_y · scale)` for `y ∈ ys` and `x ∈ xs` within
/// `r` (max-norm); with `half_only` only lexicographically nonnegative
/// differences are kept.
fn difference_atoms(xs: &[Atom], ys: &[Atom], r: f64, scale: f64, half_only: bool) -> Vec<Atom> {
    ys.par_iter()
        .flat_map_iter(|y| {
            let yx = y.position.x();
            let lo = xs.partition_point(|a| a.position.x() < yx - r);
            let hi = xs.partition_point(|a| a.position.x() <= yx + r);
            xs[lo..hi].iter().filter_map(move |x| {
                let z = y.position - x.position;
                if z.max_norm() > r || (half_only && z.lex_cmp(&Point::ORIGIN) == Ordering::Less) {
                    return None;
                }
                Some(Atom::new(z, x.weight.conj() * y.weight * scale))
            })
        })
        .collect()
}

fn count_pairs(xs: &[Atom], ys: &[Atom], r: f64) -> usize {
    ys.iter()
        .map(|y| {
            let yx = y.position.x();
            xs.partition_point(|a| a.position.x() <= yx + r) - xs.partition_point(|a| a.position.x() < yx - r)
        })
        .sum()
}

/// `γ = (ω̃_B ∗ ω_B)/|B|` (or the one-sided variant) keeping differences
/// within `r_max`.
pub fn empirical_autocorr(patch: &Patch, b: &Window, opts: AutocorrOptions) -> Result<AutocorrEstimate> {
    if patch.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            module: "autocorrelation",
            expected: patch.dim(),
            got: b.dim(),
        });
    }
    if !(opts.r_max > 0.0) {
        return Err(Error::invalid("autocorrelation", "r_max must be positive"));
    }
    if !(b.volume() > 0.0) {
        return Err(Error::invalid("autocorrelation", "window volume must be positive"));
    }
    let r = opts.r_max;
    let outer = match opts.estimator {
        Estimator::Restricted => *b,
        Estimator::OneSided => b.expand(r),
    };
    patch.require_covers(&outer, "autocorrelation", "empirical autocorrelation")?;
    let ys = patch.measure.restrict(b);
    let xs = patch.measure.restrict(&outer);
    let pairs = count_pairs(xs.atoms(), ys.atoms(), r);
    if pairs > opts.pair_limit {
        return Err(Error::PairLimit {
            module: "autocorrelation",
            pairs,
            limit: opts.pair_limit,
        });
    }
    let vol = b.volume();
    let dim = b.dim();
    let half = match opts.estimator {
        // the half z ≥ 0 determines the rest
        Estimator::Restricted => AtomicMeasure::from_unsorted(dim, difference_atoms(ys.atoms(), ys.atoms(), r, 1.0 / vol, true)),
        Estimator::OneSided => {
            let mut atoms = difference_atoms(xs.atoms(), ys.atoms(), r, 0.5 / vol, false);
            let mirror: Vec<Atom> = atoms.iter().map(|a| Atom::new(-a.position, a.weight.conj())).collect();
            atoms.extend(mirror);
            AtomicMeasure::from_unsorted(dim, atoms)
        }
    };
    Ok(AutocorrEstimate {
        differences: hermitian_from_half(dim, &half),
        norm_volume: vol,
        window_index: None,
        r_max: r,
        estimator: opts.estimator,
    })
}

/// `γ_n` for the `n`-th box of a sequence.
pub fn autocorr_for(patch: &Patch, seq: &BoxSequence, n: usize, opts: AutocorrOptions) -> Result<AutocorrEstimate> {
    let mut g = empirical_autocorr(patch, seq.get(n)?, opts)?;
    g.window_index = Some(n);
    Ok(g)
}

impl AutocorrEstimate {
    /// Exact check of `γ(−z) = conj(γ(z))`.
    pub fn is_hermitian(&self) -> bool {
        let atoms = self.differences.atoms();
        let n = atoms.len();
        (0..n).all(|i| {
            let a = atoms[i];
            let b = atoms[n - 1 - i];
            a.position == -b.position && a.weight == b.weight.conj()
        })
    }

    fn check_range(&self, kernel: &Kernel, t: &Point) -> Result<()> {
        let needed = (0..kernel.dim())
            .map(|ax| {
                let (lo, hi) = kernel.factor(ax).support();
                (t.coord(ax) - lo).abs().max((t.coord(ax) - hi).abs())
            })
            .fold(0.0, f64::max);
        if needed > self.r_max + 1e-12 {
            return Err(Error::KernelRange {
                needed,
                retained: self.r_max,
            });
        }
        Ok(())
    }

    /// `Σ_z γ(z) K(t − z)`.
    pub fn smooth(&self, kernel: &Kernel, t: &Point) -> Result<Complex64> {
        if kernel.dim() != self.differences.dim() {
            return Err(Error::DimensionMismatch {
                module: "autocorrelation",
                expected: self.differences.dim(),
                got: kernel.dim(),
            });
        }
        self.check_range(kernel, t)?;
        Ok(self.smooth_unchecked(kernel, t))
    }

    fn smooth_unchecked(&self, kernel: &Kernel, t: &Point) -> Complex64 {
        let (lo, hi) = kernel.factor(0).support();
        let terms: Vec<Complex64> = self
            .differences
            .atoms_in_x_range(t.x() - hi, t.x() - lo)
            .iter()
            .map(|a| a.weight * kernel.eval(&(*t - a.position)))
            .collect();
        pairwise_sum(&terms)
    }

    /// `Σ_z |γ(z)| |K(t − z)|`, the total-variation pairing.
    pub fn smooth_abs(&self, kernel: &Kernel, t: &Point) -> Result<f64> {
        self.check_range(kernel, t)?;
        let (lo, hi) = kernel.factor(0).support();
        Ok(self
            .differences
            .atoms_in_x_range(t.x() - hi, t.x() - lo)
            .iter()
            .map(|a| a.weight.norm() * kernel.eval(&(*t - a.position)).norm())
            .sum())
    }

    /// Columnar text with a `#` header carrying the normalisation.
    pub fn write_columnar<W: Write>(&self, mut out: W) -> Result<()> {
        let idx = self.window_index.map_or("none".to_string(), |n| n.to_string());
        writeln!(
            out,
            "# norm_volume={:.16e} window_index={idx} r_max={:.16e} estimator={}",
            self.norm_volume,
            self.r_max,
            self.estimator.as_str()
        )?;
        self.differences.write_columnar(out)
    }

    pub fn read_columnar<R: BufRead>(mut input: R) -> Result<Self> {
        let mut header = String::new();
        input.read_line(&mut header)?;
        let bad = || Error::invalid("autocorrelation", format!("malformed header {header:?}"));
        let mut norm_volume = None;
        let mut window_index = None;
        let mut r_max = None;
        let mut estimator = Estimator::Restricted;
        for field in header.trim_start_matches('#').split_whitespace() {
            let (k, v) = field.split_once('=').ok_or_else(bad)?;
            match k {
                "norm_volume" => norm_volume = Some(v.parse::<f64>().map_err(|_| bad())?),
                "r_max" => r_max = Some(v.parse::<f64>().map_err(|_| bad())?),
                "estimator" if v == "one_sided" => estimator = Estimator::OneSided,
                "window_index" if v != "none" => window_index = Some(v.parse::<usize>().map_err(|_| bad())?),
                _ => {}
            }
        }
        Ok(AutocorrEstimate {
            differences: AtomicMeasure::read_columnar(input)?,
            norm_volume: norm_volume.ok_or_else(bad)?,
            window_index,
            r_max: r_max.ok_or_else(bad)?,
            estimator,
        })
    }
}

/// `(φ̃ ∗ ψ ∗ γ)(t)`, the estimate of `⟨f_φ, T^t f_ψ⟩`.
pub fn smoothed_autocorr(gamma: &AutocorrEstimate, phi: &TestFunction, psi: &TestFunction, t: &Point) -> Result<Complex64> {
    gamma.smooth(&correlation_kernel(phi, psi)?, t)
}

/// `g(t_i)` for many `t`; the kernel is built once.
pub fn smoothed_autocorr_many(
    gamma: &AutocorrEstimate,
    phi: &TestFunction,
    psi: &TestFunction,
    ts: &[Point],
) -> Result<Vec<Complex64>> {
    let kernel = correlation_kernel(phi, psi)?;
    for t in ts {
        gamma.check_range(&kernel, t)?;
    }
    Ok(ts.par_iter().map(|t| gamma.smooth_unchecked(&kernel, t)).collect())
}

/// `[ω̃ ∗ ω_B (φ̃∗ψ) − ω̃_B ∗ ω_B (φ̃∗ψ)] / |B|`: the boundary discrepancy
/// between the one-sided and the doubly restricted estimators.
pub fn mixed_autocorr_difference(
    omega_big: &Patch,
    b: &Window,
    k: &Window,
    phi: &TestFunction,
    psi: &TestFunction,
) -> Result<Complex64> {
    for f in [phi, psi] {
        if !k.contains_window(&f.support()) {
            return Err(Error::invalid("autocorrelation", "test function support must lie inside K"));
        }
    }
    let kernel = correlation_kernel(phi, psi)?;
    let reach = b.minkowski_sum(&kernel.support().reflect());
    omega_big.require_covers(&reach, "autocorrelation", "mixed estimator")?;
    let (lo, hi) = kernel.factor(0).support();
    let inner: Vec<Atom> = omega_big.measure.atoms_in(b).copied().collect();
    // the two estimators share every pair with x ∈ B; only x ∉ B remains
    let terms: Vec<Complex64> = inner
        .par_iter()
        .map(|y| {
            let parts: Vec<Complex64> = omega_big
                .measure
                .atoms_in_x_range(y.position.x() - hi, y.position.x() - lo)
                .iter()
                .filter(|x| !b.contains(&x.position))
                .map(|x| x.weight.conj() * y.weight * kernel.eval(&(y.position - x.position)))
                .collect();
            pairwise_sum(&parts)
        })
        .collect();
    Ok(pairwise_sum(&terms) / b.volume())
}

/// Mean and standard error of a complex Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: Complex64,
    /// Standard error of the mean (`|·|` of the complex deviations).
    pub std_error: f64,
    pub replicates: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[Complex64]) -> Self {
        let n = samples.len() as f64;
        let mean = pairwise_sum(samples) / n;
        let dev: Vec<f64> = samples.iter().map(|s| (s - mean).norm_sqr()).collect();
        let var = if samples.len() > 1 {
            crate::numerics::pairwise_sum_real(&dev) / (n - 1.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            std_error: (var / n).sqrt(),
            replicates: samples.len(),
        }
    }
}

/// Monte Carlo `⟨f_φ, T^t f_ψ⟩ ≈ mean over replicates of conj(f_φ(ω)) f_ψ(α_{−t}ω)`.
///
/// With `random_offset` every replicate starts from a uniform point of the
/// hull; without it lattice-based systems keep the origin on the lattice.
pub fn ensemble_correlation(
    spec: &GeneratorSpec,
    phi: &TestFunction,
    psi: &TestFunction,
    t: &Point,
    replicates: usize,
    random_offset: bool,
) -> Result<Estimate> {
    spec.validate()?;
    if replicates < 2 {
        return Err(Error::invalid("autocorrelation", "need at least two replicates"));
    }
    if phi.dim() != spec.dim || psi.dim() != spec.dim {
        return Err(Error::DimensionMismatch {
            module: "autocorrelation",
            expected: spec.dim,
            got: phi.dim(),
        });
    }
    let need_phi = phi.support().reflect();
    let need_psi = psi.support().reflect().translate(*t);
    let window = hull(&need_phi, &need_psi).expand(1.0);
    let samples: Vec<Complex64> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let omega = generate(&replicate(spec, r, random_offset), &window)?;
            let a = orbit_pairing(phi, &omega, &Point::ORIGIN);
            let b = orbit_pairing(psi, &omega, t);
            Ok(a.conj() * b)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate::from_samples(&samples))
}

/// `Σ_{i,j} conj(c_i) c_j (φ̃∗φ∗γ)(t_i − t_j)`.
pub fn positive_definiteness_check(
    gamma: &AutocorrEstimate,
    phi: &TestFunction,
    points: &[Point],
    coeffs: &[Complex64],
) -> Result<Complex64> {
    if points.len() != coeffs.len() || points.len() > 50 {
        return Err(Error::invalid(
            "autocorrelation",
            "points and coefficients must have equal length at most 50",
        ));
    }
    let kernel = correlation_kernel(phi, phi)?;
    let mut terms = Vec::with_capacity(points.len() * points.len());
    for (pi, ci) in points.iter().zip(coeffs) {
        for (pj, cj) in points.iter().zip(coeffs) {
            terms.push(ci.conj() * cj * gamma.smooth(&kernel, &(*pi - *pj))?);
        }
    }
    Ok(pairwise_sum(&terms))
}

/// One row of the vague-convergence table: `γ_n(K)` at `t` for each kernel
/// of a battery and its total-variation counterpart.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub values: Vec<Complex64>,
    pub tv_values: Vec<f64>,
}

/// `γ_n(K_j)(t)` for every box of the sequence and every kernel `K_j`.
pub fn convergence_table(
    patch: &Patch,
    seq: &BoxSequence,
    kernels: &[Kernel],
    t: &Point,
    opts: AutocorrOptions,
) -> Result<Vec<ConvergenceRow>> {
    (1..=seq.len())
        .map(|n| {
            let g = autocorr_for(patch, seq, n, opts)?;
            Ok(ConvergenceRow {
                n,
                values: kernels.iter().map(|k| g.smooth(k, t)).collect::<Result<_>>()?,
                tv_values: kernels.iter().map(|k| g.smooth_abs(k, t)).collect::<Result<_>>()?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::GeneratorSpec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn lattice_patch(n: f64) -> Patch {
        Patch::generate(&GeneratorSpec::lattice(1.0), &Window::interval(-n, n).unwrap()).unwrap()
    }

    #[test]
    fn lattice_weights() {
        let n = 10.0;
        let g = empirical_autocorr(&lattice_patch(n), &Window::interval(-n, n).unwrap(), AutocorrOptions::default())
            .unwrap();
        assert!((g.differences.weight_at(&Point::ORIGIN) - c(21.0 / 20.0, 0.0)).norm() < 1e-15);
        assert!((g.differences.weight_at(&Point::d1(1.0)) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(g.is_hermitian());
        assert_eq!(g.norm_volume, 20.0);
    }

    #[test]
    fn single_atom_and_complex_weights() {
        let b = Window::interval(-5.0, 5.0).unwrap();
        let one = Patch::new(AtomicMeasure::from_positions(1, [Point::d1(0.0)]).unwrap(), b).unwrap();
        let g = empirical_autocorr(&one, &b, AutocorrOptions::default()).unwrap();
        assert_eq!(g.differences.len(), 1);
        assert_eq!(g.differences.atoms()[0].weight, c(0.1, 0.0));

        let mu = AtomicMeasure::new(
            1,
            vec![Atom::new(Point::d1(0.0), c(0.0, 1.0)), Atom::unit(Point::d1(1.0))],
        )
        .unwrap();
        let b = Window::interval(-0.5, 0.5).unwrap().translate(Point::d1(0.5));
        let g = empirical_autocorr(&Patch::new(mu, b).unwrap(), &b, AutocorrOptions::default()).unwrap();
        assert!((g.differences.weight_at(&Point::d1(1.0)) - c(0.0, -1.0)).norm() < 1e-15);
        assert!((g.differences.weight_at(&Point::d1(-1.0)) - c(0.0, 1.0)).norm() < 1e-15);
        assert!(g.is_hermitian());
    }

    #[test]
    fn pair_limit_enforced() {
        let p = lattice_patch(100.0);
        let opts = AutocorrOptions {
            pair_limit: 100,
            ..AutocorrOptions::default()
        };
        assert!(matches!(
            empirical_autocorr(&p, &p.window, opts),
            Err(Error::PairLimit { .. })
        ));
    }

    #[test]
    fn smoothed_lattice_values() {
        let n = 50.0;
        let g = empirical_autocorr(&lattice_patch(n), &Window::interval(-n, n).unwrap(), AutocorrOptions::default())
            .unwrap();
        let phi = TestFunction::tent(0.25).unwrap();
        let k0 = 2.0 * 0.25 / 3.0;
        let v0 = smoothed_autocorr(&g, &phi, &phi, &Point::ORIGIN).unwrap();
        assert!((v0.re - (101.0 / 100.0) * k0).abs() < 1e-12, "{v0}");
        let v1 = smoothed_autocorr(&g, &phi, &phi, &Point::d1(1.0)).unwrap();
        assert!((v1.re - k0).abs() < 1e-12);
        assert!(smoothed_autocorr(&g, &phi, &phi, &Point::d1(19.5)).unwrap().norm() < 1e-15);
        assert!(matches!(
            smoothed_autocorr(&g, &phi, &phi, &Point::d1(30.0)),
            Err(Error::KernelRange { .. })
        ));
    }

    #[test]
    fn positive_definite_forms() {
        let n = 30.0;
        let g = empirical_autocorr(&lattice_patch(n), &Window::interval(-n, n).unwrap(), AutocorrOptions::default())
            .unwrap();
        let phi = TestFunction::tent(0.25).unwrap();
        let g0 = smoothed_autocorr(&g, &phi, &phi, &Point::ORIGIN).unwrap();
        let q = positive_definiteness_check(&g, &phi, &[Point::d1(0.0), Point::d1(0.5)], &[c(1.0, 0.0), c(-1.0, 0.0)])
            .unwrap();
        assert!((q - 2.0 * g0).norm() < 1e-13);
    }

    #[test]
    fn mixed_difference_cases() {
        let phi = TestFunction::tent(1.0).unwrap();
        let k = Window::interval(-1.0, 1.0).unwrap();
        let b = Window::interval(-10.0, 10.0).unwrap();
        let empty = Patch::new(AtomicMeasure::empty(1), Window::interval(-20.0, 20.0).unwrap()).unwrap();
        assert_eq!(mixed_autocorr_difference(&empty, &b, &k, &phi, &phi).unwrap(), c(0.0, 0.0));
        let inner_only = Patch::new(
            generate(&GeneratorSpec::lattice(1.0), &Window::interval(-10.0, 10.0).unwrap()).unwrap(),
            Window::interval(-20.0, 20.0).unwrap(),
        )
        .unwrap();
        assert_eq!(mixed_autocorr_difference(&inner_only, &b, &k, &phi, &phi).unwrap(), c(0.0, 0.0));
        // lattice: only the two edge atoms see one outside neighbour at distance 1
        let p = lattice_patch(20.0);
        let d = mixed_autocorr_difference(&p, &b, &k, &phi, &phi).unwrap();
        assert!((d.re - 2.0 / 6.0 / 20.0).abs() < 1e-14, "{d}");
        assert!(mixed_autocorr_difference(&lattice_patch(10.5), &b, &k, &phi, &phi).is_err());
    }

    #[test]
    fn ensemble_lattice_is_deterministic() {
        let phi = TestFunction::tent(0.25).unwrap();
        let t = Point::d1(1.0);
        let e = ensemble_correlation(&GeneratorSpec::lattice(1.0), &phi, &phi, &t, 4, false).unwrap();
        assert_eq!(e.std_error, 0.0);
        assert!((e.mean - c(1.0, 0.0)).norm() < 1e-15);
        let full = ensemble_correlation(&GeneratorSpec::bernoulli(1.0, 1.0, 3), &phi, &phi, &t, 4, false).unwrap();
        assert_eq!(full.mean, e.mean);
        assert!(ensemble_correlation(&GeneratorSpec::lattice(1.0), &phi, &phi, &t, 1, false).is_err());
    }

    #[test]
    fn one_sided_estimator() {
        let n = 10.0;
        let b = Window::interval(-n, n).unwrap();
        let opts = AutocorrOptions::with_r_max(3.0).one_sided();
        assert!(matches!(empirical_autocorr(&lattice_patch(n), &b, opts), Err(Error::Coverage { .. })));
        let g = empirical_autocorr(&lattice_patch(n + 3.0), &b, opts).unwrap();
        assert!(g.is_hermitian());
        for z in [0.0, 1.0, -2.0, 3.0] {
            assert!((g.differences.weight_at(&Point::d1(z)) - c(21.0 / 20.0, 0.0)).norm() < 1e-14);
        }
        let mu = AtomicMeasure::new(
            1,
            vec![Atom::new(Point::d1(0.0), c(0.0, 1.0)), Atom::new(Point::d1(2.5), c(2.0, -1.0))],
        )
        .unwrap();
        let small = Window::interval(-1.0, 1.0).unwrap();
        let p = Patch::new(mu, Window::interval(-4.0, 4.0).unwrap()).unwrap();
        let g = empirical_autocorr(&p, &small, opts).unwrap();
        // one pair end in B: half of conj(i)(2 − i) / 2 at z = 2.5
        assert!((g.differences.weight_at(&Point::d1(2.5)) - c(0.0, -1.0) * c(2.0, -1.0) / 4.0).norm() < 1e-15);
        assert!(g.is_hermitian());
    }

    #[test]
    fn columnar_roundtrip() {
        let seq = BoxSequence::integer_cubes(1, 5).unwrap();
        let g = autocorr_for(&lattice_patch(5.0), &seq, 5, AutocorrOptions::with_r_max(3.0)).unwrap();
        let mut buf = Vec::new();
        g.write_columnar(&mut buf).unwrap();
        let back = AutocorrEstimate::read_columnar(&buf[..]).unwrap();
        assert_eq!(back, g);
        let p = lattice_patch(9.0);
        let g = autocorr_for(&p, &seq, 5, AutocorrOptions::with_r_max(3.0).one_sided()).unwrap();
        let mut buf = Vec::new();
        g.write_columnar(&mut buf).unwrap();
        assert_eq!(AutocorrEstimate::read_columnar(&buf[..]).unwrap(), g);
    }
}
