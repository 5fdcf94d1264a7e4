//! Diffraction side: normalised Fourier amplitudes `c_n(λ)`, intensity
//! profiles, Bragg peak detection by two-scale persistence, pure-point mass
//! accounting and the group generated by the Bragg frequencies.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autocorrelation::{autocorr_for, smoothed_autocorr, AutocorrOptions, Estimate};
use crate::averaging::BoxSequence;
use crate::error::{Error, Result};
use crate::generators::{generate, replicate, GeneratorSpec, Patch};
use crate::geometry::{Point, Window, MAX_DIM};
use crate::measure::{Atom, AtomicMeasure};
use crate::numerics::{golden_max, median};
use crate::testfn::{tent_fourier, TestFunction};

/// Default frequency tolerance (inverse length).
pub const DELTA_FREQ: f64 = 1e-6;

/// A character `t ↦ e^{2πi λ·t}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Character {
    pub frequency: Point,
}

impl Character {
    pub fn new(frequency: Point) -> Self {
        Character { frequency }
    }

    pub fn pairing(&self, t: &Point) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * self.frequency.dot(t))
    }
}

/// `c(λ) = (1/|B|) Σ_{x ∈ B} w_x e^{−2πi λ·x}`.
pub fn bragg_amplitude(omega: &AtomicMeasure, b: &Window, lambda: &Point) -> Complex64 {
    let sum = omega
        .atoms_in(b)
        .fold(Complex64::new(0.0, 0.0), |acc, a| acc + a.weight * phase(lambda, &a.position));
    sum / b.volume()
}

#[inline]
fn phase(lambda: &Point, x: &Point) -> Complex64 {
    let (s, c) = (-2.0 * PI * lambda.dot(x)).sin_cos();
    Complex64::new(c, s)
}

/// Window functions for the peak search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Taper {
    Rectangular,
    Hann,
    BlackmanHarris,
}

impl Taper {
    /// Value at relative position `u ∈ [0, 1]` and the mean over `[0, 1]`.
    fn eval(self, u: f64) -> f64 {
        let c = |k: f64| (2.0 * PI * k * u).cos();
        match self {
            Taper::Rectangular => 1.0,
            Taper::Hann => 0.5 - 0.5 * c(1.0),
            Taper::BlackmanHarris => 0.35875 - 0.48829 * c(1.0) + 0.14128 * c(2.0) - 0.01168 * c(3.0),
        }
    }

    fn mean(self) -> f64 {
        match self {
            Taper::Rectangular => 1.0,
            Taper::Hann => 0.5,
            Taper::BlackmanHarris => 0.35875,
        }
    }
}

/// Atoms of `ω_B` with taper weights folded in, normalised so that a unit
/// density lattice gives amplitude ≈ 1 at its Bragg peaks.
struct TaperedSum {
    atoms: Vec<Atom>,
    norm: f64,
}

impl TaperedSum {
    fn new(omega: &AtomicMeasure, b: &Window, taper: Taper) -> Self {
        let atoms = omega
            .atoms_in(b)
            .map(|a| {
                let h: f64 = (0..b.dim())
                    .map(|ax| {
                        let side = b.hi(ax) - b.lo(ax);
                        taper.eval((a.position.coord(ax) - b.lo(ax)) / side)
                    })
                    .product();
                Atom::new(a.position, a.weight * h)
            })
            .collect();
        TaperedSum {
            atoms,
            norm: b.volume() * taper.mean().powi(b.dim() as i32),
        }
    }

    fn power(&self, lambda: &Point) -> f64 {
        let sum = self
            .atoms
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, a| acc + a.weight * phase(lambda, &a.position));
        (sum / self.norm).norm_sqr()
    }
}

/// Mean and standard error of `|c_B(λ)|²` over independent replicates of
/// `spec`.
pub fn ensemble_intensity(
    spec: &GeneratorSpec,
    b: &Window,
    lambda: &Point,
    replicates: usize,
    random_offset: bool,
) -> Result<Estimate> {
    if replicates < 2 {
        return Err(Error::invalid("diffraction-spectral", "need at least two replicates"));
    }
    let samples = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let omega = generate(&replicate(spec, r, random_offset), b)?;
            Ok(Complex64::new(bragg_amplitude(&omega, b, lambda).norm_sqr(), 0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate::from_samples(&samples))
}

/// A rectangular grid of frequencies `lo + i·spacing` (per axis, inclusive).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub spacing: f64,
}

impl FrequencyGrid {
    pub fn interval(lo: f64, hi: f64, spacing: f64) -> Self {
        FrequencyGrid {
            lo: vec![lo],
            hi: vec![hi],
            spacing,
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn validate(&self) -> Result<()> {
        crate::geometry::check_dim("diffraction-spectral", self.dim())?;
        if self.hi.len() != self.lo.len() {
            return Err(Error::invalid("diffraction-spectral", "grid bounds have different lengths"));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::invalid("diffraction-spectral", "grid spacing must be positive"));
        }
        if self.lo.iter().zip(&self.hi).any(|(l, h)| !(h >= l)) {
            return Err(Error::invalid("diffraction-spectral", "grid needs lo ≤ hi"));
        }
        Ok(())
    }

    /// Number of nodes per axis.
    pub fn shape(&self) -> Vec<usize> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| ((h - l) / self.spacing + 1e-9).floor() as usize + 1)
            .collect()
    }

    fn node(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + i as f64 * self.spacing
    }

    /// Nodes in row-major order (last axis fastest).
    pub fn points(&self) -> Vec<Point> {
        let shape = self.shape();
        match shape.len() {
            1 => (0..shape[0]).map(|i| Point::d1(self.node(0, i))).collect(),
            _ => (0..shape[0])
                .flat_map(|i| (0..shape[1]).map(move |j| (i, j)))
                .map(|(i, j)| Point::d2(self.node(0, i), self.node(1, j)))
                .collect(),
        }
    }
}

/// Sampled spectral values on a grid of characters.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralEstimate {
    pub grid: Vec<Point>,
    pub values: Vec<f64>,
    pub descriptor: String,
}

impl SpectralEstimate {
    pub fn write_csv<W: Write>(&self, mut out: W, dim: usize) -> Result<()> {
        let cols: Vec<String> = (0..dim).map(|i| format!("lambda_{i}")).collect();
        writeln!(out, "{},value", cols.join(","))?;
        for (p, v) in self.grid.iter().zip(&self.values) {
            let coords: Vec<String> = (0..dim).map(|i| format!("{:.16e}", p.coord(i))).collect();
            writeln!(out, "{},{:.16e}", coords.join(","), v)?;
        }
        Ok(())
    }
}

/// `I(λ) = |B|·|c(λ)|²` on the grid.
pub fn diffraction_profile(omega: &AtomicMeasure, b: &Window, grid: &FrequencyGrid) -> Result<SpectralEstimate> {
    grid.validate()?;
    if grid.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            module: "diffraction-spectral",
            expected: b.dim(),
            got: grid.dim(),
        });
    }
    let points = grid.points();
    let inside = omega.restrict(b);
    let values = points
        .par_iter()
        .map(|l| b.volume() * bragg_amplitude(&inside, b, l).norm_sqr())
        .collect();
    Ok(SpectralEstimate {
        grid: points,
        values,
        descriptor: "intensity |B|·|c(λ)|²".into(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Bragg,
    Diffuse,
    Undecided,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Bragg => "bragg",
            Classification::Diffuse => "diffuse",
            Classification::Undecided => "undecided",
        }
    }
}

/// Thresholds of the two-scale peak classification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakParams {
    /// Bragg if the large/small power ratio is at least this.
    pub theta_bragg: f64,
    /// Diffuse if the ratio is at most `theta_diffuse · (|B_s|/|B_l|) / margin`.
    pub theta_diffuse: f64,
    pub margin: f64,
    /// Significance: `|B_l|·P_l` must exceed this multiple of its grid median.
    pub significance: f64,
    /// Grid maxima below `floor · max` are ignored.
    pub floor: f64,
    pub taper: Taper,
    pub delta_freq: f64,
}

impl Default for PeakParams {
    fn default() -> Self {
        PeakParams {
            theta_bragg: 0.5,
            theta_diffuse: 2.0,
            margin: 4.0,
            significance: 30.0,
            floor: 1e-3,
            taper: Taper::BlackmanHarris,
            delta_freq: DELTA_FREQ,
        }
    }
}

impl PeakParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid("diffraction-spectral", m.to_string()));
        if !(self.theta_bragg > 0.0 && self.theta_bragg <= 1.0) {
            return bad("theta_bragg must lie in (0, 1]");
        }
        if !(self.theta_diffuse > 0.0) || !(self.margin >= 1.0) {
            return bad("theta_diffuse must be positive and margin at least 1");
        }
        if !(self.significance > 0.0) || !(self.floor >= 0.0 && self.floor < 1.0) {
            return bad("significance must be positive and floor in [0, 1)");
        }
        if !(self.delta_freq > 0.0) {
            return bad("delta_freq must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub frequency: Vec<f64>,
    /// `|c_{n_large}(λ*)|²`.
    pub intensity: f64,
    pub classification: Classification,
    pub refined: bool,
    /// Tapered power ratio large/small window.
    pub persistence: f64,
    /// `|B_l|·P_l` over its grid median.
    pub significance: f64,
}

impl Peak {
    pub fn point(&self) -> Point {
        Point::from_slice(&self.frequency).expect("stored with valid dimension")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakList {
    pub peaks: Vec<Peak>,
    pub window_pair: (usize, usize),
    pub params: PeakParams,
}

impl PeakList {
    pub fn bragg(&self) -> impl Iterator<Item = &Peak> {
        self.peaks.iter().filter(|p| p.classification == Classification::Bragg)
    }

    /// Peak within `tol` (max-norm) of `lambda`, if any.
    pub fn find(&self, lambda: &Point, tol: f64) -> Option<&Peak> {
        self.peaks.iter().find(|p| p.point().close_to(lambda, tol))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let dim = self.peaks.first().map_or(1, |p| p.frequency.len());
        let cols: Vec<String> = (0..dim).map(|i| format!("lambda_{i}")).collect();
        writeln!(out, "{},intensity,classification,refined", cols.join(","))?;
        for p in &self.peaks {
            let coords: Vec<String> = p.frequency.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(
                out,
                "{},{:.16e},{},{}",
                coords.join(","),
                p.intensity,
                p.classification.as_str(),
                p.refined
            )?;
        }
        Ok(())
    }
}

/// Grid indices that are local maxima (≥ all neighbours, > at least one).
fn local_maxima(values: &[f64], shape: &[usize]) -> Vec<usize> {
    let at = |i: isize, j: isize| -> Option<f64> {
        let (ni, nj) = (shape[0] as isize, *shape.get(1).unwrap_or(&1) as isize);
        (i >= 0 && j >= 0 && i < ni && j < nj).then(|| values[(i * nj + j) as usize])
    };
    let nj = *shape.get(1).unwrap_or(&1);
    let offsets: Vec<(isize, isize)> = if shape.len() == 1 {
        vec![(-1, 0), (1, 0)]
    } else {
        (-1..=1)
            .flat_map(|a| (-1..=1).map(move |b| (a, b)))
            .filter(|&o| o != (0, 0))
            .collect()
    };
    (0..values.len())
        .filter(|&k| {
            let (i, j) = ((k / nj) as isize, (k % nj) as isize);
            let v = values[k];
            let mut strict = false;
            for (di, dj) in &offsets {
                if let Some(u) = at(i + di, j + dj) {
                    if u > v {
                        return false;
                    }
                    strict |= u < v;
                }
            }
            strict
        })
        .collect()
}

/// Maximise `f` around `start` within `±radius` per axis, coordinate-wise.
fn refine(f: &(dyn Fn(&Point) -> f64 + Sync), start: Point, dim: usize, radius: f64, tol: f64) -> Point {
    let mut p = start;
    let sweeps = if dim == 1 { 1 } else { 3 };
    for _ in 0..sweeps {
        for ax in 0..dim {
            let c = p.coord(ax);
            let best = golden_max(
                |x| {
                    let mut q = p;
                    q.0[ax] = x;
                    f(&q)
                },
                c - radius,
                c + radius,
                tol,
            );
            let mut q = p;
            q.0[ax] = best;
            if f(&q) >= f(&p) {
                p = q;
            }
        }
    }
    p
}

/// Bragg peak search on `ω` over the boxes `B_{n_small} ⊂ B_{n_large}`.
///
/// Candidates are local maxima of the tapered power on `B_large`; each is
/// refined by golden-section search, then classified by significance over
/// the grid median and by persistence between the two boxes. λ = 0 is always
/// reported.
pub fn detect_peaks(
    omega_big: &Patch,
    seq: &BoxSequence,
    n_small: usize,
    n_large: usize,
    grid: &FrequencyGrid,
    params: &PeakParams,
) -> Result<PeakList> {
    params.validate()?;
    grid.validate()?;
    if n_small >= n_large {
        return Err(Error::invalid("diffraction-spectral", "need n_small < n_large"));
    }
    let (bs, bl) = (seq.get(n_small)?, seq.get(n_large)?);
    if grid.dim() != bl.dim() {
        return Err(Error::DimensionMismatch {
            module: "diffraction-spectral",
            expected: bl.dim(),
            got: grid.dim(),
        });
    }
    omega_big.require_covers(bl, "diffraction-spectral", "peak detection")?;
    let side = (0..bl.dim()).map(|a| bl.hi(a) - bl.lo(a)).fold(0.0, f64::max);
    if grid.spacing > 1.0 / side {
        return Err(Error::invalid(
            "diffraction-spectral",
            format!("grid too coarse: spacing {} exceeds peak width {}", grid.spacing, 1.0 / side),
        ));
    }
    let dim = bl.dim();
    let large = TaperedSum::new(&omega_big.measure, bl, params.taper);
    let small = TaperedSum::new(&omega_big.measure, bs, params.taper);
    let inside = omega_big.measure.restrict(bl);
    let (vol_s, vol_l) = (bs.volume(), bl.volume());

    let points = grid.points();
    let power: Vec<f64> = points.par_iter().map(|l| large.power(l)).collect();
    let scale = median(&power.iter().map(|p| vol_l * p).collect::<Vec<_>>());
    let peak_max = power.iter().cloned().fold(0.0, f64::max);
    let zero_tol = grid.spacing;

    let mut candidates: Vec<(Point, bool)> = local_maxima(&power, &grid.shape())
        .into_iter()
        .filter(|&k| power[k] >= params.floor * peak_max && points[k].max_norm() > zero_tol)
        .map(|k| (points[k], true))
        .collect();
    candidates.push((Point::ORIGIN, false));

    let diffuse_ratio = params.theta_diffuse * (vol_s / vol_l) / params.margin;
    let significance_of = |p: f64| {
        if scale > 0.0 {
            vol_l * p / scale
        } else {
            f64::INFINITY
        }
    };
    let power_l = |l: &Point| large.power(l);
    let mut peaks: Vec<Peak> = candidates
        .par_iter()
        .map(|&(start, refinable)| {
            let grid_sig = significance_of(large.power(&start));
            // only significant maxima are worth refining
            let (lambda, refined) = if refinable && grid_sig >= params.significance {
                (refine(&power_l, start, dim, grid.spacing, params.delta_freq * 1e-3), true)
            } else {
                (start, false)
            };
            let pl = large.power(&lambda);
            let ps = small.power(&lambda);
            let persistence = if ps > 0.0 { pl / ps } else { f64::INFINITY };
            let significance = significance_of(pl);
            let classification = if significance < params.significance || persistence <= diffuse_ratio {
                Classification::Diffuse
            } else if persistence >= params.theta_bragg {
                Classification::Bragg
            } else {
                Classification::Undecided
            };
            Peak {
                frequency: (0..dim).map(|a| lambda.coord(a)).collect(),
                intensity: bragg_amplitude(&inside, bl, &lambda).norm_sqr(),
                classification,
                refined,
                persistence,
                significance,
            }
        })
        .collect();

    peaks.sort_by(|a, b| a.point().lex_cmp(&b.point()));
    // grid maxima converging onto the same peak
    let mut merged: Vec<Peak> = Vec::with_capacity(peaks.len());
    for p in peaks {
        match merged.last_mut() {
            Some(q) if q.point().close_to(&p.point(), params.delta_freq) => {
                if p.intensity > q.intensity {
                    *q = p;
                }
            }
            _ => merged.push(p),
        }
    }
    Ok(PeakList {
        peaks: merged,
        window_pair: (n_small, n_large),
        params: *params,
    })
}

/// `|φ̂(λ)|² · I(λ)`, the atom of `ρ_{f_φ}` at `λ`.
pub fn observable_spectral_mass(phi: &TestFunction, lambda: &Point, peak_intensity: f64) -> f64 {
    tent_fourier(phi, lambda).norm_sqr() * peak_intensity
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurePointRatio {
    pub ratio: f64,
    /// `Σ_bragg |φ̂(λ)|² I(λ)`.
    pub bragg_mass: f64,
    /// `(φ̃ ∗ φ ∗ γ_n)(0)`.
    pub total_mass: f64,
}

/// Fraction of the `|φ̂|²`-weighted diffraction mass carried by the Bragg
/// peaks of `peaks`.
pub fn pure_point_ratio(
    omega_big: &Patch,
    seq: &BoxSequence,
    n: usize,
    phi: &TestFunction,
    peaks: &PeakList,
) -> Result<PurePointRatio> {
    let opts = AutocorrOptions::with_r_max(phi.support().diameter() * 2.0 + 1.0);
    let gamma = autocorr_for(omega_big, seq, n, opts)?;
    let total = smoothed_autocorr(&gamma, phi, phi, &Point::ORIGIN)?.re;
    if !(total > 1e-12) {
        return Err(Error::degenerate(
            "diffraction-spectral",
            format!("total mass {total} too small for a ratio"),
        ));
    }
    let terms: Vec<f64> = peaks
        .bragg()
        .map(|p| observable_spectral_mass(phi, &p.point(), p.intensity))
        .collect();
    let bragg = crate::numerics::pairwise_sum_real(&terms);
    Ok(PurePointRatio {
        ratio: bragg / total,
        bragg_mass: bragg,
        total_mass: total,
    })
}

/// Default bound on integer coefficients in group computations.
pub const COEFF_BOUND: i64 = 50;
const MAX_RANK: usize = 4;

/// A finitely generated subgroup of `ℝ^d` with a tolerance-based membership
/// test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenGroup {
    pub basis: Vec<Vec<f64>>,
    pub tolerance: f64,
    pub coeff_bound: i64,
}

/// `Σ c_i b_i`.
fn combine(basis: &[Point], coeffs: &[i64]) -> Point {
    basis
        .iter()
        .zip(coeffs)
        .fold(Point::ORIGIN, |acc, (b, &c)| acc + b.scale(c as f64))
}

/// Integer `c` with `|c_i| ≤ bound` minimizing the max-norm residual
/// `|target − Σ c_i b_i|`. The last coefficient is solved for, the others
/// enumerated. With `nonzero_last` the last coefficient must not vanish.
fn nearest_combination(basis: &[Point], target: &Point, bound: i64, nonzero_last: bool) -> Option<(Vec<i64>, f64)> {
    let r = basis.len();
    if r == 0 {
        return Some((Vec::new(), target.max_norm()));
    }
    let last = basis[r - 1];
    let norm2 = last.dot(&last);
    let mut coeffs = vec![-bound; r - 1];
    let mut best: Option<(Vec<i64>, f64)> = None;
    loop {
        let rest = *target - combine(&basis[..r - 1], &coeffs);
        let mut c = (rest.dot(&last) / norm2).round();
        if nonzero_last && c == 0.0 {
            c = if rest.dot(&last) >= 0.0 { 1.0 } else { -1.0 };
        }
        if c.abs() <= bound as f64 {
            let res = (rest - last.scale(c)).max_norm();
            if best.as_ref().is_none_or(|(_, b)| res < *b) {
                let mut out = coeffs.clone();
                out.push(c as i64);
                best = Some((out, res));
            }
        }
        // odometer over the enumerated coefficients
        let mut k = 0;
        loop {
            if k == r - 1 {
                return best;
            }
            if coeffs[k] < bound {
                coeffs[k] += 1;
                break;
            }
            coeffs[k] = -bound;
            k += 1;
        }
    }
}

/// Nearest combination whose residual is within `tol·(1 + Σ|c_i|)`, the error
/// an estimated basis passes on to its multiples.
fn find_combination(basis: &[Point], target: &Point, bound: i64, tol: f64, nonzero_last: bool) -> Option<Vec<i64>> {
    let (c, res) = nearest_combination(basis, target, bound, nonzero_last)?;
    let scale = 1 + c.iter().map(|v| v.abs()).sum::<i64>();
    (res <= tol * scale as f64).then_some(c)
}

impl EigenGroup {
    pub fn basis_points(&self) -> Vec<Point> {
        self.basis.iter().map(|b| Point::from_slice(b).expect("valid dim")).collect()
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Nearest integer combination of the basis (coefficients bounded by
    /// `coeff_bound`) and its max-norm distance from `λ`.
    pub fn residual(&self, lambda: &Point) -> (Vec<i64>, f64) {
        nearest_combination(&self.basis_points(), lambda, self.coeff_bound, false).expect("bound ≥ 0")
    }

    /// Is `λ` within `tolerance` of an integer combination of the basis?
    pub fn contains(&self, lambda: &Point) -> bool {
        self.residual(lambda).1 <= self.tolerance
    }

    /// Coefficients of `λ` in the basis, if it is a member.
    pub fn coefficients(&self, lambda: &Point) -> Option<Vec<i64>> {
        let (c, res) = self.residual(lambda);
        (res <= self.tolerance).then_some(c)
    }
}

/// Drops one generator using an integer relation `Σ c_i b_i ≈ 0`, by
/// unimodular column operations (Euclid on the coefficients).
fn reduce_with_relation(basis: &mut Vec<Point>, mut c: Vec<i64>) {
    loop {
        let nz: Vec<usize> = (0..c.len()).filter(|&i| c[i] != 0).collect();
        if nz.len() <= 1 {
            if let Some(&k) = nz.first() {
                basis.remove(k);
            }
            return;
        }
        // smallest |c_j| divides into every other
        let j = *nz.iter().min_by_key(|&&i| (c[i].abs(), i)).expect("nonempty");
        for &i in &nz {
            if i == j {
                continue;
            }
            let q = c[i] / c[j];
            c[i] -= q * c[j];
            basis[j] = basis[j] + basis[i].scale(q as f64);
        }
    }
}

/// Intensity-weighted least-squares refit of the basis against every Bragg
/// peak it explains; weak peaks are localized worse.
fn refit(basis: &mut [Point], bragg: &[&Peak], tolerance: f64, coeff_bound: i64) {
    let r = basis.len();
    if r == 0 {
        return;
    }
    let mut ata = vec![vec![0.0; r]; r];
    let mut atb = vec![[0.0; MAX_DIM]; r];
    let mut used = 0;
    for p in bragg {
        let lambda = p.point();
        let Some(c) = find_combination(basis, &lambda, coeff_bound, tolerance, false) else { continue };
        if c.iter().all(|&v| v == 0) {
            continue;
        }
        used += 1;
        for i in 0..r {
            for j in 0..r {
                ata[i][j] += p.intensity * (c[i] * c[j]) as f64;
            }
            for (a, v) in atb[i].iter_mut().enumerate() {
                *v += p.intensity * c[i] as f64 * lambda.coord(a);
            }
        }
    }
    if used < r {
        return;
    }
    let Some(sol) = crate::numerics::solve_small(&ata, &atb) else { return };
    for (b, row) in basis.iter_mut().zip(sol) {
        *b = Point(row);
    }
}

/// Greedy minimal generating set of the group generated by the Bragg
/// frequencies, strongest peaks first.
pub fn eigenvalue_group(peaks: &PeakList, tolerance: f64, coeff_bound: i64) -> Result<EigenGroup> {
    let mut bragg: Vec<&Peak> = peaks.bragg().collect();
    if bragg.is_empty() {
        return Err(Error::invalid("diffraction-spectral", "no bragg peaks"));
    }
    bragg.sort_by(|a, b| b.intensity.total_cmp(&a.intensity).then(a.point().lex_cmp(&b.point())));
    let mut basis: Vec<Point> = Vec::new();
    for p in bragg {
        let lambda = p.point();
        if lambda.max_norm() <= tolerance
            || find_combination(&basis, &lambda, coeff_bound, tolerance, false).is_some()
        {
            continue;
        }
        basis.push(lambda);
        if basis.len() > 1 {
            let zero = Point::ORIGIN;
            if let Some(rel) = find_combination(&basis, &zero, coeff_bound, tolerance, true) {
                reduce_with_relation(&mut basis, rel);
            }
        }
        if basis.len() > MAX_RANK {
            return Err(Error::degenerate(
                "diffraction-spectral",
                format!("bragg frequencies generate rank > {MAX_RANK} within coefficient bound {coeff_bound}"),
            ));
        }
    }
    refit(&mut basis, &peaks.bragg().collect::<Vec<_>>(), tolerance, coeff_bound);
    // canonical orientation: first nonzero coordinate positive
    for b in &mut basis {
        let first = (0..MAX_RANK.min(2)).map(|a| b.coord(a)).find(|v| *v != 0.0).unwrap_or(0.0);
        if first < 0.0 {
            *b = -*b;
        }
    }
    basis.sort_by(|a, b| a.lex_cmp(b));
    let dim = peaks.peaks.first().map_or(1, |p| p.frequency.len());
    Ok(EigenGroup {
        basis: basis.iter().map(|b| (0..dim).map(|a| b.coord(a)).collect()).collect(),
        tolerance,
        coeff_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::TAU;

    fn iv(lo: f64, hi: f64) -> Window {
        Window::interval(lo, hi).unwrap()
    }

    fn lattice(n: f64) -> AtomicMeasure {
        crate::generators::generate(&GeneratorSpec::lattice(1.0), &iv(-n, n)).unwrap()
    }

    #[test]
    fn amplitude_examples() {
        let b = iv(-50.0, 50.0);
        let om = lattice(50.0);
        let c1 = bragg_amplitude(&om, &b, &Point::d1(1.0));
        assert!((c1.re - 1.01).abs() < 1e-12 && c1.im.abs() < 1e-10);
        let c_half = bragg_amplitude(&om, &b, &Point::d1(0.5));
        assert!((c_half.norm_sqr() - 1e-4).abs() < 1e-12);
        assert_eq!(bragg_amplitude(&AtomicMeasure::empty(1), &b, &Point::d1(0.3)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn amplitude_bounded_by_total_variation() {
        let b = iv(-20.0, 20.0);
        let om = crate::generators::generate(&GeneratorSpec::poisson(1.0, 4), &b).unwrap();
        let bound = om.total_variation() / b.volume();
        for k in 0..50 {
            let l = Point::d1(-2.0 + 0.0873 * k as f64);
            assert!(bragg_amplitude(&om, &b, &l).norm() <= bound + 1e-12);
        }
    }

    #[test]
    fn profile_single_atom_is_flat() {
        let b = iv(-4.0, 4.0);
        let om = AtomicMeasure::new(1, vec![Atom::new(Point::d1(0.7), Complex64::new(0.0, 2.0))]).unwrap();
        let prof = diffraction_profile(&om, &b, &FrequencyGrid::interval(-1.0, 1.0, 0.1)).unwrap();
        assert_eq!(prof.values.len(), 21);
        for v in &prof.values {
            assert!((v - 4.0 / 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_shape_is_inclusive() {
        let g = FrequencyGrid::interval(-2.5, 2.5, 0.5);
        assert_eq!(g.shape(), vec![11]);
        assert_eq!(g.points()[10], Point::d1(2.5));
    }

    #[test]
    fn lattice_peaks() {
        let seq = BoxSequence::integer_cubes(1, 40).unwrap();
        let patch = Patch::generate(&GeneratorSpec::lattice(1.0), &iv(-40.0, 40.0)).unwrap();
        let grid = FrequencyGrid::interval(-2.5, 2.5, 1.0 / 320.0);
        let pl = detect_peaks(&patch, &seq, 20, 40, &grid, &PeakParams::default()).unwrap();
        let bragg: Vec<f64> = pl.bragg().map(|p| p.frequency[0]).collect();
        assert_eq!(bragg.len(), 5, "{bragg:?}");
        for (got, want) in bragg.iter().zip([-2.0, -1.0, 0.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
        assert!(detect_peaks(&patch, &seq, 40, 20, &grid, &PeakParams::default()).is_err());
        let coarse = FrequencyGrid::interval(-2.5, 2.5, 0.1);
        assert!(detect_peaks(&patch, &seq, 20, 40, &coarse, &PeakParams::default()).is_err());
    }

    #[test]
    fn spectral_mass_examples() {
        let phi = TestFunction::tent(0.5).unwrap();
        let m = observable_spectral_mass(&phi, &Point::d1(1.0), 1.0);
        assert!((m - 4.0 / PI.powi(4)).abs() < 1e-12);
        let wide = TestFunction::tent(1.0).unwrap();
        assert!(observable_spectral_mass(&wide, &Point::d1(1.0), 7.0) < 1e-30);
        assert!((observable_spectral_mass(&wide, &Point::ORIGIN, 1.0) - 1.0).abs() < 1e-15);
    }

    fn peaks_at(freqs: &[f64]) -> PeakList {
        PeakList {
            peaks: freqs
                .iter()
                .enumerate()
                .map(|(i, &f)| Peak {
                    frequency: vec![f],
                    intensity: 1.0 / (1.0 + i as f64),
                    classification: Classification::Bragg,
                    refined: true,
                    persistence: 1.0,
                    significance: 1e3,
                })
                .collect(),
            window_pair: (1, 2),
            params: PeakParams::default(),
        }
    }

    #[test]
    fn group_examples() {
        let g = eigenvalue_group(&peaks_at(&[1.0, 2.0, 3.0]), 1e-6, COEFF_BOUND).unwrap();
        assert_eq!(g.basis, vec![vec![1.0]]);
        assert!(g.contains(&Point::d1(5.0)));
        assert!(!g.contains(&Point::d1(0.5)));
        let g = eigenvalue_group(&peaks_at(&[2.0, 3.0]), 1e-6, COEFF_BOUND).unwrap();
        assert_eq!(g.rank(), 1);
        assert!((g.basis[0][0] - 1.0).abs() < 1e-12);
        let single = eigenvalue_group(&peaks_at(&[0.7]), 1e-6, COEFF_BOUND).unwrap();
        assert_eq!(single.basis, vec![vec![0.7]]);
        let s5 = 5f64.sqrt();
        let fib = [TAU / s5, 1.0 / s5, TAU * TAU / s5, (2.0 + TAU) / s5];
        let g = eigenvalue_group(&peaks_at(&fib), 1e-6, COEFF_BOUND).unwrap();
        assert_eq!(g.rank(), 2);
        for f in fib {
            assert!(g.contains(&Point::d1(f)));
        }
        assert!(!g.contains(&Point::d1(0.5)));
        let none = PeakList {
            peaks: Vec::new(),
            window_pair: (1, 2),
            params: PeakParams::default(),
        };
        assert!(eigenvalue_group(&none, 1e-6, COEFF_BOUND).is_err());
    }
}
