//! Translation-equivariant perturbations by deterministic local rules, and
//! the experiment comparing peaks and groups before and after.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autocorrelation::{autocorr_for, AutocorrOptions, Estimator};
use crate::averaging::BoxSequence;
use crate::diffraction::{
    detect_peaks, eigenvalue_group, pure_point_ratio, FrequencyGrid, PeakList, PeakParams, PurePointRatio,
    COEFF_BOUND,
};
use crate::error::{Error, Result};
use crate::generators::{GeneratorSpec, Patch};
use crate::geometry::{Point, Window};
use crate::measure::{Atom, AtomicMeasure, MERGE_TOL};
use crate::spectral::{almost_periods, AlmostPeriods, SampledCorrelation};
use crate::testfn::TestFunction;

/// A map deciding the image of each atom from the atoms around it.
///
/// `apply_at` may only read atoms of `omega` within `radius()` (max-norm) of
/// `atom`; the image may move by at most `max_shift()`.
pub trait LocalRule: Sync {
    fn radius(&self) -> f64;

    fn max_shift(&self) -> f64 {
        0.0
    }

    fn apply_at(&self, omega: &AtomicMeasure, atom: &Atom) -> Option<Atom>;

    /// Input margin needed around a target window.
    fn margin(&self) -> f64 {
        self.radius() + 2.0 * self.max_shift()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    Exactly,
    AtLeast,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountPredicate {
    pub comparison: Comparison,
    pub m: usize,
}

impl CountPredicate {
    pub fn holds(&self, count: usize) -> bool {
        match self.comparison {
            Comparison::AtMost => count <= self.m,
            Comparison::Exactly => count == self.m,
            Comparison::AtLeast => count >= self.m,
        }
    }
}

/// Counting box `x + [lo, hi]` relative to the atom (the atom itself counts
/// when the box contains the origin). The box is closed and padded by
/// [`MERGE_TOL`] so atoms exactly on its edge count the same after any
/// translation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountWindow {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl CountWindow {
    pub fn symmetric(dim: usize, r: f64) -> Self {
        CountWindow {
            lo: vec![-r; dim],
            hi: vec![r; dim],
        }
    }

    fn validate(&self) -> Result<()> {
        crate::geometry::check_dim("perturbation", self.lo.len())?;
        if self.lo.len() != self.hi.len() || self.lo.iter().zip(&self.hi).any(|(l, h)| !(h >= l)) {
            return Err(Error::invalid("perturbation", "count window needs lo ≤ hi per axis"));
        }
        Ok(())
    }

    fn radius(&self) -> f64 {
        self.lo.iter().chain(&self.hi).map(|v| v.abs()).fold(0.0, f64::max)
    }

    fn count(&self, omega: &AtomicMeasure, x: &Point) -> usize {
        let inside = |p: &Point| (0..self.lo.len()).all(|a| {
            let d = p.coord(a) - x.coord(a);
            d >= self.lo[a] - MERGE_TOL && d <= self.hi[a] + MERGE_TOL
        });
        omega
            .atoms_in_x_range(x.x() + self.lo[0] - MERGE_TOL, x.x() + self.hi[0] + MERGE_TOL)
            .iter()
            .filter(|a| inside(&a.position))
            .count()
    }
}

/// The shipped rule kinds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Rule {
    /// Keep an atom iff its local count satisfies the predicate.
    Thinning { window: CountWindow, predicate: CountPredicate },
    /// `w ↦ w · clamp(Σ_k c_k count^k, lo, hi)`.
    WeightMap {
        window: CountWindow,
        coeffs: Vec<f64>,
        lo: f64,
        hi: f64,
    },
    /// Move the atom by the vector listed for its local count (no move if the
    /// count is not listed).
    DeterministicShift {
        window: CountWindow,
        table: Vec<(usize, Vec<f64>)>,
    },
}

impl Rule {
    /// Keep iff the count in `x + [−r, r]^d` satisfies the predicate.
    pub fn thinning(dim: usize, r: f64, comparison: Comparison, m: usize) -> Self {
        Rule::Thinning {
            window: CountWindow::symmetric(dim, r),
            predicate: CountPredicate { comparison, m },
        }
    }

    /// Keep iff the next atom to the right is farther than `gap` (1d).
    pub fn right_gap(gap: f64) -> Self {
        Rule::Thinning {
            window: CountWindow {
                lo: vec![0.0],
                hi: vec![gap],
            },
            predicate: CountPredicate {
                comparison: Comparison::Exactly,
                m: 1,
            },
        }
    }

    fn window(&self) -> &CountWindow {
        match self {
            Rule::Thinning { window, .. } | Rule::WeightMap { window, .. } | Rule::DeterministicShift { window, .. } => {
                window
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.window().lo.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.window().validate()?;
        match self {
            Rule::WeightMap { lo, hi, .. } if !(hi >= lo) => {
                Err(Error::invalid("perturbation", "weight map needs lo ≤ hi"))
            }
            Rule::DeterministicShift { table, .. } if table.iter().any(|(_, s)| s.len() != self.dim()) => {
                Err(Error::invalid("perturbation", "shift vectors must match the rule dimension"))
            }
            _ => Ok(()),
        }
    }
}

impl LocalRule for Rule {
    fn radius(&self) -> f64 {
        self.window().radius() + MERGE_TOL
    }

    fn max_shift(&self) -> f64 {
        match self {
            Rule::DeterministicShift { table, .. } => table
                .iter()
                .flat_map(|(_, s)| s.iter().map(|v| v.abs()))
                .fold(0.0, f64::max),
            _ => 0.0,
        }
    }

    fn apply_at(&self, omega: &AtomicMeasure, atom: &Atom) -> Option<Atom> {
        let count = self.window().count(omega, &atom.position);
        match self {
            Rule::Thinning { predicate, .. } => predicate.holds(count).then_some(*atom),
            Rule::WeightMap { coeffs, lo, hi, .. } => {
                let c = count as f64;
                let v = coeffs.iter().rev().fold(0.0, |acc, k| acc * c + k);
                Some(Atom::new(atom.position, atom.weight * v.clamp(*lo, *hi)))
            }
            Rule::DeterministicShift { table, .. } => {
                let shift = table
                    .iter()
                    .find(|(k, _)| *k == count)
                    .map(|(_, s)| Point::from_slice(s).expect("validated"))
                    .unwrap_or(Point::ORIGIN);
                Some(Atom::new(atom.position + shift, atom.weight))
            }
        }
    }
}

/// `Φ(ω)` restricted to `target`; `ω` must be known on `target` plus the
/// rule's margin.
pub fn apply_rule<R: LocalRule + ?Sized>(rule: &R, omega_big: &Patch, target: &Window) -> Result<Patch> {
    if omega_big.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            module: "perturbation",
            expected: omega_big.dim(),
            got: target.dim(),
        });
    }
    omega_big
        .require_covers(&target.expand(rule.margin()), "perturbation", "rule application")
        .map_err(|e| match e {
            Error::Coverage { message, .. } => Error::coverage("perturbation", format!("insufficient margin: {message}")),
            other => other,
        })?;
    let source = target.expand(rule.max_shift());
    let inputs: Vec<&Atom> = omega_big.measure.atoms_in(&source).collect();
    let images: Vec<Atom> = inputs
        .par_iter()
        .filter_map(|a| rule.apply_at(&omega_big.measure, a))
        .filter(|a| target.contains(&a.position))
        .collect();
    Patch::new(AtomicMeasure::new(target.dim(), images)?, *target)
}

/// `Φ(α_t ω) = α_t Φ(ω)` atom for atom on `window`, for each sampled `t`.
pub fn equivariance_check<R: LocalRule + ?Sized>(rule: &R, spec: &GeneratorSpec, window: &Window, t_samples: &[Point]) -> Result<bool> {
    let reach = t_samples.iter().map(Point::max_norm).fold(0.0, f64::max);
    let big = window.expand(rule.margin() + reach + 1.0);
    let omega = Patch::generate(spec, &big)?;
    let base = apply_rule(rule, &omega, window)?;
    for t in t_samples {
        let moved = apply_rule(rule, &omega.translate(*t), &window.translate(*t))?;
        let expected = base.measure.translate(*t);
        if !moved.measure.approx_eq(&expected, 1e-9, 1e-12) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Settings of a perturbation experiment beyond the rule and the system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentParams {
    pub peaks: PeakParams,
    /// Pure-point gate for the original system.
    pub theta_pp: f64,
    /// Pure-point threshold for the perturbed system.
    pub theta_pp_after: f64,
    pub coeff_bound: i64,
    /// Almost-period diagnostics: scan range, overlap range, samples per
    /// unit and ε relative to `g(0)`.
    pub scan: f64,
    pub overlap: f64,
    pub per_unit: usize,
    pub epsilon_rel: f64,
    pub estimator: Estimator,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            peaks: PeakParams::default(),
            theta_pp: 0.9,
            theta_pp_after: 0.9,
            coeff_bound: COEFF_BOUND,
            scan: 20.0,
            overlap: 5.0,
            per_unit: 16,
            epsilon_rel: 0.1,
            estimator: Estimator::OneSided,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub peaks_before: PeakList,
    pub peaks_after: PeakList,
    pub group_basis: Vec<Vec<f64>>,
    /// Every Bragg peak after lies in the group generated before.
    pub flag_support: bool,
    pub flag_pp: bool,
    pub ratio_before: PurePointRatio,
    pub ratio_after: PurePointRatio,
    /// Nearest group element of every Bragg peak after.
    pub membership: Vec<Membership>,
    /// Bragg peaks after farther than `delta_freq` from the group.
    pub non_members: Vec<Vec<f64>>,
    pub almost_periods_before: AlmostPeriods,
    pub almost_periods_after: AlmostPeriods,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub frequency: Vec<f64>,
    pub intensity: f64,
    pub coefficients: Vec<i64>,
    pub residual: f64,
}

impl PerturbationReport {
    pub fn max_residual(&self) -> f64 {
        self.membership.iter().map(|m| m.residual).fold(0.0, f64::max)
    }
}

/// Sampling and acceptance settings of an almost-period scan of
/// `(φ̃∗φ∗γ_n)(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanSettings {
    pub scan: f64,
    pub overlap: f64,
    pub per_unit: usize,
    pub epsilon_rel: f64,
    pub estimator: Estimator,
}

impl ScanSettings {
    /// Differences `γ_n` must retain for this scan with test function `φ`.
    pub fn r_max(&self, phi: &TestFunction) -> f64 {
        self.scan + self.overlap + phi.support().diameter() + 1.0
    }
}

impl From<&ExperimentParams> for ScanSettings {
    fn from(p: &ExperimentParams) -> Self {
        ScanSettings {
            scan: p.scan,
            overlap: p.overlap,
            per_unit: p.per_unit,
            epsilon_rel: p.epsilon_rel,
            estimator: p.estimator,
        }
    }
}

/// `ε`-almost periods of `(φ̃∗φ∗γ_n)` with `ε = epsilon_rel · g(0)`.
pub fn correlation_almost_periods(
    patch: &Patch,
    seq: &BoxSequence,
    n: usize,
    phi: &TestFunction,
    settings: &ScanSettings,
) -> Result<AlmostPeriods> {
    let ScanSettings {
        scan,
        overlap,
        per_unit,
        epsilon_rel,
        estimator,
    } = *settings;
    let range = scan + overlap;
    let opts = AutocorrOptions {
        estimator,
        ..AutocorrOptions::with_r_max(settings.r_max(phi))
    };
    let gamma = autocorr_for(patch, seq, n, opts)?;
    let g = SampledCorrelation::from_autocorr(&gamma, phi, phi, per_unit, range)?;
    let g0 = g.at(0).norm();
    almost_periods(&g, scan, overlap, (epsilon_rel * g0).max(f64::MIN_POSITIVE))
}

/// Compares the system of `spec` with its image under `rule`.
pub fn perturbation_experiment<R: LocalRule + ?Sized>(
    rule: &R,
    spec: &GeneratorSpec,
    seq: &BoxSequence,
    n_small: usize,
    n_large: usize,
    phi: &TestFunction,
    grid: &FrequencyGrid,
    params: &ExperimentParams,
) -> Result<PerturbationReport> {
    let bl = *seq.get(n_large)?;
    let scan = ScanSettings::from(params);
    // the one-sided estimator reads ω up to r_max beyond B_large
    let extra = match scan.estimator {
        Estimator::OneSided => scan.r_max(phi),
        Estimator::Restricted => 0.0,
    };
    let before = Patch::generate(spec, &bl.expand(extra + rule.margin() + 1.0))?;
    let after = apply_rule(rule, &before, &bl.expand(extra))?;

    let peaks_before = detect_peaks(&before, seq, n_small, n_large, grid, &params.peaks)?;
    let ratio_before = pure_point_ratio(&before, seq, n_large, phi, &peaks_before)?;
    if ratio_before.ratio < params.theta_pp {
        return Err(Error::degenerate(
            "perturbation",
            format!(
                "original system fails the pure-point gate: ratio {} < {}",
                ratio_before.ratio, params.theta_pp
            ),
        ));
    }
    let group = eigenvalue_group(&peaks_before, params.peaks.delta_freq, params.coeff_bound)?;
    let peaks_after = detect_peaks(&after, seq, n_small, n_large, grid, &params.peaks)?;
    let ratio_after = pure_point_ratio(&after, seq, n_large, phi, &peaks_after)?;
    let membership: Vec<Membership> = peaks_after
        .bragg()
        .map(|p| {
            let (coefficients, residual) = group.residual(&p.point());
            Membership {
                frequency: p.frequency.clone(),
                intensity: p.intensity,
                coefficients,
                residual,
            }
        })
        .collect();
    let non_members: Vec<Vec<f64>> = membership
        .iter()
        .filter(|m| m.residual > group.tolerance)
        .map(|m| m.frequency.clone())
        .collect();
    let ap = |patch: &Patch| correlation_almost_periods(patch, seq, n_large, phi, &scan);
    let (almost_periods_before, almost_periods_after) = if bl.dim() == 1 {
        (ap(&before)?, ap(&after)?)
    } else {
        let skipped = AlmostPeriods {
            periods: Vec::new(),
            max_gap: f64::INFINITY,
            epsilon: 0.0,
            scan: 0.0,
            overlap: 0.0,
        };
        (skipped.clone(), skipped)
    };
    Ok(PerturbationReport {
        flag_support: non_members.is_empty(),
        flag_pp: ratio_after.ratio >= params.theta_pp_after,
        group_basis: group.basis,
        peaks_before,
        peaks_after,
        ratio_before,
        ratio_after,
        membership,
        non_members,
        almost_periods_before,
        almost_periods_after,
    })
}

/// Total variation of `Φ(ω)` cannot exceed that of `ω` for thinning.
pub fn total_variation(patch: &Patch) -> f64 {
    patch.measure.atoms().iter().map(|a| a.weight).map(Complex64::norm).sum()
}
