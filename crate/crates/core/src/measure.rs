//! Finite weighted Dirac combs and the operations of the translation action:
//! pairing with test functions, translation, reflection, restriction and
//! convolution.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{check_dim, Point, Window};
use crate::testfn::TestFunction;

/// Atoms closer than this (in every coordinate) are merged.
pub const MERGE_TOL: f64 = 1e-9;

/// Default cap on the number of atom pairs a convolution may enumerate.
pub const DEFAULT_PAIR_LIMIT: usize = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub position: Point,
    pub weight: Complex64,
}

impl Atom {
    pub fn new(position: Point, weight: Complex64) -> Self {
        Atom { position, weight }
    }

    pub fn unit(position: Point) -> Self {
        Atom::new(position, Complex64::new(1.0, 0.0))
    }
}

/// A finite atomic measure `Σ w_x δ_x` on ℝ^d.
///
/// Atoms are kept in lexicographic order of position and atoms within
/// [`MERGE_TOL`] of each other are merged on construction, so two measures
/// built from the same atoms compare equal.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    dim: usize,
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn new(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        check_dim("measure-core", dim)?;
        for a in &atoms {
            let finite = (0..dim).all(|i| a.position.coord(i).is_finite())
                && a.weight.re.is_finite()
                && a.weight.im.is_finite();
            if !finite {
                return Err(Error::invalid("measure-core", "non-finite atom"));
            }
            if (dim..crate::geometry::MAX_DIM).any(|i| a.position.coord(i) != 0.0) {
                return Err(Error::DimensionMismatch {
                    module: "measure-core",
                    expected: dim,
                    got: crate::geometry::MAX_DIM,
                });
            }
        }
        Ok(Self::from_unsorted(dim, atoms))
    }

    pub fn empty(dim: usize) -> Self {
        AtomicMeasure { dim, atoms: Vec::new() }
    }

    /// Unit-weight atoms at the given positions.
    pub fn from_positions(dim: usize, positions: impl IntoIterator<Item = Point>) -> Result<Self> {
        Self::new(dim, positions.into_iter().map(Atom::unit).collect())
    }

    pub(crate) fn from_unsorted(dim: usize, mut atoms: Vec<Atom>) -> Self {
        atoms.sort_by(|a, b| a.position.lex_cmp(&b.position));
        AtomicMeasure { dim, atoms: merge_sorted(atoms) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = Point> + '_ {
        self.atoms.iter().map(|a| a.position)
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight.norm()).sum()
    }

    /// The measure `|μ|`.
    pub fn abs(&self) -> AtomicMeasure {
        AtomicMeasure {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom::new(a.position, Complex64::new(a.weight.norm(), 0.0)))
                .collect(),
        }
    }

    /// Weight of the atom at `p` (within [`MERGE_TOL`]), zero if absent.
    pub fn weight_at(&self, p: &Point) -> Complex64 {
        self.atoms_in_x_range(p.x() - MERGE_TOL, p.x() + MERGE_TOL)
            .iter()
            .filter(|a| a.position.close_to(p, MERGE_TOL))
            .map(|a| a.weight)
            .sum()
    }

    /// Contiguous run of atoms whose first coordinate lies in `[lo, hi]`.
    pub fn atoms_in_x_range(&self, lo: f64, hi: f64) -> &[Atom] {
        let start = self.atoms.partition_point(|a| a.position.x() < lo);
        let end = self.atoms.partition_point(|a| a.position.x() <= hi);
        if end <= start {
            &[]
        } else {
            &self.atoms[start..end]
        }
    }

    /// Atoms inside the closed window.
    pub fn atoms_in<'a>(&'a self, window: &'a Window) -> impl Iterator<Item = &'a Atom> + 'a {
        self.atoms_in_x_range(window.lo(0), window.hi(0))
            .iter()
            .filter(move |a| window.contains(&a.position))
    }

    fn check_same_dim(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(Error::DimensionMismatch {
                module: "measure-core",
                expected: self.dim,
                got,
            });
        }
        Ok(())
    }

    /// `f_φ(μ) = ∫ φ(−s) dμ(s) = Σ_x w_x φ(−x)`.
    pub fn pair(&self, phi: &TestFunction) -> Result<Complex64> {
        self.check_same_dim(phi.dim())?;
        let reach = phi.support().reflect();
        Ok(self
            .atoms_in(&reach)
            .map(|a| a.weight * phi.eval(&(-a.position)))
            .sum())
    }

    /// `α_t(μ) = δ_t ∗ μ`: every atom moves by `+t`.
    pub fn translate(&self, t: Point) -> AtomicMeasure {
        AtomicMeasure {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom::new(a.position + t, a.weight))
                .collect(),
        }
    }

    /// `μ̃`: atoms at `−x` with conjugated weights.
    pub fn reflect(&self) -> AtomicMeasure {
        AtomicMeasure {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .rev()
                .map(|a| Atom::new(-a.position, a.weight.conj()))
                .collect(),
        }
    }

    /// `μ_B`: atoms inside the closed window.
    pub fn restrict(&self, window: &Window) -> AtomicMeasure {
        AtomicMeasure {
            dim: self.dim,
            atoms: self.atoms_in(window).copied().collect(),
        }
    }

    /// `μ ∗ ν` with the default pair limit.
    pub fn convolve(&self, other: &AtomicMeasure) -> Result<AtomicMeasure> {
        self.convolve_with_limit(other, DEFAULT_PAIR_LIMIT)
    }

    /// `μ ∗ ν = Σ w_x v_y δ_{x+y}`, merging coinciding atoms.
    pub fn convolve_with_limit(&self, other: &AtomicMeasure, limit: usize) -> Result<AtomicMeasure> {
        self.check_same_dim(other.dim)?;
        let pairs = self.len().saturating_mul(other.len());
        if pairs > limit {
            return Err(Error::PairLimit {
                module: "measure-core",
                pairs,
                limit,
            });
        }
        let mut atoms = Vec::with_capacity(pairs);
        for a in &self.atoms {
            for b in &other.atoms {
                atoms.push(Atom::new(a.position + b.position, a.weight * b.weight));
            }
        }
        Ok(Self::from_unsorted(self.dim, atoms))
    }

    /// Atom-by-atom comparison with positional and weight tolerances.
    pub fn approx_eq(&self, other: &AtomicMeasure, pos_tol: f64, weight_tol: f64) -> bool {
        self.dim == other.dim
            && self.len() == other.len()
            && self.atoms.iter().zip(other.atoms.iter()).all(|(a, b)| {
                a.position.close_to(&b.position, pos_tol) && (a.weight - b.weight).norm() <= weight_tol
            })
    }

    /// Columnar text: one atom per line, position components then weight
    /// real and imaginary parts, tab separated, 17 significant digits.
    pub fn write_columnar<W: Write>(&self, mut out: W) -> Result<()> {
        for a in &self.atoms {
            let mut fields: Vec<String> = (0..self.dim)
                .map(|i| format!("{:.16e}", a.position.coord(i)))
                .collect();
            fields.push(format!("{:.16e}", a.weight.re));
            fields.push(format!("{:.16e}", a.weight.im));
            writeln!(out, "{}", fields.join("\t"))?;
        }
        Ok(())
    }

    /// Inverse of [`write_columnar`](Self::write_columnar). Blank lines and
    /// lines starting with `#` are skipped; the dimension is inferred from
    /// the column count.
    pub fn read_columnar<R: BufRead>(input: R) -> Result<Self> {
        let mut dim = None;
        let mut atoms = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields = line
                .split('\t')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::invalid("measure-core", format!("line {}: {e}", lineno + 1)))?;
            let d = fields.len().checked_sub(2).filter(|d| (1..=2).contains(d)).ok_or_else(|| {
                Error::invalid("measure-core", format!("line {}: expected 3 or 4 columns", lineno + 1))
            })?;
            if *dim.get_or_insert(d) != d {
                return Err(Error::DimensionMismatch {
                    module: "measure-core",
                    expected: dim.unwrap_or(d),
                    got: d,
                });
            }
            atoms.push(Atom::new(
                Point::from_slice(&fields[..d])?,
                Complex64::new(fields[d], fields[d + 1]),
            ));
        }
        AtomicMeasure::new(dim.unwrap_or(1), atoms)
    }
}

/// Merges runs of sorted atoms lying within [`MERGE_TOL`] of each other.
fn merge_sorted(atoms: Vec<Atom>) -> Vec<Atom> {
    let n = atoms.len();
    let mut consumed = vec![false; n];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if consumed[i] {
            continue;
        }
        let mut acc = atoms[i];
        let mut j = i + 1;
        while j < n && atoms[j].position.x() - atoms[i].position.x() <= MERGE_TOL {
            if !consumed[j] && atoms[j].position.close_to(&atoms[i].position, MERGE_TOL) {
                acc.weight += atoms[j].weight;
                consumed[j] = true;
            }
            j += 1;
        }
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::TestFunction;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dirac(x: f64) -> AtomicMeasure {
        AtomicMeasure::from_positions(1, [Point::d1(x)]).unwrap()
    }

    fn comb(lo: i64, hi: i64) -> AtomicMeasure {
        AtomicMeasure::from_positions(1, (lo..=hi).map(|k| Point::d1(k as f64))).unwrap()
    }

    #[test]
    fn pair_examples() {
        let tent = TestFunction::tent(1.0).unwrap();
        assert_eq!(dirac(0.0).pair(&tent).unwrap(), c(1.0, 0.0));
        let two = AtomicMeasure::from_positions(1, [Point::d1(1.0), Point::d1(-1.0)]).unwrap();
        assert_eq!(two.pair(&tent).unwrap(), c(0.0, 0.0));
        let narrow = TestFunction::tent(0.5).unwrap();
        assert_eq!(comb(-3, 3).pair(&narrow).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn pair_rejects_dimension_mismatch() {
        let tent2 = TestFunction::tent_2d(1.0, 1.0).unwrap();
        assert!(matches!(
            dirac(0.0).pair(&tent2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn translation_examples() {
        assert_eq!(dirac(0.0).translate(Point::d1(2.0)), dirac(2.0));
        let mu = comb(-2, 3);
        assert_eq!(mu.translate(Point::d1(0.25)).translate(Point::d1(-0.25)), mu);
        // T^t f_φ = f_{φ_t}, φ_t(s) = φ(t − s), on μ = δ_1, t = 1/2.
        let phi = TestFunction::tent(1.0).unwrap();
        let t = Point::d1(0.5);
        let lhs = dirac(1.0).translate(-t).pair(&phi).unwrap();
        let rhs = dirac(1.0).pair(&phi.orbit_translate(t)).unwrap();
        assert!((lhs - c(0.5, 0.0)).norm() < 1e-15);
        assert!((rhs - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn reflection_examples() {
        let mu = AtomicMeasure::new(1, vec![Atom::new(Point::d1(1.0), c(0.0, 1.0))]).unwrap();
        let r = mu.reflect();
        assert_eq!(r.atoms()[0].position, Point::d1(-1.0));
        assert_eq!(r.atoms()[0].weight, c(0.0, -1.0));
        assert_eq!(r.reflect(), mu);
        let mu = AtomicMeasure::new(1, vec![Atom::new(Point::d1(1.0), c(2.0, 0.0))]).unwrap();
        let phi = TestFunction::tent(2.0).unwrap();
        let lhs = mu.reflect().pair(&phi).unwrap();
        let rhs = mu.pair(&phi.reflected()).unwrap().conj();
        assert_eq!(lhs, c(1.0, 0.0));
        assert_eq!(rhs, c(1.0, 0.0));
    }

    #[test]
    fn restriction_examples() {
        let w = Window::interval(-2.0, 2.0).unwrap();
        assert_eq!(comb(-5, 5).restrict(&w), comb(-2, 2));
        let big = Window::interval(-10.0, 10.0).unwrap();
        assert_eq!(comb(-5, 5).restrict(&big), comb(-5, 5));
        assert_eq!(dirac(2.0).restrict(&w), dirac(2.0));
    }

    #[test]
    fn convolution_examples() {
        assert_eq!(dirac(0.5).convolve(&dirac(1.25)).unwrap(), dirac(1.75));
        let pair = comb(0, 1);
        let sq = pair.convolve(&pair).unwrap();
        let w: Vec<f64> = sq.atoms().iter().map(|a| a.weight.re).collect();
        assert_eq!(w, vec![1.0, 2.0, 1.0]);
        let tau = (1.0 + 5f64.sqrt()) / 2.0;
        let mu = AtomicMeasure::from_positions(1, [Point::d1(0.0), Point::d1(tau)]).unwrap();
        let g = mu.reflect().convolve(&mu).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.weight_at(&Point::d1(0.0)), c(2.0, 0.0));
        assert_eq!(g.weight_at(&Point::d1(tau)), c(1.0, 0.0));
        assert_eq!(g.weight_at(&Point::d1(-tau)), c(1.0, 0.0));
    }

    #[test]
    fn convolution_pair_limit() {
        let mu = comb(0, 99);
        assert!(matches!(
            mu.convolve_with_limit(&mu, 1000),
            Err(Error::PairLimit { .. })
        ));
    }

    #[test]
    fn columnar_round_trip() {
        let mu = AtomicMeasure::new(
            2,
            vec![
                Atom::new(Point::d2(0.1, -3.0), c(1.0 / 3.0, -2.5)),
                Atom::new(Point::d2(1e-7, 2.0), c(1.0, 0.0)),
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        mu.write_columnar(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().all(|l| l.split('\t').count() == 4));
        let back = AtomicMeasure::read_columnar(&buf[..]).unwrap();
        assert_eq!(back, mu);
    }

    #[test]
    fn nearby_atoms_merge() {
        let mu = AtomicMeasure::from_positions(1, [Point::d1(1.0), Point::d1(1.0 + 1e-12), Point::d1(2.0)])
            .unwrap();
        assert_eq!(mu.len(), 2);
        assert_eq!(mu.atoms()[0].weight, c(2.0, 0.0));
    }
}
