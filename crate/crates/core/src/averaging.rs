//! Averaging sequences: exact Følner/van Hove geometry of boxes, the tempered
//! constant, and orbit (Birkhoff) averages with their boundary terms.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::generators::Patch;
use crate::geometry::{box_difference, Point, Window};
use crate::numerics::{integrate_1d, integrate_2d, pairwise_sum, QUAD_TOL};
use crate::observable::Observable;

/// Nested, origin-symmetric boxes `B_1 ⊂ B_2 ⊂ …`, indexed from 1.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxSequence {
    boxes: Vec<Window>,
}

impl BoxSequence {
    pub fn new(boxes: Vec<Window>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::invalid("averaging", "box sequence is empty"));
        }
        let dim = boxes[0].dim();
        for b in &boxes {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch {
                    module: "averaging",
                    expected: dim,
                    got: b.dim(),
                });
            }
            if b.center() != Point::ORIGIN {
                return Err(Error::invalid("averaging", "boxes must be centred at the origin"));
            }
            if !(b.volume() > 0.0) {
                return Err(Error::invalid("averaging", "boxes must have positive volume"));
            }
        }
        for w in boxes.windows(2) {
            let grows = (0..dim).all(|a| w[1].half_width(a) > w[0].half_width(a));
            if !grows {
                return Err(Error::invalid(
                    "averaging",
                    "half-widths must be strictly increasing along the sequence",
                ));
            }
        }
        Ok(BoxSequence { boxes })
    }

    /// `B_n = [−n, n]^d` for `n = 1..=count`.
    pub fn integer_cubes(dim: usize, count: usize) -> Result<Self> {
        Self::new(
            (1..=count)
                .map(|n| Window::centered_cube(dim, n as f64))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// Cubes `[−h, h]^d` for the given increasing half-widths.
    pub fn cubes(dim: usize, half_widths: &[f64]) -> Result<Self> {
        Self::new(
            half_widths
                .iter()
                .map(|&h| Window::centered_cube(dim, h))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.boxes[0].dim()
    }

    /// `B_n`, 1-based.
    pub fn get(&self, n: usize) -> Result<&Window> {
        n.checked_sub(1)
            .and_then(|i| self.boxes.get(i))
            .ok_or_else(|| Error::invalid("averaging", format!("index {n} outside 1..={}", self.len())))
    }

    pub fn boxes(&self) -> &[Window] {
        &self.boxes
    }
}

/// The `K`-boundary `∂^K B` as a finite union of boxes with its volume.
#[derive(Clone, Debug)]
pub struct BoundaryRegion {
    pub pieces: Vec<Window>,
    pub volume: f64,
}

/// `∂^K B = closure((B+K)∖B) ∪ [(closure(G∖B) − K) ∩ B]`, which for boxes and
/// `0 ∈ K` equals `(B + K) ∖ int(B ⊖ K)`.
pub fn k_boundary(b: &Window, k: &Window) -> Result<BoundaryRegion> {
    if b.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            module: "averaging",
            expected: b.dim(),
            got: k.dim(),
        });
    }
    if !k.contains(&Point::ORIGIN) {
        return Err(Error::invalid("averaging", "K must contain the origin"));
    }
    let outer = b.minkowski_sum(k);
    let inner = b.erode(k);
    let pieces = box_difference(&outer, inner.as_ref());
    let volume = outer.volume() - inner.map_or(0.0, |w| w.volume());
    Ok(BoundaryRegion { pieces, volume })
}

/// `|B △ (B + K)| / |B|`.
pub fn folner_ratio(b: &Window, k: &Window) -> Result<f64> {
    if b.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            module: "averaging",
            expected: b.dim(),
            got: k.dim(),
        });
    }
    if !(b.volume() > 0.0) {
        return Err(Error::invalid("averaging", "B must have positive volume"));
    }
    let bk = b.minkowski_sum(k);
    let overlap = b.intersect(&bk).map_or(0.0, |w| w.volume());
    Ok((b.volume() + bk.volume() - 2.0 * overlap) / b.volume())
}

/// `|∂^K B| / |B|`.
pub fn van_hove_ratio(b: &Window, k: &Window) -> Result<f64> {
    Ok(k_boundary(b, k)?.volume / b.volume())
}

/// `|∪_{k<n} (−B_k + B_n)| / |B_n|` for `n ≥ 2` (0 for `n = 1`).
pub fn tempered_ratio(seq: &BoxSequence, n: usize) -> Result<f64> {
    let bn = seq.get(n)?;
    if n == 1 {
        return Ok(0.0);
    }
    // nested: the union over k < n is −B_{n−1} + B_n
    let prev = seq.get(n - 1)?;
    Ok(prev.reflect().minkowski_sum(bn).volume() / bn.volume())
}

/// `max_{n ≥ 2} |∪_{k<n} (−B_k + B_n)| / |B_n|`.
pub fn tempered_constant(seq: &BoxSequence) -> Result<f64> {
    if seq.len() < 2 {
        return Err(Error::invalid("averaging", "tempered constant needs at least two boxes"));
    }
    (2..=seq.len()).try_fold(0.0f64, |m, n| Ok(m.max(tempered_ratio(seq, n)?)))
}

/// `∫_R f(t) dt` over a box, panels aligned to the observable's kinks.
pub(crate) fn integrate_over<F>(f: &F, region: &Window, breaks: [Vec<f64>; 2]) -> Complex64
where
    F: Fn(&Point) -> Complex64 + Sync,
{
    match region.dim() {
        1 => integrate_1d(
            &|x: f64| f(&Point::d1(x)),
            region.lo(0),
            region.hi(0),
            &breaks[0],
            QUAD_TOL,
        ),
        _ => integrate_2d(
            &|x: f64, y: f64| f(&Point::d2(x, y)),
            (region.lo(0), region.hi(0)),
            (region.lo(1), region.hi(1)),
            &breaks[0],
            &breaks[1],
            QUAD_TOL,
        ),
    }
}

pub(crate) fn observable_breaks(h: &Observable, patch: &Patch, region: &Window, shift: Point) -> [Vec<f64>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (axis, slot) in out.iter_mut().enumerate().take(region.dim()) {
        let lo = region.lo(axis) + shift.coord(axis);
        let hi = region.hi(axis) + shift.coord(axis);
        *slot = h
            .breakpoints(&patch.measure, axis, lo, hi)
            .into_iter()
            .map(|b| b - shift.coord(axis))
            .collect();
    }
    out
}

fn check_observable_dim(h: &Observable, patch: &Patch) -> Result<()> {
    match h.dim() {
        Some(d) if d != patch.dim() => Err(Error::DimensionMismatch {
            module: "averaging",
            expected: patch.dim(),
            got: d,
        }),
        _ => Ok(()),
    }
}

/// `(1/|W|) ∫_W h(α_{−t} ω) dt`.
pub fn orbit_average(h: &Observable, patch: &Patch, window: &Window) -> Result<Complex64> {
    check_observable_dim(h, patch)?;
    if let Some(reach) = h.reach(window) {
        patch.require_covers(&reach, "averaging", "orbit average")?;
    }
    let f = |t: &Point| h.orbit_value(&patch.measure, t);
    let breaks = observable_breaks(h, patch, window, Point::ORIGIN);
    Ok(integrate_over(&f, window, breaks) / window.volume())
}

/// Birkhoff average of `h` along the orbit of `ω` over `B_n`.
pub fn birkhoff_average(h: &Observable, patch: &Patch, seq: &BoxSequence, n: usize) -> Result<Complex64> {
    orbit_average(h, patch, seq.get(n)?)
}

/// `(1/|B_n|) ∫_{∂^K B_n} |h(α_t ω)| dt`.
pub fn boundary_term(h: &Observable, patch: &Patch, seq: &BoxSequence, n: usize, k: &Window) -> Result<f64> {
    check_observable_dim(h, patch)?;
    let bn = seq.get(n)?;
    let region = k_boundary(bn, k)?;
    let mut parts = Vec::with_capacity(region.pieces.len());
    for piece in &region.pieces {
        // h(α_t ω) = (T^{−t} h)(ω): integrate over −piece in orbit time
        let mirrored = piece.reflect();
        if let Some(reach) = h.reach(&mirrored) {
            patch.require_covers(&reach, "averaging", "boundary term")?;
        }
        let f = |t: &Point| Complex64::new(h.orbit_value(&patch.measure, t).norm(), 0.0);
        let breaks = observable_breaks(h, patch, &mirrored, Point::ORIGIN);
        parts.push(integrate_over(&f, &mirrored, breaks));
    }
    Ok(pairwise_sum(&parts).re / bn.volume())
}

/// One row of the averaging diagnostics table.
#[derive(Clone, Debug, PartialEq)]
pub struct VanHoveRow {
    pub n: usize,
    pub volume: f64,
    pub folner_ratio: f64,
    pub vanhove_ratio: f64,
    pub tempered_ratio: f64,
    pub boundary_term: Option<f64>,
}

/// Diagnostics for every box of the sequence; boundary terms are computed
/// when an observable and a realization are supplied.
pub fn vanhove_diagnostics(
    seq: &BoxSequence,
    k: &Window,
    observable: Option<(&Observable, &Patch)>,
) -> Result<Vec<VanHoveRow>> {
    (1..=seq.len())
        .map(|n| {
            let b = seq.get(n)?;
            Ok(VanHoveRow {
                n,
                volume: b.volume(),
                folner_ratio: folner_ratio(b, k)?,
                vanhove_ratio: van_hove_ratio(b, k)?,
                tempered_ratio: tempered_ratio(seq, n)?,
                boundary_term: match observable {
                    Some((h, patch)) => Some(boundary_term(h, patch, seq, n, k)?),
                    None => None,
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::GeneratorSpec;
    use crate::measure::AtomicMeasure;
    use crate::testfn::TestFunction;

    fn iv(lo: f64, hi: f64) -> Window {
        Window::interval(lo, hi).unwrap()
    }

    #[test]
    fn k_boundary_examples() {
        for n in [1.0, 5.0, 40.0] {
            let b = iv(-n, n);
            let k = iv(-1.0, 1.0);
            let r = k_boundary(&b, &k).unwrap();
            assert_eq!(r.volume, 4.0);
            let pieces: f64 = r.pieces.iter().map(Window::volume).sum();
            assert_eq!(pieces, 4.0);
            assert_eq!(van_hove_ratio(&b, &k).unwrap(), 2.0 / n);
        }
        let zero = Window::new(1, Point::ORIGIN, Point::ORIGIN).unwrap();
        assert_eq!(k_boundary(&iv(-3.0, 3.0), &zero).unwrap().volume, 0.0);
        assert!(k_boundary(&iv(-3.0, 3.0), &iv(0.5, 1.0)).is_err());
    }

    #[test]
    fn folner_examples() {
        let k = iv(-1.0, 1.0);
        assert_eq!(folner_ratio(&iv(-4.0, 4.0), &k).unwrap(), 0.25);
        let zero = Window::new(1, Point::ORIGIN, Point::ORIGIN).unwrap();
        assert_eq!(folner_ratio(&iv(-4.0, 4.0), &zero).unwrap(), 0.0);
        let n = 3.0;
        let b2 = Window::centered_cube(2, n).unwrap();
        let k2 = Window::centered_cube(2, 1.0).unwrap();
        let expected = (8.0 * n + 4.0) / (4.0 * n * n);
        assert!((folner_ratio(&b2, &k2).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn tempered_examples() {
        let seq = BoxSequence::integer_cubes(1, 10).unwrap();
        assert_eq!(tempered_constant(&seq).unwrap(), 1.9);
        let two = BoxSequence::cubes(1, &[1.0, 2.0]).unwrap();
        assert_eq!(tempered_constant(&two).unwrap(), 1.5);
        assert!(BoxSequence::cubes(1, &[2.0, 2.0]).is_err());
        assert!(tempered_constant(&BoxSequence::cubes(1, &[1.0]).unwrap()).is_err());
    }

    #[test]
    fn birkhoff_lattice_tent() {
        let n = 100;
        let patch = Patch::generate(&GeneratorSpec::lattice(1.0), &iv(-(n as f64) - 1.0, n as f64 + 1.0)).unwrap();
        let seq = BoxSequence::integer_cubes(1, n).unwrap();
        let h = Observable::pairing(TestFunction::tent(0.5).unwrap());
        let avg = birkhoff_average(&h, &patch, &seq, n).unwrap();
        assert!((avg.re - 0.5).abs() < 1e-8, "{avg}");
        let c = birkhoff_average(&Observable::constant(2.5), &patch, &seq, n).unwrap();
        assert!((c.re - 2.5).abs() < 1e-12);
        let empty = Patch::new(AtomicMeasure::empty(1), iv(-200.0, 200.0)).unwrap();
        assert_eq!(birkhoff_average(&h, &empty, &seq, n).unwrap().norm(), 0.0);
    }

    #[test]
    fn birkhoff_coverage_error() {
        let patch = Patch::generate(&GeneratorSpec::lattice(1.0), &iv(-10.0, 10.0)).unwrap();
        let seq = BoxSequence::integer_cubes(1, 10).unwrap();
        let h = Observable::pairing(TestFunction::tent(0.5).unwrap());
        assert!(matches!(
            birkhoff_average(&h, &patch, &seq, 10),
            Err(Error::Coverage { .. })
        ));
    }

    #[test]
    fn boundary_term_lattice() {
        let h = Observable::pairing(TestFunction::tent(0.5).unwrap());
        let k = iv(-1.0, 1.0);
        let patch = Patch::generate(&GeneratorSpec::lattice(1.0), &iv(-100.0, 100.0)).unwrap();
        let seq = BoxSequence::integer_cubes(1, 80).unwrap();
        let at = |n| boundary_term(&h, &patch, &seq, n, &k).unwrap();
        let (v20, v40) = (at(20), at(40));
        assert!(v20 <= 2.0 / 20.0 + 1e-12);
        let ratio = v40 / v20;
        assert!((0.4..=0.6).contains(&ratio), "ratio {ratio}");
        let empty = Patch::new(AtomicMeasure::empty(1), iv(-100.0, 100.0)).unwrap();
        assert_eq!(boundary_term(&h, &empty, &seq, 20, &k).unwrap(), 0.0);
    }

    #[test]
    fn two_dimensional_birkhoff() {
        let patch = Patch::generate(
            &GeneratorSpec::lattice(1.0).with_dim(2),
            &Window::centered_cube(2, 6.0).unwrap(),
        )
        .unwrap();
        let seq = BoxSequence::integer_cubes(2, 4).unwrap();
        let h = Observable::pairing(TestFunction::tent_2d(0.5, 0.5).unwrap());
        let avg = birkhoff_average(&h, &patch, &seq, 4).unwrap();
        assert!((avg.re - 0.25).abs() < 1e-8, "{avg}");
    }
}
