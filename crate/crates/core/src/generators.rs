//! Realizations of the point-set dynamical systems on arbitrary windows.
//!
//! All randomness is counter based: each lattice site (or Poisson unit cell)
//! draws from its own generator seeded by a hash of `(seed, index)`, so the
//! realization on a small window is exactly the restriction of the
//! realization on any larger window.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_dim, Point, Window};
use crate::measure::{Atom, AtomicMeasure, MERGE_TOL};

/// The golden mean τ = (1 + √5)/2.
pub const TAU: f64 = 1.618_033_988_749_895;

/// Upper bound on the number of sites/cells a single call may visit.
const MAX_SITES: u64 = 200_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Lattice,
    BernoulliLattice,
    RandomDisplacement,
    Poisson,
    Fibonacci,
}

impl GeneratorKind {
    /// Kinds built on the lattice `aℤ^d`.
    pub fn is_lattice_based(self) -> bool {
        matches!(
            self,
            GeneratorKind::Lattice | GeneratorKind::BernoulliLattice | GeneratorKind::RandomDisplacement
        )
    }
}

/// Parameters of a generator. Unused fields are ignored by kinds that do not
/// need them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Lattice spacing.
    #[serde(default = "one")]
    pub a: f64,
    /// Occupation probability (bernoulli_lattice).
    #[serde(default = "one")]
    pub p: f64,
    /// Jitter half-width (random_displacement).
    #[serde(default)]
    pub eta: f64,
    /// Intensity (poisson).
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default)]
    pub seed: u64,
    /// Global translation applied to the whole realization.
    #[serde(default)]
    pub offset: Vec<f64>,
    /// Shift `c` of the internal acceptance window (fibonacci).
    #[serde(default)]
    pub internal_shift: f64,
}

fn default_dim() -> usize {
    1
}

fn one() -> f64 {
    1.0
}

impl GeneratorSpec {
    fn base(kind: GeneratorKind) -> Self {
        GeneratorSpec {
            kind,
            dim: 1,
            a: 1.0,
            p: 1.0,
            eta: 0.0,
            rho: 1.0,
            seed: 0,
            offset: Vec::new(),
            internal_shift: 0.0,
        }
    }

    pub fn lattice(a: f64) -> Self {
        GeneratorSpec { a, ..Self::base(GeneratorKind::Lattice) }
    }

    pub fn bernoulli(a: f64, p: f64, seed: u64) -> Self {
        GeneratorSpec {
            a,
            p,
            seed,
            ..Self::base(GeneratorKind::BernoulliLattice)
        }
    }

    pub fn random_displacement(a: f64, eta: f64, seed: u64) -> Self {
        GeneratorSpec {
            a,
            eta,
            seed,
            ..Self::base(GeneratorKind::RandomDisplacement)
        }
    }

    pub fn poisson(rho: f64, seed: u64) -> Self {
        GeneratorSpec {
            rho,
            seed,
            ..Self::base(GeneratorKind::Poisson)
        }
    }

    pub fn fibonacci() -> Self {
        Self::base(GeneratorKind::Fibonacci)
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_offset(mut self, offset: Point) -> Self {
        self.offset = offset.0[..self.dim].to_vec();
        self
    }

    pub fn offset_point(&self) -> Point {
        let mut p = Point::ORIGIN;
        for (i, v) in self.offset.iter().take(self.dim).enumerate() {
            p.0[i] = *v;
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        check_dim("generators", self.dim)?;
        let bad = |m: String| Err(Error::invalid("generators", m));
        if !self.offset.is_empty() && self.offset.len() != self.dim {
            return bad(format!("offset has {} components for dim {}", self.offset.len(), self.dim));
        }
        if self.offset.iter().any(|v| !v.is_finite()) || !self.internal_shift.is_finite() {
            return bad("offset and internal_shift must be finite".into());
        }
        if self.kind.is_lattice_based() && (!(self.a > 2.0 * MERGE_TOL) || !self.a.is_finite()) {
            return bad(format!("spacing a must exceed {}, got {}", 2.0 * MERGE_TOL, self.a));
        }
        match self.kind {
            GeneratorKind::BernoulliLattice if !(0.0..=1.0).contains(&self.p) => {
                bad(format!("occupation probability p must lie in [0, 1], got {}", self.p))
            }
            GeneratorKind::RandomDisplacement if !(self.eta >= 0.0 && self.eta < 0.5 * self.a) => {
                bad(format!("jitter eta must lie in [0, a/2), got {}", self.eta))
            }
            GeneratorKind::Poisson if !(self.rho > 0.0 && self.rho.is_finite()) => {
                bad(format!("intensity rho must be positive, got {}", self.rho))
            }
            GeneratorKind::Fibonacci if self.dim != 1 => {
                bad(format!("fibonacci is one-dimensional, got dim {}", self.dim))
            }
            _ => Ok(()),
        }
    }
}

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based per-site generator.
fn site_rng(seed: u64, stream: u64, index: [i64; 2]) -> ChaCha8Rng {
    let h = mix64(mix64(mix64(seed ^ stream.rotate_left(17)) ^ index[0] as u64) ^ (index[1] as u64).rotate_left(32));
    ChaCha8Rng::seed_from_u64(h)
}

const STREAM_OCCUPATION: u64 = 1;
const STREAM_DISPLACEMENT: u64 = 2;
const STREAM_POISSON: u64 = 3;
const STREAM_REPLICATE: u64 = 4;

fn index_range(lo: f64, hi: f64, reach: f64, a: f64) -> (i64, i64) {
    (((lo - reach) / a).floor() as i64 - 1, ((hi + reach) / a).ceil() as i64 + 1)
}

fn count_sites(ranges: &[(i64, i64)]) -> u64 {
    ranges
        .iter()
        .map(|(lo, hi)| (hi - lo + 1).max(0) as u64)
        .fold(1u64, |acc, n| acc.saturating_mul(n))
}

fn for_each_site(dim: usize, ranges: &[(i64, i64)], mut f: impl FnMut([i64; 2])) {
    let (x0, x1) = ranges[0];
    let (y0, y1) = if dim == 2 { ranges[1] } else { (0, 0) };
    for i in x0..=x1 {
        for j in y0..=y1 {
            f([i, j]);
        }
    }
}

/// The realization `ω` restricted to the closed `window`.
pub fn generate(spec: &GeneratorSpec, window: &Window) -> Result<AtomicMeasure> {
    spec.validate()?;
    if window.dim() != spec.dim {
        return Err(Error::DimensionMismatch {
            module: "generators",
            expected: spec.dim,
            got: window.dim(),
        });
    }
    if !(window.volume() > 0.0) {
        return Err(Error::invalid("generators", "window volume must be positive"));
    }
    let dim = spec.dim;
    let offset = spec.offset_point();
    // work in the un-offset frame
    let frame = window.translate(-offset);
    let mut atoms = Vec::new();
    match spec.kind {
        GeneratorKind::Lattice | GeneratorKind::BernoulliLattice | GeneratorKind::RandomDisplacement => {
            let reach = if spec.kind == GeneratorKind::RandomDisplacement { spec.eta } else { 0.0 };
            let ranges: Vec<(i64, i64)> = (0..dim)
                .map(|ax| index_range(frame.lo(ax), frame.hi(ax), reach, spec.a))
                .collect();
            if count_sites(&ranges) > MAX_SITES {
                return Err(Error::PairLimit {
                    module: "generators",
                    pairs: count_sites(&ranges) as usize,
                    limit: MAX_SITES as usize,
                });
            }
            for_each_site(dim, &ranges, |idx| {
                let mut pos = Point::ORIGIN;
                for ax in 0..dim {
                    pos.0[ax] = spec.a * idx[ax] as f64;
                }
                match spec.kind {
                    GeneratorKind::BernoulliLattice => {
                        let u: f64 = site_rng(spec.seed, STREAM_OCCUPATION, idx).random();
                        if u >= spec.p {
                            return;
                        }
                    }
                    GeneratorKind::RandomDisplacement => {
                        let mut rng = site_rng(spec.seed, STREAM_DISPLACEMENT, idx);
                        for ax in 0..dim {
                            pos.0[ax] += spec.eta * (2.0 * rng.random::<f64>() - 1.0);
                        }
                    }
                    _ => {}
                }
                let pos = pos + offset;
                if window.contains(&pos) {
                    atoms.push(Atom::unit(pos));
                }
            });
        }
        GeneratorKind::Poisson => {
            let ranges: Vec<(i64, i64)> = (0..dim)
                .map(|ax| (frame.lo(ax).floor() as i64, frame.hi(ax).floor() as i64))
                .collect();
            if count_sites(&ranges) > MAX_SITES {
                return Err(Error::PairLimit {
                    module: "generators",
                    pairs: count_sites(&ranges) as usize,
                    limit: MAX_SITES as usize,
                });
            }
            let law = Poisson::new(spec.rho).map_err(|e| Error::invalid("generators", e.to_string()))?;
            for_each_site(dim, &ranges, |idx| {
                let mut rng = site_rng(spec.seed, STREAM_POISSON, idx);
                let count = law.sample(&mut rng) as u64;
                for _ in 0..count {
                    let mut pos = Point::ORIGIN;
                    for ax in 0..dim {
                        pos.0[ax] = idx[ax] as f64 + rng.random::<f64>();
                    }
                    let pos = pos + offset;
                    if window.contains(&pos) {
                        atoms.push(Atom::unit(pos));
                    }
                }
            });
        }
        GeneratorKind::Fibonacci => {
            for x in fibonacci_points(frame.lo(0), frame.hi(0), spec.internal_shift) {
                let pos = Point::d1(x) + offset;
                if window.contains(&pos) {
                    atoms.push(Atom::unit(pos));
                }
            }
        }
    }
    AtomicMeasure::new(dim, atoms)
}

/// The spec of replicate `r` of an ensemble: an independent seed and, when
/// `random_offset` is set, a uniformly random point of the hull (a uniform
/// offset in a lattice cell; for fibonacci a uniform point of the embedding
/// torus, i.e. offset and internal shift jointly). Without the random offset
/// lattice-based systems are not translation invariant in ℝ^d.
pub fn replicate(spec: &GeneratorSpec, r: u64, random_offset: bool) -> GeneratorSpec {
    let mut out = spec.clone();
    out.seed = mix64(spec.seed ^ mix64(r.wrapping_add(STREAM_REPLICATE)));
    if !random_offset {
        return out;
    }
    let mut rng = site_rng(spec.seed, STREAM_REPLICATE, [r as i64, 0]);
    let base = spec.offset_point();
    match spec.kind {
        GeneratorKind::Fibonacci => {
            let (s, q): (f64, f64) = (rng.random(), rng.random());
            out.offset = vec![base.x() + s + q * TAU];
            out.internal_shift = spec.internal_shift - (s - q / TAU);
        }
        _ => {
            let cell = if spec.kind == GeneratorKind::Poisson { 1.0 } else { spec.a };
            out.offset = (0..spec.dim).map(|ax| base.coord(ax) + cell * rng.random::<f64>()).collect();
        }
    }
    out
}

/// Cut-and-project set `{m + nτ : m − n/τ − c ∈ [−1/τ, 1)}` within `[lo, hi]`
/// (padded by one unit; the caller clips).
pub fn fibonacci_points(lo: f64, hi: f64, c: f64) -> Vec<f64> {
    let sqrt5 = 5f64.sqrt();
    let inv_tau = TAU - 1.0;
    // x − x* = n√5 with x* ∈ [−1/τ + c, 1 + c)
    let n_lo = ((lo - 1.0 - c) / sqrt5).floor() as i64 - 1;
    let n_hi = ((hi + inv_tau - c) / sqrt5).ceil() as i64 + 1;
    let mut pts = Vec::new();
    for n in n_lo..=n_hi {
        let nf = n as f64;
        let m_lo = (nf * inv_tau - inv_tau + c).floor() as i64 - 1;
        let m_hi = (nf * inv_tau + 1.0 + c).ceil() as i64 + 1;
        for m in m_lo..=m_hi {
            if in_acceptance_window(m, n, c) {
                let x = m as f64 + nf * TAU;
                if x >= lo - 1.0 && x <= hi + 1.0 {
                    pts.push(x);
                }
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts
}

/// `m − n/τ − c ∈ [−1/τ, 1)`. For `c = 0` the boundary cases are decided
/// exactly: multiplying by τ gives `mτ − n ≥ −1` and `(m − 1)τ < n`, and
/// `kτ` is an integer only for `k = 0`.
fn in_acceptance_window(m: i64, n: i64, c: f64) -> bool {
    if c == 0.0 {
        let lower = if m == 0 { n <= 1 } else { m as f64 * TAU >= (n - 1) as f64 };
        let upper = if m == 1 { 0 < n } else { (m - 1) as f64 * TAU < n as f64 };
        lower && upper
    } else {
        let star = m as f64 - n as f64 * (TAU - 1.0) - c;
        (-(TAU - 1.0)..1.0).contains(&star)
    }
}

/// `restrict(generate(spec, big), small) == generate(spec, small)`.
pub fn restriction_consistency_check(spec: &GeneratorSpec, small: &Window, big: &Window) -> Result<bool> {
    if !big.contains_window(small) {
        return Err(Error::invalid("generators", "small window must lie inside the big window"));
    }
    let from_big = generate(spec, big)?.restrict(small);
    let direct = generate(spec, small)?;
    Ok(from_big == direct)
}

/// A realization together with the window on which it is known. Estimators
/// check that the window covers the region their integrands reach.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub measure: AtomicMeasure,
    pub window: Window,
}

impl Patch {
    pub fn new(measure: AtomicMeasure, window: Window) -> Result<Self> {
        if measure.dim() != window.dim() {
            return Err(Error::DimensionMismatch {
                module: "generators",
                expected: window.dim(),
                got: measure.dim(),
            });
        }
        Ok(Patch {
            measure: measure.restrict(&window),
            window,
        })
    }

    pub fn generate(spec: &GeneratorSpec, window: &Window) -> Result<Self> {
        Ok(Patch {
            measure: generate(spec, window)?,
            window: *window,
        })
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn require_covers(&self, region: &Window, module: &'static str, what: &str) -> Result<()> {
        let tol = 1e-9 * (1.0 + region.diameter());
        let ok = (0..self.dim()).all(|a| {
            region.lo(a) >= self.window.lo(a) - tol && region.hi(a) <= self.window.hi(a) + tol
        });
        if ok {
            Ok(())
        } else {
            Err(Error::coverage(
                module,
                format!("{what} needs {region:?} but the realization is known on {:?}", self.window),
            ))
        }
    }

    pub fn translate(&self, t: Point) -> Patch {
        Patch {
            measure: self.measure.translate(t),
            window: self.window.translate(t),
        }
    }

    /// Sub-patch on a smaller window.
    pub fn restrict(&self, window: &Window) -> Result<Patch> {
        self.require_covers(window, "generators", "restriction")?;
        Ok(Patch {
            measure: self.measure.restrict(window),
            window: *window,
        })
    }
}

/// Total number of atoms of unit weight; a convenience for density checks.
pub fn count(measure: &AtomicMeasure) -> f64 {
    measure.atoms().iter().map(|a| a.weight).sum::<Complex64>().re
}
