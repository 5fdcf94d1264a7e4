//! Small numerical kernels shared across modules: deterministic summation,
//! breakpoint-aligned adaptive quadrature and golden-section search.

use num_complex::Complex64;
use rayon::prelude::*;

/// Absolute tolerance used by the orbit quadratures.
pub const QUAD_TOL: f64 = 1e-8;

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (tree) summation. The reduction tree depends only on the slice
/// length, so results are bit-identical regardless of how the terms were
/// produced.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().fold(Complex64::new(0.0, 0.0), |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_sum_real(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_real(&values[..mid]) + pairwise_sum_real(&values[mid..])
}

/// Median of a slice (NaN-free). Returns 0 for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

// 5-point Gauss–Legendre on [-1, 1]; exact for polynomials of degree ≤ 9.
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

fn gauss5<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Complex64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
        acc += f(mid + half * x) * *w;
    }
    acc * half
}

fn adaptive_panel<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    whole: Complex64,
    tol: f64,
    depth: u32,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let left = gauss5(f, a, m);
    let right = gauss5(f, m, b);
    let halves = left + right;
    if depth == 0 || (whole - halves).norm() <= tol.max(1e-15 * halves.norm()) {
        return halves;
    }
    adaptive_panel(f, a, m, left, 0.5 * tol, depth - 1)
        + adaptive_panel(f, m, b, right, 0.5 * tol, depth - 1)
}

/// Sorted, deduplicated panel edges of `[a, b]` including the interior
/// breakpoints.
pub fn panel_edges(a: f64, b: f64, breakpoints: &[f64]) -> Vec<f64> {
    let mut edges: Vec<f64> = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(a);
    edges.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    let scale = 1e-13 * (1.0 + a.abs().max(b.abs()));
    edges.dedup_by(|x, y| (*x - *y).abs() <= scale);
    if let Some(last) = edges.last_mut() {
        *last = b;
    }
    edges
}

/// `∫_a^b f` with panels aligned to `breakpoints` and adaptive bisection
/// inside each panel to absolute tolerance `tol` overall. Piecewise
/// polynomial integrands of degree ≤ 9 between breakpoints are integrated
/// exactly up to rounding.
pub fn integrate_1d<F>(f: &F, a: f64, b: f64, breakpoints: &[f64], tol: f64) -> Complex64
where
    F: Fn(f64) -> Complex64 + Sync,
{
    if !(b > a) {
        return Complex64::new(0.0, 0.0);
    }
    let edges = panel_edges(a, b, breakpoints);
    let total = b - a;
    let panels: Vec<Complex64> = edges
        .par_windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let ptol = tol * (hi - lo) / total;
            let whole = gauss5(f, lo, hi);
            adaptive_panel(f, lo, hi, whole, ptol, 30)
        })
        .collect();
    pairwise_sum(&panels)
}

/// Iterated integral over the rectangle `[ax, bx] × [ay, by]`.
pub fn integrate_2d<F>(
    f: &F,
    (ax, bx): (f64, f64),
    (ay, by): (f64, f64),
    breaks_x: &[f64],
    breaks_y: &[f64],
    tol: f64,
) -> Complex64
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    if !(bx > ax) || !(by > ay) {
        return Complex64::new(0.0, 0.0);
    }
    let inner_tol = tol / (bx - ax);
    let edges_y = panel_edges(ay, by, breaks_y);
    let inner = |x: f64| {
        let g = |y: f64| f(x, y);
        let total = by - ay;
        let parts: Vec<Complex64> = edges_y
            .windows(2)
            .map(|w| {
                let ptol = inner_tol * (w[1] - w[0]) / total;
                let whole = gauss5(&g, w[0], w[1]);
                adaptive_panel(&g, w[0], w[1], whole, ptol, 20)
            })
            .collect();
        pairwise_sum(&parts)
    };
    integrate_1d(&inner, ax, bx, breaks_x, tol)
}

/// Solves `A X = B` for a small dense system by Gaussian elimination with
/// partial pivoting; each right-hand side row carries `K` columns.
pub fn solve_small<const K: usize>(a: &[Vec<f64>], b: &[[f64; K]]) -> Option<Vec<[f64; K]>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x: Vec<[f64; K]> = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        x.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            for k in 0..K {
                x[row][k] -= f * x[col][k];
            }
        }
    }
    for col in (0..n).rev() {
        for k in 0..K {
            let s: f64 = (col + 1..n).map(|j| m[col][j] * x[j][k]).sum();
            x[col][k] = (x[col][k] - s) / m[col][col];
        }
    }
    Some(x)
}

/// Golden-section search for a maximiser of a unimodal `f` on `[a, b]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        c
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<Complex64> = (0..1000).map(|i| c(i as f64)).collect();
        assert_eq!(pairwise_sum(&v).re, 499_500.0);
        assert_eq!(pairwise_sum_real(&[1.0, 2.0, 3.0]), 6.0);
    }

    #[test]
    fn exact_on_piecewise_polynomials() {
        // |x| on [-1, 2] with the kink as a breakpoint.
        let f = |x: f64| c(x.abs());
        let v = integrate_1d(&f, -1.0, 2.0, &[0.0], 1e-12);
        assert!((v.re - 2.5).abs() < 1e-14);
        let g = |x: f64| c(x.powi(7) - 3.0 * x);
        let v = integrate_1d(&g, 0.0, 1.0, &[], 1e-12);
        assert!((v.re - (0.125 - 1.5)).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_oscillation() {
        let f = |x: f64| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 3.0 * x);
        let v = integrate_1d(&f, 0.0, 1.0, &[], 1e-10);
        assert!(v.norm() < 1e-10);
    }

    #[test]
    fn two_dimensional_area() {
        let f = |x: f64, y: f64| c(x * y);
        let v = integrate_2d(&f, (0.0, 2.0), (0.0, 3.0), &[], &[], 1e-12);
        assert!((v.re - 9.0).abs() < 1e-12);
    }

    #[test]
    fn golden_section_finds_peak() {
        let x = golden_max(|x| -(x - 0.3).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
