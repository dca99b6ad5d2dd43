//! Independent reference computations used to cross-check the main
//! pipelines: finite differences, brute-force maximization, a dense
//! generalized eigensolver and random radial test functions.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{GapError, Result};
use crate::modelspace::RadialProfile;

/// Richardson-extrapolated centered difference of `f` at `t` with step `h`.
pub fn central_difference<F: Fn(f64) -> f64>(f: F, t: f64, h: f64) -> f64 {
    let d = |h: f64| (f(t + h) - f(t - h)) / (2.0 * h);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

/// Maximum of `f` over a box by a `grid × grid` scan followed by a
/// Hooke–Jeeves pattern search. Points where `f` is `None` are infeasible.
pub fn maximize_2d<F: Fn(f64, f64) -> Option<f64>>(
    f: F,
    x_range: (f64, f64),
    y_range: (f64, f64),
    grid: usize,
) -> Option<(f64, f64, f64)> {
    let inside = |x: f64, y: f64| x >= x_range.0 && x <= x_range.1 && y >= y_range.0 && y <= y_range.1;
    let eval = |x: f64, y: f64| if inside(x, y) { f(x, y) } else { None };
    let mut best: Option<(f64, f64, f64)> = None;
    let n = grid.max(2);
    for i in 0..n {
        let x = x_range.0 + (x_range.1 - x_range.0) * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let y = y_range.0 + (y_range.1 - y_range.0) * j as f64 / (n - 1) as f64;
            if let Some(v) = eval(x, y) {
                if best.is_none_or(|b| v > b.2) {
                    best = Some((x, y, v));
                }
            }
        }
    }
    let (mut x, mut y, mut v) = best?;
    let mut hx = (x_range.1 - x_range.0) / (n - 1) as f64;
    let mut hy = (y_range.1 - y_range.0) / (n - 1) as f64;
    let scale_x = x_range.1.abs().max(x_range.0.abs());
    let scale_y = y_range.1.abs().max(y_range.0.abs());
    while hx > 1e-15 * scale_x || hy > 1e-15 * scale_y {
        let mut moved = false;
        for (dx, dy) in [(hx, 0.0), (-hx, 0.0), (0.0, hy), (0.0, -hy), (hx, hy), (-hx, -hy), (hx, -hy), (-hx, hy)] {
            if let Some(c) = eval(x + dx, y + dy) {
                if c > v {
                    x += dx;
                    y += dy;
                    v = c;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            hx *= 0.5;
            hy *= 0.5;
        }
    }
    Some((x, y, v))
}

/// All eigenvalues of the symmetric-definite pencil `(A, B)`, ascending,
/// via Cholesky reduction to a standard symmetric problem.
pub fn dense_generalized_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| GapError::Solver {
            message: "mass matrix is not positive definite".into(),
            log: Vec::new(),
        })?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| GapError::Solver {
            message: "Cholesky factor is singular".into(),
            log: Vec::new(),
        })?;
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut values: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_pow(base: &[f64], k: usize) -> Vec<f64> {
    (0..k).fold(vec![1.0], |acc, _| poly_mul(&acc, base))
}

/// A polynomial profile supported on `[lo, hi]`, with coefficients in powers
/// of `t − origin`.
pub fn polynomial_on(coeffs: Vec<f64>, origin: f64, lo: f64, hi: f64) -> Result<RadialProfile> {
    let mut derived = vec![coeffs];
    while derived.last().is_some_and(|c| c.len() > 1) {
        let prev = derived.last().unwrap();
        let next: Vec<f64> = prev.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
        derived.push(next);
    }
    let eval = move |t: f64, out: &mut [f64]| {
        let t = t - origin;
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = derived
                .get(j)
                .map(|c| c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci))
                .unwrap_or(0.0);
        }
    };
    RadialProfile::new((lo, hi), 0.0, None, Vec::new(), Arc::new(eval))
}

/// `(1 − t²/R²)^m · (c₀ + c₁t² + c₂t⁴)` on `[0, R]`: smooth at the origin
/// and vanishing to order `m` at `R`.
pub fn random_even_bump<R: Rng>(rng: &mut R, radius: f64, min_order: usize) -> Result<RadialProfile> {
    let m = rng.random_range(min_order..min_order + 3);
    let base = [1.0, 0.0, -1.0 / (radius * radius)];
    let shape = [
        rng.random_range(0.5..2.0),
        0.0,
        rng.random_range(-1.0..1.0) / (radius * radius),
        0.0,
        rng.random_range(-0.5..0.5) / radius.powi(4),
    ];
    polynomial_on(poly_mul(&poly_pow(&base, m), &shape), 0.0, 0.0, radius)
}

/// `(s(d − s))^m · (1 + c·s)` with `s = t − a`, `d = b − a`, on `[a, b]`
/// with `0 < a < b`: supported away from the origin.
pub fn random_annular_bump<R: Rng>(rng: &mut R, max_radius: f64, order: usize) -> Result<RadialProfile> {
    let a = rng.random_range(0.05..0.4) * max_radius;
    let b = rng.random_range(a + 0.2 * max_radius..max_radius);
    let d = b - a;
    let factor = [0.0, d, -1.0];
    let tilt = [1.0, rng.random_range(-0.5..0.5) / d];
    // peak of (s(d−s))^m is (d²/4)^m
    let scale = (0.25 * d * d).powi(order as i32);
    let coeffs = poly_mul(&poly_pow(&factor, order), &tilt)
        .iter()
        .map(|c| c / scale)
        .collect();
    polynomial_on(coeffs, a, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn central_difference_is_accurate() {
        let d = central_difference(f64::sin, 0.3, 1e-2);
        assert!((d - 0.3f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn maximize_2d_finds_interior_peak() {
        let (x, y, v) = maximize_2d(
            |x, y| Some(1.0 - (x - 0.3).powi(2) - 2.0 * (y + 0.7).powi(2)),
            (-1.0, 1.0),
            (-1.0, 1.0),
            41,
        )
        .unwrap();
        assert!((x - 0.3).abs() < 1e-7 && (y + 0.7).abs() < 1e-7);
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dense_eigenvalues_of_diagonal_pencil() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 6.0, 12.0]));
        let b = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let ev = dense_generalized_eigenvalues(&a, &b).unwrap();
        for (got, want) in ev.iter().zip([2.0, 3.0, 4.0]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn bumps_vanish_at_their_ends() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let u = random_even_bump(&mut rng, 1.5, 3).unwrap();
            assert!(u.value(1.5).abs() < 1e-12);
            assert!(u.d1(1e-9).unwrap().abs() < 1e-6);
            let v = random_annular_bump(&mut rng, 2.0, 3).unwrap();
            let (a, b) = v.support();
            assert!(a > 0.0 && b <= 2.0);
            assert!(v.value(a).abs() < 1e-12 && v.value(b).abs() < 1e-12);
        }
    }
}
