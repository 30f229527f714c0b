//! Reference implementations used by the verification suites.
//!
//! Nothing here is on a production code path. Each routine computes its
//! answer by a route independent of the one it checks: subset enumeration
//! for `sigma_k`, finite differences for derivatives, grid scans for
//! minima.

use num_complex::Complex64;
use rand::Rng;

use crate::symm::{CMatrix, HermitianMatrix};

/// `sigma_k` by summing over all `k`-subsets (bitmask enumeration).
pub fn subset_sigma(values: &[f64], k: usize) -> f64 {
    let n = values.len();
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    assert!(n < 32, "subset enumeration limited to n < 32");
    let mut acc = 0.0;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let mut prod = 1.0;
        for (i, &v) in values.iter().enumerate() {
            if mask & (1 << i) != 0 {
                prod *= v;
            }
        }
        acc += prod;
    }
    acc
}

/// Sum of `|products|` over all `k`-subsets; the natural scale for judging
/// the rounding error of a signed `sigma_k`.
pub fn subset_sigma_abs(values: &[f64], k: usize) -> f64 {
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    subset_sigma(&abs, k)
}

/// `subset_sigma` with entries `skip` removed.
pub fn subset_sigma_without(values: &[f64], k: usize, skip: &[usize]) -> f64 {
    let rest: Vec<f64> = values
        .iter()
        .enumerate()
        .filter(|(i, _)| !skip.contains(i))
        .map(|(_, &v)| v)
        .collect();
    subset_sigma(&rest, k)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Unitary matrix from Gram-Schmidt on uniform complex entries.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    while cols.len() < n {
        let mut v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        // two passes keep the columns orthogonal to rounding
        for _ in 0..2 {
            for u in &cols {
                let dot: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= dot * ui;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    let mut m = CMatrix::zeros(n);
    for (j, col) in cols.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            m[(i, j)] = *z;
        }
    }
    m
}

/// Hermitian matrix with entries uniform in `[-scale, scale]`.
pub fn random_hermitian(n: usize, scale: f64, rng: &mut impl Rng) -> HermitianMatrix {
    let entries: Vec<Complex64> = (0..n * n)
        .map(|_| Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale)))
        .collect();
    HermitianMatrix::from_upper(n, |i, j| entries[i * n + j])
}

/// Central first difference `(f(x + h) - f(x - h)) / 2h`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central second difference `(f(x + h) - 2 f(x) + f(x - h)) / h^2`.
pub fn second_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Five-point central second difference, exact on polynomials of degree five
/// or less up to rounding.
pub fn second_difference_five_point(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h)
}
