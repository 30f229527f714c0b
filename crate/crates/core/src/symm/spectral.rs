use num_complex::Complex64;

use super::{hermitian_eigen, CMatrix, HermitianMatrix, Spectrum};
use crate::error::{Error, Result};

/// `d sigma_k / d a_{i j-bar}` as a matrix: `U diag(sigma_{k-1}(lambda|i)) U^H`.
///
/// Pair it with a Hermitian perturbation `E` through
/// [`HermitianMatrix::trace_product`] to get the directional derivative.
pub fn matrix_sigma_first(matrix: &HermitianMatrix, k: usize) -> Result<HermitianMatrix> {
    let eig = hermitian_eigen(matrix)?;
    let grad = eig.spectrum.sigma_grad(k);
    let g = eig.basis.conjugate_diagonal(&grad);
    let n = matrix.dim();
    Ok(HermitianMatrix::from_upper(n, |i, j| {
        if i == j {
            g[(i, i)]
        } else {
            (g[(i, j)] + g[(j, i)].conj()) * 0.5
        }
    }))
}

/// Complex-valued evaluation of the second-order form
/// `sum_{i != j} sigma_{k-2}(lambda|ij) w_ii conj(w_jj)
///   - sum_{p != q} sigma_{k-2}(lambda|pq) |w_pq|^2`
/// for `w` expressed in the eigenframe of `spectrum`. The imaginary part is
/// a rounding residue.
pub fn spectral_second_form_complex(spectrum: &Spectrum, k: usize, w: &CMatrix) -> Result<Complex64> {
    let n = spectrum.len();
    if w.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: w.dim(),
        });
    }
    if k < 2 || k > n {
        return Err(Error::Parameter(format!("second form needs 2 <= k <= n, got k = {k}")));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            let coeff = spectrum.sigma_excl2(k as isize - 2, p, q)?;
            if coeff == 0.0 {
                continue;
            }
            acc += coeff * w[(p, p)] * w[(q, q)].conj();
            acc -= coeff * w[(p, q)].norm_sqr();
        }
    }
    Ok(acc)
}

pub fn spectral_second_form(spectrum: &Spectrum, k: usize, w: &CMatrix) -> Result<f64> {
    spectral_second_form_complex(spectrum, k, w).map(|z| z.re)
}
