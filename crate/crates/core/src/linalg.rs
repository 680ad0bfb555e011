//! Minimal dense symmetric eigensolver (cyclic Jacobi rotations).
//!
//! Only what the PCA needs: eigenvalues and orthonormal eigenvectors of a
//! small symmetric matrix, sorted by descending eigenvalue.

use alloc::vec;
use alloc::vec::Vec;

/// Eigendecomposition of a symmetric m×m matrix stored row-major.
/// Returns (eigenvalues, eigenvectors) with eigenvectors as rows, sorted by
/// descending eigenvalue.
pub fn symmetric_eigen(matrix: &[f64], m: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    debug_assert_eq!(matrix.len(), m * m);
    let mut a = matrix.to_vec();
    // v starts as identity; accumulates the rotations (columns = eigenvectors).
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }

    let off_diag_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..m {
            for q in (p + 1)..m {
                s += a[p * m + q] * a[p * m + q];
            }
        }
        libm::sqrt(s)
    };

    let scale: f64 = (0..m).map(|i| a[i * m + i].abs()).fold(1.0, f64::max);
    let tol = 1e-14 * scale * m as f64;

    for _sweep in 0..100 {
        if off_diag_norm(&a) <= tol {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = a[p * m + q];
                if apq.abs() <= tol / (m * m) as f64 {
                    continue;
                }
                let app = a[p * m + p];
                let aqq = a[q * m + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + libm::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;

                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
                for k in 0..m {
                    let vkp = v[k * m + p];
                    let vkq = v[k * m + q];
                    v[k * m + p] = c * vkp - s * vkq;
                    v[k * m + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut pairs: Vec<(f64, usize)> = (0..m).map(|i| (a[i * m + i], i)).collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(core::cmp::Ordering::Equal));

    let eigenvalues: Vec<f64> = pairs.iter().map(|&(val, _)| val).collect();
    let eigenvectors: Vec<Vec<f64>> = pairs
        .iter()
        .map(|&(_, col)| (0..m).map(|row| v[row * m + col]).collect())
        .collect();
    (eigenvalues, eigenvectors)
}
