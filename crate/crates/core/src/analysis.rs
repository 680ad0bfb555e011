//! PCA projection to 2-D and per-group covariance ellipses for the diversity
//! analysis. The model is fit on pooled embeddings across all models and
//! variants, then points are colored by group downstream.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::symmetric_eigen;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("k = {k} exceeds min(n, d) = {limit}")]
    InvalidComponentCount { k: usize, limit: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("ragged input matrix")]
    RaggedInput,
}

/// A fitted PCA model: data mean, top-k orthonormal components (rows), and
/// the fraction of total variance each captures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub explained_variance_ratio: Vec<f64>,
}

fn center(x: &[Vec<f64>], d: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>), AnalysisError> {
    let n = x.len();
    let mut mean = vec![0.0; d];
    for row in x {
        if row.len() != d {
            return Err(AnalysisError::RaggedInput);
        }
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = x
        .iter()
        .map(|row| row.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    Ok((mean, centered))
}

/// Flips each component so its largest-magnitude coordinate is positive.
/// Ties break toward the lowest index, keeping exports reproducible across
/// platforms.
fn fix_signs(components: &mut [Vec<f64>]) {
    for component in components {
        let mut best = 0;
        for (i, v) in component.iter().enumerate() {
            if v.abs() > component[best].abs() {
                best = i;
            }
        }
        if component[best] < 0.0 {
            for v in component.iter_mut() {
                *v = -*v;
            }
        }
    }
}

/// Fits a k-component PCA on an n×d matrix via an eigendecomposition of the
/// smaller of the covariance (d×d) or Gram (n×n) matrix. Zero-variance
/// directions get ratio 0.
pub fn fit_pca(x: &[Vec<f64>], k: usize) -> Result<PcaModel, AnalysisError> {
    let n = x.len();
    if n < 2 {
        return Err(AnalysisError::TooFewRows { needed: 2, got: n });
    }
    let d = x[0].len();
    let limit = n.min(d);
    if k == 0 || k > limit {
        return Err(AnalysisError::InvalidComponentCount { k, limit });
    }
    let (mean, centered) = center(x, d)?;

    let denom = (n - 1) as f64;
    let total_variance: f64 = centered
        .iter()
        .flat_map(|row| row.iter().map(|v| v * v))
        .sum::<f64>()
        / denom;

    let (eigenvalues, mut components) = if d <= n {
        // covariance route
        let mut cov = vec![0.0; d * d];
        for row in &centered {
            for i in 0..d {
                for j in i..d {
                    cov[i * d + j] += row[i] * row[j];
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                cov[i * d + j] /= denom;
                cov[j * d + i] = cov[i * d + j];
            }
        }
        let (vals, vecs) = symmetric_eigen(&cov, d);
        (vals[..k].to_vec(), vecs[..k].to_vec())
    } else {
        // Gram route: eigenvectors of Xc Xc^T / (n-1) map to covariance
        // eigenvectors via Xc^T u.
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                gram[i * n + j] = dot / denom;
                gram[j * n + i] = gram[i * n + j];
            }
        }
        let (vals, vecs) = symmetric_eigen(&gram, n);
        let mut components = Vec::with_capacity(k);
        for u in vecs.iter().take(k) {
            let mut component = vec![0.0; d];
            for (row, &weight) in centered.iter().zip(u.iter()) {
                for (c, v) in component.iter_mut().zip(row) {
                    *c += weight * v;
                }
            }
            let norm = libm::sqrt(component.iter().map(|v| v * v).sum());
            if norm > 0.0 {
                for v in &mut component {
                    *v /= norm;
                }
            }
            components.push(component);
        }
        (vals[..k].to_vec(), components)
    };

    fix_signs(&mut components);

    let explained_variance_ratio = eigenvalues
        .iter()
        .map(|&val| {
            if total_variance <= 0.0 {
                return 0.0;
            }
            let ratio = val / total_variance;
            if ratio < 1e-12 {
                0.0
            } else {
                ratio.min(1.0)
            }
        })
        .collect();

    Ok(PcaModel {
        mean,
        components,
        explained_variance_ratio,
    })
}

/// Projects rows onto the fitted components: `(X - mean) · components^T`.
pub fn project(model: &PcaModel, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, AnalysisError> {
    let d = model.mean.len();
    let mut out = Vec::with_capacity(x.len());
    for row in x {
        if row.len() != d {
            return Err(AnalysisError::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        let coords = model
            .components
            .iter()
            .map(|component| {
                row.iter()
                    .zip(&model.mean)
                    .zip(component)
                    .map(|((v, m), c)| (v - m) * c)
                    .sum()
            })
            .collect();
        out.push(coords);
    }
    Ok(out)
}

/// An n-sigma covariance ellipse for one group of 2-D points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEllipse {
    pub group_label: String,
    pub center: [f64; 2],
    pub axes: [f64; 2],
    pub rotation: f64,
    pub n_sigma: f64,
    pub degenerate: bool,
}

const AXIS_FLOOR: f64 = 1e-9;

/// Fits an n-sigma covariance ellipse to 2-D points (center = mean, axes and
/// rotation from the 2x2 covariance eigendecomposition). Degenerate
/// covariances get a minimal-axis floor and are flagged.
pub fn group_ellipse(
    points: &[[f64; 2]],
    group_label: String,
    n_sigma: f64,
) -> Result<GroupEllipse, AnalysisError> {
    let n = points.len();
    if n < 3 {
        return Err(AnalysisError::TooFewRows { needed: 3, got: n });
    }
    let nf = n as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / nf;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for p in points {
        let dx = p[0] - cx;
        let dy = p[1] - cy;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let denom = nf - 1.0;
    sxx /= denom;
    sxy /= denom;
    syy /= denom;

    // closed-form 2x2 symmetric eigendecomposition
    let half_trace = (sxx + syy) / 2.0;
    let spread = libm::sqrt((sxx - syy) * (sxx - syy) / 4.0 + sxy * sxy);
    let lambda1 = half_trace + spread;
    let lambda2 = half_trace - spread;
    let rotation = if sxy.abs() > 0.0 {
        libm::atan2(lambda1 - sxx, sxy)
    } else if sxx >= syy {
        0.0
    } else {
        core::f64::consts::FRAC_PI_2
    };

    let axis = |lambda: f64| -> (f64, bool) {
        let len = n_sigma * libm::sqrt(lambda.max(0.0));
        if len < AXIS_FLOOR {
            (AXIS_FLOOR, true)
        } else {
            (len, false)
        }
    };
    let (axis1, floor1) = axis(lambda1);
    let (axis2, floor2) = axis(lambda2);
    let axes = [axis1, axis2];
    let degenerate = floor1 || floor2;

    Ok(GroupEllipse {
        group_label,
        center: [cx, cy],
        axes,
        rotation,
        n_sigma,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
        // Box-Muller
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random::<f64>();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
    }

    #[test]
    fn rank_one_data_has_ratios_one_zero() {
        // points on a line in 5-d
        let x: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let t = i as f64;
                vec![t, 2.0 * t, -t, 0.5 * t, 3.0 * t]
            })
            .collect();
        let model = fit_pca(&x, 2).unwrap();
        close(model.explained_variance_ratio[0], 1.0, 1e-9);
        close(model.explained_variance_ratio[1], 0.0, 1e-9);
    }

    #[test]
    fn isotropic_gaussian_splits_variance_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<Vec<f64>> = (0..500)
            .map(|_| vec![gaussian(&mut rng), gaussian(&mut rng)])
            .collect();
        let model = fit_pca(&x, 2).unwrap();
        close(model.explained_variance_ratio[0], 0.5, 0.1);
        close(model.explained_variance_ratio[1], 0.5, 0.1);
    }

    #[test]
    fn duplicated_rows_keep_directions() {
        let x = vec![
            vec![1.0, 2.0, 0.0],
            vec![2.0, 1.0, 0.5],
            vec![0.0, -1.0, 1.0],
            vec![3.0, 0.0, -0.5],
        ];
        let mut doubled = x.clone();
        doubled.extend(x.iter().cloned());
        let a = fit_pca(&x, 2).unwrap();
        let b = fit_pca(&doubled, 2).unwrap();
        for (ca, cb) in a.components.iter().zip(&b.components) {
            for (va, vb) in ca.iter().zip(cb) {
                close(*va, *vb, 1e-8);
            }
        }
    }

    #[test]
    fn projecting_the_mean_gives_origin() {
        let x = vec![vec![1.0, 2.0], vec![3.0, 5.0], vec![-1.0, 0.0]];
        let model = fit_pca(&x, 2).unwrap();
        let coords = project(&model, &[model.mean.clone()]).unwrap();
        close(coords[0][0], 0.0, 1e-12);
        close(coords[0][1], 0.0, 1e-12);
    }

    #[test]
    fn projected_variance_matches_explained_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                vec![
                    3.0 * gaussian(&mut rng),
                    1.0 * gaussian(&mut rng),
                    0.2 * gaussian(&mut rng),
                ]
            })
            .collect();
        let model = fit_pca(&x, 2).unwrap();
        let coords = project(&model, &x).unwrap();
        let total: f64 = {
            let (_, centered) = center(&x, 3).unwrap();
            centered
                .iter()
                .flat_map(|r| r.iter().map(|v| v * v))
                .sum::<f64>()
                / 39.0
        };
        for axis in 0..2 {
            let column: Vec<f64> = coords.iter().map(|c| c[axis]).collect();
            let mean = crate::stats::mean(&column);
            let var = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 39.0;
            close(var / total, model.explained_variance_ratio[axis], 1e-8);
        }
    }

    #[test]
    fn projection_dimension_mismatch_is_error() {
        let x = vec![vec![1.0, 2.0], vec![3.0, 5.0]];
        let model = fit_pca(&x, 1).unwrap();
        assert!(matches!(
            project(&model, &[vec![1.0, 2.0, 3.0]]).unwrap_err(),
            AnalysisError::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn ellipse_matches_axis_aligned_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let points: Vec<[f64; 2]> = (0..4000)
            .map(|_| [2.0 * gaussian(&mut rng), 1.0 * gaussian(&mut rng)])
            .collect();
        let ellipse = group_ellipse(&points, "g".to_string(), 2.0).unwrap();
        close(ellipse.axes[0] / ellipse.axes[1], 2.0, 0.15);
        assert!(ellipse.rotation.abs() < 0.1 || (core::f64::consts::PI - ellipse.rotation.abs()) < 0.1);
        assert!(!ellipse.degenerate);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let points = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        let ellipse = group_ellipse(&points, "g".to_string(), 2.0).unwrap();
        assert!(ellipse.degenerate);
        assert!(ellipse.axes[1] > 0.0);
    }

    #[test]
    fn ellipse_translation_equivariance() {
        let base = [[0.0, 0.0], [1.0, 0.5], [2.0, -0.5], [0.5, 1.5]];
        let shifted: Vec<[f64; 2]> = base.iter().map(|p| [p[0] + 10.0, p[1] - 3.0]).collect();
        let a = group_ellipse(&base, "g".to_string(), 2.0).unwrap();
        let b = group_ellipse(&shifted, "g".to_string(), 2.0).unwrap();
        close(b.center[0] - a.center[0], 10.0, 1e-12);
        close(b.center[1] - a.center[1], -3.0, 1e-12);
        close(a.axes[0], b.axes[0], 1e-12);
        close(a.axes[1], b.axes[1], 1e-12);
    }

    #[test]
    fn gram_route_agrees_with_covariance_route() {
        // wide matrix (d > n) exercises the Gram path; compare against the
        // covariance path on the transposed geometry by checking projections.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..10).map(|_| gaussian(&mut rng)).collect())
            .collect();
        let model = fit_pca(&x, 2).unwrap();
        // components orthonormal
        for i in 0..2 {
            let norm: f64 = model.components[i].iter().map(|v| v * v).sum();
            close(norm, 1.0, 1e-8);
        }
        let dot: f64 = model.components[0]
            .iter()
            .zip(&model.components[1])
            .map(|(a, b)| a * b)
            .sum();
        close(dot, 0.0, 1e-8);
        // ratios non-increasing and within [0, 1]
        assert!(model.explained_variance_ratio[0] >= model.explained_variance_ratio[1]);
        assert!(model.explained_variance_ratio[0] <= 1.0);
    }
}
