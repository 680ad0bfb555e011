//! Embedding-space randomization test and proportion confidence intervals.
//!
//! The working distance is `1 - cosine_similarity`, so larger values mean
//! more divergent generations. The observed statistic pairs rows by scenario;
//! the bootstrap null concatenates both matrices, shuffles all `2n` rows, and
//! pairs the two halves positionally, deliberately destroying the pairing.
//! Reshuffling the already-shuffled buffer each iteration is distributionally
//! identical to shuffling the original, and is what the shipped loop does.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ablation::ContextComponent;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero-norm vector not admitted to cosine computations")]
    ZeroNorm,
    #[error("non-finite value in embedding row {row}")]
    NonFinite { row: usize },
    #[error("row count {rows} does not match row_index length {index}")]
    RowIndexLength { rows: usize, index: usize },
    #[error("row_index mismatch at position {position}: {left:?} vs {right:?}")]
    RowIndexMismatch {
        position: usize,
        left: String,
        right: String,
    },
    #[error("matrices have different row counts: {left} vs {right}")]
    RowCountMismatch { left: usize, right: usize },
    #[error("bootstrap resample count must be >= 1")]
    InvalidResampleCount,
    #[error("need at least 2 bootstrap values for an effect size")]
    TooFewBootstrapValues,
    #[error("bootstrap distribution has zero variance")]
    ZeroVariance,
    #[error("proportion inputs invalid: successes={successes}, n={n}")]
    InvalidProportion { successes: usize, n: usize },
    #[error("confidence must lie strictly between 0 and 1")]
    InvalidConfidence,
    #[error("model {model:?} is missing the {variant_key:?} matrix")]
    MissingMatrix { model: String, variant_key: String },
}

/// An n×d matrix of response embeddings aligned by scenario.
///
/// Row `j` of two matrices with identical `row_index` refers to the same
/// scenario, which is what makes paired divergence meaningful.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    data: Vec<f64>,
    n: usize,
    d: usize,
    pub row_index: Vec<String>,
    pub label: String,
}

impl EmbeddingMatrix {
    /// Builds a matrix from rows, rejecting non-finite values, ragged rows,
    /// zero-norm rows, and a row/index length mismatch.
    pub fn new(
        rows: Vec<Vec<f64>>,
        row_index: Vec<String>,
        label: String,
    ) -> Result<Self, StatsError> {
        if rows.len() != row_index.len() {
            return Err(StatsError::RowIndexLength {
                rows: rows.len(),
                index: row_index.len(),
            });
        }
        let d = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * d);
        for (j, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(StatsError::DimensionMismatch {
                    left: d,
                    right: row.len(),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(StatsError::NonFinite { row: j });
            }
            if norm(row) == 0.0 {
                return Err(StatsError::ZeroNorm);
            }
            data.extend_from_slice(row);
        }
        Ok(EmbeddingMatrix {
            data,
            n: row_index.len(),
            d,
            row_index,
            label,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.d..(j + 1) * self.d]
    }
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

/// Cosine similarity `u·v / (‖u‖‖v‖)`, in [-1, 1].
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, StatsError> {
    if u.len() != v.len() {
        return Err(StatsError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let nu = norm(u);
    let nv = norm(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(StatsError::ZeroNorm);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok(dot / (nu * nv))
}

/// Working divergence metric `1 - cosine_similarity`, in [0, 2].
/// Larger means more divergent.
pub fn divergence(u: &[f64], v: &[f64]) -> Result<f64, StatsError> {
    Ok(1.0 - cosine_similarity(u, v)?)
}

/// Mean divergence over scenario-aligned row pairs. Pairing is by scenario
/// id, never by positional accident: the row indices must match exactly.
pub fn paired_mean_divergence(a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> Result<f64, StatsError> {
    check_aligned(a, b)?;
    let mut total = 0.0;
    for j in 0..a.n {
        total += divergence(a.row(j), b.row(j))?;
    }
    Ok(total / a.n as f64)
}

fn check_aligned(a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> Result<(), StatsError> {
    if a.n != b.n {
        return Err(StatsError::RowCountMismatch {
            left: a.n,
            right: b.n,
        });
    }
    if a.d != b.d {
        return Err(StatsError::DimensionMismatch {
            left: a.d,
            right: b.d,
        });
    }
    for (position, (x, y)) in a.row_index.iter().zip(&b.row_index).enumerate() {
        if x != y {
            return Err(StatsError::RowIndexMismatch {
                position,
                left: x.clone(),
                right: y.clone(),
            });
        }
    }
    Ok(())
}

/// Approximates the chance divergence distribution: concatenates the 2n rows,
/// and for each of `resamples` iterations shuffles all of them, splits into
/// halves, pairs positionally, and records the mean divergence. Deterministic
/// given `seed`.
pub fn bootstrap_null(
    a: &EmbeddingMatrix,
    b: &EmbeddingMatrix,
    resamples: usize,
    seed: u64,
) -> Result<Vec<f64>, StatsError> {
    check_aligned(a, b)?;
    if resamples < 1 {
        return Err(StatsError::InvalidResampleCount);
    }
    let n = a.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Shuffle an index vector rather than the rows themselves; the buffer is
    // reshuffled in place every iteration.
    let mut order: Vec<usize> = (0..2 * n).collect();
    let row_at = |i: usize| -> &[f64] {
        if i < n {
            a.row(i)
        } else {
            b.row(i - n)
        }
    };
    let mut out = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        // Fisher-Yates, explicit so the draw sequence is pinned by this crate.
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut total = 0.0;
        for j in 0..n {
            total += divergence(row_at(order[j]), row_at(order[n + j]))?;
        }
        out.push(total / n as f64);
    }
    Ok(out)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n-1 denominator).
pub fn sample_sd(values: &[f64]) -> f64 {
    let m = mean(values);
    let ss: f64 = values.iter().map(|x| (x - m) * (x - m)).sum();
    libm::sqrt(ss / (values.len() - 1) as f64)
}

/// Standardized distance of the statistic from the bootstrap mean, in
/// bootstrap standard deviations.
pub fn cohens_d(statistic: f64, bootstrap: &[f64]) -> Result<f64, StatsError> {
    if bootstrap.len() < 2 {
        return Err(StatsError::TooFewBootstrapValues);
    }
    let sd = sample_sd(bootstrap);
    if sd == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((statistic - mean(bootstrap)) / sd)
}

/// Upper-tail permutation p-value with the add-one correction:
/// `(1 + #{b : bootstrap_b >= statistic}) / (B + 1)`. Always in (0, 1].
pub fn p_value(statistic: f64, bootstrap: &[f64]) -> f64 {
    let extreme = bootstrap.iter().filter(|&&b| b >= statistic).count();
    (1 + extreme) as f64 / (bootstrap.len() + 1) as f64
}

/// Result of one randomization test. `effect_size_d` is `None` when the
/// bootstrap distribution degenerates to zero variance away from the
/// statistic; the p-value remains valid in that case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizationTestResult {
    pub statistic: f64,
    pub bootstrap: Vec<f64>,
    pub p_value: f64,
    pub effect_size_d: Option<f64>,
    pub resamples: usize,
    pub seed: u64,
}

/// Runs the full randomization test: observed paired mean divergence against
/// the shuffle-split bootstrap null.
pub fn randomization_test(
    a: &EmbeddingMatrix,
    b: &EmbeddingMatrix,
    resamples: usize,
    seed: u64,
) -> Result<RandomizationTestResult, StatsError> {
    let statistic = paired_mean_divergence(a, b)?;
    let bootstrap = bootstrap_null(a, b, resamples, seed)?;
    let p = p_value(statistic, &bootstrap);
    let effect_size_d = match cohens_d(statistic, &bootstrap) {
        Ok(d) => Some(d),
        Err(StatsError::ZeroVariance) => None,
        Err(other) => return Err(other),
    };
    Ok(RandomizationTestResult {
        statistic,
        bootstrap,
        p_value: p,
        effect_size_d,
        resamples,
        seed,
    })
}

/// A binomial proportion with a Wilson score interval, reported as the
/// interval midpoint plus half-width margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionEstimate {
    pub successes: usize,
    pub n: usize,
    pub confidence: f64,
    pub midpoint: f64,
    pub margin: f64,
}

impl ProportionEstimate {
    pub fn lower(&self) -> f64 {
        self.midpoint - self.margin
    }

    pub fn upper(&self) -> f64 {
        self.midpoint + self.margin
    }
}

/// Quantile of the standard normal distribution (Acklam's rational
/// approximation, absolute error below 1e-9).
pub fn standard_normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(
    successes: usize,
    n: usize,
    confidence: f64,
) -> Result<ProportionEstimate, StatsError> {
    if n == 0 || successes > n {
        return Err(StatsError::InvalidProportion { successes, n });
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StatsError::InvalidConfidence);
    }
    let z = standard_normal_quantile(0.5 + confidence / 2.0);
    let nf = n as f64;
    let p_hat = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p_hat + z2 / (2.0 * nf)) / denom;
    let margin = z * libm::sqrt(p_hat * (1.0 - p_hat) / nf + z2 / (4.0 * nf * nf)) / denom;
    Ok(ProportionEstimate {
        successes,
        n,
        confidence,
        midpoint: center,
        margin,
    })
}

/// Six aligned matrices for one model: the full context plus the five
/// ablations, all sharing one row index.
#[derive(Debug, Clone)]
pub struct ModelEmbeddings {
    pub model_name: String,
    pub full: EmbeddingMatrix,
    pub ablated: Vec<(ContextComponent, EmbeddingMatrix)>,
}

/// One cell of the adaptivity grid: full context vs. one removed component
/// for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptivityCell {
    pub model_name: String,
    pub component: ContextComponent,
    pub n: usize,
    pub result: RandomizationTestResult,
}

/// FNV-1a, used to derive stable per-cell seeds from the master seed.
pub fn stable_hash(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in text.as_bytes() {
        hash ^= *byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// The derived seed for one (model, component) cell. Part of the determinism
/// contract: cells can be computed in parallel without sharing a generator.
pub fn cell_seed(master_seed: u64, model_name: &str, component: ContextComponent) -> u64 {
    let mut key = String::from(model_name);
    key.push('|');
    key.push_str(component.variant_key());
    master_seed ^ stable_hash(&key)
}

/// Runs the full grid: for each model and each removed component, tests the
/// full-context matrix against the ablated one. Produces one cell per
/// (model, component) in canonical order.
pub fn run_adaptivity_tests(
    models: &[ModelEmbeddings],
    resamples: usize,
    master_seed: u64,
) -> Result<Vec<AdaptivityCell>, StatsError> {
    let mut grid = Vec::with_capacity(models.len() * ContextComponent::ALL.len());
    for model in models {
        for component in ContextComponent::ALL {
            let (_, ablated) = model
                .ablated
                .iter()
                .find(|(c, _)| *c == component)
                .ok_or_else(|| StatsError::MissingMatrix {
                    model: model.model_name.clone(),
                    variant_key: component.variant_key().to_string(),
                })?;
            let seed = cell_seed(master_seed, &model.model_name, component);
            let result = randomization_test(&model.full, ablated, resamples, seed)?;
            grid.push(AdaptivityCell {
                model_name: model.model_name.clone(),
                component,
                n: model.full.n_rows(),
                result,
            });
        }
    }
    Ok(grid)
}
