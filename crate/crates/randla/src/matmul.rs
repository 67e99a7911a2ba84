//! Approximate matrix multiplication by importance sampling: draw c
//! column-row pairs with replacement, rescale each by 1/sqrt(c·p_i), and sum
//! the rank-one terms. The sampled-column and sampled-row factors are
//! returned alongside their product.

use crate::config::tunables;
use crate::error::{Error, Result};
use crate::factor::spectral_norm;
use crate::matrix::DenseMatrix;
use crate::rng::SeedSpec;
use crate::sketch::{apply_sketch, make_sampling_plan, ProbabilityVector, Side, SketchOperator};

/// Output of a sampled matrix product.
#[derive(Debug, Clone)]
pub struct AmmResult {
    /// Sampled-rescaled columns of A (m×c).
    pub c_factor: DenseMatrix,
    /// Correspondingly sampled-rescaled rows of B (c×p).
    pub r_factor: DenseMatrix,
    /// The estimate C·R of the product A·B.
    pub estimate: DenseMatrix,
    /// ‖AB − CR‖_F, populated when the exact product is affordable.
    pub frobenius_error_vs: Option<f64>,
    /// The plan used, for reproducibility.
    pub indices: Vec<usize>,
}

/// Probabilities proportional to ‖A^(i)‖·‖B_(i)‖, the variance-minimizing
/// choice for sampling the product A·B.
pub fn amm_probs_optimal(a: &DenseMatrix, b: &DenseMatrix) -> Result<ProbabilityVector> {
    if a.cols() != b.rows() {
        return Err(Error::shape(format!(
            "inner dimensions differ: {}x{} times {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let a_norms = a.col_norms();
    let b_norms = b.transpose().col_norms();
    let weights: Vec<f64> = a_norms.iter().zip(&b_norms).map(|(x, y)| x * y).collect();
    ProbabilityVector::from_weights(&weights)
}

/// Probabilities proportional to squared column norms of A alone.
pub fn amm_probs_onesided(a: &DenseMatrix) -> Result<ProbabilityVector> {
    let weights: Vec<f64> = a.col_norms().iter().map(|x| x * x).collect();
    ProbabilityVector::from_weights(&weights)
}

/// Sample `c` column-row pairs from the outer-product expansion of A·B
/// according to `p`, rescale, and return the factors and their product.
/// Unbiased: E[C·R] = A·B.
pub fn approx_matmul(
    a: &DenseMatrix,
    b: &DenseMatrix,
    c: usize,
    p: &ProbabilityVector,
    seed: SeedSpec,
) -> Result<AmmResult> {
    if a.cols() != b.rows() || p.len() != a.cols() {
        return Err(Error::shape(format!(
            "dimension mismatch: A {}x{}, B {}x{}, p over {}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols(),
            p.len()
        )));
    }
    let plan = make_sampling_plan(p, c, seed)?;
    let c_factor = a.select_cols(&plan.indices, &plan.scales);
    let r_factor = b.select_rows(&plan.indices, &plan.scales);
    let estimate = c_factor.matmul(&r_factor);

    let frobenius_error_vs = if a.rows() * b.cols() <= tunables().amm_exact_threshold {
        Some(a.matmul(b).sub(&estimate).frobenius_norm())
    } else {
        None
    };

    Ok(AmmResult { c_factor, r_factor, estimate, frobenius_error_vs, indices: plan.indices })
}

/// ‖I − XᵀX‖₂ where X is the left-applied sketch of an orthonormal Q; zero
/// means the sketch preserved the subspace geometry exactly, and values
/// bounded below 1 certify that no rank was lost.
pub fn orthogonal_sketch_check(q: &DenseMatrix, op: &SketchOperator) -> Result<f64> {
    let k = q.cols();
    let gram = q.tr_matmul(q);
    let mut off = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let want = if i == j { 1.0 } else { 0.0 };
            off = off.max((gram.get(i, j) - want).abs());
        }
    }
    if off > 1e-8 {
        return Err(Error::Precondition(format!(
            "input columns are not orthonormal (off-identity by {off:.2e})"
        )));
    }
    let x = apply_sketch(op, q, Side::Left)?;
    let deviation = DenseMatrix::identity(k).sub(&x.tr_matmul(&x));
    spectral_norm(&deviation)
}
