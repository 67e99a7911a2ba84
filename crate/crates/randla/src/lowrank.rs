//! Low-rank approximation by sampling and projection: additive-error column
//! sampling, additive-error projection, relative-error column selection,
//! CUR skeletons, exactly-k column subset selection, range finders with
//! optional power iteration, and a probe-based posterior error estimate.

use crate::config::tunables;
use crate::error::{Error, Result};
use crate::factor::{pinv_apply, pinv_apply_svd, thin_qr, thin_svd};
use crate::leverage::rank_k_leverage;
use crate::matmul::amm_probs_onesided;
use crate::matrix::{norm2, DenseMatrix};
use crate::rng::{normal_draws, SeedSpec};
use crate::sketch::{apply_sketch, make_sampling_plan, ProbabilityVector, Side, SketchOperator};
use serde::{Deserialize, Serialize};

/// Columns selected from a matrix, with the rescaling applied and the
/// distribution they were drawn from.
#[derive(Debug, Clone)]
pub struct ColumnSelection {
    /// Original column indices (with multiplicity for sampled variants,
    /// distinct for the exactly-k selector).
    pub indices: Vec<usize>,
    /// Per-draw rescale factors; `matrix` column j is A^(indices[j])·scales[j].
    pub scales: Vec<f64>,
    pub matrix: DenseMatrix,
    pub probs_used: ProbabilityVector,
}

/// Which range-finder construction produced a basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum RangeMethod {
    /// Structured projection with l = ceil(mult·k/eps) columns, error
    /// filtered at rank k.
    Basic { eps: f64 },
    /// l = k + p columns, orthonormalized directly.
    Oversampled { p: usize },
    /// l = k + p columns through q rounds of (A·Aᵀ) with re-orthonormalization
    /// after every half-step.
    Power { p: usize, q: usize },
}

/// An orthonormal basis approximating the dominant column space.
#[derive(Debug, Clone)]
pub struct RangeBasis {
    pub q: DenseMatrix,
    pub method: RangeMethod,
    /// Target rank the basis was built for.
    pub k: usize,
}

impl RangeBasis {
    /// Best rank-k approximation of A within span(Q): Q·(QᵀA)_k.
    pub fn truncated_approximation(&self, a: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
        let projected = self.q.tr_matmul(a);
        let svd = thin_svd(&projected, Some(k.min(projected.rows().min(projected.cols()))))?;
        let mut us = svd.u.clone();
        us.scale_cols(&svd.singular_values);
        Ok(self.q.matmul(&us.matmul(&svd.vt)))
    }
}

/// The singular spectrum of a fixture, cached so many trials can share one
/// decomposition.
#[derive(Debug, Clone)]
pub struct SpectrumBaseline {
    sigma: Vec<f64>,
}

impl SpectrumBaseline {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        Ok(SpectrumBaseline { sigma: thin_svd(a, None)?.singular_values })
    }

    /// ‖A − A_k‖_F = sqrt of the squared tail mass.
    pub fn residual_frob(&self, k: usize) -> f64 {
        self.sigma.iter().skip(k).map(|s| s * s).sum::<f64>().sqrt()
    }

    /// ‖A − A_k‖₂ = σ_{k+1}.
    pub fn residual_spectral(&self, k: usize) -> f64 {
        self.sigma.get(k).copied().unwrap_or(0.0)
    }
}

/// Approximation error of a low-rank candidate against the optimum.
///
/// `baseline_*` is the unbeatable rank-`k` error for the caller's target
/// rank; `floor_*` is the same at the candidate's actual rank
/// (`projector_rank`), which no candidate of that rank can beat. Ratios are
/// reported as 1.0 when the baseline is numerically zero (exactly low-rank
/// input), in which case the absolute error is the meaningful quantity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowRankError {
    pub frob_error: f64,
    pub spectral_error: f64,
    pub baseline_frob: f64,
    pub baseline_spectral: f64,
    pub ratio_frob: f64,
    pub ratio_spectral: f64,
    pub projector_rank: usize,
    pub floor_frob: f64,
    pub floor_spectral: f64,
}

impl LowRankError {
    /// Error of projecting A onto the span of `basis` (orthonormal columns).
    pub fn of_projection(
        a: &DenseMatrix,
        basis: &DenseMatrix,
        k_target: usize,
        baseline: &SpectrumBaseline,
    ) -> Result<LowRankError> {
        let approx = basis.matmul(&basis.tr_matmul(a));
        Self::of_approximation(a, &approx, k_target, basis.cols(), baseline)
    }

    /// Error of an explicit approximation of known rank.
    pub fn of_approximation(
        a: &DenseMatrix,
        approx: &DenseMatrix,
        k_target: usize,
        projector_rank: usize,
        baseline: &SpectrumBaseline,
    ) -> Result<LowRankError> {
        let residual = a.sub(approx);
        let frob_error = residual.frobenius_norm();
        let spectral_error = if residual.max_abs() == 0.0 {
            0.0
        } else {
            thin_svd(&residual, None)?.singular_values[0]
        };
        let baseline_frob = baseline.residual_frob(k_target);
        let baseline_spectral = baseline.residual_spectral(k_target);
        let tiny = 1e-12 * baseline.residual_frob(0).max(1.0);
        let ratio = |err: f64, base: f64| if base > tiny { err / base } else { 1.0 };
        Ok(LowRankError {
            frob_error,
            spectral_error,
            baseline_frob,
            baseline_spectral,
            ratio_frob: ratio(frob_error, baseline_frob),
            ratio_spectral: ratio(spectral_error, baseline_spectral),
            projector_rank,
            floor_frob: baseline.residual_frob(projector_rank),
            floor_spectral: baseline.residual_spectral(projector_rank),
        })
    }
}

fn select_columns(
    a: &DenseMatrix,
    probs: &ProbabilityVector,
    c: usize,
    seed: SeedSpec,
) -> Result<ColumnSelection> {
    let plan = make_sampling_plan(probs, c, seed)?;
    let matrix = a.select_cols(&plan.indices, &plan.scales);
    Ok(ColumnSelection {
        indices: plan.indices,
        scales: plan.scales,
        matrix,
        probs_used: probs.clone(),
    })
}

/// Basis of the top-`k` left singular directions of `c`, clipped to its
/// numerical rank.
fn top_k_basis(c: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
    let svd = thin_svd(c, None)?;
    let rank = svd.numerical_rank().max(1);
    Ok(svd.u.take_cols(k.min(rank)))
}

/// Column sampling by squared column norms; the error is measured against
/// the best rank-k space inside the sample. Cheap, but only additive-error:
/// the sample can miss directions whose norms are small.
pub fn additive_sample(
    a: &DenseMatrix,
    k: usize,
    c: usize,
    seed: SeedSpec,
) -> Result<(ColumnSelection, LowRankError)> {
    if k == 0 || k > c || c > a.cols() {
        return Err(Error::Precondition(format!(
            "need 1 <= k <= c <= n, got k = {k}, c = {c}, n = {}",
            a.cols()
        )));
    }
    let probs = amm_probs_onesided(a)?;
    let selection = select_columns(a, &probs, c, seed)?;
    let basis = top_k_basis(&selection.matrix, k)?;
    let baseline = SpectrumBaseline::new(a)?;
    let err = LowRankError::of_projection(a, &basis, k, &baseline)?;
    Ok((selection, err))
}

/// Gaussian projection B = AΩ with l columns, error measured against the
/// best rank-2k space inside B.
pub fn additive_project(
    a: &DenseMatrix,
    k: usize,
    l: usize,
    seed: SeedSpec,
) -> Result<(RangeBasis, LowRankError)> {
    if k == 0 || l < 2 * k {
        return Err(Error::Precondition(format!("need l >= 2k, got k = {k}, l = {l}")));
    }
    let op = SketchOperator::gaussian(a.cols(), l, seed);
    let image = apply_sketch(&op, a, Side::Right)?;
    let basis = top_k_basis(&image, 2 * k)?;
    let baseline = SpectrumBaseline::new(a)?;
    let err = LowRankError::of_projection(a, &basis, 2 * k, &baseline)?;
    let range = RangeBasis { q: basis, method: RangeMethod::Oversampled { p: l - 2 * k }, k };
    Ok((range, err))
}

/// Column sampling by rank-k subspace leverage: probabilities proportional
/// to the squared row norms of any basis for the top-k right singular
/// subspace. This deconvolves direction information from magnitude and is
/// what upgrades the additive guarantee to a relative one.
pub fn relative_cx(
    a: &DenseMatrix,
    k: usize,
    c: usize,
    seed: SeedSpec,
    probs: Option<&ProbabilityVector>,
) -> Result<(ColumnSelection, LowRankError)> {
    if k == 0 || c < k {
        return Err(Error::Precondition(format!("need c >= k >= 1, got k = {k}, c = {c}")));
    }
    let default_probs;
    let probs = match probs {
        Some(p) => p,
        None => {
            default_probs = rank_k_leverage(&a.transpose(), k)?.to_probabilities()?;
            &default_probs
        }
    };
    let selection = select_columns(a, probs, c, seed)?;
    let basis = top_k_basis(&selection.matrix, k)?;
    let baseline = SpectrumBaseline::new(a)?;
    let err = LowRankError::of_projection(a, &basis, k, &baseline)?;
    Ok((selection, err))
}

/// A three-factor column/row skeleton A ≈ C·M·R.
#[derive(Debug, Clone)]
pub struct CurDecomposition {
    pub c: DenseMatrix,
    pub m: DenseMatrix,
    pub r: DenseMatrix,
    pub col_indices: Vec<usize>,
    pub row_indices: Vec<usize>,
    pub error: LowRankError,
}

/// CUR skeleton: columns by rank-k column leverage, rows by rank-k row
/// leverage, middle factor M = C⁺·A·R⁺.
pub fn cur(
    a: &DenseMatrix,
    k: usize,
    c: usize,
    r: usize,
    seed: SeedSpec,
) -> Result<CurDecomposition> {
    let col_probs = rank_k_leverage(&a.transpose(), k)?.to_probabilities()?;
    let row_probs = rank_k_leverage(a, k)?.to_probabilities()?;
    let col_plan = make_sampling_plan(&col_probs, c, seed.child(0))?;
    let row_plan = make_sampling_plan(&row_probs, r, seed.child(1))?;
    cur_with_plans(a, k, &col_plan.indices, &col_plan.scales, &row_plan.indices, &row_plan.scales)
}

/// [`cur`] with explicit draws, so tests can pin distinct selections.
pub fn cur_with_plans(
    a: &DenseMatrix,
    k: usize,
    col_indices: &[usize],
    col_scales: &[f64],
    row_indices: &[usize],
    row_scales: &[f64],
) -> Result<CurDecomposition> {
    if k == 0 || col_indices.len() < k || row_indices.len() < k {
        return Err(Error::Precondition(format!(
            "need c, r >= k >= 1, got k = {k}, c = {}, r = {}",
            col_indices.len(),
            row_indices.len()
        )));
    }
    let c_mat = a.select_cols(col_indices, col_scales);
    let r_mat = a.select_rows(row_indices, row_scales);

    let c_svd = thin_svd(&c_mat, None)?;
    let r_svd = thin_svd(&r_mat, None)?;
    if c_svd.numerical_rank() < k {
        return Err(Error::Rank(format!("selected columns have rank < {k}")));
    }
    if r_svd.numerical_rank() < k {
        return Err(Error::Rank(format!("selected rows have rank < {k}")));
    }

    // M = C⁺·A·R⁺, applied factor by factor
    let c_pinv_a = pinv_apply_svd(&c_svd, a);
    let m = pinv_apply(&r_mat.transpose(), &c_pinv_a.transpose())?.transpose();

    let estimate = c_mat.matmul(&m).matmul(&r_mat);
    let baseline = SpectrumBaseline::new(a)?;
    let effective_rank = c_svd.numerical_rank().min(r_svd.numerical_rank());
    let error = LowRankError::of_approximation(a, &estimate, k, effective_rank, &baseline)?;
    Ok(CurDecomposition {
        c: c_mat,
        m,
        r: r_mat,
        col_indices: col_indices.to_vec(),
        row_indices: row_indices.to_vec(),
        error,
    })
}

/// Exactly-k column selection: sample O(k log k) columns of the top-k right
/// singular basis by subspace leverage, then run a greedy column-pivoted QR
/// on the sampled-and-rescaled basis columns (not on A itself) and keep the
/// k pivots' original columns.
pub fn cssp(
    a: &DenseMatrix,
    k: usize,
    c_phase1: Option<usize>,
    seed: SeedSpec,
) -> Result<(ColumnSelection, LowRankError)> {
    if k == 0 || k > a.rows().min(a.cols()) {
        return Err(Error::Precondition(format!(
            "need 1 <= k <= min(m, n), got k = {k} for {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let svd = thin_svd(a, Some(k))?;
    let vkt = &svd.vt;
    let weights: Vec<f64> = vkt.col_norms().iter().map(|x| x * x).collect();
    let probs = ProbabilityVector::from_weights(&weights)?;
    let mut c = c_phase1
        .unwrap_or(((tunables().cssp_mult * k as f64 * ((k + 1) as f64).ln()).ceil() as usize).max(k));

    for attempt in 0..2u64 {
        let plan = make_sampling_plan(&probs, c, seed.child(attempt))?;
        let sampled = vkt.select_cols(&plan.indices, &plan.scales);
        if let Some(picked) = pivoted_selection(&sampled, &plan.indices, k) {
            let matrix = a.select_cols(&picked, &vec![1.0; k]);
            let selection = ColumnSelection {
                indices: picked,
                scales: vec![1.0; k],
                matrix: matrix.clone(),
                probs_used: probs,
            };
            let basis = {
                let s = thin_svd(&matrix, None)?;
                s.u.take_cols(s.numerical_rank().max(1))
            };
            let baseline = SpectrumBaseline::new(a)?;
            let err = LowRankError::of_projection(a, &basis, k, &baseline)?;
            return Ok((selection, err));
        }
        c *= 2;
    }
    Err(Error::SketchFailure(format!(
        "could not find {k} independent distinct columns in the sampled basis"
    )))
}

/// Greedy max-norm pivoting on the k×c sampled basis: repeatedly take the
/// column with the largest residual norm whose original index is new, then
/// deflate the rest against it. Returns `None` when fewer than k usable
/// pivots exist.
fn pivoted_selection(sampled: &DenseMatrix, origins: &[usize], k: usize) -> Option<Vec<usize>> {
    let cols = sampled.cols();
    let mut work: Vec<Vec<f64>> = (0..cols).map(|j| sampled.col(j)).collect();
    let mut available: Vec<bool> = vec![true; cols];
    let mut picked = Vec::with_capacity(k);
    let mut picked_origins = std::collections::HashSet::new();

    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..cols {
            if !available[j] || picked_origins.contains(&origins[j]) {
                continue;
            }
            let norm = norm2(&work[j]);
            if best.map_or(true, |(_, b)| norm > b) {
                best = Some((j, norm));
            }
        }
        let (pivot, norm) = best?;
        if norm <= 1e-12 {
            return None;
        }
        let direction: Vec<f64> = work[pivot].iter().map(|x| x / norm).collect();
        available[pivot] = false;
        picked_origins.insert(origins[pivot]);
        picked.push(origins[pivot]);
        for (j, col) in work.iter_mut().enumerate() {
            if available[j] {
                let proj: f64 = direction.iter().zip(col.iter()).map(|(d, x)| d * x).sum();
                for (x, d) in col.iter_mut().zip(&direction) {
                    *x -= proj * d;
                }
            }
        }
    }
    Some(picked)
}

/// Both sides of the subspace inequality
/// ‖A − P_{AZ}A‖²_ν ≤ ‖A − A_k‖²_ν + ‖Σ_{k,⊥}(V_{k,⊥}ᵀZ)(V_kᵀZ)⁺‖²_ν
/// for an explicit test matrix Z, in both norms.
#[derive(Debug, Clone)]
pub struct StructuralBoundEval {
    pub lhs_frob: f64,
    pub rhs_frob: f64,
    pub lhs_spectral: f64,
    pub rhs_spectral: f64,
}

impl StructuralBoundEval {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs_frob <= self.rhs_frob + slack && self.lhs_spectral <= self.rhs_spectral + slack
    }
}

/// Evaluate the subspace inequality for an explicit Z (n×l). Errors if
/// V_kᵀZ loses rank (the inequality's hypothesis).
pub fn structural_bound_eval(
    a: &DenseMatrix,
    z: &DenseMatrix,
    k: usize,
) -> Result<StructuralBoundEval> {
    if z.rows() != a.cols() {
        return Err(Error::shape(format!(
            "Z has {} rows, expected {}",
            z.rows(),
            a.cols()
        )));
    }
    let svd = thin_svd(a, None)?;
    let rank = svd.numerical_rank();
    if k == 0 || k > rank {
        return Err(Error::Rank(format!("k = {k} outside [1, {rank}]")));
    }

    let vk_z = svd.vt.take_rows(k).matmul(z);
    let vk_z_svd = thin_svd(&vk_z, None)?;
    if vk_z_svd.numerical_rank() < k {
        return Err(Error::Precondition("V_kᵀZ lost rank".into()));
    }

    // left side: residual of projecting onto span(AZ)
    let image = a.matmul(z);
    let image_svd = thin_svd(&image, None)?;
    let basis = image_svd.u.take_cols(image_svd.numerical_rank().max(1));
    let residual = a.sub(&basis.matmul(&basis.tr_matmul(a)));
    let lhs_frob = residual.frobenius_norm().powi(2);
    let lhs_spectral = if residual.max_abs() == 0.0 {
        0.0
    } else {
        thin_svd(&residual, None)?.singular_values[0].powi(2)
    };

    // right side: optimal rank-k residual plus the cross-subspace term
    let base_frob_sq: f64 = svd.singular_values.iter().skip(k).map(|s| s * s).sum();
    let base_spec_sq = svd.singular_values.get(k).copied().unwrap_or(0.0).powi(2);
    let tail = rank - k;
    let (cross_frob_sq, cross_spec_sq) = if tail == 0 {
        (0.0, 0.0)
    } else {
        let mut vperp_z = DenseMatrix::zeros(tail, z.cols());
        for i in 0..tail {
            let scale = svd.singular_values[k + i];
            for j in 0..z.cols() {
                let mut acc = 0.0;
                for t in 0..a.cols() {
                    acc += svd.vt.get(k + i, t) * z.get(t, j);
                }
                vperp_z.set(i, j, scale * acc);
            }
        }
        // T = Σ_perp (V_perpᵀZ) (V_kᵀZ)⁺, built through the transpose
        let t_mat = pinv_apply(&vk_z.transpose(), &vperp_z.transpose())?.transpose();
        let frob = t_mat.frobenius_norm().powi(2);
        let spec = if t_mat.max_abs() == 0.0 {
            0.0
        } else {
            thin_svd(&t_mat, None)?.singular_values[0].powi(2)
        };
        (frob, spec)
    };

    Ok(StructuralBoundEval {
        lhs_frob,
        rhs_frob: base_frob_sq + cross_frob_sq,
        lhs_spectral,
        rhs_spectral: base_spec_sq + cross_spec_sq,
    })
}

/// Randomized range finder. `Basic` filters the structured-projection image
/// at rank k; `Oversampled` orthonormalizes a (k+p)-column Gaussian image;
/// `Power` additionally runs q rounds of AᵀA to sharpen the spectrum,
/// re-orthonormalizing after every half-step to keep the iteration from
/// collapsing in floating point.
pub fn range_find(
    a: &DenseMatrix,
    k: usize,
    method: RangeMethod,
    seed: SeedSpec,
) -> Result<(RangeBasis, LowRankError)> {
    if k == 0 || k > a.rows().min(a.cols()) {
        return Err(Error::Precondition(format!("bad target rank k = {k}")));
    }
    let baseline = SpectrumBaseline::new(a)?;
    match method {
        RangeMethod::Basic { eps } => {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::Precondition(format!("eps = {eps} outside (0, 1)")));
            }
            let l = (((tunables().range_basic_mult * k as f64) / eps).ceil() as usize)
                .clamp(k, a.cols());
            let op = SketchOperator::srht(a.cols(), l, seed)?;
            let image = apply_sketch(&op, a, Side::Right)?;
            let basis = top_k_basis(&image, k)?;
            let err = LowRankError::of_projection(a, &basis, k, &baseline)?;
            Ok((RangeBasis { q: basis, method, k }, err))
        }
        RangeMethod::Oversampled { p } => {
            if p == 0 {
                return Err(Error::Precondition("oversampling p must be >= 1".into()));
            }
            let l = (k + p).min(a.cols());
            let basis = orthonormal_image(a, l, k, seed)?;
            let err = LowRankError::of_projection(a, &basis, k, &baseline)?;
            Ok((RangeBasis { q: basis, method, k }, err))
        }
        RangeMethod::Power { p, q } => {
            if p == 0 {
                return Err(Error::Precondition("oversampling p must be >= 1".into()));
            }
            let l = (k + p).min(a.cols());
            let mut basis = orthonormal_image(a, l, k, seed)?;
            for _round in 0..q {
                let w = orthonormalize(&a.transpose().matmul(&basis), k)?;
                basis = orthonormalize(&a.matmul(&w), k)?;
            }
            let err = LowRankError::of_projection(a, &basis, k, &baseline)?;
            Ok((RangeBasis { q: basis, method, k }, err))
        }
    }
}

/// Orthonormalized Gaussian image of A with l columns. An image of rank
/// below the target k is a genuine collapse: one fresh-seed retry, then an
/// error. Rank between k and l just means A itself has low rank, and the
/// basis keeps the columns that exist.
fn orthonormal_image(a: &DenseMatrix, l: usize, k: usize, seed: SeedSpec) -> Result<DenseMatrix> {
    for attempt in 0..2u64 {
        let op = SketchOperator::gaussian(a.cols(), l, seed.child(attempt));
        let image = apply_sketch(&op, a, Side::Right)?;
        let basis = orthonormalize(&image, k)?;
        if basis.cols() >= k {
            return Ok(basis);
        }
    }
    Err(Error::Rank("projected image lost rank twice".into()))
}

/// Basis for the range of `m`, keeping at most its numerical rank but at
/// least `min_rank` columns (errors if even that is not available).
fn orthonormalize(m: &DenseMatrix, min_rank: usize) -> Result<DenseMatrix> {
    let qr = thin_qr(m)?;
    if qr.is_full_rank() {
        return Ok(qr.q);
    }
    let svd = thin_svd(m, None)?;
    let rank = svd.numerical_rank();
    if rank < min_rank {
        return Err(Error::Rank(format!("image rank {rank} below target {min_rank}")));
    }
    Ok(svd.u.take_cols(rank))
}

/// Probe estimate of ‖(I − QQᵀ)A‖₂: the largest Rayleigh quotient over
/// `num_probes` Gaussian probes, inflated by the configured safety factor.
/// Used for adaptive-rank stopping, not for bound checking.
pub fn posterior_error_estimate(
    a: &DenseMatrix,
    basis: &RangeBasis,
    num_probes: usize,
    seed: SeedSpec,
) -> Result<f64> {
    if num_probes == 0 {
        return Err(Error::Precondition("need at least one probe".into()));
    }
    let mut rng = seed.rng();
    let mut best = 0.0f64;
    for _ in 0..num_probes {
        let g = normal_draws(&mut rng, a.cols());
        let ag = a.mul_vec(&g);
        let qta = basis.q.tr_mul_vec(&ag);
        let residual: Vec<f64> = ag
            .iter()
            .zip(basis.q.mul_vec(&qta))
            .map(|(x, y)| x - y)
            .collect();
        best = best.max(norm2(&residual) / norm2(&g));
    }
    Ok(tunables().probe_inflation * best)
}
