//! Deterministic factorizations: thin SVD, thin QR, condition number, and
//! pseudoinverse application. Everything downstream builds on these.
//!
//! The SVD is a one-sided Jacobi iteration. It is slower than a
//! bidiagonalization on large inputs but delivers high relative accuracy and
//! factors that stay mutually consistent even on (near-)singular matrices,
//! which the pseudoinverse paths depend on. Cap and tolerance are the
//! [`crate::config`] constants `SVD_MAX_SWEEPS` and `SVD_TOL_FACTOR`.

use crate::config::{SVD_MAX_SWEEPS, SVD_TOL_FACTOR};
use crate::error::{Error, Result};
use crate::matrix::{dot, DenseMatrix};

/// Thin singular value decomposition A = U diag(σ) Vt.
///
/// `u` has orthonormal columns, `vt` orthonormal rows, and `singular_values`
/// is nonincreasing and nonnegative. `rank_tolerance` is the cutoff below
/// which a singular value is treated as zero:
/// `max(m, n) * machine_epsilon * σ_max`.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub vt: DenseMatrix,
    pub rank_tolerance: f64,
}

impl ThinSvd {
    /// Number of singular values above the rank tolerance.
    pub fn numerical_rank(&self) -> usize {
        self.singular_values.iter().filter(|&&s| s > self.rank_tolerance).count()
    }

    /// U diag(σ) Vt, for reconstruction checks.
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        us.scale_cols(&self.singular_values);
        us.matmul(&self.vt)
    }

    /// Keep only the top `k` singular triples.
    pub fn truncate(&self, k: usize) -> ThinSvd {
        assert!(k >= 1 && k <= self.singular_values.len());
        ThinSvd {
            u: self.u.take_cols(k),
            singular_values: self.singular_values[..k].to_vec(),
            vt: self.vt.take_rows(k),
            rank_tolerance: self.rank_tolerance,
        }
    }
}

/// Thin QR decomposition A = QR with Q m×n (orthonormal columns) and R n×n
/// upper triangular with nonnegative diagonal.
#[derive(Debug, Clone)]
pub struct ThinQr {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
    /// Columns whose R diagonal entry is numerically zero (rank deficiency).
    pub deficient_cols: Vec<usize>,
}

impl ThinQr {
    pub fn is_full_rank(&self) -> bool {
        self.deficient_cols.is_empty()
    }

    /// Solve R x = y by back substitution. Requires full rank.
    pub fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        let n = self.r.rows();
        assert_eq!(y.len(), n);
        let mut x = y.to_vec();
        for j in (0..n).rev() {
            let rj = self.r.row(j);
            let mut s = x[j];
            for i in j + 1..n {
                s -= rj[i] * x[i];
            }
            x[j] = s / rj[j];
        }
        x
    }

    /// Solve R^T x = y by forward substitution. Requires full rank.
    pub fn solve_upper_transpose(&self, y: &[f64]) -> Vec<f64> {
        let n = self.r.rows();
        assert_eq!(y.len(), n);
        let mut x = vec![0.0; n];
        for j in 0..n {
            let mut s = y[j];
            for i in 0..j {
                s -= self.r.get(i, j) * x[i];
            }
            x[j] = s / self.r.get(j, j);
        }
        x
    }
}

/// Thin SVD of `a`, truncated to the top `k` triples when `k` is given.
///
/// The input is pre-scaled by a power of two so that its largest entry lands
/// in [1, 2); the singular values are rescaled afterwards. Powers of two are
/// exact in binary floating point, so `thin_svd(c * a)` for any power-of-two
/// `c` runs the identical iteration and returns bit-identical U and Vt.
pub fn thin_svd(a: &DenseMatrix, k: Option<usize>) -> Result<ThinSvd> {
    let (m, n) = (a.rows(), a.cols());
    let r = m.min(n);
    if let Some(k) = k {
        if k == 0 || k > r {
            return Err(Error::Rank(format!("k = {k} outside [1, {r}]")));
        }
    }

    let max_abs = a.max_abs();
    let svd = if max_abs == 0.0 {
        zero_matrix_svd(m, n)
    } else {
        // Pre-scale by a power of two so the largest entry lands in [1, 2);
        // exact in binary floating point, so the iteration below is
        // bit-identical across power-of-two rescalings of the input.
        let scale = 2.0f64.powi(-(max_abs.log2().floor() as i32));
        if m >= n {
            let mut svd = jacobi_svd_tall(&a.scale(scale))?;
            for s in svd.singular_values.iter_mut() {
                *s /= scale;
            }
            svd.rank_tolerance /= scale;
            svd
        } else {
            let mut svd = jacobi_svd_tall(&a.scale(scale).transpose())?;
            for s in svd.singular_values.iter_mut() {
                *s /= scale;
            }
            svd.rank_tolerance /= scale;
            ThinSvd {
                u: svd.vt.transpose(),
                vt: svd.u.transpose(),
                singular_values: svd.singular_values,
                rank_tolerance: svd.rank_tolerance,
            }
        }
    };

    Ok(match k {
        Some(k) => svd.truncate(k),
        None => svd,
    })
}

/// One-sided Jacobi on a tall matrix (m >= n): cyclically rotate column
/// pairs until all are mutually orthogonal, then read the singular values
/// off as column norms.
fn jacobi_svd_tall(a: &DenseMatrix) -> Result<ThinSvd> {
    let (m, n) = (a.rows(), a.cols());
    debug_assert!(m >= n);

    // column-major working buffers for W (rotating columns of A) and V
    let mut w: Vec<f64> = Vec::with_capacity(m * n);
    for j in 0..n {
        for i in 0..m {
            w.push(a.get(i, j));
        }
    }
    let mut v = vec![0.0; n * n];
    for j in 0..n {
        v[j * n + j] = 1.0;
    }

    let tol = SVD_TOL_FACTOR * m as f64 * f64::EPSILON;
    // Deflation floor. Columns of a rank-deficient input shrink toward zero
    // but get re-polluted at the eps·sqrt(m)·‖A‖_F level by rotations
    // against full-size columns; their mutual inner products are then pure
    // rounding noise (they can even violate Cauchy-Schwarz) and rotating
    // them never settles. Pairs below the floor are skipped and their
    // singular values snapped to zero afterwards. The Frobenius norm is
    // rotation-invariant, so the floor is stable across sweeps.
    let total_sq: f64 = w.iter().map(|x| x * x).sum();
    let floor_sq = 64.0 * m as f64 * (f64::EPSILON * f64::EPSILON) * total_sq;
    let mut converged = false;
    for _sweep in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let wp = &w[p * m..(p + 1) * m];
                    let wq = &w[q * m..(q + 1) * m];
                    (dot(wp, wp), dot(wq, wq), dot(wp, wq))
                };
                // no rotation can help a column that will be snapped to a
                // zero singular value, and at denormal scales the rotation
                // arithmetic cannot make progress anyway
                if alpha <= floor_sq || beta <= floor_sq {
                    continue;
                }
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, m, p, q, c, s);
                rotate_pair(&mut v, n, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::FactorizationFailure { iterations: SVD_MAX_SWEEPS });
    }

    let mut sigma: Vec<f64> = (0..n)
        .map(|j| {
            let s_sq = dot(&w[j * m..(j + 1) * m], &w[j * m..(j + 1) * m]);
            if s_sq <= floor_sq {
                0.0
            } else {
                s_sq.sqrt()
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    sigma = order.iter().map(|&i| sigma[i]).collect();

    // Deflated columns are junk directions: leave them out of U and complete
    // the basis afterwards so U stays orthonormal.
    let mut u = DenseMatrix::zeros(m, n);
    let mut needs_fill = Vec::new();
    for (jj, &src) in order.iter().enumerate() {
        let col = &w[src * m..(src + 1) * m];
        if sigma[jj] > 0.0 {
            let inv = 1.0 / sigma[jj];
            for i in 0..m {
                u.set(i, jj, col[i] * inv);
            }
        } else {
            needs_fill.push(jj);
        }
    }
    for jj in needs_fill {
        fill_orthonormal_column(&mut u, jj);
    }

    let vt = DenseMatrix::from_fn(n, n, |i, j| v[order[i] * n + j]);
    let tol = m.max(n) as f64 * f64::EPSILON * sigma[0];
    Ok(ThinSvd { u, singular_values: sigma, vt, rank_tolerance: tol })
}

fn rotate_pair(cols: &mut [f64], len: usize, p: usize, q: usize, c: f64, s: f64) {
    debug_assert!(p < q);
    let (head, tail) = cols.split_at_mut(q * len);
    let cp = &mut head[p * len..p * len + len];
    let cq = &mut tail[..len];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (wp, wq) = (*x, *y);
        *x = c * wp - s * wq;
        *y = s * wp + c * wq;
    }
}

/// Replace column `j` (currently zero) with a unit vector orthogonal to all
/// other nonzero columns: pick the basis vector with the largest residual
/// after two rounds of Gram-Schmidt.
fn fill_orthonormal_column(u: &mut DenseMatrix, j: usize) {
    let (m, n) = (u.rows(), u.cols());
    let mut best: Option<(f64, Vec<f64>)> = None;
    for cand in 0..m {
        let mut vec: Vec<f64> = (0..m).map(|i| if i == cand { 1.0 } else { 0.0 }).collect();
        for _ in 0..2 {
            for c in 0..n {
                if c == j {
                    continue;
                }
                let proj: f64 = (0..m).map(|i| u.get(i, c) * vec[i]).sum();
                if proj != 0.0 {
                    for i in 0..m {
                        vec[i] -= proj * u.get(i, c);
                    }
                }
            }
        }
        let norm = dot(&vec, &vec).sqrt();
        if norm > 0.9 {
            best = Some((norm, vec));
            break;
        }
        if best.as_ref().map_or(true, |(b, _)| norm > *b) {
            best = Some((norm, vec));
        }
    }
    let (norm, vec) = best.expect("m >= n guarantees a usable direction");
    for i in 0..m {
        u.set(i, j, vec[i] / norm);
    }
}

fn zero_matrix_svd(m: usize, n: usize) -> ThinSvd {
    let r = m.min(n);
    ThinSvd {
        u: DenseMatrix::from_fn(m, r, |i, j| if i == j { 1.0 } else { 0.0 }),
        singular_values: vec![0.0; r],
        vt: DenseMatrix::from_fn(r, n, |i, j| if i == j { 1.0 } else { 0.0 }),
        rank_tolerance: 0.0,
    }
}

/// Householder thin QR of a tall matrix (m ≥ n).
pub fn thin_qr(a: &DenseMatrix) -> Result<ThinQr> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(Error::shape(format!("thin_qr needs m >= n, got {m}x{n}")));
    }

    // Reduce a working copy to upper-triangular form, recording reflectors.
    let mut w = a.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v: Vec<f64> = (j..m).map(|i| w.get(i, j)).collect();
        let norm = dot(&v, &v).sqrt();
        if norm == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm = dot(&v, &v).sqrt();
        if vnorm == 0.0 {
            reflectors.push(Vec::new());
            w.set(j, j, alpha);
            continue;
        }
        for x in v.iter_mut() {
            *x /= vnorm;
        }
        apply_reflector(&mut w, &v, j, j);
        w.set(j, j, alpha);
        for i in j + 1..m {
            w.set(i, j, 0.0);
        }
        reflectors.push(v);
    }

    // Accumulate Q by applying the reflectors in reverse to the first n
    // columns of the identity.
    let mut q = DenseMatrix::from_fn(m, n, |i, j| if i == j { 1.0 } else { 0.0 });
    for j in (0..n).rev() {
        if !reflectors[j].is_empty() {
            apply_reflector(&mut q, &reflectors[j], j, 0);
        }
    }

    let mut r = w.take_rows(n);
    // Normalize to a nonnegative R diagonal so exact inputs like the identity
    // factor as themselves.
    for j in 0..n {
        if r.get(j, j) < 0.0 {
            for c in 0..n {
                let x = r.get(j, c);
                r.set(j, c, -x);
            }
            for i in 0..m {
                let x = q.get(i, j);
                q.set(i, j, -x);
            }
        }
    }

    let diag_max = (0..n).fold(0.0f64, |acc, j| acc.max(r.get(j, j).abs()));
    let tol = m.max(n) as f64 * f64::EPSILON * diag_max;
    let deficient_cols = (0..n).filter(|&j| r.get(j, j).abs() <= tol).collect();

    Ok(ThinQr { q, r, deficient_cols })
}

/// Apply I - 2vv^T to rows `row0..` and columns `col0..` of `w`; `v` indexes
/// rows `row0..m`.
fn apply_reflector(w: &mut DenseMatrix, v: &[f64], row0: usize, col0: usize) {
    let (m, n) = (w.rows(), w.cols());
    debug_assert_eq!(v.len(), m - row0);
    for c in col0..n {
        let mut s = 0.0;
        for (i, &vi) in v.iter().enumerate() {
            s += vi * w.get(row0 + i, c);
        }
        s *= 2.0;
        if s != 0.0 {
            for (i, &vi) in v.iter().enumerate() {
                let x = w.get(row0 + i, c);
                w.set(row0 + i, c, x - s * vi);
            }
        }
    }
}

/// σ_max / σ_min over the numerically nonzero singular values.
pub fn condition_number(a: &DenseMatrix) -> Result<f64> {
    if a.max_abs() == 0.0 {
        return Err(Error::Domain("condition number of the zero matrix".into()));
    }
    let svd = thin_svd(a, None)?;
    let rank = svd.numerical_rank();
    Ok(svd.singular_values[0] / svd.singular_values[rank - 1])
}

/// A⁺ · y, treating singular values at or below the rank tolerance as zero.
pub fn pinv_apply(a: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows() != y.rows() {
        return Err(Error::shape(format!(
            "pinv_apply: A has {} rows, Y has {}",
            a.rows(),
            y.rows()
        )));
    }
    let svd = thin_svd(a, None)?;
    Ok(pinv_apply_svd(&svd, y))
}

/// A⁺ · y given a precomputed SVD of A.
pub fn pinv_apply_svd(svd: &ThinSvd, y: &DenseMatrix) -> DenseMatrix {
    let mut w = svd.u.tr_matmul(y);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        let inv = if s > svd.rank_tolerance { 1.0 / s } else { 0.0 };
        for x in w.row_mut(i) {
            *x *= inv;
        }
    }
    svd.vt.tr_matmul(&w)
}

/// Orthonormal basis for the range of `a` (columns of U above the rank
/// tolerance).
pub fn range_basis(a: &DenseMatrix) -> Result<DenseMatrix> {
    let svd = thin_svd(a, None)?;
    let rank = svd.numerical_rank().max(1);
    Ok(svd.u.take_cols(rank))
}

/// Largest singular value.
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    Ok(thin_svd(a, None)?.singular_values[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal_draws, SeedSpec};

    fn random_matrix(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let draws = normal_draws(&mut SeedSpec::from(seed).rng(), m * n);
        DenseMatrix::from_parts(m, n, draws)
    }

    fn max_off_identity(g: &DenseMatrix) -> f64 {
        let n = g.rows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g.get(i, j) - want).abs());
            }
        }
        worst
    }

    #[test]
    fn svd_of_identity() {
        let svd = thin_svd(&DenseMatrix::identity(3), None).unwrap();
        assert!(svd.singular_values.iter().all(|&s| (s - 1.0).abs() < 1e-12));
        assert!(max_off_identity(&svd.u.tr_matmul(&svd.u)) < 1e-10);
    }

    #[test]
    fn svd_of_diagonal_sorts_descending() {
        let svd = thin_svd(&DenseMatrix::diag(&[3.0, 2.0, 1.0]), None).unwrap();
        assert_eq!(svd.singular_values, vec![3.0, 2.0, 1.0]);
        let svd = thin_svd(&DenseMatrix::diag(&[1.0, 3.0, 2.0]), None).unwrap();
        assert_eq!(svd.singular_values, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn svd_reconstructs_random_input() {
        let a = random_matrix(8, 5, 7);
        let svd = thin_svd(&a, None).unwrap();
        let err = a.sub(&svd.reconstruct()).frobenius_norm();
        assert!(err <= 1e-8 * a.frobenius_norm(), "reconstruction error {err}");
        assert!(max_off_identity(&svd.u.tr_matmul(&svd.u)) < 1e-10);
        assert!(max_off_identity(&svd.vt.matmul(&svd.vt.transpose())) < 1e-10);
    }

    #[test]
    fn svd_truncation_keeps_top_triples() {
        let a = random_matrix(10, 6, 3);
        let full = thin_svd(&a, None).unwrap();
        let top = thin_svd(&a, Some(2)).unwrap();
        assert_eq!(top.singular_values, full.singular_values[..2].to_vec());
        assert_eq!(top.u.cols(), 2);
        assert_eq!(top.vt.rows(), 2);
    }

    #[test]
    fn svd_rejects_bad_k() {
        let a = random_matrix(4, 3, 1);
        assert!(thin_svd(&a, Some(0)).is_err());
        assert!(thin_svd(&a, Some(4)).is_err());
    }

    #[test]
    fn svd_is_exactly_equivariant_under_power_of_two_scaling() {
        let a = random_matrix(12, 5, 11);
        let s1 = thin_svd(&a, None).unwrap();
        let s2 = thin_svd(&a.scale(4.0), None).unwrap();
        assert_eq!(s1.u.entries(), s2.u.entries());
        assert_eq!(s1.vt.entries(), s2.vt.entries());
        for (x, y) in s1.singular_values.iter().zip(&s2.singular_values) {
            assert_eq!(4.0 * x, *y);
        }
    }

    #[test]
    fn qr_of_identity_is_identity() {
        let qr = thin_qr(&DenseMatrix::identity(4)).unwrap();
        assert_eq!(qr.q.entries(), DenseMatrix::identity(4).entries());
        assert_eq!(qr.r.entries(), DenseMatrix::identity(4).entries());
        assert!(qr.is_full_rank());
    }

    #[test]
    fn qr_flags_zero_column() {
        let mut a = DenseMatrix::identity(3);
        for i in 0..3 {
            a.set(i, 1, 0.0);
        }
        let qr = thin_qr(&a).unwrap();
        assert_eq!(qr.deficient_cols, vec![1]);
    }

    #[test]
    fn qr_reconstructs_random_input() {
        let a = random_matrix(10, 3, 1);
        let qr = thin_qr(&a).unwrap();
        let err = a.sub(&qr.q.matmul(&qr.r)).frobenius_norm();
        assert!(err <= 1e-8 * a.frobenius_norm(), "reconstruction error {err}");
        assert!(max_off_identity(&qr.q.tr_matmul(&qr.q)) < 1e-10);
        // strictly triangular below the diagonal
        for i in 1..3 {
            for j in 0..i {
                assert_eq!(qr.r.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn qr_rejects_wide_input() {
        assert!(thin_qr(&random_matrix(2, 5, 1)).is_err());
    }

    #[test]
    fn condition_number_cases() {
        assert!((condition_number(&DenseMatrix::identity(5)).unwrap() - 1.0).abs() < 1e-12);
        assert!((condition_number(&DenseMatrix::diag(&[10.0, 1.0])).unwrap() - 10.0).abs() < 1e-10);
        assert!(condition_number(&DenseMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn condition_number_matches_singular_value_ratio() {
        let a = random_matrix(50, 5, 13);
        let svd = thin_svd(&a, None).unwrap();
        let want = svd.singular_values[0] / svd.singular_values[4];
        let got = condition_number(&a).unwrap();
        assert!((got - want).abs() <= 1e-10 * want);
    }

    #[test]
    fn pinv_identity_returns_input() {
        let y = random_matrix(3, 2, 9);
        let x = pinv_apply(&DenseMatrix::identity(3), &y).unwrap();
        assert!(x.sub(&y).frobenius_norm() < 1e-12);
    }

    #[test]
    fn pinv_drops_zero_singular_values() {
        let a = DenseMatrix::diag(&[2.0, 0.0]);
        let y = DenseMatrix::column(&[4.0, 9.0]);
        let x = pinv_apply(&a, &y).unwrap();
        assert!((x.get(0, 0) - 2.0).abs() < 1e-14);
        assert_eq!(x.get(1, 0), 0.0);
    }

    #[test]
    fn pinv_times_self_is_identity_on_full_rank() {
        let a = random_matrix(6, 3, 5);
        let p = pinv_apply(&a, &a).unwrap();
        let err = p.sub(&DenseMatrix::identity(3)).frobenius_norm();
        assert!(err < 1e-8, "A+A off identity by {err}");
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = random_matrix(4, 2, 1);
        let y = random_matrix(3, 1, 2);
        assert!(pinv_apply(&a, &y).is_err());
    }
}
