//! Overconstrained least-squares solvers: exact QR baseline, three sketched
//! one-shot solvers (leverage-score row sampling, randomized Hadamard then
//! uniform sampling, dense Gaussian projection), an iterative
//! sketch-and-precondition solver, the structural-condition verifier that
//! certifies when a sketch is good enough, and the underconstrained
//! minimum-norm variant.

use crate::config::tunables;
use crate::error::{Error, Result};
use crate::factor::{pinv_apply, thin_qr, thin_svd, ThinQr};
use crate::leverage::exact_leverage;
use crate::matrix::{dot, norm2, sub_vec, DenseMatrix};
use crate::rng::SeedSpec;
use crate::sketch::{apply_sketch, make_sampling_plan, ProbabilityVector, Side, SketchOperator};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// A least-squares instance min_x ‖Ax − b‖₂.
#[derive(Debug, Clone)]
pub struct LsProblem {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
}

impl LsProblem {
    pub fn new(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::shape(format!(
                "A has {} rows but b has {} entries",
                a.rows(),
                b.len()
            )));
        }
        if !b.iter().all(|x| x.is_finite()) {
            return Err(Error::Domain("right-hand side must be finite".into()));
        }
        Ok(LsProblem { a, b })
    }

    /// ‖Ax − b‖₂ for a candidate solution.
    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        norm2(&sub_vec(&self.a.mul_vec(x), &self.b))
    }
}

/// Compact description of the sketch a solver used.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SketchSummary {
    pub kind: String,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl SketchSummary {
    fn of(op: &SketchOperator) -> Self {
        SketchSummary {
            kind: op.kind_name().to_string(),
            in_dim: op.in_dim(),
            out_dim: op.out_dim(),
        }
    }
}

/// Everything a solver reports about one solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub x: Vec<f64>,
    /// ‖Ax − b‖₂ on the original problem.
    pub residual_norm: f64,
    /// residual_norm divided by the exact optimum, when a baseline was given.
    pub relative_objective: Option<f64>,
    /// ‖x − x_opt‖₂ against the baseline solution, when given.
    pub x_error: Option<f64>,
    /// Condition number observed (of A for direct solves, of the
    /// preconditioned operator for the iterative solver).
    pub kappa: Option<f64>,
    /// γ_b = ‖U Uᵀ b‖ / ‖b‖, the fraction of b inside the column space.
    pub mass_fraction: Option<f64>,
    /// ‖Aᵀr‖ / (‖A‖_F ‖r‖), a cheap normal-equations residual diagnostic.
    pub backward_error: Option<f64>,
    /// Iteration count (iterative solver only).
    pub iterations: Option<usize>,
    pub sketch_recipe: Option<SketchSummary>,
    pub wall_time: f64,
}

impl SolveReport {
    fn from_solution(p: &LsProblem, x: Vec<f64>, started: Instant) -> Self {
        let residual = sub_vec(&p.a.mul_vec(&x), &p.b);
        let residual_norm = norm2(&residual);
        let backward_error = if residual_norm > 0.0 {
            let a_norm = p.a.frobenius_norm();
            if a_norm > 0.0 {
                Some(norm2(&p.a.tr_mul_vec(&residual)) / (a_norm * residual_norm))
            } else {
                None
            }
        } else {
            None
        };
        SolveReport {
            x,
            residual_norm,
            relative_objective: None,
            x_error: None,
            kappa: None,
            mass_fraction: None,
            backward_error,
            iterations: None,
            sketch_recipe: None,
            wall_time: started.elapsed().as_secs_f64(),
        }
    }

    /// Fill the comparison fields from the exact baseline report. The
    /// relative objective is left unset for (numerically) consistent systems
    /// where the optimum is zero.
    pub fn with_baseline(mut self, exact: &SolveReport) -> SolveReport {
        let scale = 1e-14 * norm2(&exact.x).max(1.0);
        if exact.residual_norm > scale {
            self.relative_objective = Some(self.residual_norm / exact.residual_norm);
        }
        self.x_error = Some(norm2(&sub_vec(&self.x, &exact.x)));
        if self.kappa.is_none() {
            self.kappa = exact.kappa;
        }
        self.mass_fraction = exact.mass_fraction;
        self
    }
}

/// Exact least squares by Householder QR; rank-deficient inputs fall back to
/// the minimum-norm pseudoinverse solution.
pub fn solve_exact(p: &LsProblem) -> Result<SolveReport> {
    let started = Instant::now();
    let (m, n) = (p.a.rows(), p.a.cols());
    if m < n {
        return Err(Error::shape(format!("solve_exact needs m >= n, got {m}x{n}")));
    }
    let qr = thin_qr(&p.a)?;
    let b_norm = norm2(&p.b);
    let (x, kappa, mass) = if qr.is_full_rank() {
        let qtb = qr.q.tr_mul_vec(&p.b);
        let x = qr.solve_upper(&qtb);
        // κ(A) = κ(R); the n×n factor is cheap to decompose
        let r_svd = thin_svd(&qr.r, None)?;
        let kappa = r_svd.singular_values[0] / r_svd.singular_values[n - 1];
        let mass = if b_norm > 0.0 { Some(norm2(&qtb) / b_norm) } else { None };
        (x, kappa, mass)
    } else {
        let svd = thin_svd(&p.a, None)?;
        let rank = svd.numerical_rank();
        let x = pinv_apply(&p.a, &DenseMatrix::column(&p.b))?.col(0);
        let kappa = svd.singular_values[0] / svd.singular_values[rank - 1];
        let mass = if b_norm > 0.0 {
            let u = svd.u.take_cols(rank);
            Some(norm2(&u.tr_mul_vec(&p.b)) / b_norm)
        } else {
            None
        };
        (x, kappa, mass)
    };
    let mut report = SolveReport::from_solution(p, x, started);
    report.kappa = Some(kappa);
    report.mass_fraction = mass.map(|g| g.min(1.0));
    Ok(report)
}

/// Solve the sketched subproblem min ‖(ZA)x − Zb‖ by QR and report against
/// the original problem. Errors with `Rank` if the sketch lost rank.
pub fn solve_sketched_subproblem(
    p: &LsProblem,
    za: &DenseMatrix,
    zb: &[f64],
    recipe: Option<SketchSummary>,
) -> Result<SolveReport> {
    let started = Instant::now();
    let qr = thin_qr(za)?;
    if !qr.is_full_rank() {
        return Err(Error::Rank("sketched matrix lost rank".into()));
    }
    let x = qr.solve_upper(&qr.q.tr_mul_vec(zb));
    let mut report = SolveReport::from_solution(p, x, started);
    report.sketch_recipe = recipe;
    Ok(report)
}

fn pick_rows(b: &[f64], indices: &[usize], scales: &[f64]) -> Vec<f64> {
    indices.iter().zip(scales).map(|(&i, &s)| b[i] * s).collect()
}

/// Row-sampled least squares: draw `r` rows of [A b] i.i.d. from `probs`
/// (defaulting to the exact leverage scores over n), rescale, and solve the
/// subproblem. One resample on rank loss, then a hard error.
pub fn solve_sampled(
    p: &LsProblem,
    r: usize,
    probs: Option<&ProbabilityVector>,
    seed: SeedSpec,
) -> Result<SolveReport> {
    let (m, n) = (p.a.rows(), p.a.cols());
    if m < n {
        return Err(Error::shape(format!("needs m >= n, got {m}x{n}")));
    }
    if r < n {
        return Err(Error::Precondition(format!("sample size r = {r} below n = {n}")));
    }
    let default_probs;
    let probs = match probs {
        Some(p) => p,
        None => {
            default_probs = exact_leverage(&p.a)?.to_probabilities()?;
            &default_probs
        }
    };
    let mut last_err = None;
    for attempt in 0..2u64 {
        let plan = make_sampling_plan(probs, r, seed.child(attempt))?;
        let za = p.a.select_rows(&plan.indices, &plan.scales);
        let zb = pick_rows(&p.b, &plan.indices, &plan.scales);
        let recipe = SketchSummary { kind: "sampling".into(), in_dim: m, out_dim: r };
        match solve_sketched_subproblem(p, &za, &zb, Some(recipe)) {
            Ok(report) => return Ok(report),
            Err(e @ Error::Rank(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

/// Default sample size for [`solve_sampled`]: ceil(mult · n ln n / eps²).
pub fn default_sample_size(n: usize, eps: f64) -> usize {
    let t = tunables();
    let n = n as f64;
    ((t.ls_sample_mult * n * n.max(2.0).ln() / (eps * eps)).ceil() as usize).max(n as usize)
}

/// Randomized-Hadamard least squares: premultiply [A b] by H·D on the
/// power-of-two padding, sample `r` rows uniformly with scale sqrt(p/r),
/// and solve the subproblem.
pub fn solve_srht(p: &LsProblem, r: usize, seed: SeedSpec) -> Result<SolveReport> {
    let (m, n) = (p.a.rows(), p.a.cols());
    if m < n {
        return Err(Error::shape(format!("needs m >= n, got {m}x{n}")));
    }
    if r < n {
        return Err(Error::Precondition(format!("sample size r = {r} below n = {n}")));
    }
    let mut last_err = None;
    for attempt in 0..2u64 {
        let op = SketchOperator::srht(m, r, seed.child(attempt))?;
        let za = apply_sketch(&op, &p.a, Side::Left)?;
        let zb = apply_sketch(&op, &DenseMatrix::column(&p.b), Side::Left)?.col(0);
        match solve_sketched_subproblem(p, &za, &zb, Some(SketchSummary::of(&op))) {
            Ok(report) => return Ok(report),
            Err(e @ Error::Rank(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

/// Default sample size for [`solve_srht`]: ceil(mult · n · ln m_padded).
pub fn default_srht_size(m: usize, n: usize) -> usize {
    let t = tunables();
    let padded = m.next_power_of_two() as f64;
    ((t.ls_srht_mult * n as f64 * padded.ln()).ceil() as usize).max(n)
}

/// Dense Gaussian projection least squares: form ΩᵀA and Ωᵀb with an l-column
/// Gaussian operator and solve.
pub fn solve_projected(p: &LsProblem, l: usize, seed: SeedSpec) -> Result<SolveReport> {
    let (m, n) = (p.a.rows(), p.a.cols());
    if m < n {
        return Err(Error::shape(format!("needs m >= n, got {m}x{n}")));
    }
    if l < n {
        return Err(Error::Precondition(format!("projection size l = {l} below n = {n}")));
    }
    let mut last_err = None;
    for attempt in 0..2u64 {
        let op = SketchOperator::gaussian(m, l, seed.child(attempt));
        let za = apply_sketch(&op, &p.a, Side::Left)?;
        let zb = apply_sketch(&op, &DenseMatrix::column(&p.b), Side::Left)?.col(0);
        match solve_sketched_subproblem(p, &za, &zb, Some(SketchSummary::of(&op))) {
            Ok(report) => return Ok(report),
            Err(e @ Error::Rank(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

/// Default projection size for [`solve_projected`]: ceil(mult · n / eps²).
pub fn default_projection_size(n: usize, eps: f64) -> usize {
    let t = tunables();
    ((t.ls_project_mult * n as f64 / (eps * eps)).ceil() as usize).max(n)
}

/// Sketch-and-precondition: QR-factor an SRHT sketch of A, then run conjugate
/// gradient on the normal equations of A·R⁻¹, whose condition number is a
/// small data-independent constant. Iterations are therefore O(log(1/tol))
/// regardless of κ(A).
pub fn solve_preconditioned(
    p: &LsProblem,
    l: usize,
    tol: f64,
    max_iter: usize,
    seed: SeedSpec,
) -> Result<SolveReport> {
    let started = Instant::now();
    let (m, n) = (p.a.rows(), p.a.cols());
    if m < n {
        return Err(Error::shape(format!("needs m >= n, got {m}x{n}")));
    }
    if l < n {
        return Err(Error::Precondition(format!("sketch size l = {l} below n = {n}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition("tol must be positive".into()));
    }

    let mut qr = None;
    let mut recipe = None;
    for attempt in 0..2u64 {
        let op = SketchOperator::srht(m, l, seed.child(attempt))?;
        let sketch = apply_sketch(&op, &p.a, Side::Left)?;
        let candidate = thin_qr(&sketch)?;
        if candidate.is_full_rank() {
            recipe = Some(SketchSummary::of(&op));
            qr = Some(candidate);
            break;
        }
    }
    let qr = qr.ok_or_else(|| Error::Rank("preconditioner sketch lost rank".into()))?;

    // conjugate gradient on (AR⁻¹)ᵀ(AR⁻¹) y = (AR⁻¹)ᵀ b, stopping on the
    // relative normal-equations residual
    let apply_m = |y: &[f64]| p.a.mul_vec(&qr.solve_upper(y));
    let apply_mt = |u: &[f64]| qr.solve_upper_transpose(&p.a.tr_mul_vec(u));

    let mut y = vec![0.0; n];
    let mut resid = p.b.clone();
    let mut s = apply_mt(&resid);
    let mut gamma = dot(&s, &s);
    let gamma0 = gamma.max(f64::MIN_POSITIVE);
    let mut dir = s.clone();
    let mut iterations = 0;
    let mut converged = gamma.sqrt() <= tol * gamma0.sqrt();
    while !converged && iterations < max_iter {
        let q = apply_m(&dir);
        let qq = dot(&q, &q);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        for (yi, di) in y.iter_mut().zip(&dir) {
            *yi += alpha * di;
        }
        for (ri, qi) in resid.iter_mut().zip(&q) {
            *ri -= alpha * qi;
        }
        s = apply_mt(&resid);
        let gamma_new = dot(&s, &s);
        iterations += 1;
        if (gamma_new / gamma0).sqrt() <= tol {
            converged = true;
            break;
        }
        let beta = gamma_new / gamma;
        for (di, si) in dir.iter_mut().zip(&s) {
            *di = si + beta * *di;
        }
        gamma = gamma_new;
    }

    let x = qr.solve_upper(&y);
    let kappa = preconditioned_kappa(&p.a, &qr)?;
    let mut report = SolveReport::from_solution(p, x, started);
    report.iterations = Some(iterations);
    report.kappa = Some(kappa);
    report.sketch_recipe = recipe;
    if !converged {
        return Err(Error::Convergence { tol, max_iter, best: Box::new(report) });
    }
    Ok(report)
}

/// κ(A·R⁻¹), measured through a fresh QR so only an n×n decomposition is
/// needed.
fn preconditioned_kappa(a: &DenseMatrix, qr: &ThinQr) -> Result<f64> {
    let n = a.cols();
    let mut preconditioned = DenseMatrix::zeros(a.rows(), n);
    for i in 0..a.rows() {
        // row i of A·R⁻¹ solves zᵀR = a_i, i.e. Rᵀ z = a_iᵀ
        let z = qr.solve_upper_transpose(a.row(i));
        preconditioned.row_mut(i).copy_from_slice(&z);
    }
    let inner = thin_qr(&preconditioned)?;
    let svd = thin_svd(&inner.r, None)?;
    Ok(svd.singular_values[0] / svd.singular_values[n - 1])
}

/// The two deterministic conditions under which a sketched solve is
/// guaranteed to land within (1+ε) of the optimum.
#[derive(Debug, Clone, Serialize)]
pub struct StructuralCheck {
    /// σ²_min of the sketched orthobasis Z·U_A.
    pub sigma_min_sq: f64,
    /// ‖U_Aᵀ Zᵀ Z b⊥‖².
    pub cross_term: f64,
    /// ‖A x_opt − b‖², the exact optimum squared.
    pub residual_sq: f64,
}

impl StructuralCheck {
    /// The sketch kept the subspace: σ²_min(Z U_A) ≥ 1/√2.
    pub fn condition1_ok(&self) -> bool {
        self.sigma_min_sq >= std::f64::consts::FRAC_1_SQRT_2
    }

    /// The sketched out-of-space part stayed nearly orthogonal:
    /// cross_term ≤ (ε/2)·residual².
    pub fn condition2_ok(&self, eps: f64) -> bool {
        self.cross_term <= 0.5 * eps * self.residual_sq
    }
}

/// Evaluate the structural conditions for the realized sketch (ZA, Zb). The
/// sketched basis Z·U_A is recovered as (ZA)·V·Σ⁻¹ from the SVD of A, so the
/// check refers to exactly the Z the caller solved with.
pub fn check_structural(p: &LsProblem, za: &DenseMatrix, zb: &[f64]) -> Result<StructuralCheck> {
    if za.cols() != p.a.cols() || za.rows() != zb.len() {
        return Err(Error::shape("sketched pair has inconsistent shape"));
    }
    let svd = thin_svd(&p.a, None)?;
    let rank = svd.numerical_rank();
    let u = svd.u.take_cols(rank);

    let u_tb = u.tr_mul_vec(&p.b);
    let b_perp = sub_vec(&p.b, &u.mul_vec(&u_tb));
    let residual_sq = dot(&b_perp, &b_perp);

    // Z U_A = (Z A) V Σ⁻¹ over the numerically nonzero part
    let mut v = svd.vt.take_rows(rank).transpose();
    let inv_sigma: Vec<f64> = svd.singular_values[..rank].iter().map(|s| 1.0 / s).collect();
    v.scale_cols(&inv_sigma);
    let zu = za.matmul(&v);

    let zu_svd = thin_svd(&zu, None)?;
    let sigma_min = zu_svd.singular_values[rank - 1];

    let zb_perp = sub_vec(zb, &zu.mul_vec(&u_tb));
    let cross = zu.tr_mul_vec(&zb_perp);

    Ok(StructuralCheck {
        sigma_min_sq: sigma_min * sigma_min,
        cross_term: dot(&cross, &cross),
        residual_sq,
    })
}

/// Which reduction the minimum-norm solver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinNormMode {
    /// Column sampling by column leverage scores.
    Sample,
    /// Structured (SRHT) column projection.
    Project,
}

/// Exact minimum-norm solution A⁺b of an underconstrained system.
pub fn solve_min_norm_exact(p: &LsProblem) -> Result<SolveReport> {
    let started = Instant::now();
    let x = pinv_apply(&p.a, &DenseMatrix::column(&p.b))?.col(0);
    Ok(SolveReport::from_solution(p, x, started))
}

/// Approximate minimum-norm solution of an underconstrained system (m < n):
/// reduce the columns to `c` by leverage sampling or structured projection S,
/// then return x̃ = Aᵀ·((AS)(AS)ᵀ)⁺·b.
pub fn solve_min_norm(
    p: &LsProblem,
    c: usize,
    mode: MinNormMode,
    seed: SeedSpec,
) -> Result<SolveReport> {
    let (m, n) = (p.a.rows(), p.a.cols());
    if m >= n {
        return Err(Error::shape(format!("minimum-norm path needs m < n, got {m}x{n}")));
    }
    if c <= m {
        return Err(Error::Precondition(format!("need c > m, got c = {c}, m = {m}")));
    }

    let col_probs = match mode {
        MinNormMode::Sample => Some(exact_leverage(&p.a.transpose())?.to_probabilities()?),
        MinNormMode::Project => None,
    };

    let mut last_err = None;
    for attempt in 0..2u64 {
        let (reduced, recipe) = match mode {
            MinNormMode::Sample => {
                let plan =
                    make_sampling_plan(col_probs.as_ref().unwrap(), c, seed.child(attempt))?;
                (
                    p.a.select_cols(&plan.indices, &plan.scales),
                    SketchSummary { kind: "sampling".into(), in_dim: n, out_dim: c },
                )
            }
            MinNormMode::Project => {
                let op = SketchOperator::srht(n, c, seed.child(attempt))?;
                (apply_sketch(&op, &p.a, Side::Right)?, SketchSummary::of(&op))
            }
        };
        match solve_min_norm_reduced(p, &reduced, Some(recipe)) {
            Ok(report) => return Ok(report),
            Err(e @ Error::Rank(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

/// The minimum-norm estimator given an already-reduced AS:
/// x̃ = Aᵀ·((AS)(AS)ᵀ)⁺·b. Errors with `Rank` if AS lost row rank.
pub fn solve_min_norm_reduced(
    p: &LsProblem,
    reduced: &DenseMatrix,
    recipe: Option<SketchSummary>,
) -> Result<SolveReport> {
    let started = Instant::now();
    let svd = thin_svd(reduced, None)?;
    if svd.numerical_rank() < p.a.rows() {
        return Err(Error::Rank("column sketch lost row rank".into()));
    }
    let mut w = svd.u.tr_mul_vec(&p.b);
    for (wi, s) in w.iter_mut().zip(&svd.singular_values) {
        *wi /= s * s;
    }
    let x = p.a.tr_mul_vec(&svd.u.mul_vec(&w));
    let mut report = SolveReport::from_solution(p, x, started);
    report.sketch_recipe = recipe;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::normal_draws;

    fn random_matrix(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let draws = normal_draws(&mut SeedSpec::from(seed).rng(), m * n);
        DenseMatrix::from_parts(m, n, draws)
    }

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        normal_draws(&mut SeedSpec::new(seed, 77).rng(), n)
    }

    #[test]
    fn exact_on_identity_returns_rhs() {
        let p = LsProblem::new(DenseMatrix::identity(4), vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let r = solve_exact(&p).unwrap();
        assert!(norm2(&sub_vec(&r.x, &p.b)) < 1e-12);
        assert!(r.residual_norm < 1e-12);
        assert!((r.mass_fraction.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_with_orthogonal_rhs_returns_zero() {
        // A = e1 in R^3, b = e2: nothing to fit
        let a = DenseMatrix::new(3, 1, vec![1.0, 0.0, 0.0]).unwrap();
        let p = LsProblem::new(a, vec![0.0, 1.0, 0.0]).unwrap();
        let r = solve_exact(&p).unwrap();
        assert!(r.x[0].abs() < 1e-14);
        assert!((r.residual_norm - 1.0).abs() < 1e-14);
        assert!(r.mass_fraction.unwrap() < 1e-12);
    }

    #[test]
    fn exact_matches_normal_equations_oracle() {
        let a = random_matrix(40, 5, 1);
        let b = random_vec(40, 2);
        let p = LsProblem::new(a.clone(), b.clone()).unwrap();
        let r = solve_exact(&p).unwrap();
        // (AᵀA)⁻¹ Aᵀ b through the pseudoinverse of the gram
        let gram = a.tr_matmul(&a);
        let atb = a.tr_mul_vec(&b);
        let oracle = pinv_apply(&gram, &DenseMatrix::column(&atb)).unwrap().col(0);
        let rel = norm2(&sub_vec(&r.x, &oracle)) / norm2(&oracle);
        assert!(rel < 1e-8, "relative gap {rel}");
    }

    #[test]
    fn sampled_consistent_system_is_solved_exactly() {
        let a = random_matrix(64, 4, 3);
        let y = random_vec(4, 5);
        let b = a.mul_vec(&y);
        let p = LsProblem::new(a, b).unwrap();
        let r = solve_sampled(&p, 16, None, SeedSpec::new(2, 0)).unwrap();
        assert!(r.residual_norm < 1e-10);
        assert!(norm2(&sub_vec(&r.x, &y)) < 1e-9);
    }

    #[test]
    fn sampled_orthonormal_with_uniform_probs_hits_relative_target() {
        let a = thin_qr(&random_matrix(1024, 4, 7)).unwrap().q;
        let b = random_vec(1024, 11);
        let p = LsProblem::new(a, b).unwrap();
        let exact = solve_exact(&p).unwrap();
        let uniform = ProbabilityVector::uniform(1024);
        let mut pass = 0;
        for t in 0..20 {
            let r = solve_sampled(&p, 64, Some(&uniform), SeedSpec::new(300, t))
                .unwrap()
                .with_baseline(&exact);
            if r.relative_objective.unwrap() <= 1.5 {
                pass += 1;
            }
        }
        assert!(pass >= 18, "{pass}/20");
    }

    #[test]
    fn leverage_probs_rescue_a_coherent_problem() {
        // identity block over a small tail: uniform sampling misses the
        // informative rows, leverage sampling keeps them
        let (m, n) = (256usize, 8usize);
        let tail = random_matrix(m - n, n, 13).scale(1e-3);
        let a = DenseMatrix::from_fn(m, n, |i, j| {
            if i < n {
                if i == j { 1.0 } else { 0.0 }
            } else {
                tail.get(i - n, j)
            }
        });
        let mut b = vec![0.0; m];
        for (i, x) in b.iter_mut().enumerate().take(n) {
            *x = 1.0 + i as f64;
        }
        for (i, x) in b.iter_mut().enumerate().skip(n) {
            *x = if i % 2 == 0 { 0.05 } else { -0.05 };
        }
        let p = LsProblem::new(a, b).unwrap();
        let exact = solve_exact(&p).unwrap();

        let r_samples = 48;
        let uniform = ProbabilityVector::uniform(m);
        let mut uniform_fail = 0;
        let mut leverage_pass = 0;
        let trials = 20;
        for t in 0..trials {
            match solve_sampled(&p, r_samples, Some(&uniform), SeedSpec::new(400, t)) {
                Ok(r) => {
                    let r = r.with_baseline(&exact);
                    if r.relative_objective.unwrap_or(f64::INFINITY) > 1.5 {
                        uniform_fail += 1;
                    }
                }
                Err(_) => uniform_fail += 1,
            }
            let r = solve_sampled(&p, r_samples, None, SeedSpec::new(400, t))
                .unwrap()
                .with_baseline(&exact);
            if r.relative_objective.unwrap() <= 1.5 {
                leverage_pass += 1;
            }
        }
        assert!(uniform_fail >= trials / 2, "uniform failed only {uniform_fail}/{trials}");
        assert!(leverage_pass >= 18, "leverage passed only {leverage_pass}/{trials}");
    }

    #[test]
    fn srht_preserves_consistency() {
        let a = random_matrix(100, 6, 17);
        let y = random_vec(6, 19);
        let b = a.mul_vec(&y);
        let p = LsProblem::new(a, b).unwrap();
        let r = solve_srht(&p, 48, SeedSpec::new(5, 0)).unwrap();
        assert!(r.residual_norm < 1e-9, "residual {}", r.residual_norm);
    }

    #[test]
    fn projected_preserves_consistency_and_matches_exact_under_rotation() {
        let a = random_matrix(60, 5, 23);
        let y = random_vec(5, 29);
        let b = a.mul_vec(&y);
        let p = LsProblem::new(a.clone(), b.clone()).unwrap();
        let r = solve_projected(&p, 40, SeedSpec::new(6, 0)).unwrap();
        assert!(r.residual_norm < 1e-9);

        // rotating by any square orthogonal matrix leaves the solution alone
        let q = thin_qr(&random_matrix(60, 60, 31)).unwrap().q;
        let za = q.tr_matmul(&a);
        let zb = q.tr_mul_vec(&b);
        let exact = solve_exact(&p).unwrap();
        let sk = solve_sketched_subproblem(&p, &za, &zb, None).unwrap();
        assert!(norm2(&sub_vec(&sk.x, &exact.x)) < 1e-9);
    }

    #[test]
    fn preconditioned_orthonormal_converges_immediately() {
        let a = thin_qr(&random_matrix(128, 6, 37)).unwrap().q;
        let b = random_vec(128, 41);
        let p = LsProblem::new(a, b).unwrap();
        let r = solve_preconditioned(&p, 48, 1e-12, 50, SeedSpec::new(7, 0)).unwrap();
        assert!(r.iterations.unwrap() <= 8, "{} iterations", r.iterations.unwrap());
        assert!(r.kappa.unwrap() < 2.5);
    }

    #[test]
    fn preconditioned_beats_condition_number() {
        // logspaced spectrum over 1e4
        let (m, n) = (512usize, 8usize);
        let u = thin_qr(&random_matrix(m, n, 43)).unwrap().q;
        let v = thin_qr(&random_matrix(n, n, 47)).unwrap().q;
        let sigma: Vec<f64> =
            (0..n).map(|i| 10f64.powf(-4.0 * i as f64 / (n - 1) as f64)).collect();
        let mut us = u.clone();
        us.scale_cols(&sigma);
        let a = us.matmul(&v.transpose());
        let b = random_vec(m, 53);
        let p = LsProblem::new(a, b).unwrap();

        let exact = solve_exact(&p).unwrap();
        assert!(exact.kappa.unwrap() > 1e3);
        let r = solve_preconditioned(&p, 4 * n, 1e-10, 60, SeedSpec::new(8, 0)).unwrap();
        assert!(r.kappa.unwrap() <= 10.0, "preconditioned kappa {}", r.kappa.unwrap());
        let r = r.with_baseline(&exact);
        assert!(
            r.x_error.unwrap() <= 1e-8 * norm2(&exact.x).max(1.0),
            "x error {}",
            r.x_error.unwrap()
        );
    }

    #[test]
    fn preconditioned_reports_convergence_failure_with_best_iterate() {
        let a = random_matrix(64, 4, 59);
        let b = random_vec(64, 61);
        let p = LsProblem::new(a, b).unwrap();
        match solve_preconditioned(&p, 16, 1e-14, 1, SeedSpec::new(9, 0)) {
            Err(Error::Convergence { best, .. }) => {
                assert_eq!(best.iterations, Some(1));
                assert!(best.residual_norm.is_finite());
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn structural_check_on_identity_sketch() {
        let a = random_matrix(32, 4, 67);
        let b = random_vec(32, 71);
        let p = LsProblem::new(a.clone(), b.clone()).unwrap();
        let check = check_structural(&p, &a, &b).unwrap();
        assert!((check.sigma_min_sq - 1.0).abs() < 1e-10);
        assert!(check.cross_term < 1e-20 * check.residual_sq.max(1.0));
        assert!(check.condition1_ok());
        assert!(check.condition2_ok(0.5));
    }

    #[test]
    fn structural_conditions_imply_the_relative_error_bound() {
        let a = random_matrix(512, 8, 73);
        let b = random_vec(512, 79);
        let p = LsProblem::new(a, b).unwrap();
        let exact = solve_exact(&p).unwrap();
        let probs = exact_leverage(&p.a).unwrap().to_probabilities().unwrap();
        let eps = 0.5;
        let mut held = 0;
        for t in 0..200 {
            let plan = make_sampling_plan(&probs, 384, SeedSpec::new(500, t)).unwrap();
            let za = p.a.select_rows(&plan.indices, &plan.scales);
            let zb = pick_rows(&p.b, &plan.indices, &plan.scales);
            let check = check_structural(&p, &za, &zb).unwrap();
            if !(check.condition1_ok() && check.condition2_ok(eps)) {
                continue;
            }
            held += 1;
            let r = solve_sketched_subproblem(&p, &za, &zb, None)
                .unwrap()
                .with_baseline(&exact);
            let rel = r.relative_objective.unwrap();
            assert!(rel <= (1.0 + eps) * (1.0 + 1e-9), "conditions held but ratio {rel}");
            let gamma = exact.mass_fraction.unwrap();
            let bound = eps.sqrt()
                * exact.kappa.unwrap()
                * (1.0 / (gamma * gamma) - 1.0).sqrt()
                * norm2(&exact.x);
            assert!(r.x_error.unwrap() <= bound * (1.0 + 1e-9));
        }
        assert!(held >= 190, "conditions held on only {held}/200 sketches");
    }

    #[test]
    fn min_norm_identity_block_recovers_minimum_length_solution() {
        // A = [I_m | 0]: minimum-norm solution is (b, 0)
        let (m, n) = (4usize, 12usize);
        let a = DenseMatrix::from_fn(m, n, |i, j| if i == j { 1.0 } else { 0.0 });
        let b = vec![1.0, -2.0, 3.0, 0.5];
        let p = LsProblem::new(a, b.clone()).unwrap();
        // cover the identity block with one unscaled draw per column
        let reduced = p.a.select_cols(&[0, 1, 2, 3], &[1.0; 4]);
        let r = solve_min_norm_reduced(&p, &reduced, None).unwrap();
        for i in 0..m {
            assert!((r.x[i] - b[i]).abs() < 1e-9);
        }
        for i in m..n {
            assert!(r.x[i].abs() < 1e-9);
        }
    }

    #[test]
    fn min_norm_tracks_pseudoinverse_on_random_wide_input() {
        let p = LsProblem::new(random_matrix(8, 256, 83), random_vec(8, 89)).unwrap();
        let exact = solve_min_norm_exact(&p).unwrap();
        for mode in [MinNormMode::Sample, MinNormMode::Project] {
            let mut pass = 0;
            for t in 0..30 {
                let r = solve_min_norm(&p, 128, mode, SeedSpec::new(600 + t, 0)).unwrap();
                let rel = norm2(&sub_vec(&r.x, &exact.x)) / norm2(&exact.x);
                if rel <= 0.5 {
                    pass += 1;
                }
            }
            assert!(pass >= 27, "{mode:?}: {pass}/30 within tolerance");
        }
    }

    #[test]
    fn min_norm_is_scale_homogeneous() {
        let a = random_matrix(6, 64, 97);
        let b = random_vec(6, 101);
        let p1 = LsProblem::new(a.scale(4.0), b.iter().map(|x| 4.0 * x).collect()).unwrap();
        let p2 = LsProblem::new(a, b).unwrap();
        let seed = SeedSpec::new(11, 0);
        let r1 = solve_min_norm(&p1, 32, MinNormMode::Sample, seed).unwrap();
        let r2 = solve_min_norm(&p2, 32, MinNormMode::Sample, seed).unwrap();
        // power-of-two scaling runs the identical float program
        assert_eq!(r1.x, r2.x);
        let p3 = LsProblem::new(p2.a.scale(3.0), p2.b.iter().map(|x| 3.0 * x).collect()).unwrap();
        let r3 = solve_min_norm(&p3, 32, MinNormMode::Sample, seed).unwrap();
        let rel = norm2(&sub_vec(&r3.x, &r2.x)) / norm2(&r2.x);
        assert!(rel < 1e-10, "non-dyadic scaling drifted by {rel}");
    }

    #[test]
    fn min_norm_shape_preconditions() {
        let p = LsProblem::new(random_matrix(8, 4, 1), random_vec(8, 2)).unwrap();
        assert!(solve_min_norm(&p, 6, MinNormMode::Sample, SeedSpec::new(1, 0)).is_err());
        let wide = LsProblem::new(random_matrix(4, 16, 1), random_vec(4, 2)).unwrap();
        assert!(solve_min_norm(&wide, 3, MinNormMode::Sample, SeedSpec::new(1, 0)).is_err());
    }
}
