//! Statistical leverage scores: exact, rank-restricted, and fast randomized
//! approximations, plus effective-resistance scores for graph incidence
//! matrices.
//!
//! The leverage score of row i is the i-th diagonal entry of the projection
//! onto the column space, equivalently the squared i-th row norm of any
//! orthonormal basis for that space. The basis does not matter, only the
//! space does.

use crate::config::tunables;
use crate::error::{Error, Result};
use crate::factor::{thin_qr, thin_svd};
use crate::matrix::DenseMatrix;
use crate::rng::{normal_draws, SeedSpec};
use crate::sketch::{apply_sketch, ProbabilityVector, Side, SketchOperator};
use serde::{Deserialize, Serialize};

/// Per-row leverage scores with their rank context.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeverageProfile {
    /// One score per row, each in [0, 1].
    pub scores: Vec<f64>,
    /// The rank of the projector the scores came from; the scores sum to it.
    pub rank_context: usize,
    /// Largest score.
    pub coherence: f64,
    /// Whether `scores` have been divided by `rank_context` (a distribution
    /// rather than raw scores).
    pub normalized: bool,
}

impl LeverageProfile {
    fn from_scores(scores: Vec<f64>, rank_context: usize) -> Self {
        let coherence = scores.iter().fold(0.0f64, |m, &s| m.max(s));
        LeverageProfile { scores, rank_context, coherence, normalized: false }
    }

    /// The scores as an importance-sampling distribution (scores divided by
    /// the rank context, then normalized exactly).
    pub fn to_probabilities(&self) -> Result<ProbabilityVector> {
        ProbabilityVector::from_weights(&self.scores)
    }
}

fn leverage_of_orthobasis(u: &DenseMatrix, rank_context: usize) -> LeverageProfile {
    LeverageProfile::from_scores(u.row_norms_sq(), rank_context)
}

/// Exact leverage scores of the rows of a tall matrix.
///
/// Full-rank inputs use the QR basis; rank-deficient inputs fall back to the
/// SVD so the scores describe the actual range, not an inflated one.
pub fn exact_leverage(a: &DenseMatrix) -> Result<LeverageProfile> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(Error::shape(format!(
            "exact_leverage needs m >= n, got {m}x{n}; transpose for column scores"
        )));
    }
    let qr = thin_qr(a)?;
    if qr.is_full_rank() {
        return Ok(leverage_of_orthobasis(&qr.q, n));
    }
    let svd = thin_svd(a, None)?;
    let rank = svd.numerical_rank();
    if rank == 0 {
        return Err(Error::Rank("zero matrix has no leverage scores".into()));
    }
    Ok(leverage_of_orthobasis(&svd.u.take_cols(rank), rank))
}

/// Leverage scores relative to the dominant rank-k subspace.
pub fn rank_k_leverage(a: &DenseMatrix, k: usize) -> Result<LeverageProfile> {
    let svd = thin_svd(a, None)?;
    let rank = svd.numerical_rank();
    if k == 0 || k > rank {
        return Err(Error::Rank(format!(
            "rank context k = {k} outside [1, {rank}]; beyond the numerical rank the \
             dominant subspace is not well defined"
        )));
    }
    Ok(leverage_of_orthobasis(&svd.u.take_cols(k), k))
}

/// Randomized approximation to every leverage score of a very tall matrix,
/// using the crate-default sketch sizes for target accuracy `eps`.
pub fn fast_leverage(a: &DenseMatrix, eps: f64, seed: SeedSpec) -> Result<LeverageProfile> {
    let n = a.cols() as f64;
    let m = a.rows() as f64;
    let t = tunables();
    let r1 = (t.fast_lev_c1 * n * n.max(2.0).ln() / eps).ceil() as usize;
    let r2 = (t.fast_lev_c2 * m.ln() / (eps * eps)).ceil() as usize;
    fast_leverage_detailed(a, eps, r1, r2, seed)
}

/// [`fast_leverage`] with explicit sketch sizes.
///
/// Three steps: (1) compress the rows with an SRHT of `r1` rows, (2) form the
/// map X = A·(Ω₁A)⁺·Ω₂ where Ω₂ is an r1×r2 Gaussian projection, (3) read the
/// approximate score of row i off as the squared i-th row norm of X. The raw
/// norms are rescaled once at the end so they sum to the rank context, which
/// cancels the common scale fluctuation of the sketch.
pub fn fast_leverage_detailed(
    a: &DenseMatrix,
    eps: f64,
    r1: usize,
    r2: usize,
    seed: SeedSpec,
) -> Result<LeverageProfile> {
    let (m, n) = (a.rows(), a.cols());
    if m < 4 * n {
        return Err(Error::Precondition(format!(
            "fast_leverage expects m >= 4n (strongly rectangular), got {m}x{n}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Precondition(format!("eps = {eps} outside (0, 1)")));
    }
    let padded = m.next_power_of_two();
    let mut r1 = r1.clamp(2 * n, padded);
    let r2 = r2.max(1);

    // The first-stage sketch must keep rank n; double r1 and redraw on the
    // rare rank collapse.
    let mut compressed_svd = None;
    for attempt in 0..3u64 {
        let op = SketchOperator::srht(m, r1, seed.child(attempt))?;
        let compressed = apply_sketch(&op, a, Side::Left)?;
        let svd = thin_svd(&compressed, None)?;
        if svd.numerical_rank() == n {
            compressed_svd = Some(svd);
            break;
        }
        r1 = (r1 * 2).min(padded);
    }
    let svd = compressed_svd
        .ok_or_else(|| Error::SketchFailure("row sketch kept losing rank".into()))?;

    // X = A·(Ω₁A)⁺·Ω₂ = (A·V·Σ⁻¹)·(ŨᵀΩ₂); associate right-to-left so the
    // big m×r1 intermediate is never formed.
    let mut v = svd.vt.transpose();
    let inv_sigma: Vec<f64> = svd.singular_values.iter().map(|s| 1.0 / s).collect();
    v.scale_cols(&inv_sigma);
    let mut rng = seed.child(3).rng();
    let scale = 1.0 / (r2 as f64).sqrt();
    let omega2 = DenseMatrix::from_parts(
        r1,
        r2,
        normal_draws(&mut rng, r1 * r2).iter().map(|x| x * scale).collect(),
    );
    let w = svd.u.tr_matmul(&omega2);
    let x = a.matmul(&v).matmul(&w);

    let mut scores = x.row_norms_sq();
    let total: f64 = scores.iter().sum();
    if total > 0.0 {
        let correction = n as f64 / total;
        for s in scores.iter_mut() {
            *s = (*s * correction).min(1.0);
        }
    }
    Ok(LeverageProfile::from_scores(scores, n))
}

/// Indices whose score exceeds `multiplier` times the average score
/// (rank_context / m), sorted by descending score.
pub fn flag_outliers(prof: &LeverageProfile, multiplier: f64) -> Vec<usize> {
    let m = prof.scores.len();
    let threshold = multiplier * prof.rank_context as f64 / m as f64;
    let mut flagged: Vec<usize> =
        (0..m).filter(|&i| prof.scores[i] > threshold).collect();
    flagged.sort_by(|&i, &j| prof.scores[j].partial_cmp(&prof.scores[i]).unwrap());
    flagged
}

/// An undirected weighted graph given as an edge list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedGraph {
    num_nodes: usize,
    edges: Vec<(usize, usize, f64)>,
    connected: bool,
}

impl WeightedGraph {
    pub fn new(num_nodes: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::Domain("graph needs at least one node".into()));
        }
        for &(u, v, w) in &edges {
            if u == v {
                return Err(Error::Domain(format!("self-loop at node {u}")));
            }
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::Domain(format!("edge ({u}, {v}) out of range")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Domain(format!("edge weight {w} must be positive")));
            }
        }
        let connected = is_connected(num_nodes, &edges);
        Ok(WeightedGraph { num_nodes, edges, connected })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// Weighted signed incidence matrix Φ = W^(1/2)·B, one row per edge.
    /// Orientation is lexicographic: +√w at the smaller endpoint, −√w at the
    /// larger. Leverage is orientation-invariant; fixing one makes output
    /// reproducible.
    pub fn incidence(&self) -> DenseMatrix {
        let mut phi = DenseMatrix::zeros(self.edges.len(), self.num_nodes);
        for (e, &(u, v, w)) in self.edges.iter().enumerate() {
            let (lo, hi) = if u < v { (u, v) } else { (v, u) };
            let s = w.sqrt();
            phi.set(e, lo, s);
            phi.set(e, hi, -s);
        }
        phi
    }
}

fn is_connected(num_nodes: usize, edges: &[(usize, usize, f64)]) -> bool {
    let mut parent: Vec<usize> = (0..num_nodes).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(u, v, _) in edges {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        parent[ru] = rv;
    }
    let root = find(&mut parent, 0);
    (0..num_nodes).all(|x| find(&mut parent, x) == root)
}

/// Leverage scores of the edge rows of the weighted incidence matrix; these
/// equal the weighted effective resistances w_e·R_e of the edges. The rank
/// context is num_nodes − 1.
pub fn graph_edge_leverage(g: &WeightedGraph) -> Result<LeverageProfile> {
    if g.edges.is_empty() {
        return Err(Error::Domain("graph has no edges".into()));
    }
    if !g.connected {
        // rank context is ambiguous across components
        return Err(Error::Disconnected);
    }
    let phi = g.incidence();
    let svd = thin_svd(&phi, None)?;
    let rank = svd.numerical_rank();
    debug_assert_eq!(rank, g.num_nodes - 1);
    Ok(leverage_of_orthobasis(&svd.u.take_cols(rank), rank))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::pinv_apply;

    fn random_matrix(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let draws = normal_draws(&mut SeedSpec::from(seed).rng(), m * n);
        DenseMatrix::from_parts(m, n, draws)
    }

    /// Hat-matrix diagonal diag(A (AᵀA)⁺ Aᵀ), the textbook route.
    fn hat_diagonal(a: &DenseMatrix) -> Vec<f64> {
        let gram = a.tr_matmul(a);
        let g_pinv_at = pinv_apply(&gram, &a.transpose()).unwrap();
        let h = a.matmul(&g_pinv_at);
        (0..h.rows()).map(|i| h.get(i, i)).collect()
    }

    #[test]
    fn identity_rows_all_have_full_leverage() {
        let prof = exact_leverage(&DenseMatrix::identity(4)).unwrap();
        assert!(prof.scores.iter().all(|&s| (s - 1.0).abs() < 1e-12));
        assert_eq!(prof.rank_context, 4);
        assert!((prof.coherence - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hadamard_columns_have_uniform_leverage() {
        // n columns of a 2n x 2n normalized Hadamard matrix: every row norm
        // squared is n/(2n) = 1/2
        let m = 8usize;
        let h = DenseMatrix::from_fn(m, 4, |i, j| {
            let sign = if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            sign / (m as f64).sqrt()
        });
        let prof = exact_leverage(&h).unwrap();
        assert!(prof.scores.iter().all(|&s| (s - 0.5).abs() < 1e-12));
    }

    #[test]
    fn exact_leverage_matches_hat_matrix() {
        let a = random_matrix(9, 3, 11);
        let prof = exact_leverage(&a).unwrap();
        for (got, want) in prof.scores.iter().zip(hat_diagonal(&a)) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
        let trace: f64 = prof.scores.iter().sum();
        assert!((trace - 3.0).abs() < 1e-8);
    }

    #[test]
    fn rank_deficient_input_uses_actual_range() {
        // two copies of the same column: rank 1
        let mut a = DenseMatrix::zeros(5, 2);
        for i in 0..5 {
            let v = (i + 1) as f64;
            a.set(i, 0, v);
            a.set(i, 1, 2.0 * v);
        }
        let prof = exact_leverage(&a).unwrap();
        assert_eq!(prof.rank_context, 1);
        let trace: f64 = prof.scores.iter().sum();
        assert!((trace - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rank_k_consistent_with_exact_at_full_rank() {
        let a = random_matrix(12, 4, 3);
        let full = exact_leverage(&a).unwrap();
        let k4 = rank_k_leverage(&a, 4).unwrap();
        for (x, y) in full.scores.iter().zip(&k4.scores) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn rank_one_context_of_spread_diagonal() {
        let a = DenseMatrix::diag(&[5.0, 1.0]);
        let prof = rank_k_leverage(&a, 1).unwrap();
        assert!((prof.scores[0] - 1.0).abs() < 1e-12);
        assert!(prof.scores[1].abs() < 1e-12);
    }

    #[test]
    fn rank_k_matches_truncated_hat_matrix() {
        let a = random_matrix(20, 6, 17);
        let k = 3;
        let svd = thin_svd(&a, Some(k)).unwrap();
        let mut us = svd.u.clone();
        us.scale_cols(&svd.singular_values);
        let a_k = us.matmul(&svd.vt);
        let prof = rank_k_leverage(&a, k).unwrap();
        for (got, want) in prof.scores.iter().zip(hat_diagonal(&a_k)) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn rank_k_beyond_numerical_rank_is_an_error() {
        let mut a = DenseMatrix::zeros(6, 3);
        for i in 0..6 {
            a.set(i, 0, 1.0 + i as f64);
        }
        assert!(rank_k_leverage(&a, 2).is_err());
    }

    #[test]
    fn fast_leverage_tracks_exact_on_orthonormal_input() {
        let q = thin_qr(&random_matrix(512, 8, 21)).unwrap().q;
        let exact = exact_leverage(&q).unwrap();
        let mut passes = 0;
        for t in 0..20 {
            let approx = fast_leverage(&q, 0.5, SeedSpec::new(100 + t, 0)).unwrap();
            let worst = exact
                .scores
                .iter()
                .zip(&approx.scores)
                .map(|(e, a)| (e - a).abs() / e)
                .fold(0.0f64, f64::max);
            if worst <= 0.5 {
                passes += 1;
            }
        }
        assert!(passes >= 17, "only {passes}/20 seeds within eps");
    }

    #[test]
    fn fast_leverage_finds_a_dominant_row() {
        let mut a = random_matrix(512, 8, 33);
        for j in 0..8 {
            a.set(0, j, 1000.0 * if j == 0 { 0.6 } else { 0.1 });
        }
        let exact = exact_leverage(&a).unwrap();
        let approx = fast_leverage(&a, 0.5, SeedSpec::new(7, 0)).unwrap();
        let rel = (exact.coherence - approx.coherence).abs() / exact.coherence;
        assert!(rel <= 0.5, "coherence error {rel}");
    }

    #[test]
    fn fast_leverage_is_exactly_invariant_under_doubling() {
        let a = random_matrix(128, 4, 5);
        let seed = SeedSpec::new(9, 9);
        let x = fast_leverage(&a, 0.5, seed).unwrap();
        let y = fast_leverage(&a.scale(2.0), 0.5, seed).unwrap();
        assert_eq!(x.scores, y.scores);
    }

    #[test]
    fn fast_leverage_rejects_squarish_input() {
        let a = random_matrix(10, 4, 2);
        assert!(fast_leverage(&a, 0.5, SeedSpec::new(1, 0)).is_err());
    }

    #[test]
    fn outlier_flagging_threshold_arithmetic() {
        let mut scores = vec![1.0 / 9.0; 10];
        scores[0] = 1.0;
        let prof = LeverageProfile::from_scores(scores, 2);
        assert_eq!(flag_outliers(&prof, 2.0), vec![0]);

        let uniform = LeverageProfile::from_scores(vec![0.3; 10], 3);
        assert!(flag_outliers(&uniform, 2.0).is_empty());
    }

    #[test]
    fn extreme_design_point_is_flagged() {
        // straight-line fit with one far-out abscissa
        let xs = [1.0, 1.1, 0.9, 1.2, 1.05, 0.95, 1.15, 0.85, 1.0, 10.0];
        let a = DenseMatrix::from_fn(10, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
        let prof = exact_leverage(&a).unwrap();
        let flagged = flag_outliers(&prof, 2.0);
        let hat = hat_diagonal(&a);
        let argmax = (0..10).max_by(|&i, &j| hat[i].partial_cmp(&hat[j]).unwrap()).unwrap();
        assert_eq!(flagged.first(), Some(&argmax));
        assert_eq!(argmax, 9);
    }

    #[test]
    fn single_edge_has_unit_leverage() {
        let g = WeightedGraph::new(2, vec![(0, 1, 2.5)]).unwrap();
        let prof = graph_edge_leverage(&g).unwrap();
        assert_eq!(prof.rank_context, 1);
        assert!((prof.scores[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_edges_split_leverage_evenly() {
        let g = WeightedGraph::new(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let prof = graph_edge_leverage(&g).unwrap();
        assert_eq!(prof.rank_context, 2);
        for &s in &prof.scores {
            assert!((s - 2.0 / 3.0).abs() < 1e-10, "score {s}");
        }
    }

    #[test]
    fn path_edges_are_bridges_with_unit_leverage() {
        let g = WeightedGraph::new(3, vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let prof = graph_edge_leverage(&g).unwrap();
        for &s in &prof.scores {
            assert!((s - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let g = WeightedGraph::new(4, vec![(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert!(!g.is_connected());
        assert!(matches!(graph_edge_leverage(&g), Err(Error::Disconnected)));
    }

    #[test]
    fn graph_validation_rejects_bad_edges() {
        assert!(WeightedGraph::new(3, vec![(0, 0, 1.0)]).is_err());
        assert!(WeightedGraph::new(3, vec![(0, 5, 1.0)]).is_err());
        assert!(WeightedGraph::new(3, vec![(0, 1, 0.0)]).is_err());
        assert!(WeightedGraph::new(3, vec![(0, 1, -2.0)]).is_err());
    }
}
