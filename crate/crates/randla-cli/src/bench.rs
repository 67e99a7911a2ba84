//! Benchmark suites. The acceptance suite turns every documented error-bound
//! target into a pass/fail check at desk scale; the scaling suite emits
//! median/quartile sweep tables. Everything is a pure function of the run
//! seed, so two runs with the same seed produce byte-identical bodies.

use randla::factor::{thin_qr, thin_svd};
use randla::gen::{builtin_graph, generate, GenKind, GenSpec, LeverageShape, BUILTIN_GRAPHS};
use randla::leverage::{exact_leverage, fast_leverage, graph_edge_leverage};
use randla::lowrank::{
    additive_sample, cssp, range_find, relative_cx, structural_bound_eval, RangeMethod,
};
use randla::lstsq::{
    check_structural, solve_exact, solve_preconditioned, solve_sampled, solve_sketched_subproblem,
    solve_projected, solve_srht, LsProblem, SolveReport,
};
use randla::matmul::{amm_probs_optimal, approx_matmul};
use randla::matrix::{dot, norm2, sub_vec, DenseMatrix};
use randla::rng::{normal_draws, SeedSpec};
use randla::sketch::{make_sampling_plan, ProbabilityVector};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub criterion: usize,
    pub name: &'static str,
    pub pass: bool,
    pub details: String,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}

fn random_matrix(m: usize, n: usize, seed: SeedSpec) -> DenseMatrix {
    DenseMatrix::new(m, n, normal_draws(&mut seed.rng(), m * n)).expect("gaussian draws are finite")
}

fn logspace(decades: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| 10f64.powf(-decades * i as f64 / (count.max(2) - 1) as f64))
        .collect()
}

/// Right-hand side with a pinned in-range mass fraction gamma.
fn rhs_with_mass_fraction(a: &DenseMatrix, gamma: f64, seed: SeedSpec) -> Vec<f64> {
    let q = thin_qr(a).expect("fixture is tall").q;
    let x0 = normal_draws(&mut seed.child(0).rng(), a.cols());
    let ax = a.mul_vec(&x0);
    let ax_norm = norm2(&ax);
    let in_range: Vec<f64> = ax.iter().map(|v| v / ax_norm).collect();

    let w0 = normal_draws(&mut seed.child(1).rng(), a.rows());
    let qtw = q.tr_mul_vec(&w0);
    let mut out_range = sub_vec(&w0, &q.mul_vec(&qtw));
    let w_norm = norm2(&out_range);
    for v in out_range.iter_mut() {
        *v /= w_norm;
    }

    let out_scale = (1.0 - gamma * gamma).sqrt();
    in_range
        .iter()
        .zip(&out_range)
        .map(|(u, w)| gamma * u + out_scale * w)
        .collect()
}

fn amm_fixture(seed: SeedSpec) -> (DenseMatrix, DenseMatrix) {
    let a = random_matrix(30, 100, seed.child(101));
    let b = a.transpose();
    (a, b)
}

fn criterion_1(seed: SeedSpec) -> CriterionResult {
    let (a, b) = amm_fixture(seed);
    let probs = amm_probs_optimal(&a, &b).unwrap();
    let median_at = |c: usize, stream: u64| {
        let mut errs: Vec<f64> = (0..51u64)
            .into_par_iter()
            .map(|t| {
                approx_matmul(&a, &b, c, &probs, seed.child(stream).child(t))
                    .unwrap()
                    .frobenius_error_vs
                    .unwrap()
            })
            .collect();
        median(&mut errs)
    };
    let m100 = median_at(100, 1);
    let m400 = median_at(400, 2);
    let ratio = m400 / m100;
    CriterionResult {
        criterion: 1,
        name: "amm-error-scaling",
        pass: (0.35..=0.75).contains(&ratio),
        details: format!("median(c=400)/median(c=100) = {ratio:.4} (target [0.35, 0.75])"),
    }
}

fn criterion_2(seed: SeedSpec) -> CriterionResult {
    let (a, b) = amm_fixture(seed);
    let probs = amm_probs_optimal(&a, &b).unwrap();
    let c = 100usize;
    let bound = 10.0 / (c as f64).sqrt() * a.frobenius_norm() * b.frobenius_norm();
    let pass_count: usize = (0..100u64)
        .into_par_iter()
        .map(|t| {
            let err = approx_matmul(&a, &b, c, &probs, seed.child(3).child(t))
                .unwrap()
                .frobenius_error_vs
                .unwrap();
            usize::from(err <= bound)
        })
        .sum();
    CriterionResult {
        criterion: 2,
        name: "amm-bound-envelope",
        pass: pass_count >= 99,
        details: format!("{pass_count}/100 seeds within (10/sqrt(c))*|A|F*|B|F"),
    }
}

fn criterion_3(seed: SeedSpec) -> CriterionResult {
    let mut worst_gap = 0.0f64;
    let mut worst_trace = 0.0f64;
    for t in 0..20u64 {
        let (m, n) = (9 + (t as usize % 12) * 4, 3 + (t as usize % 5));
        let a = random_matrix(m, n, seed.child(300 + t));
        let prof = exact_leverage(&a).unwrap();

        // hat-matrix diagonal through the normal-equations pseudoinverse
        let gram = a.tr_matmul(&a);
        let g_pinv_at = randla::factor::pinv_apply(&gram, &a.transpose()).unwrap();
        let h = a.matmul(&g_pinv_at);
        for i in 0..m {
            worst_gap = worst_gap.max((h.get(i, i) - prof.scores[i]).abs());
        }
        let trace: f64 = prof.scores.iter().sum();
        worst_trace = worst_trace.max((trace - prof.rank_context as f64).abs());
    }
    // rank-deficient fixtures: duplicated columns
    for t in 0..3u64 {
        let base = random_matrix(12, 3, seed.child(340 + t));
        let dup = DenseMatrix::from_fn(12, 5, |i, j| {
            if j < 3 {
                base.get(i, j)
            } else {
                2.0 * base.get(i, j - 3)
            }
        });
        let prof = exact_leverage(&dup).unwrap();
        let trace: f64 = prof.scores.iter().sum();
        worst_trace = worst_trace.max((trace - prof.rank_context as f64).abs());
    }
    CriterionResult {
        criterion: 3,
        name: "leverage-exactness",
        pass: worst_gap <= 1e-10 && worst_trace <= 1e-8,
        details: format!("worst hat gap {worst_gap:.3e} (<=1e-10), worst trace gap {worst_trace:.3e} (<=1e-8)"),
    }
}

fn criterion_4(seed: SeedSpec) -> CriterionResult {
    let eps = 0.5;
    let mut all_pass = true;
    let mut details = Vec::new();
    for (label, profile) in [
        ("uniform", LeverageShape::Uniform),
        ("moderate", LeverageShape::Moderate),
        ("extreme", LeverageShape::Extreme),
    ] {
        let spec = GenSpec {
            m: 512,
            n: 8,
            kind: GenKind::LeverageProfile { profile, sigmas: None },
            seed: seed.child(400),
        };
        let a = generate(&spec).unwrap();
        let exact = exact_leverage(&a).unwrap();
        let pass_count: usize = (0..100u64)
            .into_par_iter()
            .map(|t| {
                let approx = fast_leverage(&a, eps, seed.child(410).child(t)).unwrap();
                let worst = exact
                    .scores
                    .iter()
                    .zip(&approx.scores)
                    .map(|(e, g)| (e - g).abs() / e)
                    .fold(0.0f64, f64::max);
                usize::from(worst <= eps)
            })
            .sum();
        all_pass &= pass_count >= 90;
        details.push(format!("{label} {pass_count}/100"));
    }
    CriterionResult {
        criterion: 4,
        name: "fast-leverage-accuracy",
        pass: all_pass,
        details: format!("max rel err <= 0.5 in {} (target >=90 each)", details.join(", ")),
    }
}

struct LsTrial {
    relative_objective: f64,
    x_error: f64,
}

fn ls_fixture(seed: SeedSpec, coherent: bool) -> (LsProblem, SolveReport) {
    let (m, n) = (1024usize, 16usize);
    let a = if coherent {
        generate(&GenSpec {
            m,
            n,
            kind: GenKind::LeverageProfile { profile: LeverageShape::Extreme, sigmas: None },
            seed: seed.child(500),
        })
        .unwrap()
    } else {
        random_matrix(m, n, seed.child(501))
    };
    let b = rhs_with_mass_fraction(&a, 0.9, seed.child(502));
    let p = LsProblem::new(a, b).unwrap();
    let exact = solve_exact(&p).unwrap();
    (p, exact)
}

fn criteria_5_and_6(seed: SeedSpec) -> (CriterionResult, CriterionResult) {
    let (p, exact) = ls_fixture(seed, false);
    let eps_default = 0.5;
    let n = p.a.cols();
    let r_sampled = randla::lstsq::default_sample_size(n, eps_default);
    let r_srht = randla::lstsq::default_srht_size(p.a.rows(), n);
    let l_proj = randla::lstsq::default_projection_size(n, eps_default);

    let run = |algo: usize, t: u64| -> Option<LsTrial> {
        let s = seed.child(510 + algo as u64).child(t);
        let report = match algo {
            0 => solve_sampled(&p, r_sampled, None, s),
            1 => solve_srht(&p, r_srht, s),
            _ => solve_projected(&p, l_proj, s),
        }
        .ok()?;
        let report = report.with_baseline(&exact);
        Some(LsTrial {
            relative_objective: report.relative_objective?,
            x_error: report.x_error?,
        })
    };

    let mut pass_counts = [0usize; 3];
    let mut cert_violations = 0usize;
    let kappa = exact.kappa.unwrap();
    let gamma = exact.mass_fraction.unwrap();
    let x_norm = norm2(&exact.x);
    let trials: Vec<(usize, Option<LsTrial>)> = (0..3usize)
        .flat_map(|algo| (0..100u64).map(move |t| (algo, t)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(algo, t)| (algo, run(algo, t)))
        .collect();
    for (algo, trial) in trials {
        let Some(trial) = trial else { continue };
        if trial.relative_objective <= 1.5 {
            pass_counts[algo] += 1;
            // certificate: x error within sqrt(realized excess)*kappa*sqrt(1/g^2-1)*|x|
            let eps_realized = (trial.relative_objective.powi(2) - 1.0).max(0.0);
            let bound = eps_realized.sqrt() * kappa * (1.0 / (gamma * gamma) - 1.0).sqrt() * x_norm;
            if trial.x_error > bound * (1.0 + 1e-9) {
                cert_violations += 1;
            }
        }
    }

    // negative control: uniform row sampling on the coherent fixture
    let (pc, exact_c) = ls_fixture(seed, true);
    let uniform = ProbabilityVector::uniform(pc.a.rows());
    let violations: usize = (0..100u64)
        .into_par_iter()
        .map(|t| {
            let s = seed.child(514).child(t);
            match solve_sampled(&pc, r_sampled, Some(&uniform), s) {
                Ok(r) => {
                    let r = r.with_baseline(&exact_c);
                    usize::from(r.relative_objective.unwrap_or(f64::INFINITY) > 1.5)
                }
                Err(_) => 1,
            }
        })
        .sum();

    let pass5 = pass_counts.iter().all(|&c| c >= 90) && violations >= 50;
    let c5 = CriterionResult {
        criterion: 5,
        name: "ls-relative-error",
        pass: pass5,
        details: format!(
            "sampled {}/100, srht {}/100, projected {}/100 (each >=90); uniform-on-coherent violations {violations}/100 (>=50)",
            pass_counts[0], pass_counts[1], pass_counts[2]
        ),
    };
    let c6 = CriterionResult {
        criterion: 6,
        name: "ls-certificate-bound",
        pass: cert_violations == 0,
        details: format!("{cert_violations} certificate violations across all passing trials (target 0)"),
    };
    (c5, c6)
}

fn criterion_7(seed: SeedSpec) -> CriterionResult {
    let (m, n) = (512usize, 8usize);
    let a = random_matrix(m, n, seed.child(700));
    let b = rhs_with_mass_fraction(&a, 0.9, seed.child(701));
    let p = LsProblem::new(a, b).unwrap();
    let exact = solve_exact(&p).unwrap();
    let probs = exact_leverage(&p.a).unwrap().to_probabilities().unwrap();
    let eps = 0.5;
    let r = 266usize;
    let kappa = exact.kappa.unwrap();
    let gamma = exact.mass_fraction.unwrap();
    let x_norm = norm2(&exact.x);

    let outcomes: Vec<(bool, bool)> = (0..1000u64)
        .into_par_iter()
        .map(|t| {
            let plan = make_sampling_plan(&probs, r, seed.child(702).child(t)).unwrap();
            let za = p.a.select_rows(&plan.indices, &plan.scales);
            let zb: Vec<f64> =
                plan.indices.iter().zip(&plan.scales).map(|(&i, &s)| p.b[i] * s).collect();
            let check = check_structural(&p, &za, &zb).unwrap();
            let held = check.condition1_ok() && check.condition2_ok(eps);
            if !held {
                return (false, true);
            }
            let bounds_ok = match solve_sketched_subproblem(&p, &za, &zb, None) {
                Ok(rep) => {
                    let rep = rep.with_baseline(&exact);
                    let rel = rep.relative_objective.unwrap();
                    let x_bound =
                        eps.sqrt() * kappa * (1.0 / (gamma * gamma) - 1.0).sqrt() * x_norm;
                    rel <= (1.0 + eps) * (1.0 + 1e-9)
                        && rep.x_error.unwrap() <= x_bound * (1.0 + 1e-9)
                }
                Err(_) => false,
            };
            (true, bounds_ok)
        })
        .collect();

    let held = outcomes.iter().filter(|(h, _)| *h).count();
    let counterexamples = outcomes.iter().filter(|(h, ok)| *h && !ok).count();
    CriterionResult {
        criterion: 7,
        name: "structural-implication",
        pass: counterexamples == 0 && held > 0,
        details: format!(
            "conditions held on {held}/1000 sketches, {counterexamples} counterexamples (target 0)"
        ),
    }
}

fn criterion_8(seed: SeedSpec) -> CriterionResult {
    let (m, n) = (4096usize, 32usize);
    let l = 4 * n;
    let mut all_pass = true;
    let mut med_iters = Vec::new();
    let mut details = Vec::new();
    for (i, decades) in [2.0f64, 4.0, 6.0].iter().enumerate() {
        let spec = GenSpec {
            m,
            n,
            kind: GenKind::LowrankNoise { sigmas: logspace(*decades, n), noise: 0.0 },
            seed: seed.child(800 + i as u64),
        };
        let a = generate(&spec).unwrap();
        let b = rhs_with_mass_fraction(&a, 0.9, seed.child(810 + i as u64));
        let p = LsProblem::new(a, b).unwrap();
        let results: Vec<(f64, usize)> = (0..100u64)
            .into_par_iter()
            .map(|t| {
                let r = solve_preconditioned(&p, l, 1e-10, 200, seed.child(820 + i as u64).child(t))
                    .unwrap();
                (r.kappa.unwrap(), r.iterations.unwrap())
            })
            .collect();
        let kappa_ok = results.iter().filter(|(k, _)| *k <= 10.0).count();
        let mut iters: Vec<f64> = results.iter().map(|(_, it)| *it as f64).collect();
        let med = median(&mut iters);
        med_iters.push(med);
        all_pass &= kappa_ok >= 95;
        details.push(format!("kappa(A)=1e{decades:.0}: kappa(AR^-1)<=10 in {kappa_ok}/100, median iters {med}"));
    }
    let spread = med_iters.iter().cloned().fold(0.0f64, f64::max)
        / med_iters.iter().cloned().fold(f64::INFINITY, f64::min);
    all_pass &= spread <= 2.0;
    CriterionResult {
        criterion: 8,
        name: "sketch-and-precondition",
        pass: all_pass,
        details: format!("{}; iteration spread {spread:.3} (<=2)", details.join("; ")),
    }
}

/// Rank-k signal whose k-th direction hides in one small-norm column.
fn hidden_direction_fixture(m: usize, n: usize, k: usize, seed: SeedSpec) -> DenseMatrix {
    let basis = thin_qr(&random_matrix(m, k, seed.child(0))).unwrap().q;
    let coeffs = random_matrix(k - 1, n - 1, seed.child(1));
    let mut a = DenseMatrix::zeros(m, n);
    for j in 0..n - 1 {
        for i in 0..m {
            let mut acc = 0.0;
            for t in 0..k - 1 {
                acc += basis.get(i, t) * coeffs.get(t, j);
            }
            a.set(i, j, acc);
        }
    }
    for i in 0..m {
        a.set(i, n - 1, 0.05 * basis.get(i, k - 1));
    }
    a.add(&random_matrix(m, n, seed.child(2)).scale(1e-4))
}

fn criterion_9(seed: SeedSpec) -> CriterionResult {
    let k = 6usize;
    let c = (4.0 * k as f64 * (k as f64).ln() / 0.25).ceil() as usize;
    let spec = GenSpec {
        m: 60,
        n: 300,
        kind: GenKind::LowrankNoise { sigmas: logspace(3.0, 60), noise: 0.0 },
        seed: seed.child(900),
    };
    let a = generate(&spec).unwrap();
    let pass_count: usize = (0..100u64)
        .into_par_iter()
        .map(|t| {
            let (_, err) = relative_cx(&a, k, c, seed.child(901).child(t), None).unwrap();
            usize::from(err.ratio_frob <= 1.5)
        })
        .sum();

    // paired medians on the hidden-direction construction
    let k_adv = 4usize;
    let c_adv = (4.0 * k_adv as f64 * (k_adv as f64).ln() / 0.25).ceil() as usize;
    let adv = hidden_direction_fixture(60, 100, k_adv, seed.child(902));
    let ratios: Vec<(f64, f64)> = (0..50u64)
        .into_par_iter()
        .map(|t| {
            let (_, add_err) = additive_sample(&adv, k_adv, c_adv, seed.child(903).child(t)).unwrap();
            let (_, cx_err) = relative_cx(&adv, k_adv, c_adv, seed.child(904).child(t), None).unwrap();
            (add_err.ratio_frob, cx_err.ratio_frob)
        })
        .collect();
    let mut add: Vec<f64> = ratios.iter().map(|r| r.0).collect();
    let mut cx: Vec<f64> = ratios.iter().map(|r| r.1).collect();
    let (add_med, cx_med) = (median(&mut add), median(&mut cx));

    CriterionResult {
        criterion: 9,
        name: "relative-error-cx",
        pass: pass_count >= 90 && add_med >= 2.0 * cx_med,
        details: format!(
            "ratio<=1.5 in {pass_count}/100 (>=90); hidden-direction medians: norm-sampling {add_med:.3} vs subspace-sampling {cx_med:.3} (>=2x)"
        ),
    }
}

fn criterion_10(seed: SeedSpec) -> CriterionResult {
    let k = 5usize;
    let spec = GenSpec {
        m: 40,
        n: 100,
        kind: GenKind::LowrankNoise { sigmas: logspace(2.0, 40), noise: 0.0 },
        seed: seed.child(1000),
    };
    let a = generate(&spec).unwrap();
    let bound = 4.0 * k as f64 * ((k + 1) as f64).ln().sqrt();
    let outcomes: Vec<(bool, bool)> = (0..100u64)
        .into_par_iter()
        .map(|t| {
            let (sel, err) = cssp(&a, k, None, seed.child(1001).child(t)).unwrap();
            let mut uniq = sel.indices.clone();
            uniq.sort_unstable();
            uniq.dedup();
            (uniq.len() == k, err.ratio_frob <= bound)
        })
        .collect();
    let distinct_ok = outcomes.iter().all(|(d, _)| *d);
    let ratio_count = outcomes.iter().filter(|(_, r)| *r).count();

    // explicit-Z subspace inequality sweep, both norms, zero violations
    let fixture = GenSpec {
        m: 30,
        n: 40,
        kind: GenKind::LowrankNoise { sigmas: logspace(2.0, 12), noise: 1e-8 },
        seed: seed.child(1002),
    };
    let small = generate(&fixture).unwrap();
    let kk = 3usize;
    let mut violations = 0usize;
    let svd = thin_svd(&small, Some(kk)).unwrap();
    let slack_of = |rhs: f64| 1e-9 * (1.0 + rhs.abs());
    let eval = structural_bound_eval(&small, &svd.vt.transpose(), kk).unwrap();
    if !eval.holds(slack_of(eval.rhs_frob)) {
        violations += 1;
    }
    violations += (0..100u64)
        .into_par_iter()
        .map(|t| {
            let z = random_matrix(40, kk + 10, seed.child(1003).child(t));
            let eval = structural_bound_eval(&small, &z, kk).unwrap();
            usize::from(!eval.holds(slack_of(eval.rhs_frob)))
        })
        .sum::<usize>();

    CriterionResult {
        criterion: 10,
        name: "column-subset-selection",
        pass: distinct_ok && ratio_count >= 95 && violations == 0,
        details: format!(
            "always k distinct: {distinct_ok}; ratio<=bound({bound:.2}) in {ratio_count}/100 (>=95); subspace-inequality violations {violations} (target 0)"
        ),
    }
}

fn criterion_11(seed: SeedSpec) -> CriterionResult {
    let spec = GenSpec {
        m: 100,
        n: 200,
        kind: GenKind::SlowDecay { base: 0.85 },
        seed: seed.child(1100),
    };
    let a = generate(&spec).unwrap();
    let pass_count: usize = (0..100u64)
        .into_par_iter()
        .map(|t| {
            let (_, err) = range_find(
                &a,
                5,
                RangeMethod::Basic { eps: 0.5 },
                seed.child(1101).child(t),
            )
            .unwrap();
            usize::from(err.ratio_frob <= 1.5)
        })
        .sum();

    let slow = generate(&GenSpec {
        m: 80,
        n: 60,
        kind: GenKind::SlowDecay { base: 0.9 },
        seed: seed.child(1102),
    })
    .unwrap();
    let median_err = |q: usize| {
        let mut errs: Vec<f64> = (0..50u64)
            .into_par_iter()
            .map(|t| {
                range_find(&slow, 10, RangeMethod::Power { p: 5, q }, seed.child(1103).child(t))
                    .unwrap()
                    .1
                    .spectral_error
            })
            .collect();
        median(&mut errs)
    };
    let (e0, e1, e2, e4) = (median_err(0), median_err(1), median_err(2), median_err(4));
    let monotone = e0 >= e1 && e1 >= e2 && e2 >= e4 && e4 < e0;

    CriterionResult {
        criterion: 11,
        name: "range-finders",
        pass: pass_count >= 90 && monotone,
        details: format!(
            "basic ratio<=1.5 in {pass_count}/100 (>=90); power medians {e0:.4} >= {e1:.4} >= {e2:.4} >= {e4:.4}, strictly decreasing overall: {monotone}"
        ),
    }
}

fn criterion_12(seed: SeedSpec) -> CriterionResult {
    let spec =
        GenSpec { m: 2000, n: 14, kind: GenKind::SyntheticExpression, seed: seed.child(1200) };
    let a = generate(&spec).unwrap();
    let shape_ok = a.rows() == 2000 && a.cols() == 14;

    // classify rows against the two generating patterns by nearest residual
    let n = 14usize;
    let sine: Vec<f64> =
        (0..n).map(|j| (std::f64::consts::TAU * j as f64 / n as f64).sin()).collect();
    let expo: Vec<f64> = (0..n).map(|j| (-(j as f64) / (n as f64 - 1.0)).exp()).collect();
    let mut counts = [0usize; 3];
    for i in 0..2000 {
        let row = a.row(i);
        let d_none = dot(row, row);
        let d_sine: f64 = row.iter().zip(&sine).map(|(x, s)| (x - s).powi(2)).sum();
        let d_expo: f64 = row.iter().zip(&expo).map(|(x, e)| (x - e).powi(2)).sum();
        let class = if d_none <= d_sine && d_none <= d_expo {
            0
        } else if d_sine <= d_expo {
            1
        } else {
            2
        };
        counts[class] += 1;
    }
    let classes_ok = counts == [1600, 200, 200];

    let svd = thin_svd(&a, None).unwrap();
    let total: f64 = svd.singular_values.iter().map(|x| x * x).sum();
    let top2 = svd.singular_values[0].powi(2) + svd.singular_values[1].powi(2);
    let frac = top2 / total;
    let frac_ok = (0.58..=0.70).contains(&frac);

    CriterionResult {
        criterion: 12,
        name: "synthetic-expression",
        pass: shape_ok && classes_ok && frac_ok,
        details: format!(
            "shape 2000x14: {shape_ok}; class counts {counts:?} (target [1600, 200, 200]); top-2 variance fraction {frac:.4} (target [0.58, 0.70])"
        ),
    }
}

fn criterion_13(_seed: SeedSpec) -> CriterionResult {
    let mut pass = true;
    let mut details = Vec::new();
    for name in BUILTIN_GRAPHS {
        let g = builtin_graph(name).unwrap();
        let prof = graph_edge_leverage(&g).unwrap();
        let sum: f64 = prof.scores.iter().sum();
        let trace_ok = (sum - (g.num_nodes() as f64 - 1.0)).abs() <= 1e-8;
        let extra_ok = match name {
            // trees: every edge is a bridge with unit effective resistance
            "path3" | "star5" => prof.scores.iter().all(|&s| (s - 1.0).abs() <= 1e-8),
            "triangle" => prof.scores.iter().all(|&s| (s - 2.0 / 3.0).abs() <= 1e-8),
            _ => true,
        };
        pass &= trace_ok && extra_ok;
        details.push(format!("{name}: sum {sum:.6}"));
    }
    CriterionResult {
        criterion: 13,
        name: "graph-edge-leverage",
        pass,
        details: details.join(", "),
    }
}

/// Criteria 1-13, in order.
pub fn numeric_criteria(seed: SeedSpec) -> Vec<CriterionResult> {
    let mut out = Vec::new();
    out.push(criterion_1(seed));
    out.push(criterion_2(seed));
    out.push(criterion_3(seed));
    out.push(criterion_4(seed));
    let (c5, c6) = criteria_5_and_6(seed);
    out.push(c5);
    out.push(c6);
    out.push(criterion_7(seed));
    out.push(criterion_8(seed));
    out.push(criterion_9(seed));
    out.push(criterion_10(seed));
    out.push(criterion_11(seed));
    out.push(criterion_12(seed));
    out.push(criterion_13(seed));
    out
}

fn body_of(results: &[CriterionResult]) -> String {
    let mut body = String::new();
    for r in results {
        body.push_str(&serde_json::to_string(r).expect("result serializes"));
        body.push('\n');
    }
    body
}

/// The full acceptance suite: criteria 1-13 computed once, then criterion 14
/// (determinism) verified by recomputing the entire body under the same seed
/// and comparing bytes.
pub fn acceptance_suite(seed: SeedSpec) -> (Vec<CriterionResult>, String) {
    let results = numeric_criteria(seed);
    let body = body_of(&results);
    let rerun_body = body_of(&numeric_criteria(seed));
    let identical = body == rerun_body;
    let c14 = CriterionResult {
        criterion: 14,
        name: "determinism",
        pass: identical,
        details: format!(
            "criteria 1-13 recomputed under the same seed: bodies byte-identical: {identical}"
        ),
    };
    let mut results = results;
    let mut body = body;
    body.push_str(&serde_json::to_string(&c14).expect("result serializes"));
    body.push('\n');
    results.push(c14);
    (results, body)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub sweep: &'static str,
    pub parameter: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub trials: usize,
}

fn quartiles(values: &mut [f64]) -> (f64, f64, f64) {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    (values[n / 4], values[n / 2], values[3 * n / 4])
}

/// Error-versus-size sweep tables (median and quartiles over 50 seeds each).
pub fn scaling_suite(seed: SeedSpec) -> Vec<SweepRow> {
    let mut rows = Vec::new();

    let (a, b) = amm_fixture(seed);
    let probs = amm_probs_optimal(&a, &b).unwrap();
    for c in [25usize, 100, 400, 1600] {
        let mut errs: Vec<f64> = (0..50u64)
            .into_par_iter()
            .map(|t| {
                approx_matmul(&a, &b, c, &probs, seed.child(2000 + c as u64).child(t))
                    .unwrap()
                    .frobenius_error_vs
                    .unwrap()
            })
            .collect();
        let (q1, med, q3) = quartiles(&mut errs);
        rows.push(SweepRow { sweep: "amm-frobenius-error-vs-c", parameter: c as f64, q1, median: med, q3, trials: 50 });
    }

    let (p, exact) = ls_fixture(seed, false);
    for r in [32usize, 64, 128, 256, 512] {
        let mut rels: Vec<f64> = (0..50u64)
            .into_par_iter()
            .map(|t| {
                solve_sampled(&p, r, None, seed.child(2100 + r as u64).child(t))
                    .map(|rep| rep.with_baseline(&exact).relative_objective.unwrap_or(f64::NAN))
                    .unwrap_or(f64::NAN)
            })
            .filter(|x| x.is_finite())
            .collect();
        if rels.is_empty() {
            continue;
        }
        let (q1, med, q3) = quartiles(&mut rels);
        rows.push(SweepRow { sweep: "ls-relative-objective-vs-r", parameter: r as f64, q1, median: med, q3, trials: 50 });
    }

    let slow = generate(&GenSpec {
        m: 80,
        n: 60,
        kind: GenKind::SlowDecay { base: 0.9 },
        seed: seed.child(2200),
    })
    .unwrap();
    for q in [0usize, 1, 2, 4] {
        let mut errs: Vec<f64> = (0..50u64)
            .into_par_iter()
            .map(|t| {
                range_find(&slow, 10, RangeMethod::Power { p: 5, q }, seed.child(2300 + q as u64).child(t))
                    .unwrap()
                    .1
                    .spectral_error
            })
            .collect();
        let (q1, med, q3) = quartiles(&mut errs);
        rows.push(SweepRow { sweep: "range-power-spectral-error-vs-q", parameter: q as f64, q1, median: med, q3, trials: 50 });
    }

    rows
}
