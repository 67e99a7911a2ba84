//! Subcommand implementations. Each command reads its inputs, runs the
//! library, writes machine-readable results (JSON lines / CSV / matrix
//! files), and drops a manifest sidecar next to its primary output.

use crate::bench;
use crate::manifest::RunManifest;
use clap::{Args, Parser, Subcommand, ValueEnum};
use randla::gen::{builtin_graph, generate, GenSpec};
use randla::io;
use randla::leverage::{exact_leverage, fast_leverage, flag_outliers, graph_edge_leverage};
use randla::lowrank::{self, RangeMethod};
use randla::lstsq::{self, LsProblem, MinNormMode, SolveReport};
use randla::matmul::{amm_probs_onesided, amm_probs_optimal, approx_matmul};
use randla::sketch::ProbabilityVector;
use randla::{DenseMatrix, Error, SeedSpec};
use serde::Serialize;
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "randla", version, about = "Randomized linear algebra benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Base RNG seed for all randomized operations.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Sub-stream index under the seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub stream: u64,
    /// Write JSON(-lines) results here instead of stdout.
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
    /// Write CSV output here (commands that emit vectors or tables).
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Size of the worker thread pool for Monte Carlo sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a test matrix from a JSON spec.
    Gen(GenArgs),
    /// Leverage scores of a matrix or the edges of a graph.
    Lev(LevArgs),
    /// Sampled approximate matrix multiplication trials.
    Amm(AmmArgs),
    /// Least-squares solvers.
    Lstsq(LstsqArgs),
    /// Low-rank approximation.
    Lowrank(LowrankArgs),
    /// Benchmark suites.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Inline JSON spec, or a path to a JSON file (auto-detected).
    #[arg(long)]
    pub spec: String,
    /// Output file; .mtx/.mm picks matrix-market, anything else CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct LevArgs {
    /// Matrix file (.mtx/.csv) or edge list (.edges: "u v weight" lines).
    #[arg(long, required_unless_present = "builtin")]
    pub input: Option<PathBuf>,
    /// Use a bundled graph instead of a file.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Rank context for subspace leverage (defaults to full column rank).
    #[arg(long)]
    pub rank: Option<usize>,
    /// Use the fast randomized estimator instead of the exact scores.
    #[arg(long)]
    pub fast: bool,
    /// Accuracy target for the fast estimator.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Outlier threshold as a multiple of the average score.
    #[arg(long, default_value_t = 2.0)]
    pub multiplier: f64,
}

#[derive(Args, Debug)]
pub struct AmmArgs {
    /// Left factor A.
    #[arg(long)]
    pub input: PathBuf,
    /// Right factor B (defaults to A transposed).
    #[arg(long)]
    pub input_b: Option<PathBuf>,
    /// Number of sampled column-row pairs.
    #[arg(long, default_value_t = 100)]
    pub c: usize,
    /// Independent trials to run.
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    #[arg(long, value_enum, default_value_t = ProbChoice::Optimal)]
    pub probs: ProbChoice,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum ProbChoice {
    Optimal,
    Onesided,
    Uniform,
}

#[derive(Args, Debug)]
pub struct LstsqArgs {
    #[arg(long, value_enum)]
    pub algo: LsAlgo,
    /// Design matrix A.
    #[arg(long)]
    pub input: PathBuf,
    /// Right-hand side b (single-column or single-row CSV / matrix file).
    #[arg(long)]
    pub rhs: PathBuf,
    /// Row-sample size (sampled/srht) or column budget (minnorm).
    #[arg(long)]
    pub r: Option<usize>,
    /// Projection size (projected/precond).
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Re-run the randomized solver this many times, keeping the best
    /// residual.
    #[arg(long, default_value_t = 1)]
    pub repeats: u64,
    /// Row-sampling distribution for --algo sampled.
    #[arg(long, value_enum, default_value_t = LsProbs::Leverage)]
    pub probs: LsProbs,
    /// Column reduction flavor for --algo minnorm.
    #[arg(long, value_enum, default_value_t = MinNorm::Sample)]
    pub mode: MinNorm,
    /// Skip the exact baseline comparison.
    #[arg(long)]
    pub no_baseline: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum LsAlgo {
    Exact,
    Sampled,
    Srht,
    Projected,
    Precond,
    Minnorm,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum LsProbs {
    Leverage,
    Uniform,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum MinNorm {
    Sample,
    Project,
}

#[derive(Args, Debug)]
pub struct LowrankArgs {
    #[arg(long, value_enum)]
    pub algo: LowrankAlgo,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Column budget (addsample/cx/cur/cssp phase one).
    #[arg(long)]
    pub c: Option<usize>,
    /// Row budget (cur).
    #[arg(long)]
    pub r: Option<usize>,
    /// Oversampling (addproject/range).
    #[arg(long)]
    pub p: Option<usize>,
    /// Power iterations (range).
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Range-finder flavor.
    #[arg(long, value_enum, default_value_t = RangeFlavor::Oversampled)]
    pub method: RangeFlavor,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum LowrankAlgo {
    Addsample,
    Addproject,
    Cx,
    Cur,
    Cssp,
    Range,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum RangeFlavor {
    Basic,
    Oversampled,
    Power,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum Suite {
    Acceptance,
    Scaling,
}

/// Run the CLI on explicit argv; returns the process exit code. Usage errors
/// exit 2 (clap's convention), numeric/runtime failures exit 1.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let raw: Vec<std::ffi::OsString> = argv.into_iter().map(|a| a.into()).collect();
    let command_line: Vec<String> =
        raw.iter().map(|s| s.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(raw) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(threads) = cli.threads {
        // a second pool build in the same process is fine to ignore
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(&cli, &command_line) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

struct Output {
    json_path: Option<PathBuf>,
    buffer: String,
}

impl Output {
    fn new(json_path: Option<PathBuf>) -> Self {
        Output { json_path, buffer: String::new() }
    }

    fn line(&mut self, value: &impl Serialize) {
        self.buffer.push_str(&serde_json::to_string(value).expect("serializable"));
        self.buffer.push('\n');
    }

    fn body(&mut self, body: String) {
        self.buffer = body;
    }

    fn finish(self) -> Result<Option<PathBuf>, Error> {
        match &self.json_path {
            Some(path) => {
                std::fs::write(path, &self.buffer)?;
                Ok(Some(path.clone()))
            }
            None => {
                print!("{}", self.buffer);
                std::io::stdout().flush()?;
                Ok(None)
            }
        }
    }
}

fn run(cli: &Cli, command_line: &[String]) -> Result<(), Error> {
    let seed = SeedSpec::new(cli.seed, cli.stream);
    let mut inputs: Vec<PathBuf> = Vec::new();
    let mut out = Output::new(cli.json.clone());

    match &cli.command {
        Command::Gen(args) => {
            let spec_text = if args.spec.trim_start().starts_with('{') {
                args.spec.clone()
            } else {
                inputs.push(PathBuf::from(&args.spec));
                std::fs::read_to_string(&args.spec)?
            };
            let spec: GenSpec =
                serde_json::from_str(&spec_text).map_err(|e| Error::Parse(e.to_string()))?;
            let a = generate(&spec)?;
            io::save_matrix(&args.out, &a)?;
            out.line(&json!({
                "written": args.out.display().to_string(),
                "rows": a.rows(),
                "cols": a.cols(),
            }));
            let primary = out.finish()?;
            write_manifest(command_line, spec.seed, &inputs, primary.as_deref().or(Some(&args.out)))?;
        }
        Command::Lev(args) => {
            let is_edges = args
                .input
                .as_ref()
                .map(|p| p.extension().and_then(|e| e.to_str()) == Some("edges"))
                .unwrap_or(false);
            let profile = if let Some(name) = &args.builtin {
                graph_edge_leverage(&builtin_graph(name)?)?
            } else if is_edges {
                let path = args.input.as_ref().unwrap();
                inputs.push(path.clone());
                graph_edge_leverage(&io::read_edge_list(std::fs::File::open(path)?)?)?
            } else {
                let path = args.input.as_ref().unwrap();
                inputs.push(path.clone());
                let a = io::load_matrix(path)?;
                if args.fast {
                    fast_leverage(&a, args.eps, seed)?
                } else if let Some(k) = args.rank {
                    randla::leverage::rank_k_leverage(&a, k)?
                } else {
                    exact_leverage(&a)?
                }
            };
            let flagged = flag_outliers(&profile, args.multiplier);
            if let Some(csv_path) = &cli.csv {
                let scores = DenseMatrix::column(&profile.scores);
                io::save_matrix(csv_path, &scores)?;
            }
            out.line(&json!({
                "coherence": profile.coherence,
                "rank": profile.rank_context,
                "flagged_indices": flagged,
            }));
            let primary = out.finish()?;
            write_manifest(command_line, seed, &inputs, primary.as_deref())?;
        }
        Command::Amm(args) => {
            inputs.push(args.input.clone());
            let a = io::load_matrix(&args.input)?;
            let b = match &args.input_b {
                Some(p) => {
                    inputs.push(p.clone());
                    io::load_matrix(p)?
                }
                None => a.transpose(),
            };
            let probs = match args.probs {
                ProbChoice::Optimal => amm_probs_optimal(&a, &b)?,
                ProbChoice::Onesided => amm_probs_onesided(&a)?,
                ProbChoice::Uniform => ProbabilityVector::uniform(a.cols()),
            };
            let bound_rhs =
                10.0 / (args.c as f64).sqrt() * a.frobenius_norm() * b.frobenius_norm();
            for t in 0..args.trials {
                let trial_seed = seed.child(t);
                let result = approx_matmul(&a, &b, args.c, &probs, trial_seed)?;
                out.line(&json!({
                    "c": args.c,
                    "seed": trial_seed,
                    "frob_error": result.frobenius_error_vs,
                    "bound_rhs": bound_rhs,
                }));
            }
            let primary = out.finish()?;
            write_manifest(command_line, seed, &inputs, primary.as_deref())?;
        }
        Command::Lstsq(args) => {
            inputs.push(args.input.clone());
            inputs.push(args.rhs.clone());
            let a = io::load_matrix(&args.input)?;
            let b = load_vector(&args.rhs)?;
            let problem = LsProblem::new(a, b)?;
            let report = run_lstsq(args, &problem, seed)?;
            out.line(&report);
            let primary = out.finish()?;
            write_manifest(command_line, seed, &inputs, primary.as_deref())?;
        }
        Command::Lowrank(args) => {
            inputs.push(args.input.clone());
            let a = io::load_matrix(&args.input)?;
            let value = run_lowrank(args, &a, seed)?;
            out.line(&value);
            let primary = out.finish()?;
            write_manifest(command_line, seed, &inputs, primary.as_deref())?;
        }
        Command::Bench(args) => {
            match args.suite {
                Suite::Acceptance => {
                    let (results, body) = bench::acceptance_suite(seed);
                    out.body(body);
                    let primary = out.finish()?;
                    for r in &results {
                        eprintln!(
                            "criterion {:>2} {:<26} {}",
                            r.criterion,
                            r.name,
                            if r.pass { "PASS" } else { "FAIL" }
                        );
                    }
                    write_manifest(command_line, seed, &inputs, primary.as_deref())?;
                    if results.iter().any(|r| !r.pass) {
                        return Err(Error::Precondition("acceptance criteria failed".into()));
                    }
                }
                Suite::Scaling => {
                    for row in bench::scaling_suite(seed) {
                        out.line(&row);
                    }
                    let primary = out.finish()?;
                    write_manifest(command_line, seed, &inputs, primary.as_deref())?;
                }
            }
        }
    }
    Ok(())
}

fn write_manifest(
    command_line: &[String],
    seed: SeedSpec,
    inputs: &[PathBuf],
    primary: Option<&Path>,
) -> Result<(), Error> {
    if let Some(primary) = primary {
        let manifest = RunManifest::new(command_line, seed, inputs)?;
        manifest.write_sidecar(primary)?;
    }
    Ok(())
}

fn load_vector(path: &Path) -> Result<Vec<f64>, Error> {
    let m = io::load_matrix(path)?;
    if m.cols() == 1 {
        Ok(m.col(0))
    } else if m.rows() == 1 {
        Ok(m.row(0).to_vec())
    } else {
        Err(Error::Shape(format!(
            "expected a vector, got {}x{} in {}",
            m.rows(),
            m.cols(),
            path.display()
        )))
    }
}

fn run_lstsq(args: &LstsqArgs, p: &LsProblem, seed: SeedSpec) -> Result<SolveReport, Error> {
    let n = p.a.cols();
    let m = p.a.rows();
    let baseline = if args.no_baseline || args.algo == LsAlgo::Exact {
        None
    } else if args.algo == LsAlgo::Minnorm {
        Some(lstsq::solve_min_norm_exact(p)?)
    } else {
        Some(lstsq::solve_exact(p)?)
    };

    let solve_once = |t: u64| -> Result<SolveReport, Error> {
        let s = seed.child(t);
        match args.algo {
            LsAlgo::Exact => lstsq::solve_exact(p),
            LsAlgo::Sampled => {
                let r = args.r.unwrap_or_else(|| lstsq::default_sample_size(n, args.eps));
                let uniform;
                let probs = match args.probs {
                    LsProbs::Leverage => None,
                    LsProbs::Uniform => {
                        uniform = ProbabilityVector::uniform(m);
                        Some(&uniform)
                    }
                };
                lstsq::solve_sampled(p, r, probs, s)
            }
            LsAlgo::Srht => {
                let r = args.r.unwrap_or_else(|| lstsq::default_srht_size(m, n));
                lstsq::solve_srht(p, r, s)
            }
            LsAlgo::Projected => {
                let l = args.l.unwrap_or_else(|| lstsq::default_projection_size(n, args.eps));
                lstsq::solve_projected(p, l, s)
            }
            LsAlgo::Precond => {
                let l = args.l.unwrap_or(4 * n);
                lstsq::solve_preconditioned(p, l, args.tol, args.max_iter, s)
            }
            LsAlgo::Minnorm => {
                let c = args.r.unwrap_or(4 * m.min(p.a.cols() / 2).max(m + 1));
                let mode = match args.mode {
                    MinNorm::Sample => MinNormMode::Sample,
                    MinNorm::Project => MinNormMode::Project,
                };
                lstsq::solve_min_norm(p, c, mode, s)
            }
        }
    };

    let mut best: Option<SolveReport> = None;
    for t in 0..args.repeats.max(1) {
        let report = solve_once(t)?;
        let better = best.as_ref().map_or(true, |b| report.residual_norm < b.residual_norm);
        if better {
            best = Some(report);
        }
        if args.algo == LsAlgo::Exact {
            break;
        }
    }
    let mut report = best.expect("at least one solve ran");
    if let Some(baseline) = &baseline {
        report = report.with_baseline(baseline);
    }
    Ok(report)
}

fn run_lowrank(
    args: &LowrankArgs,
    a: &DenseMatrix,
    seed: SeedSpec,
) -> Result<serde_json::Value, Error> {
    let k = args.k;
    match args.algo {
        LowrankAlgo::Addsample => {
            let c = args.c.unwrap_or(4 * k);
            let (sel, err) = lowrank::additive_sample(a, k, c, seed)?;
            Ok(json!({"algo": "addsample", "indices": sel.indices, "error": err}))
        }
        LowrankAlgo::Addproject => {
            let l = args.p.map(|p| 2 * k + p).unwrap_or(4 * k);
            let (_, err) = lowrank::additive_project(a, k, l, seed)?;
            Ok(json!({"algo": "addproject", "l": l, "error": err}))
        }
        LowrankAlgo::Cx => {
            let c = args
                .c
                .unwrap_or(((4.0 * k as f64 * (k as f64).max(2.0).ln() / 0.25).ceil()) as usize);
            let (sel, err) = lowrank::relative_cx(a, k, c, seed, None)?;
            Ok(json!({"algo": "cx", "indices": sel.indices, "error": err}))
        }
        LowrankAlgo::Cur => {
            let c = args.c.unwrap_or(4 * k);
            let r = args.r.unwrap_or(4 * k);
            let cur = lowrank::cur(a, k, c, r, seed)?;
            Ok(json!({
                "algo": "cur",
                "col_indices": cur.col_indices,
                "row_indices": cur.row_indices,
                "error": cur.error,
            }))
        }
        LowrankAlgo::Cssp => {
            let (sel, err) = lowrank::cssp(a, k, args.c, seed)?;
            Ok(json!({"algo": "cssp", "indices": sel.indices, "error": err}))
        }
        LowrankAlgo::Range => {
            let method = match args.method {
                RangeFlavor::Basic => RangeMethod::Basic { eps: args.eps },
                RangeFlavor::Oversampled => RangeMethod::Oversampled { p: args.p.unwrap_or(10) },
                RangeFlavor::Power => {
                    RangeMethod::Power { p: args.p.unwrap_or(10), q: args.q.unwrap_or(2) }
                }
            };
            let (basis, err) = lowrank::range_find(a, k, method, seed)?;
            Ok(json!({
                "algo": "range",
                "method": basis.method,
                "basis_cols": basis.q.cols(),
                "error": err,
            }))
        }
    }
}
