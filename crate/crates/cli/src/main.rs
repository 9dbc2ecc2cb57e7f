//! `perron`: batch front end for perron-core.
//!
//! Exit status is 0 on success, 2 when the answer is a determinate negative
//! (not an M-matrix, decay or kernel series divergent) and 1 on any error.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use perron_core::apps::{
    graph_kernel, indicator_similarity, katz_centrality, leontief_equilibrium, load_labeled_graph, product_graph,
    solve_m_adaptive, top_singular,
};
use perron_core::io::{load_matrix, load_vector};
use perron_core::perron::{compute_perron_with, m_decide_with, K_CAP};
use perron_core::rcdd::BackendChoice;
use perron_core::report::SolveReport;
use perron_core::scaling::mmatrix_scale_with;
use perron_core::{DenseVector, Error, SparseMatrix};
use serde_json::{json, Value};

use report::{Format, Report};

#[derive(Parser)]
#[command(name = "perron", version, about = "Perron vectors and M-matrix solves through diagonal scalings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for every randomized component.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Parallelism hint; recorded in the report.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Report destination; stdout when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Leave the timestamp out so that reruns are byte-identical.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Certified Perron value and vectors of an irreducible A ≥ 0.
    Perron {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
    },
    /// Decide whether sI − A is a nonsingular M-matrix.
    Mdecide {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        /// Bound on ‖(I − A/s)⁻¹‖ that sizes the loop caps.
        #[arg(long, default_value_t = 1e8)]
        gamma: f64,
    },
    /// Scaling pair for (1+eps)sI − A.
    Scale {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 1e-2)]
        eps: f64,
        /// Conditioning guess; doubled from 1 when absent.
        #[arg(long)]
        k: Option<f64>,
    },
    /// Solve (sI − A)x = b.
    Solve {
        #[arg(long)]
        matrix: PathBuf,
        /// Right-hand side; all ones when absent.
        #[arg(long)]
        b: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
    },
    /// Katz centrality (I − αA)⁻¹b.
    Katz {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        b: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
    },
    /// Hawkins–Simons check and equilibrium of (I − A)x = d.
    Leontief {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        d: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
    },
    /// Top singular triplet of A ≥ 0.
    Svd {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        delta: f64,
    },
    /// Random-walk kernel of two labeled graphs with uniform start and stop distributions.
    Kernel {
        #[arg(long)]
        g: PathBuf,
        #[arg(long)]
        h: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Perron { .. } => "perron",
            Command::Mdecide { .. } => "mdecide",
            Command::Scale { .. } => "scale",
            Command::Solve { .. } => "solve",
            Command::Katz { .. } => "katz",
            Command::Leontief { .. } => "leontief",
            Command::Svd { .. } => "svd",
            Command::Kernel { .. } => "kernel",
        }
    }
}

/// Whether the run ended in a determinate negative answer.
enum Answer {
    Positive,
    Negative,
}

fn unit_interval(name: &str, v: f64) -> perron_core::Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("--{name} must lie in (0, 1), got {v}")))
    }
}

fn positive(name: &str, v: f64) -> perron_core::Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("--{name} must be positive, got {v}")))
    }
}

fn rhs(path: Option<&Path>, n: usize) -> perron_core::Result<DenseVector> {
    match path {
        Some(p) => load_vector(p),
        None => Ok(DenseVector::ones(n)),
    }
}

fn path_value(p: &Path) -> Value {
    json!(p.display().to_string())
}

/// `‖(sI − A)x − b‖₂ / ‖b‖₂`, recomputed from the output.
fn shifted_residual(a: &SparseMatrix, s: f64, x: &DenseVector, b: &DenseVector) -> perron_core::Result<f64> {
    let ax = a.matvec(x, false)?;
    let r: f64 = ax.iter().zip(x.iter()).zip(b.iter()).map(|((p, q), c)| (s * q - p - c).powi(2)).sum();
    Ok(r.sqrt() / b.norm2())
}

fn iterations(report: &SolveReport) -> Value {
    json!({
        "total": report.total_iterations(),
        "phases": report.phases.len(),
        "per_phase": report.phases.iter().map(|p| p.iterations).collect::<Vec<_>>(),
    })
}

fn run(cli: &Cli, out: &mut Report) -> perron_core::Result<Answer> {
    let backend = BackendChoice::default().with_seed(cli.seed);
    match &cli.command {
        Command::Perron { matrix, delta } => {
            unit_interval("delta", *delta)?;
            let a = load_matrix(matrix)?;
            let c = compute_perron_with(&a, *delta, backend)?;
            out.set("matrix", path_value(matrix));
            out.set("delta", json!(delta));
            out.set("s", json!(c.s));
            out.set("k_final", json!(c.k_final));
            out.set("residual_right", json!(c.residual_right));
            out.set("residual_left", json!(c.residual_left));
            out.set("cw_lower", json!(c.cw_lower));
            out.set("cw_upper", json!(c.cw_upper));
            out.vector("right", &c.right);
            out.vector("left", &c.left);
            Ok(Answer::Positive)
        }
        Command::Mdecide { matrix, eps, s, gamma } => {
            unit_interval("eps", *eps)?;
            positive("s", *s)?;
            positive("gamma", *gamma)?;
            let a = load_matrix(matrix)?;
            let d = m_decide_with(&a.scaled(1.0 / s), *eps, *gamma, backend)?;
            out.set("matrix", path_value(matrix));
            out.set("eps", json!(eps));
            out.set("s", json!(s));
            out.set("gamma", json!(gamma));
            out.set("verdict", json!(if d.is_m_matrix() { "m-matrix" } else { "not-m-matrix" }));
            out.set("iterations", iterations(&d.report));
            match (&d.scaling, &d.witness) {
                (Some(pair), _) => {
                    out.vector("left", &pair.left);
                    out.vector("right", &pair.right);
                    Ok(Answer::Positive)
                }
                (None, w) => {
                    out.set(
                        "witness",
                        w.as_ref()
                            .map(|w| json!({ "kind": w.kind(), "detail": w.to_string() }))
                            .unwrap_or(Value::Null),
                    );
                    Ok(Answer::Negative)
                }
            }
        }
        Command::Scale { matrix, s, eps, k } => {
            unit_interval("eps", *eps)?;
            positive("s", *s)?;
            let a = load_matrix(matrix)?;
            let (pair, report, k_used) = match k {
                Some(k) => {
                    positive("k", *k)?;
                    let (pair, report) = mmatrix_scale_with(&a, *s, *eps, *k, backend)?;
                    (pair, report, *k)
                }
                None => scale_doubling(&a, *s, *eps, backend)?,
            };
            let shifted = a.identity_combination((1.0 + eps) * s, -1.0)?;
            let rcdd = shifted.apply_scaling(&pair.left, &pair.right)?.check_rcdd(1e-12);
            out.set("matrix", path_value(matrix));
            out.set("s", json!(s));
            out.set("eps", json!(eps));
            out.set("k", json!(k_used));
            out.set("alpha", json!(pair.alpha));
            out.set("rcdd", json!(rcdd));
            out.set("iterations", iterations(&report));
            out.vector("left", &pair.left);
            out.vector("right", &pair.right);
            Ok(Answer::Positive)
        }
        Command::Solve { matrix, b, s, eps } => {
            unit_interval("eps", *eps)?;
            positive("s", *s)?;
            let a = load_matrix(matrix)?;
            let b_vec = rhs(b.as_deref(), a.n_rows())?;
            let (x, report) = solve_m_adaptive(&a, *s, &b_vec, *eps)?;
            let x = DenseVector::new(x)?;
            out.set("matrix", path_value(matrix));
            out.set("b", b.as_deref().map(path_value).unwrap_or(json!("ones")));
            out.set("s", json!(s));
            out.set("eps", json!(eps));
            out.set("residual", json!(shifted_residual(&a, *s, &x, &b_vec)?));
            out.set("iterations", json!({ "total": report.iterations }));
            out.vector("x", &x);
            Ok(Answer::Positive)
        }
        Command::Katz { matrix, alpha, b, eps } => {
            unit_interval("eps", *eps)?;
            let a = load_matrix(matrix)?;
            let b_vec = rhs(b.as_deref(), a.n_rows())?;
            out.set("matrix", path_value(matrix));
            out.set("alpha", json!(alpha));
            out.set("eps", json!(eps));
            match katz_centrality(&a, *alpha, &b_vec, *eps) {
                Ok((v, report)) => {
                    let scaled = a.scaled(*alpha);
                    out.set("verdict", json!("converges"));
                    out.set("residual", json!(shifted_residual(&scaled, 1.0, &v, &b_vec)?));
                    out.set("iterations", json!({ "total": report.iterations }));
                    out.vector("centrality", &v);
                    Ok(Answer::Positive)
                }
                Err(Error::DecayTooLarge) => {
                    out.set("verdict", json!("decay-too-large"));
                    Ok(Answer::Negative)
                }
                Err(e) => Err(e),
            }
        }
        Command::Leontief { matrix, d, eps } => {
            unit_interval("eps", *eps)?;
            let a = load_matrix(matrix)?;
            let demand = match d {
                Some(p) => Some(load_vector(p)?),
                None => None,
            };
            let o = leontief_equilibrium(&a, demand.as_ref(), *eps)?;
            out.set("matrix", path_value(matrix));
            out.set("eps", json!(eps));
            out.set("verdict", json!(if o.verdict { "productive" } else { "not-productive" }));
            if let Some(w) = &o.witness {
                out.set("witness", json!({ "kind": w.kind(), "detail": w.to_string() }));
            }
            if let (Some(x), Some(dv)) = (&o.x, &demand) {
                out.set("residual", json!(shifted_residual(&a, 1.0, x, dv)?));
                out.vector("x", x);
            }
            Ok(if o.verdict { Answer::Positive } else { Answer::Negative })
        }
        Command::Svd { matrix, delta } => {
            unit_interval("delta", *delta)?;
            let a = load_matrix(matrix)?;
            let t = top_singular(&a, *delta)?;
            out.set("matrix", path_value(matrix));
            out.set("delta", json!(delta));
            out.set("sigma", json!(t.sigma));
            out.set("residuals", json!([t.residuals.0, t.residuals.1]));
            out.vector("left", &t.left);
            out.vector("right", &t.right);
            Ok(Answer::Positive)
        }
        Command::Kernel { g, h, lambda, eps } => {
            unit_interval("eps", *eps)?;
            let gg = load_labeled_graph(g)?;
            let hh = load_labeled_graph(h)?;
            let w = product_graph(&gg, &hh, indicator_similarity)?;
            let n = w.matrix.n_rows();
            if n == 0 {
                return Err(Error::InvalidArgument("product graph has no vertices".into()));
            }
            let p = DenseVector::new(vec![1.0 / n as f64; n])?;
            out.set("g", path_value(g));
            out.set("h", path_value(h));
            out.set("lambda", json!(lambda));
            out.set("eps", json!(eps));
            match graph_kernel(&w, &p, &p, *lambda, *eps) {
                Ok(k) => {
                    out.set("verdict", json!("converges"));
                    out.set("value", json!(k.value));
                    out.set("error_bound", json!(k.error_bound));
                    out.set("iterations", json!({ "total": k.iterations }));
                    Ok(Answer::Positive)
                }
                Err(Error::KernelDiverges) => {
                    out.set("verdict", json!("diverges"));
                    Ok(Answer::Negative)
                }
                Err(e) => Err(e),
            }
        }
    }
}

fn scale_doubling(
    a: &SparseMatrix,
    s: f64,
    eps: f64,
    backend: BackendChoice,
) -> perron_core::Result<(perron_core::scaling::ScalingPair, SolveReport, f64)> {
    let mut k = 1.0;
    while k <= K_CAP {
        match mmatrix_scale_with(a, s, eps, k, backend) {
            Ok((pair, report)) => return Ok((pair, report, k)),
            Err(Error::IterationCapHit { .. })
            | Err(Error::ScalingRejected { .. })
            | Err(Error::BackendDiverged { .. })
            | Err(Error::NotRcdd) => k *= 2.0,
            Err(e) => return Err(e),
        }
    }
    Err(Error::KCapExceeded)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let mut out = Report::new(name, cli.seed, cli.threads, !cli.no_timestamp);
    let code = match run(&cli, &mut out) {
        Ok(Answer::Positive) => 0,
        Ok(Answer::Negative) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = out.emit(cli.format, cli.output.as_deref(), name) {
        eprintln!("error: writing report: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
