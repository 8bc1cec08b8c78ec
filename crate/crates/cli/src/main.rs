use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use sigpath::development::{develop, UnitaryPolicy};
use sigpath::expected_sig::{mc_expected_sig, radius_diagnostic, solve_recurrence, DomainShape, GridDomain};
use sigpath::learn::{
    classification_report, featurize_with, fit_lasso, fit_ridge, read_labels, read_manifest, synthetic_two_class,
    write_dataset, FeatureKind, LinearModel, SyntheticTask,
};
use sigpath::lie::CoordinateMap;
use sigpath::logode::{linear_solve, solve, LinearSystem, LogOdeSchedule};
use sigpath::streams::{dp_distance_estimate, read_csv_file};
use sigpath::{log_signature, Error, Transform, TruncatedTensor};

/// Signatures, log-signatures and friends for multidimensional streams.
///
/// Streams are CSV files with a header `t,x1,...,xd` and strictly increasing times.
#[derive(Parser)]
#[command(name = "sigpath", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Truncated signature of a stream.
    Sig {
        #[arg(long)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = TransformArg::None)]
        transform: TransformArg,
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Log-signature in Lyndon coordinates.
    Logsig {
        #[arg(long)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = TransformArg::None)]
        transform: TransformArg,
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Dyadic lower estimates of the p-variation distance between two streams.
    Dpdist {
        #[arg(long)]
        p: f64,
        /// Number of dyadic refinements.
        #[arg(long, default_value_t = 8)]
        levels: usize,
        a: PathBuf,
        b: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve a linear controlled equation by the log-ODE method.
    Logode {
        /// Truncation degree of the log-signature.
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 8)]
        substeps: usize,
        /// JSON `{"m", "d", "matrices"}`.
        #[arg(long)]
        system: PathBuf,
        /// Initial state, comma separated; all ones by default.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y0: Option<Vec<f64>>,
        driver: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Unitary development of a stream.
    Develop {
        /// JSON `{"u", "generators"}`.
        #[arg(long)]
        policy: PathBuf,
        stream: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Expected signature of stopped Brownian motion from the PDE recurrence.
    Expsig {
        /// `disk:R` or `poly:x,y;x,y;...`.
        #[arg(long, default_value = "disk:1.0")]
        domain: String,
        #[arg(long, default_value_t = 0.02)]
        h: f64,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        /// Evaluation point `x,y` (nearest grid node).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0")]
        at: Vec<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo expected signature with standard errors.
    ExpsigMc {
        #[arg(long, default_value = "disk:1.0")]
        domain: String,
        #[arg(long)]
        paths: usize,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0")]
        at: Vec<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fit a linear model on signature features.
    Fit {
        #[arg(long)]
        depth: usize,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        lambda: f64,
        #[arg(long, value_enum, default_value_t = TransformArg::None)]
        transform: TransformArg,
        /// Use log-signature coordinates instead of signature coefficients.
        #[arg(long)]
        logsig: bool,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Manifest CSV with a `path` column.
        train: PathBuf,
        /// CSV with a `label` column, one row per manifest entry.
        labels: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Classification report of a fitted model on a labelled dataset.
    Score {
        model: PathBuf,
        test: PathBuf,
        labels: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the synthetic two-class dataset.
    GenSynth {
        #[arg(long, default_value_t = 1000)]
        streams: usize,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value_t = 0.85)]
        rho: f64,
        #[arg(long)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformArg {
    None,
    Time,
    Leadlag,
}

impl From<TransformArg> for Transform {
    fn from(t: TransformArg) -> Self {
        match t {
            TransformArg::None => Transform::None,
            TransformArg::Time => Transform::Time,
            TransformArg::Leadlag => Transform::LeadLag,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Ridge,
    Lasso,
}

fn emit(value: &impl Serialize, output: Option<&Path>) -> sigpath::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> sigpath::Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?)
}

fn point(at: &[f64]) -> sigpath::Result<[f64; 2]> {
    match at {
        [x, y] => Ok([*x, *y]),
        _ => Err(Error::InvalidInput(format!("--at needs two coordinates, got {}", at.len()))),
    }
}

fn tensor_json(t: &TruncatedTensor) -> Value {
    json!({
        "d": t.dim(),
        "depth": t.depth(),
        "levels": t.levels(),
        "coefficients": t.word_map(),
    })
}

fn run(cli: Cli) -> sigpath::Result<()> {
    match cli.command {
        Command::Sig {
            depth,
            transform,
            file,
            output,
        } => {
            let s = read_csv_file(&file)?.transform(transform.into());
            emit(&tensor_json(&s.signature(depth)), output.as_deref())
        }
        Command::Logsig {
            depth,
            transform,
            file,
            output,
        } => {
            let s = read_csv_file(&file)?.transform(transform.into());
            let l = log_signature(&s, depth)?;
            let mut v = serde_json::to_value(&l)?;
            v["coordinates"] = serde_json::to_value(CoordinateMap(&l))?;
            emit(&v, output.as_deref())
        }
        Command::Dpdist { p, levels, a, b, output } => {
            let report = dp_distance_estimate(&read_csv_file(&a)?, &read_csv_file(&b)?, p, levels)?;
            emit(&report, output.as_deref())
        }
        Command::Logode {
            depth,
            steps,
            substeps,
            system,
            y0,
            driver,
            output,
        } => {
            let sys: LinearSystem = read_json(&system)?;
            let stream = read_csv_file(&driver)?;
            let y0 = y0.unwrap_or_else(|| vec![1.0; sys.matrices()[0].nrows()]);
            let schedule = LogOdeSchedule::uniform(&stream, steps, depth, substeps)?;
            let traj = solve(&sys, &stream, &y0, &schedule)?;
            let exact = linear_solve(&sys, &stream, &y0)?;
            let mut v = serde_json::to_value(&traj)?;
            v["exact_final"] = json!(exact);
            emit(&v, output.as_deref())
        }
        Command::Develop { policy, stream, output } => {
            let policy: UnitaryPolicy = read_json(&policy)?;
            let r = develop(&policy, &read_csv_file(&stream)?)?;
            let rows: Vec<Vec<[f64; 2]>> = (0..r.psi.nrows())
                .map(|i| (0..r.psi.ncols()).map(|j| [r.psi[(i, j)].re, r.psi[(i, j)].im]).collect())
                .collect();
            emit(
                &json!({
                    "u": policy.size(),
                    "interval": [r.interval.0, r.interval.1],
                    "psi": rows,
                    "unitarity_defect": r.unitarity_defect(),
                }),
                output.as_deref(),
            )
        }
        Command::Expsig {
            domain,
            h,
            depth,
            at,
            output,
        } => {
            let shape: DomainShape = domain.parse()?;
            let at = point(&at)?;
            let grid = GridDomain::new(shape.clone(), h)?;
            let field = solve_recurrence(&grid, depth)?;
            let value = field.value_at(at)?;
            let radius = if depth >= 3 { Some(radius_diagnostic(&value)?) } else { None };
            emit(
                &json!({
                    "domain": shape,
                    "h": h,
                    "depth": depth,
                    "at": at,
                    "interior_nodes": grid.interior_count(),
                    "max_residual": field.max_residual(),
                    "values": value.word_map(),
                    "tensor": value,
                    "radius": radius,
                }),
                output.as_deref(),
            )
        }
        Command::ExpsigMc {
            domain,
            paths,
            dt,
            seed,
            depth,
            at,
            output,
        } => {
            let shape: DomainShape = domain.parse()?;
            let at = point(&at)?;
            let mc = mc_expected_sig(&shape, at, depth, paths, dt, seed)?;
            emit(
                &json!({
                    "domain": shape,
                    "at": at,
                    "paths": mc.paths,
                    "dt": dt,
                    "seed": seed,
                    "mean_steps": mc.mean_steps,
                    "mean": mc.mean.word_map(),
                    "stderr": mc.stderr.word_map(),
                }),
                output.as_deref(),
            )
        }
        Command::Fit {
            depth,
            method,
            lambda,
            transform,
            logsig,
            max_iter,
            tol,
            train,
            labels,
            output,
        } => {
            let (streams, _) = read_manifest(&train)?;
            let y = read_labels(&labels)?;
            let kind = if logsig { FeatureKind::LogSignature } else { FeatureKind::Signature };
            let x = featurize_with(&streams, depth, transform.into(), kind)?;
            let model = match method {
                Method::Ridge => fit_ridge(&x, &y, lambda)?,
                Method::Lasso => {
                    let m = fit_lasso(&x, &y, lambda, max_iter, tol)?;
                    if !m.converged() {
                        eprintln!("warning: lasso stopped after {max_iter} sweeps without meeting tol {tol}");
                    }
                    m
                }
            };
            emit(&model, output.as_deref())
        }
        Command::Score {
            model,
            test,
            labels,
            output,
        } => {
            let model: LinearModel = read_json(&model)?;
            let (streams, _) = read_manifest(&test)?;
            let y = read_labels(&labels)?;
            let report = classification_report(&model.predict_streams(&streams)?, &y)?;
            emit(&report, output.as_deref())
        }
        Command::GenSynth {
            streams,
            steps,
            rho,
            seed,
            out,
        } => {
            let task = SyntheticTask { streams, steps, rho };
            let (s, labels) = synthetic_two_class(&task, seed)?;
            write_dataset(&out, &s, &labels)?;
            let mut counts = BTreeMap::new();
            for l in &labels {
                *counts.entry(l.to_string()).or_insert(0usize) += 1;
            }
            emit(
                &json!({
                    "task": task,
                    "seed": seed,
                    "directory": out,
                    "manifest": out.join("manifest.csv"),
                    "labels": out.join("labels.csv"),
                    "class_counts": counts,
                }),
                None,
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 4 } else { 3 })
        }
    }
}
