use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ncgk::apps::{pca, procrustes, stiefel_defect, PcaVariant};
use ncgk::decompose::{decompose, DecomposeConfig, DecomposeMode};
use ncgk::format::{self, from_complex_rows, from_real_rows, to_json_string, DecompositionFile};
use ncgk::pipeline::{approximate_hermitian, approximate_nc, approximate_opt_complex, approximate_opt_real};
use ncgk::{CMatrix, Error, MatrixExt, PairKind, PipelineConfig, RealRoute, SolverOptions, Tensor4};

const EXIT_VERIFY: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "ncgk", version, about = "Approximate bilinear optimization over orthogonal and unitary matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the relaxation for a tensor and round it to a feasible pair.
    Solve(SolveArgs),
    /// R1- or L1-PCA of a point cloud.
    Pca(PcaArgs),
    /// Generalized orthogonal Procrustes alignment.
    Procrustes(ProcrustesArgs),
    /// Decompose a tensor into rank-one terms plus a small residual.
    Decompose(DecomposeArgs),
    /// Check the feasibility of a result file.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// Seed for the rounding trials.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 256)]
    trials: usize,
    /// Relative duality-gap tolerance of the solver.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write per-trial (or per-step) values as CSV.
    #[arg(long)]
    emit_csv: Option<PathBuf>,
}

impl Common {
    fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            solver: SolverOptions { gap_tol: self.tol, ..SolverOptions::default() },
            trials: self.trials,
            seed: self.seed,
            ..PipelineConfig::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Complex,
    Real,
    Hermitian,
    Nc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Route {
    Best,
    Direct,
    Hermitian,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    tensor: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Deterministic rounding with this accuracy (complex and nc modes).
    #[arg(long, num_args = 0..=1, default_missing_value = "0.25")]
    derandomize: Option<f64>,
    /// Rounding route for the real mode.
    #[arg(long, value_enum, default_value = "best")]
    route: Route,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    R1,
    L1,
}

#[derive(Args)]
struct PcaArgs {
    /// Headerless CSV, one point per row.
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum)]
    variant: Variant,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ProcrustesArgs {
    /// JSON list of row-major matrices of equal shape.
    #[arg(long)]
    matrices: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    tensor: PathBuf,
    #[arg(long)]
    eps: f64,
    /// Orthogonal terms for a real tensor.
    #[arg(long)]
    real: bool,
    #[arg(long, default_value_t = 500)]
    max_terms: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    /// A JSON file written by `solve`, `pca`, `procrustes` or `decompose`.
    #[arg(long)]
    result: PathBuf,
    /// Recompute the reported value (or reconstruction) against this tensor.
    #[arg(long)]
    tensor: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

enum Failure {
    Input(String),
    Solver(String),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Ingest(_) | Error::Io(_) | Error::Shape(_) | Error::Domain(_) => Failure::Input(e.to_string()),
            Error::Convergence { .. } | Error::Resource(_) | Error::Decomposition { .. } => Failure::Solver(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_tensor(path: &Path) -> Result<Tensor4, Failure> {
    Ok(format::read_tensor(open(path)?)?)
}

fn emit(out: Option<&Path>, value: &Value) -> Outcome {
    let text = to_json_string(value)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Input(e.to_string())),
    }
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_csv(path: Option<&Path>, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Outcome {
    let Some(path) = path else { return Ok(()) };
    let io = |e: csv::Error| Failure::Input(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Failure::Input(e.to_string()))
}

fn trial_csv(path: Option<&Path>, values: &[f64]) -> Outcome {
    let mut best = f64::NEG_INFINITY;
    let rows = values.iter().enumerate().map(|(i, &v)| {
        best = best.max(v);
        vec![i.to_string(), float(v), float(best)]
    });
    write_csv(path, &["trial", "value", "best"], rows.collect::<Vec<_>>())
}

fn kind_name(kind: PairKind) -> &'static str {
    match kind {
        PairKind::Unitary => "unitary",
        PairKind::Orthogonal => "orthogonal",
        PairKind::HermitianContraction => "hermitian-contraction",
        PairKind::Contraction => "contraction",
    }
}

fn cmd_solve(args: SolveArgs) -> Outcome {
    let m = read_tensor(&args.tensor)?;
    let mut config = args.common.pipeline();
    config.derandomize = args.derandomize;
    config.real_route = match args.route {
        Route::Best => RealRoute::Best,
        Route::Direct => RealRoute::Direct,
        Route::Hermitian => RealRoute::Hermitian,
    };
    if args.derandomize.is_some() && matches!(args.mode, Mode::Real | Mode::Hermitian) {
        return Err(Failure::Input("--derandomize applies to the complex and nc modes only".into()));
    }
    let (mode, approx) = match args.mode {
        Mode::Complex => ("complex", approximate_opt_complex(&m, &config)?),
        Mode::Real => ("real", approximate_opt_real(&m, &config)?),
        Mode::Hermitian => ("hermitian", approximate_hermitian(&m, &config)?),
        Mode::Nc => ("nc", approximate_nc(&m, &config)?),
    };
    let out = json!({
        "mode": mode,
        "n": m.n(),
        "seed": args.common.seed,
        "trials": if args.derandomize.is_some() { Value::Null } else { json!(config.trials) },
        "derandomize": args.derandomize,
        "kind": kind_name(approx.pair.kind),
        "upper_bound": approx.upper_bound,
        "value": approx.pair.value,
        "ratio": approx.ratio(),
        "A": format::complex_rows(&approx.pair.a),
        "B": format::complex_rows(&approx.pair.b),
    });
    trial_csv(args.common.emit_csv.as_deref(), &approx.trial_values)?;
    emit(args.common.out.as_deref(), &out)
}

fn cmd_pca(args: PcaArgs) -> Outcome {
    let points = format::read_points(open(&args.points)?)?;
    let config = args.common.pipeline();
    let variant = match args.variant {
        Variant::R1 => PcaVariant::R1,
        Variant::L1 => PcaVariant::L1,
    };
    let r = pca(&points, args.k, variant, &config)?;
    let out = json!({
        "variant": match args.variant { Variant::R1 => "r1", Variant::L1 => "l1" },
        "k": args.k,
        "seed": args.common.seed,
        "value": r.value,
        "surrogate": r.surrogate,
        "upper_bound": r.upper_bound,
        "Y": format::real_rows(&r.y),
    });
    emit(args.common.out.as_deref(), &out)?;
    let values = [r.surrogate];
    trial_csv(args.common.emit_csv.as_deref(), &values)
}

fn cmd_procrustes(args: ProcrustesArgs) -> Outcome {
    let mats = format::read_matrices(open(&args.matrices)?)?;
    let r = procrustes(&mats, &args.common.pipeline())?;
    let out = json!({
        "seed": args.common.seed,
        "value": r.value,
        "upper_bound": r.upper_bound,
        "U": r.u.iter().map(format::real_rows).collect::<Vec<_>>(),
    });
    emit(args.common.out.as_deref(), &out)
}

fn cmd_decompose(args: DecomposeArgs) -> Outcome {
    let m = read_tensor(&args.tensor)?;
    let config = DecomposeConfig {
        pipeline: args.common.pipeline(),
        mode: if args.real { DecomposeMode::Real } else { DecomposeMode::Complex },
        max_terms: args.max_terms,
        ..DecomposeConfig::default()
    };
    let dec = decompose(&m, args.eps, &config)?;
    let mut out = serde_json::to_value(DecompositionFile::from(&dec)).map_err(|e| Failure::Input(e.to_string()))?;
    out["eps"] = json!(args.eps);
    out["T"] = json!(dec.len());
    out["seed"] = json!(args.common.seed);
    let rows = dec.certificates.iter().enumerate().map(|(i, c)| {
        vec![i.to_string(), float(c.upper_bound), float(c.lower_bound), float(c.energy)]
    });
    write_csv(args.common.emit_csv.as_deref(), &["step", "upper_bound", "lower_bound", "energy"], rows.collect::<Vec<_>>())?;
    emit(args.common.out.as_deref(), &out)
}

struct Check {
    name: String,
    defect: f64,
    ok: bool,
}

fn parse<T: serde::de::DeserializeOwned>(v: &Value, what: &str) -> Result<T, Failure> {
    serde_json::from_value(v.clone()).map_err(|e| Failure::Input(format!("{what}: {e}")))
}

fn unitary_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let id = CMatrix::identity(n, n);
    (a * a.adjoint() - &id).max_abs().max((a.adjoint() * a - id).max_abs())
}

fn pair_defect(kind: &str, a: &CMatrix) -> Result<f64, Failure> {
    Ok(match kind {
        "unitary" => unitary_defect(a),
        "orthogonal" => unitary_defect(a).max(a.iter().map(|z| z.im.abs()).fold(0.0, f64::max)),
        "hermitian-contraction" => (a - a.adjoint()).max_abs().max(a.op_norm() - 1.0).max(0.0),
        "contraction" => (a.op_norm() - 1.0).max(0.0),
        other => return Err(Failure::Input(format!("unknown kind {other:?}"))),
    })
}

fn cmd_verify(args: VerifyArgs) -> Outcome {
    let v: Value = serde_json::from_reader(open(&args.result)?).map_err(|e| Failure::Input(format!("result JSON: {e}")))?;
    let tensor = args.tensor.as_deref().map(read_tensor).transpose()?;
    let tol = args.tol;
    let mut checks = Vec::new();
    let mut push = |name: String, defect: f64| checks.push(Check { ok: defect <= tol, name, defect });
    if let (Some(a), Some(b)) = (v.get("A"), v.get("B")) {
        let kind: String = parse(v.get("kind").unwrap_or(&Value::Null), "kind")?;
        let a = from_complex_rows(&parse::<Vec<Vec<[f64; 2]>>>(a, "A")?)?;
        let b = from_complex_rows(&parse::<Vec<Vec<[f64; 2]>>>(b, "B")?)?;
        push(format!("A is {kind}"), pair_defect(&kind, &a)?);
        push(format!("B is {kind}"), pair_defect(&kind, &b)?);
        if let Some(m) = &tensor {
            let value: f64 = parse(v.get("value").unwrap_or(&Value::Null), "value")?;
            let got = m.evaluate_matrices(&a, &b)?.norm();
            push("value matches |M(A, B)|".into(), (got - value).abs() / (1.0 + value.abs()));
        }
    } else if let Some(y) = v.get("Y") {
        let y = from_real_rows(&parse::<Vec<Vec<f64>>>(y, "Y")?)?;
        push("Y has orthonormal rows".into(), stiefel_defect(&y));
    } else if let Some(us) = v.get("U") {
        for (k, u) in parse::<Vec<Vec<Vec<f64>>>>(us, "U")?.iter().enumerate() {
            let u = from_real_rows(u)?;
            push(format!("U[{k}] is orthogonal"), stiefel_defect(&u).max(if u.is_square() { 0.0 } else { f64::INFINITY }));
        }
    } else if v.get("terms").is_some() {
        let file: DecompositionFile = parse(&v, "decomposition")?;
        let mut rebuilt: Tensor4 = file.residual.clone().try_into()?;
        for (t, term) in file.terms.iter().enumerate() {
            let a = from_complex_rows(&term.a)?;
            let b = from_complex_rows(&term.b)?;
            push(format!("term {t} A is unitary"), unitary_defect(&a));
            push(format!("term {t} B is unitary"), unitary_defect(&b));
            rebuilt = rebuilt.minus_product(-ncgk::c64(term.alpha[0], term.alpha[1]), &a, &b)?;
        }
        if let Some(m) = &tensor {
            let err = rebuilt.to_dense().iter().zip(m.to_dense()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            push("terms plus residual reconstruct the tensor".into(), err);
        }
    } else {
        return Err(Failure::Input("unrecognized result file".into()));
    }
    let ok = checks.iter().all(|c| c.ok);
    let report = json!({
        "ok": ok,
        "checks": checks.iter().map(|c| json!({"name": c.name, "defect": c.defect, "ok": c.ok})).collect::<Vec<_>>(),
    });
    emit(None, &report)?;
    if ok {
        Ok(())
    } else {
        Err(Failure::Verify("verification failed".into()))
    }
}

fn configure_threads() -> Outcome {
    let Ok(raw) = std::env::var("NCGK_THREADS") else { return Ok(()) };
    let threads: usize = raw.trim().parse().map_err(|_| Failure::Input(format!("NCGK_THREADS={raw:?} is not a count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Input(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Pca(a) => cmd_pca(a),
        Command::Procrustes(a) => cmd_procrustes(a),
        Command::Decompose(a) => cmd_decompose(a),
        Command::Verify(a) => cmd_verify(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_SOLVER)
        }
        Err(Failure::Verify(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_VERIFY)
        }
    }
}
