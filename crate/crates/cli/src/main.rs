//! `dsdkit` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 input or validation error,
//! 3 metric hypothesis violated (`check-metric`), 4 numerical failure.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use dsdkit::io::{parse_matrix_csv, write_distance_matrix};
use dsdkit::verify::{run_verification, VerifyConfig};
use dsdkit::{
    build_transition_matrix, check_metric_hypothesis, dsd_finite, dsd_infinite_lazy,
    parse_edge_list, stationary_distribution, write_matrix, DsdError, FundamentalData, LqOrder,
    MatrixFormat, StochasticMatrix,
};

#[derive(Parser)]
#[command(
    name = "dsdkit",
    version,
    about = "Diffusion state distance on weighted directed graphs"
)]
struct Cli {
    /// Read inputs as a CSV transition matrix instead of an edge list.
    #[arg(long, global = true)]
    matrix: bool,

    /// Worker threads for distance assembly and sampling. Output does not
    /// depend on this value.
    #[arg(long, global = true, env = "DSDKIT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Irreducibility, period and stationary distribution as JSON.
    Analyze { file: PathBuf },
    /// Pairwise diffusion state distances.
    ///
    /// A finite horizon K costs O(K n^3); K is capped at 1000000.
    Dist(DistArgs),
    /// Fundamental matrix Z = (I - P + W)^-1 of the (lazy) chain.
    Z {
        file: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Test the sufficient condition for the horizon-K distance to be a
    /// metric. Exits with status 3 if it fails.
    CheckMetric {
        file: PathBuf,
        #[arg(long)]
        k: u64,
    },
    /// Recompute every closed-form quantity by an independent route and
    /// report residuals. Exits with status 4 if a hard check fails.
    Verify {
        file: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        horizon: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
#[command(group(ArgGroup::new("horizon").required(true).args(["k", "infinite"])))]
struct DistArgs {
    file: PathBuf,
    /// Finite horizon.
    #[arg(long)]
    k: Option<u64>,
    /// Limiting distance from the fundamental matrix.
    #[arg(long)]
    infinite: bool,
    /// Laziness of the chain, in [0, 1).
    #[arg(long, conflicts_with = "k")]
    alpha: Option<f64>,
    /// Norm order: a number >= 1 or "inf".
    #[arg(long, default_value = "1")]
    q: String,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Input(String),
    Violation,
    Numerical(String),
}

impl Failure {
    fn from_dsd(file: &Path, e: DsdError) -> Self {
        let msg = format!("{}: {e}", file.display());
        if e.is_numerical() {
            Failure::Numerical(msg)
        } else {
            Failure::Input(msg)
        }
    }
}

type CliResult<T> = Result<T, Failure>;

struct Chain {
    labels: Vec<String>,
    p: StochasticMatrix,
}

fn read_text(file: &Path) -> CliResult<String> {
    if file.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Input(format!("<stdin>: {e}")))?;
        return Ok(s);
    }
    fs::read_to_string(file).map_err(|e| Failure::Input(format!("{}: {e}", file.display())))
}

fn load_chain(file: &Path, matrix: bool) -> CliResult<Chain> {
    let text = read_text(file)?;
    let fail = |e| Failure::from_dsd(file, e);
    if matrix {
        let (labels, p) = parse_matrix_csv(&text).map_err(fail)?;
        return Ok(Chain { labels, p });
    }
    let doc = parse_edge_list(&text).map_err(fail)?;
    let g = doc.to_digraph().map_err(fail)?;
    let p = build_transition_matrix(&g).map_err(fail)?;
    Ok(Chain {
        labels: g.labels().to_vec(),
        p,
    })
}

fn parse_format(s: &str) -> CliResult<MatrixFormat> {
    s.parse()
        .map_err(|e: DsdError| Failure::Usage(e.to_string()))
}

fn emit(text: &str, output: Option<&Path>) -> CliResult<()> {
    match output {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Input(format!("<stdout>: {e}")))
        }
    }
}

fn json_line(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json") + "\n"
}

fn analyze(file: &Path, matrix: bool) -> CliResult<()> {
    let chain = load_chain(file, matrix)?;
    let s = chain.p.structure();
    let stationary = if s.irreducible {
        let pi = stationary_distribution(&chain.p).map_err(|e| Failure::from_dsd(file, e))?;
        let map: Map<String, Value> = chain
            .labels
            .iter()
            .cloned()
            .zip(pi.into_iter().map(Value::from))
            .collect();
        Value::Object(map)
    } else {
        Value::Null
    };
    emit(
        &json_line(&json!({
            "n": chain.p.dim(),
            "irreducible": s.irreducible,
            "period": s.period,
            "is_aperiodic": s.period.map(|d| d == 1),
            "scc_count": s.scc_count,
            "stationary": stationary,
        })),
        None,
    )
}

fn dist(args: &DistArgs, matrix: bool) -> CliResult<()> {
    let file = args.file.as_path();
    let q: LqOrder = args
        .q
        .parse()
        .map_err(|e: DsdError| Failure::Usage(e.to_string()))?;
    let format = parse_format(&args.out.format)?;
    let alpha = args.alpha.unwrap_or(0.0);
    if !(0.0..1.0).contains(&alpha) {
        return Err(Failure::Usage(format!(
            "--alpha must lie in [0, 1), got {alpha}"
        )));
    }
    let chain = load_chain(file, matrix)?;
    let fail = |e| Failure::from_dsd(file, e);
    let dm = match args.k {
        Some(k) => dsd_finite(&chain.p, k, q).map_err(fail)?,
        None => {
            let fd = FundamentalData::new(&chain.p).map_err(fail)?;
            dsd_infinite_lazy(&fd, alpha, q).map_err(fail)?
        }
    };
    let dm = dm.with_labels(chain.labels).map_err(fail)?;
    let text = write_distance_matrix(&dm, format).map_err(fail)?;
    emit(&text, args.out.output.as_deref())
}

fn z(file: &Path, alpha: f64, out: &OutputArgs, matrix: bool) -> CliResult<()> {
    let format = parse_format(&out.format)?;
    if !(0.0..1.0).contains(&alpha) {
        return Err(Failure::Usage(format!(
            "--alpha must lie in [0, 1), got {alpha}"
        )));
    }
    let chain = load_chain(file, matrix)?;
    let fail = |e| Failure::from_dsd(file, e);
    let fd = FundamentalData::new(&chain.p)
        .and_then(|fd| fd.with_alpha(alpha))
        .map_err(fail)?;
    let mut meta = Map::new();
    meta.insert("alpha".into(), json!(alpha));
    let text = write_matrix(&fd.z, &chain.labels, format, Some(&meta)).map_err(fail)?;
    emit(&text, out.output.as_deref())
}

fn check_metric(file: &Path, k: u64, matrix: bool) -> CliResult<()> {
    let chain = load_chain(file, matrix)?;
    let report = check_metric_hypothesis(&chain.p, k).map_err(|e| Failure::from_dsd(file, e))?;
    let witness = report
        .witness
        .map(|(i, j)| json!([chain.labels[i], chain.labels[j]]));
    emit(
        &json_line(&json!({ "k": report.k, "holds": report.holds, "witness": witness })),
        None,
    )?;
    if report.holds {
        Ok(())
    } else {
        Err(Failure::Violation)
    }
}

fn verify(file: &Path, cfg: VerifyConfig, matrix: bool) -> CliResult<()> {
    let chain = load_chain(file, matrix)?;
    let report = run_verification(&chain.p, &cfg).map_err(|e| Failure::from_dsd(file, e))?;
    let period = report.period.map_or("-".to_string(), |d| d.to_string());
    let mut text = format!("n={} period={period}\n", report.n);
    for c in &report.checks {
        let status = match (c.passed(), c.hard) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "WARN",
        };
        let kind = if c.hard { "hard" } else { "soft" };
        text.push_str(&format!(
            "{status} [{kind}] {}: residual={:.3e} bound={:.3e}\n",
            c.name, c.residual, c.bound
        ));
    }
    emit(&text, None)?;
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<_> = report.hard_failures().map(|c| c.name.clone()).collect();
        Err(Failure::Numerical(format!(
            "{}: hard checks failed: {}",
            file.display(),
            failed.join(", ")
        )))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match &cli.command {
        Command::Analyze { file } => analyze(file, cli.matrix),
        Command::Dist(args) => dist(args, cli.matrix),
        Command::Z { file, alpha, out } => z(file, *alpha, out, cli.matrix),
        Command::CheckMetric { file, k } => check_metric(file, *k, cli.matrix),
        Command::Verify {
            file,
            horizon,
            trials,
            seed,
        } => verify(
            file,
            VerifyConfig {
                horizon: *horizon,
                trials: *trials,
                seed: *seed,
                ..VerifyConfig::default()
            },
            cli.matrix,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Violation) => ExitCode::from(3),
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
    }
}
