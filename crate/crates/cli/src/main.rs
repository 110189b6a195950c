//! `xispec` command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use xispec::exact_oracle::{self, Suite};
use xispec::hightest::{self, CalibrationMode, CenteringSource, StatId, TestConfig, TestReport};
use xispec::montecarlo::{self, EsdKind, ModelId, SimConfig};
use xispec::seeding::{self, tags};
use xispec::{DataMatrix, Error, TiePolicy};

const VERSION: &str = env!("CARGO_PKG_VERSION");

mod exit {
    pub const FAILURE: u8 = 1;
    pub const PARSE: u8 = 2;
    pub const TIES: u8 = 3;
    pub const SIM_CONFIG: u8 = 4;
    pub const MISMATCH: u8 = 5;
}

#[derive(Parser, Debug)]
#[command(name = "xispec", version, about = "Rank correlation matrices, spectral limits and independence tests")]
struct Cli {
    /// Worker threads (defaults to available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Master seed.
    #[arg(long, global = true, env = "XISPEC_SEED", default_value_t = 0)]
    seed: u64,

    /// Write output here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run independence tests on a CSV data matrix (rows are observations).
    Test(TestArgs),
    /// Empirical size or power table.
    Simulate(SimulateArgs),
    /// Pooled spectrum of Phi or Psi against its limit law.
    Esd(EsdArgs),
    /// Null draws of tr Psi^k.
    Clt(CltArgs),
    /// Exact rational checks by enumeration.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Ties {
    Error,
    Random,
}

#[derive(Args, Debug)]
struct TestArgs {
    /// Input CSV; an optional non-numeric first row is treated as a header.
    input: PathBuf,
    /// Comma-separated statistic names (default: all).
    #[arg(long, value_delimiter = ',')]
    stats: Vec<StatId>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Null replications for Monte-Carlo calibration.
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, value_enum, default_value = "error")]
    ties: Ties,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Study {
    Size,
    Power,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(value_enum)]
    study: Study,
    /// Models, comma separated (default: a,b for size and c,d,e,f for power).
    #[arg(long, value_delimiter = ',')]
    model: Vec<ModelId>,
    /// Comma-separated statistic names (default: all).
    #[arg(long, value_delimiter = ',')]
    stats: Vec<StatId>,
    #[arg(long, requires = "p")]
    n: Option<usize>,
    #[arg(long, requires = "n")]
    p: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    calibration_reps: usize,
    #[arg(long, default_value_t = montecarlo::TABLE_ALPHA)]
    alpha: f64,
    /// Full grid n = p in {50, 70, 100, 200, 300} with 1000 replications.
    #[arg(long, conflicts_with_all = ["n", "p"])]
    full: bool,
}

#[derive(Args, Debug)]
struct EsdArgs {
    #[arg(long)]
    kind: EsdKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 50)]
    bins: usize,
}

#[derive(Args, Debug)]
struct CltArgs {
    /// Powers k, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    k: Vec<u32>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: Suite,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::new(exit::FAILURE, e.to_string())
    }
}

fn input_error(e: Error) -> Failure {
    match e {
        Error::TiesPresent { .. } => Failure::new(exit::TIES, e.to_string()),
        Error::InvalidData(_) | Error::InvalidSample(_) | Error::DegenerateColumn(_) => {
            Failure::new(exit::PARSE, e.to_string())
        }
        other => Failure::new(exit::FAILURE, other.to_string()),
    }
}

fn sim_error(e: Error) -> Failure {
    match e {
        Error::EigenFailure(_) | Error::NotSymmetric(_) => Failure::new(exit::FAILURE, e.to_string()),
        other => Failure::new(exit::SIM_CONFIG, other.to_string()),
    }
}

fn header_line(seed: u64) -> String {
    let argv: Vec<String> = std::env::args().collect();
    format!("# xispec {VERSION}; command: {}; seed: {seed}", argv.join(" "))
}

fn emit(output: Option<&Path>, body: &str) -> Result<(), Failure> {
    match output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(body.as_bytes())?;
            w.flush()?;
        }
        None => io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}

/// Reads a numeric CSV, skipping a first row that does not parse as numbers.
fn read_matrix(path: &Path) -> Result<DataMatrix, Failure> {
    let file = File::open(path)
        .map_err(|e| Failure::new(exit::PARSE, format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Failure::new(exit::PARSE, format!("{}: {e}", path.display())))?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(Failure::new(
                    exit::PARSE,
                    format!("{}: line {}: {e}", path.display(), i + 1),
                ))
            }
        }
    }
    DataMatrix::from_rows(&rows).map_err(input_error)
}

#[derive(Serialize)]
struct TestOutput {
    input: String,
    n: usize,
    p: usize,
    ties: String,
    alpha: f64,
    seed: u64,
    calibration_reps: usize,
    results: Vec<TestReport>,
}

fn cmd_test(args: &TestArgs, seed: u64) -> Result<String, Failure> {
    let data = read_matrix(&args.input)?;
    let ties = match args.ties {
        Ties::Error => TiePolicy::Error,
        Ties::Random => TiePolicy::Random(seeding::derive_seed(seed, &[tags::TIES])),
    };
    let stats = if args.stats.is_empty() {
        StatId::ALL.to_vec()
    } else {
        args.stats.clone()
    };
    let cfg = TestConfig {
        alpha: args.alpha,
        calibration: CalibrationMode::Auto {
            reps: args.reps,
            seed,
        },
        xi4_centering: CenteringSource::Simulated {
            reps: args.reps,
            seed,
        },
        ties,
        ..TestConfig::default()
    };
    let results = hightest::run_tests(&data, &stats, &cfg).map_err(|e| match e {
        Error::TiesPresent { .. } => input_error(e),
        other => Failure::new(exit::FAILURE, other.to_string()),
    })?;
    let out = TestOutput {
        input: args.input.display().to_string(),
        n: data.n(),
        p: data.p(),
        ties: match ties {
            TiePolicy::Error => "error".into(),
            TiePolicy::Random(s) => format!("random({s})"),
        },
        alpha: args.alpha,
        seed,
        calibration_reps: args.reps,
        results,
    };
    let json = serde_json::to_string_pretty(&out).map_err(|e| Failure::new(exit::FAILURE, e.to_string()))?;
    Ok(format!("{}\n{json}\n", header_line(seed)))
}

fn cmd_simulate(args: &SimulateArgs, seed: u64) -> Result<String, Failure> {
    let models = if args.model.is_empty() {
        match args.study {
            Study::Size => vec![ModelId::A, ModelId::B],
            Study::Power => vec![ModelId::C, ModelId::D, ModelId::E, ModelId::F],
        }
    } else {
        args.model.clone()
    };
    let mut cfg = if args.full {
        SimConfig::full(models, seed)
    } else {
        SimConfig::desk(models, seed)
    };
    if let (Some(n), Some(p)) = (args.n, args.p) {
        cfg.grid = vec![(n, p)];
    }
    if !args.stats.is_empty() {
        cfg.stats = args.stats.clone();
    }
    if let Some(reps) = args.reps {
        cfg.reps = reps;
    }
    cfg.alpha = args.alpha;
    cfg.calibration_reps = args.calibration_reps;
    let table = match args.study {
        Study::Size => montecarlo::run_size(&cfg),
        Study::Power => montecarlo::run_power(&cfg),
    }
    .map_err(sim_error)?;
    Ok(format!("{}\n{}", header_line(seed), table.to_csv()))
}

fn cmd_esd(args: &EsdArgs, seed: u64) -> Result<String, Failure> {
    let r = montecarlo::run_esd(args.kind, args.n, args.p, args.reps, args.bins, seed)
        .map_err(sim_error)?;
    Ok(format!(
        "{}\n# law: {}\n# clipped: {}\n# ks: {}\n{}",
        header_line(seed),
        r.law.describe(),
        r.histogram.clipped(),
        r.ks,
        r.histogram.to_csv()
    ))
}

fn cmd_clt(args: &CltArgs, seed: u64) -> Result<String, Failure> {
    let r = montecarlo::run_clt(&args.k, args.n, args.p, args.reps, seed).map_err(sim_error)?;
    let mut out = header_line(seed);
    out.push('\n');
    for s in &r.per_k {
        out.push_str(&format!(
            "# k: {}; mean: {}; variance: {}; limit_variance: {}; skewness: {}",
            s.k, s.mean, s.variance, s.limit_variance, s.skewness
        ));
        if let Some(m) = s.exact_mean {
            out.push_str(&format!("; exact_mean: {m}"));
        }
        out.push('\n');
    }
    out.push_str(&r.draws_csv());
    Ok(out)
}

fn cmd_verify(args: &VerifyArgs, seed: u64, output: Option<&Path>) -> Result<(), Failure> {
    let reports = exact_oracle::run_suite(args.suite).map_err(|e| Failure::new(exit::FAILURE, e.to_string()))?;
    let mut out = header_line(seed);
    out.push('\n');
    for r in &reports {
        out.push_str(&format!("{r}\n"));
    }
    emit(output, &out)?;
    let bad = reports.iter().filter(|r| !r.matches).count();
    if bad > 0 {
        return Err(Failure::new(
            exit::MISMATCH,
            format!("{bad} of {} checks mismatched", reports.len()),
        ));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::new(exit::FAILURE, e.to_string()))?;
    }
    let output = cli.output.as_deref();
    let body = match &cli.command {
        Command::Test(a) => cmd_test(a, cli.seed)?,
        Command::Simulate(a) => cmd_simulate(a, cli.seed)?,
        Command::Esd(a) => cmd_esd(a, cli.seed)?,
        Command::Clt(a) => cmd_clt(a, cli.seed)?,
        Command::Verify(a) => return cmd_verify(a, cli.seed, output),
    };
    emit(output, &body)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("xispec: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
