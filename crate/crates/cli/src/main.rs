use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use xi_copula::approx::approximate_by_shuffle;
use xi_copula::calibration::calibrate_alpha;
use xi_copula::experiments::{coverage_study, power_study, ExperimentConfig, RunManifest};
use xi_copula::inference::{
    asymptotic_test_with, exact_mc_test_with, null_quantile_table, Alternative, CiMethod,
    TestMethod,
};
use xi_copula::rng::DEFAULT_SEED;
use xi_copula::xi::{population_xi, xi_hat};
use xi_copula::{io, parse_copula_spec, Error};

#[derive(Parser)]
#[command(name = "xi-copula", version, propagate_version = true, about = "Chatterjee's xi, shuffles of Min and independence-test studies")]
struct Cli {
    /// Upper bound on worker threads for parallel Monte-Carlo work.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimator on data or population value of a copula.
    #[command(subcommand)]
    Xi(XiCommand),
    /// Draw an i.i.d. sample from a copula.
    Sample(SampleArgs),
    /// Write the m-strip shuffle approximation of a copula.
    ApproxShuffle(ApproxArgs),
    /// Mixture weight reaching a target xi.
    Calibrate(CalibrateArgs),
    /// Test independence of the columns of a data file.
    Test(TestArgs),
    /// Monte-Carlo null quantiles of |xi_n|.
    NullQuantiles(NullArgs),
    /// Rejection rates along a family with constant xi.
    Power(StudyArgs),
    /// Confidence-interval coverage study.
    Coverage(StudyArgs),
}

#[derive(Subcommand)]
enum XiCommand {
    /// Rank estimator on a CSV with columns x,y.
    Compute {
        #[arg(long = "in")]
        input: PathBuf,
        /// Seed for breaking ties among x values.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        tie_seed: u64,
    },
    /// Population xi of a copula spec.
    Population {
        #[arg(long)]
        copula: String,
    },
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    copula: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long)]
    copula: String,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    base: String,
    #[arg(long)]
    target: f64,
    #[arg(long)]
    m: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Asymptotic,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlternativeArg {
    TwoSided,
    Greater,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Null draws for the exact test.
    #[arg(long = "B", alias = "b", default_value_t = 2000)]
    b: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = AlternativeArg::TwoSided)]
    alternative: AlternativeArg,
}

#[derive(Args)]
struct NullArgs {
    #[arg(long)]
    n: usize,
    #[arg(long = "B", alias = "b", default_value_t = 2000)]
    b: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1")]
    alphas: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the method named in the config file.
    #[arg(long)]
    method: Option<String>,
    /// Overrides the output path named in the config file.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// JSON value of `x`, with integral values written without a fraction.
fn num(x: f64) -> Value {
    if x.is_finite() && x == x.trunc() && x.abs() < 9.0e15 {
        json!(x as i64)
    } else {
        json!(x)
    }
}

fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => num(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(items) => Value::Array(items.into_iter().map(normalize).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

fn print_json(v: Value) {
    println!("{}", normalize(v));
}

fn echo_config(command: &str, fields: Value) {
    let mut map = Map::new();
    map.insert("command".into(), json!(command));
    map.insert("config".into(), normalize(fields));
    eprintln!("{}", Value::Object(map));
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn write_sidecar(out: &Path, command: &str, seed: Option<u64>, config: Value) -> Result<(), Error> {
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": seed,
        "config": normalize(config),
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&sidecar(out), &(text + "\n"))
}

fn install<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Error> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn run(cli: Cli) -> Result<(), Error> {
    let workers = cli.workers;
    match cli.command {
        Command::Xi(XiCommand::Compute { input, tie_seed }) => {
            echo_config("xi compute", json!({ "in": input, "tie_seed": tie_seed }));
            let sample = io::read_pairs_csv(&input)?;
            let xi = xi_hat(&sample, tie_seed)?;
            print_json(json!({ "n": sample.len(), "xi_hat": xi }));
        }
        Command::Xi(XiCommand::Population { copula }) => {
            echo_config("xi population", json!({ "copula": copula }));
            let c = parse_copula_spec(&copula)?;
            print_json(json!({ "xi": population_xi(&c) }));
        }
        Command::Sample(a) => {
            let config = json!({ "copula": a.copula, "n": a.n, "seed": a.seed, "out": a.out });
            echo_config("sample", config.clone());
            if a.n == 0 {
                return Err(Error::SampleTooSmall { needed: 1, got: 0 });
            }
            let c = parse_copula_spec(&a.copula)?;
            io::write_pairs_csv(&a.out, &c.sample(a.n, a.seed))?;
            write_sidecar(&a.out, "sample", Some(a.seed), config)?;
        }
        Command::ApproxShuffle(a) => {
            let config = json!({ "copula": a.copula, "m": a.m, "out": a.out });
            echo_config("approx-shuffle", config.clone());
            if a.m == 0 {
                return Err(Error::InvalidArgument("m must be at least 1".into()));
            }
            let c = parse_copula_spec(&a.copula)?;
            let shuffle = approximate_by_shuffle(&c, a.m)?;
            io::write_shuffle_csv(&a.out, &shuffle.segments())?;
            write_sidecar(&a.out, "approx-shuffle", None, config)?;
        }
        Command::Calibrate(a) => {
            echo_config("calibrate", json!({ "base": a.base, "target": a.target, "m": a.m }));
            if a.m == 0 {
                return Err(Error::InvalidArgument("m must be at least 1".into()));
            }
            let base = parse_copula_spec(&a.base)?;
            let shuffle = approximate_by_shuffle(&base, a.m)?;
            let result = calibrate_alpha(a.target, &shuffle, &base)?;
            print_json(serde_json::to_value(result).expect("serializable"));
        }
        Command::Test(a) => {
            let alternative = match a.alternative {
                AlternativeArg::TwoSided => Alternative::TwoSided,
                AlternativeArg::Greater => Alternative::Greater,
            };
            let method = match a.method {
                MethodArg::Asymptotic => TestMethod::Asymptotic,
                MethodArg::Exact => TestMethod::ExactMc,
            };
            echo_config(
                "test",
                json!({
                    "in": a.input, "method": method.name(), "alpha": a.alpha,
                    "B": a.b, "seed": a.seed, "alternative": alternative,
                }),
            );
            let sample = io::read_pairs_csv(&a.input)?;
            let result = match method {
                TestMethod::Asymptotic => asymptotic_test_with(&sample, a.alpha, a.seed, alternative)?,
                TestMethod::ExactMc => install(workers, || {
                    exact_mc_test_with(&sample, a.alpha, a.b, a.seed, alternative)
                })??,
            };
            print_json(serde_json::to_value(result).expect("serializable"));
        }
        Command::NullQuantiles(a) => {
            let config = json!({ "n": a.n, "B": a.b, "seed": a.seed, "alphas": a.alphas, "out": a.out });
            echo_config("null-quantiles", config.clone());
            let table = install(workers, || null_quantile_table(a.n, &a.alphas, a.b, a.seed))??;
            write_file(&a.out, &table.to_csv())?;
            write_sidecar(&a.out, "null-quantiles", Some(a.seed), config)?;
        }
        Command::Power(a) => run_study("power", a, workers)?,
        Command::Coverage(a) => run_study("coverage", a, workers)?,
    }
    Ok(())
}

fn run_study(study: &str, args: StudyArgs, workers: Option<usize>) -> Result<(), Error> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    if let Some(w) = workers {
        cfg.workers = w;
    }
    if let Some(out) = args.out {
        cfg.out = Some(out);
    }
    if let Some(m) = &args.method {
        match study {
            "power" => cfg.test_method = TestMethod::parse(m)?,
            _ => cfg.ci_method = CiMethod::parse(m)?,
        }
    }
    cfg.validate()?;
    let echo: Map<String, Value> = cfg
        .entries()
        .into_iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    echo_config(study, Value::Object(echo));

    let start = Instant::now();
    let csv = match study {
        "power" => power_study(&cfg, cfg.test_method)?.to_csv()?,
        _ => coverage_study(&cfg, cfg.ci_method)?.to_csv()?,
    };
    match &cfg.out {
        Some(out) => write_file(out, &csv)?,
        None => print!("{csv}"),
    }
    let manifest = RunManifest::new(study, &cfg, cfg.out.as_deref(), start.elapsed());
    let path = cfg
        .manifest
        .clone()
        .or_else(|| cfg.out.as_deref().map(sidecar));
    match path {
        Some(p) => write_file(&p, &(manifest.to_json() + "\n"))?,
        None => eprintln!("{}", manifest.to_json()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(1)
        }
    }
}
