use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use yieldlag::io::{
    file_digest, load_macro_csv, load_yields_csv, render_summary, write_results, write_simulation, ConfigFile,
    InputRecord, ResultBundle, SimulationFile,
};
use yieldlag::oracle::run_checks;
use yieldlag::{analyze, simulate_lagged_regression, Config, Error};

#[derive(Parser)]
#[command(
    name = "yieldlag",
    version,
    about = "Functional lagged regression of a yield curve on macro series"
)]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the filter from a yield panel and a macro panel.
    Analyze {
        #[arg(long)]
        yields: PathBuf,
        #[arg(long = "macro")]
        macro_path: PathBuf,
        /// TOML file overriding the default tuning parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Recorded in the summary; the estimator itself is deterministic.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Draw a synthetic panel from a known model.
    Simulate {
        /// TOML simulation spec.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in numerical self-checks.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Failure with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_validation() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn run_analyze(
    yields: &Path,
    macro_path: &Path,
    config_path: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let panel = load_yields_csv(yields)?;
    let macro_panel = load_macro_csv(macro_path)?;
    info!(
        "loaded {} periods x {} maturities and {} series",
        panel.horizon(),
        panel.n_maturities(),
        macro_panel.dim()
    );
    let mut config = Config::defaults(panel.horizon(), panel.n_maturities());
    let mut inputs = vec![
        InputRecord {
            role: "yields".into(),
            path: yields.display().to_string(),
            sha256: file_digest(yields)?,
        },
        InputRecord {
            role: "macro".into(),
            path: macro_path.display().to_string(),
            sha256: file_digest(macro_path)?,
        },
    ];
    if let Some(path) = config_path {
        ConfigFile::parse(&read_text(path)?, &path.display().to_string())?.apply(&mut config);
        inputs.push(InputRecord {
            role: "config".into(),
            path: path.display().to_string(),
            sha256: file_digest(path)?,
        });
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let analysis = analyze(&panel, &macro_panel, &config).map_err(|e| Failure {
        code: if e.source.is_validation() { 2 } else { 1 },
        message: e.to_string(),
    })?;
    let bundle = ResultBundle::new(&analysis, &panel, inputs);
    let written = write_results(&bundle, out)?;
    print!("{}", render_summary(&bundle.summary));
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_simulate(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let mut spec = SimulationFile::parse(&read_text(config_path)?, &config_path.display().to_string())?.into_spec()?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let (panel, macro_panel, truth) = simulate_lagged_regression(&spec)?;
    info!("simulated {} periods with seed {}", spec.horizon, spec.seed);
    for path in write_simulation(out, &panel, &macro_panel, &truth)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_check(seed: u64) -> Result<(), Failure> {
    let results = run_checks(seed);
    for r in &results {
        println!("[{}] {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: format!("{failed} of {} checks failed", results.len()),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Analyze {
            yields,
            macro_path,
            config,
            out,
            seed,
        } => run_analyze(yields, macro_path, config.as_deref(), out, *seed),
        Command::Simulate { config, out, seed } => run_simulate(config, out, *seed),
        Command::Check { seed } => run_check(*seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
