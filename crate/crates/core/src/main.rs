use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use shotlab::error::{Error, Result};
use shotlab::experiment::{self, exit, ExperimentConfig};
use shotlab::rng::Seed;

/// Monte-Carlo experiments for shot-noise processes with immigration at
/// random times, checked against their Gaussian scaling limit.
#[derive(Debug, Parser)]
#[command(name = "shotlab", version)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in experiment, see --list-presets.
    #[arg(long)]
    preset: Option<String>,

    /// Master seed (overrides the configuration).
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Number of Monte-Carlo replicates (overrides the configuration).
    #[arg(long)]
    replicates: Option<usize>,

    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,

    /// Print the preset names and exit.
    #[arg(long)]
    list_presets: bool,

    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match (&cli.config, &cli.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ExperimentConfig>(&text)?
        }
        (None, Some(name)) => experiment::preset(name)
            .ok_or_else(|| Error::Config(format!("unknown preset {name:?}; try --list-presets")))?,
        _ => return Err(Error::Config("exactly one of --config or --preset is required".into())),
    };
    if let Some(seed) = cli.seed {
        config.seed = Seed(seed);
    }
    if let Some(out) = &cli.out {
        config.output_directory = Some(out.clone());
    }
    if let Some(r) = cli.replicates {
        config.scenario.replicates = r;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<i32> {
    if cli.list_presets {
        for (name, summary) in experiment::PRESETS {
            println!("{name:24} {summary}");
        }
        return Ok(exit::PASS);
    }
    let config = load(cli)?;
    if cli.print_config {
        println!("{}", serde_json::to_string_pretty(&config)?);
        return Ok(exit::PASS);
    }
    let dir = config
        .output_directory
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("shotlab-{}", config.name)));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let reports = pool.install(|| experiment::run_experiment(&config, &dir))?;
    for check in &reports.checks {
        let verdict = if check.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {:18} {:?}", check.name, check.statistic);
    }
    println!("wrote {}", dir.display());
    Ok(reports.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("shotlab: {err}");
            experiment::exit_code_for(&err)
        }
    };
    ExitCode::from(code as u8)
}
