use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use polex_cli::acceptance::{run_all, surprises, KNOWN_FAILURES};
use polex_cli::config::{parse_override, OUTPUT_ROOT_ENV};
use polex_cli::manifest::MANIFEST_FILE;
use polex_cli::{run, sweep, CliError, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "polex", version, about = "Polarization exchange between photon beams in an atomic gas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(Source),
    /// Run an experiment once per value of one parameter.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Parameter to vary; `N` is shorthand for `n_list`.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// Run the full acceptance suite.
    Check,
}

#[derive(Args)]
#[command(after_help = format!("Outputs go to ${OUTPUT_ROOT_ENV}/<experiment> unless output_dir is set."))]
struct Source {
    /// TOML config file.
    config: Option<PathBuf>,
    /// Experiment name, for runs without a config file.
    #[arg(long, short)]
    experiment: Option<String>,
    /// Parameter override `key=value`, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let overrides = self.set.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>, _>>()?;
        match (&self.config, &self.experiment) {
            (Some(path), None) => ExperimentConfig::load(path, &overrides),
            (None, Some(name)) => {
                let experiment: Experiment = name.parse()?;
                ExperimentConfig::new(experiment, &overrides.into_iter().collect::<Table>())
            }
            (Some(_), Some(_)) => Err(CliError::Config("give a config file or --experiment, not both".into())),
            (None, None) => Err(CliError::Config("give a config file or --experiment".into())),
        }
    }
}

fn parse_values(raw: &str) -> Result<Vec<Value>, CliError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_override(&format!("v={s}")).map(|(_, v)| v))
        .collect()
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(source) => {
            let config = source.load()?;
            let m = run(&config)?;
            for line in &m.report {
                println!("{line}");
            }
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
            let failed = m.failed_checks();
            for c in m.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {} = {:e} (needs {})", c.name, c.value, c.limit);
            }
            println!("checks: {}/{} passed", m.checks.len() - failed, m.checks.len());
            println!("manifest: {}", m.output_dir.join(MANIFEST_FILE).display());
            if failed > 0 {
                return Err(CliError::ChecksFailed { failed });
            }
            Ok(())
        }
        Command::Sweep { source, axis, values } => {
            let config = source.load()?;
            let summary = sweep(&config, &axis, &parse_values(&values)?)?;
            for r in &summary.runs {
                match &r.error {
                    None => println!("{axis} = {}: ok ({})", r.value, r.output_dir.display()),
                    Some(e) => eprintln!("{axis} = {}: failed: {e}", r.value),
                }
            }
            if let Some(f) = &summary.fit {
                println!("first crossing = {:.6} * {} + {:.6}", f.slope, f.abscissa, f.intercept);
            }
            println!("aggregate: {}", summary.output_dir.join("aggregate.csv").display());
            match summary.failed() {
                0 => Ok(()),
                n => Err(CliError::Output(format!("{n} sub-run(s) failed"))),
            }
        }
        Command::Check => {
            let criteria = run_all();
            for c in &criteria {
                println!("{}", c.line());
            }
            let failed = criteria.iter().filter(|c| !c.passed()).count();
            println!("{}/{} criteria pass; known failing sub-checks: {}", criteria.len() - failed, criteria.len(), KNOWN_FAILURES.join(", "));
            for s in surprises(&criteria) {
                println!("unexpected: {s}");
            }
            if failed > 0 {
                return Err(CliError::ChecksFailed { failed });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
