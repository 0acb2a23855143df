use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use febench::{registry, run_scenario, CliError, Result, ScenarioConfig};

/// Run fe-workbench scenarios from JSON configs.
#[derive(Debug, Parser)]
#[command(name = "febench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its outputs plus manifest.json.
    Run(Inputs),
    /// Parse and validate a config without running it; prints the resolved config.
    Validate(Inputs),
    /// List scenarios, optionally filtered by a substring.
    List {
        filter: Option<String>,
        /// Print the default config of a scenario instead of the table.
        #[arg(long, value_name = "NAME")]
        template: Option<String>,
    },
}

#[derive(Debug, Args)]
struct Inputs {
    /// Scenario name; may be omitted when a config is given.
    scenario: Option<String>,
    #[arg(long, env = "FEBENCH_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, env = "FEBENCH_OUT", value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, env = "FEBENCH_SEED")]
    seed: Option<u64>,
}

impl Inputs {
    fn resolve(&self) -> Result<ScenarioConfig> {
        match (&self.scenario, &self.config) {
            (None, None) => Err(CliError::Config("give a scenario name or --config".into())),
            (Some(name), None) => Ok(ScenarioConfig::named(name)),
            (name, Some(path)) => {
                let cfg = ScenarioConfig::load(path)?;
                match name {
                    Some(n) if registry::find(n)?.name != registry::find(&cfg.scenario)?.name => Err(CliError::Config(format!(
                        "scenario: command line says {n:?} but {} says {:?}",
                        path.display(),
                        cfg.scenario
                    ))),
                    _ => Ok(cfg),
                }
            }
        }
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("config values serialize")
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(inputs) => {
            let cfg = inputs.resolve()?;
            let m = run_scenario(&cfg, inputs.out.as_deref(), inputs.seed)?;
            println!("{} (seed {}) finished in {:.2} s", m.scenario, m.seed, m.wall_time_s);
            for f in &m.outputs {
                println!("  {:<24} {:>10} B  {}", f.file, f.bytes, &f.sha256[..16]);
            }
        }
        Command::Validate(inputs) => {
            let mut cfg = registry::validate(&inputs.resolve()?)?;
            cfg.seed = inputs.seed.or(cfg.seed);
            cfg.output_dir = inputs.out.or(cfg.output_dir);
            println!("{}", pretty(&cfg));
        }
        Command::List { filter, template } => {
            if let Some(name) = template {
                println!("{}", pretty(&registry::template(&name)?));
                return Ok(());
            }
            let rows = registry::list(filter.as_deref());
            println!("{:<13} {:>3}  {:<48} SUMMARY", "NAME", "CRT", "REPRODUCES");
            for s in rows {
                let crit = s.criterion.map_or("-".to_owned(), |c| c.to_string());
                println!("{:<13} {:>3}  {:<48} {}", s.name, crit, s.figure, s.summary);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("febench: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
