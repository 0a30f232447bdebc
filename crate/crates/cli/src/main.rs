use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use colme::harness::{run_scenario_with, write_outputs, RunOptions, ScenarioConfig};
use colme::separation::separation_table;
use colme::{presets, Error};

#[derive(Parser)]
#[command(name = "colme", version, about = "Collaborative mean estimation scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its CSV/JSON artifacts.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory (default: out/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for realizations.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print expected separation times for every class pair.
    SeparationTable {
        #[command(flatten)]
        source: Source,
        /// Print only the CSV form.
        #[arg(long)]
        csv: bool,
    },
    /// List bundled presets, or print one as a full config.
    Presets { name: Option<String> },
    /// Check a config without running it.
    Validate {
        #[command(flatten)]
        source: Source,
    },
}

#[derive(Args)]
struct Source {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled preset name.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    horizon: Option<u64>,
}

impl Source {
    fn load(&self) -> Result<ScenarioConfig, Error> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ScenarioConfig::load(path).map_err(|e| match e {
                Error::Io(msg) => Error::Config(format!("{}: {msg}", path.display())),
                other => other,
            })?,
            (None, Some(name)) => presets::preset(name)?,
            (None, None) => return Err(Error::Config("one of --config or --preset is required".into())),
        };
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(r) = self.realizations {
            cfg.realizations = r;
        }
        if let Some(n) = self.agents {
            cfg.n_agents = n;
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        Ok(cfg)
    }
}

enum Failure {
    Config(Error),
    Runtime(Error),
}

fn config_err(e: Error) -> Failure {
    Failure::Config(e)
}

fn validated(source: &Source) -> Result<ScenarioConfig, Failure> {
    let cfg = source.load().map_err(config_err)?;
    for w in cfg.validate().map_err(config_err)? {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { source, out, workers } => {
            let cfg = validated(&source)?;
            let dir = out.unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
            let result = run_scenario_with(&cfg, RunOptions { workers }).map_err(Failure::Runtime)?;
            write_outputs(&result, &dir).map_err(Failure::Runtime)?;
            let s = result.summary();
            println!("scenario        {}", s.name);
            println!(
                "final mse       local {:.3e}  collab {:.3e}  oracle {:.3e}",
                s.final_mse_local, s.final_mse_collab, s.final_mse_oracle
            );
            println!("wrong links     {:.4}", s.final_wrong_link_fraction);
            match s.oracle_region_entry {
                Some(t) => println!("within 2x oracle from t={t}"),
                None => println!("within 2x oracle: not reached"),
            }
            println!("prune events    {}", s.prune_events);
            println!("artifacts       {}", dir.display());
        }
        Command::SeparationTable { source, csv } => {
            let cfg = validated(&source)?;
            let table = separation_table(&cfg.class_specs(), &cfg.bound_config()).map_err(config_err)?;
            if !csv {
                println!("{}", table.to_text());
            }
            print!("{}", table.to_csv());
        }
        Command::Presets { name: None } => {
            for name in presets::names() {
                println!("{name}");
            }
        }
        Command::Presets { name: Some(name) } => {
            print!("{}", presets::preset(&name).map_err(config_err)?.to_toml_string());
        }
        Command::Validate { source } => {
            let cfg = validated(&source)?;
            println!("{}: ok", cfg.name);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COLME_LOG", "warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
