use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::info;

use trimem::experiment::{
    emit_plot_data, parse_config, preset, print_config, run_experiment, ExperimentConfig, PRESETS,
};

/// Simulate networks of coupled quantum memristors and export plot data.
#[derive(Parser)]
#[command(name = "trimem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a built-in preset (figure groups run all six panels).
    Preset {
        name: String,
        /// Print the preset as a configuration file instead of running it.
        #[arg(long)]
        print_config: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// List the built-in presets.
    ListPresets,
    /// Check a configuration file and report every problem found.
    Validate { config: PathBuf },
    /// Convert an analysis CSV into whitespace-separated plot columns on stdout.
    Plotdata { csv: PathBuf },
}

#[derive(Args)]
struct Overrides {
    /// Output directory (figure groups write one subdirectory per panel).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the randomized entanglement estimates.
    #[arg(long)]
    seed: Option<u64>,
    /// Fock levels kept per memristor.
    #[arg(long)]
    truncation: Option<usize>,
    /// Override a modeling mode, e.g. `coupling_sign=charge`. Repeatable.
    #[arg(long = "mode", value_name = "KEY=VALUE")]
    modes: Vec<String>,
}

impl Overrides {
    fn apply(&self, config: &mut ExperimentConfig) -> anyhow::Result<()> {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(d) = self.truncation {
            config.set_truncation(d);
        }
        for m in &self.modes {
            let Some((key, value)) = m.split_once('=') else {
                bail!("--mode expects KEY=VALUE, got `{m}`");
            };
            config.modes.set(key.trim(), value.trim())?;
        }
        Ok(())
    }
}

fn run_all(configs: Vec<ExperimentConfig>, out: Option<&Path>) -> anyhow::Result<()> {
    let grouped = configs.len() > 1;
    let jobs: Vec<(ExperimentConfig, PathBuf)> = configs
        .into_iter()
        .map(|c| {
            let base = out.map(Path::to_path_buf).unwrap_or_else(|| c.output_dir.clone());
            let dir = if grouped { base.join(&c.name) } else { base };
            (c, dir)
        })
        .collect();
    for (c, _) in &jobs {
        c.validate().with_context(|| format!("experiment `{}`", c.name))?;
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(c, dir)| {
                scope.spawn(move || {
                    info!("running `{}` into {}", c.name, dir.display());
                    run_experiment(c, dir).map(|r| (c.name.clone(), dir.clone(), r.trajectory.max_trace_drift))
                })
            })
            .collect();
        for h in handles {
            let (name, dir, drift) = h.join().expect("experiment thread panicked")?;
            println!("{name}: wrote {} (max trace drift {drift:.1e})", dir.display());
        }
        Ok(())
    })
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate { config, overrides } => {
            let mut c = parse_config(&read(&config)?).with_context(|| format!("in {}", config.display()))?;
            overrides.apply(&mut c)?;
            run_all(vec![c], overrides.out.as_deref())
        }
        Command::Preset { name, print_config: print, overrides } => {
            let mut configs = preset(&name)?;
            for c in &mut configs {
                overrides.apply(c)?;
            }
            if print {
                let texts: Vec<String> = configs.iter().map(print_config).collect();
                print!("{}", texts.join("\n"));
                return Ok(());
            }
            run_all(configs, overrides.out.as_deref())
        }
        Command::ListPresets => {
            for p in PRESETS {
                println!("{:<10} {}", p.name, p.description);
            }
            Ok(())
        }
        Command::Validate { config } => {
            let c = parse_config(&read(&config)?).with_context(|| format!("in {}", config.display()))?;
            println!("{}: ok ({} memristors, truncation {})", config.display(), c.circuit.n_memristors(), c.truncation);
            Ok(())
        }
        Command::Plotdata { csv } => {
            let text = read(&csv)?;
            let out = emit_plot_data(&text).with_context(|| format!("in {}", csv.display()))?;
            print!("{out}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
