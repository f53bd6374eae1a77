use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

use config::Config;

/// Dilution planning on Farey-derived concentration lattices.
#[derive(Debug, Parser)]
#[command(name = "fsd", version, about, long_about = None)]
struct Cli {
    /// key = value config file (keys: n, density, viscosity, height, unit_width,
    /// injection_speed, characteristic_length, output_dir, arm_order)
    #[arg(long, global = true, env = config::CONFIG_ENV)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Bs,
    Rf,
    Fsd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArmOrderArg {
    Alternating,
    SampleFirst,
}

#[derive(Debug, Args)]
struct Level {
    /// Accuracy level; lattices have denominator 2^n
    #[arg(long)]
    n: Option<u32>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a BS, RF or FSD lattice
    Gen {
        #[command(flatten)]
        level: Level,
        #[arg(long, value_enum, default_value = "fsd")]
        kind: Kind,
        /// Directory for <kind>_<2^n>.csv and .json; stdout if absent
        #[arg(long)]
        output: Option<PathBuf>,
        /// Format written to stdout when no output directory is set
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Approximate a target CF and compare BS against FSD
    Approx {
        /// Target CF: p/q, decimal, or percentage (e.g. 9/13, 0.38, 69.3%)
        #[arg(long)]
        target: String,
        #[command(flatten)]
        level: Level,
        /// Lattice the primary answer is taken from
        #[arg(long, value_enum, default_value = "fsd")]
        lattice: Kind,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Build the dilution plan, inlet states and hydrodynamic verdict for a target
    Plan {
        #[arg(long)]
        target: String,
        #[command(flatten)]
        level: Level,
        /// Write the network schematic (SVG) here
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Write the network description (JSON) here
        #[arg(long)]
        description: Option<PathBuf>,
        #[arg(long, value_enum)]
        arm_order: Option<ArmOrderArg>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Compare BS and FSD approximations for every target in a CSV file
    Batch {
        /// One target per line; `-` reads stdin
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        level: Level,
        /// Report CSV; stdout if absent
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List injection ratios giving the target CF at increasing output flow rates
    Throughput {
        #[arg(long)]
        target: String,
        #[command(flatten)]
        level: Level,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<bool> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    let mut set_n = |level: &Level| {
        if let Some(n) = level.n {
            cfg.n = n;
        }
    };
    match cli.command {
        Command::Gen {
            level,
            kind,
            output,
            format,
        } => {
            set_n(&level);
            let dir = output.or(cfg.output_dir.clone());
            commands::gen(&cfg, kind, dir.as_deref(), format, out)?;
        }
        Command::Approx {
            target,
            level,
            lattice,
            format,
        } => {
            set_n(&level);
            commands::approx(&cfg, &target, lattice, format, out)?;
        }
        Command::Plan {
            target,
            level,
            svg,
            description,
            arm_order,
            format,
        } => {
            set_n(&level);
            if let Some(order) = arm_order {
                cfg.arm_order = match order {
                    ArmOrderArg::Alternating => fsd_core::layout::ArmOrder::Alternating,
                    ArmOrderArg::SampleFirst => fsd_core::layout::ArmOrder::SampleFirst,
                };
            }
            let files = commands::PlanFiles {
                svg: svg.as_deref(),
                description: description.as_deref(),
            };
            commands::plan(&cfg, &target, files, format, out)?;
        }
        Command::Batch {
            input,
            level,
            output,
        } => {
            set_n(&level);
            return commands::batch(&cfg, &input, output.as_deref(), out);
        }
        Command::Throughput {
            target,
            level,
            format,
        } => {
            set_n(&level);
            commands::throughput(&cfg, &target, format, out)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out).and_then(|ok| {
        out.flush()?;
        Ok(ok)
    }) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
