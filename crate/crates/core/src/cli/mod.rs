//! Command-line front end of the `flito` binary.

mod commands;
mod config;
mod plot;
mod table;

pub use commands::{
    cmd_coeffs, cmd_convergence, cmd_minimal_q, cmd_simulate_integrals, cmd_solve, CoeffsOutcome, VERSION,
};
pub use config::{parse_scheme, scheme_label, ExperimentConfig, ModelKind, Trunc};
pub use plot::{convergence_svg, Series};
pub use table::{Cell, ResultTable};

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "flito", version, about = "Fourier-Legendre iterated Ito integrals and SPDE schemes")]
pub struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Step size(s), comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub step: Vec<f64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Override any configuration key.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    pub show_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a coefficient tensor and write its cache file.
    Coeffs {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 6)]
        q: usize,
        /// Print the 7x7 slice Cbar_3jk.
        #[arg(long)]
        table2: bool,
    },
    /// Minimal truncations q, q1 for each step.
    MinimalQ,
    /// Monte Carlo check of the truncation residuals.
    SimulateIntegrals,
    /// Simulate one path of the diagnostic model.
    Solve {
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        model: Option<String>,
    },
    /// Strong-error study with a log-log plot.
    Convergence {
        /// SVG output; defaults to the CSV path with an `.svg` extension.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

impl Cli {
    /// Defaults, then the config file, then `--seed` and `--set` overrides.
    pub fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(Command::Solve { scheme, model }) = &self.command {
            if let Some(s) = scheme {
                cfg.set("scheme", s)?;
            }
            if let Some(m) = model {
                cfg.set("model", m)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v)?;
        }
        Ok(cfg)
    }

    fn single_step(&self, default: f64) -> Result<f64> {
        match self.step.as_slice() {
            [] => Ok(default),
            [s] => Ok(*s),
            _ => Err(Error::InvalidArgument("this command takes a single --step".into())),
        }
    }

    fn steps(&self, default: &[f64]) -> Vec<f64> {
        if self.step.is_empty() {
            default.to_vec()
        } else {
            self.step.clone()
        }
    }
}

fn emit<W: Write>(table: &ResultTable, out: Option<&PathBuf>, stdout: &mut W) -> Result<()> {
    match out {
        Some(p) => table.write_to(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => table.write_to(stdout),
    }
}

/// Runs a parsed command line, writing human output to `stdout`.
pub fn run<W: Write>(cli: &Cli, stdout: &mut W) -> Result<()> {
    let cfg = cli.config()?;
    if cli.show_config {
        stdout.write_all(cfg.render().as_bytes())?;
        return Ok(());
    }
    let Some(command) = &cli.command else {
        return Err(Error::InvalidArgument("no command given (see --help)".into()));
    };
    match command {
        Command::Coeffs { k, q, table2 } => {
            let path = cli.out.clone().unwrap_or_else(|| PathBuf::from(format!("coeffs_k{k}_q{q}.flc")));
            let o = cmd_coeffs(*k, *q, &path, *table2)?;
            stdout.write_all(o.render().as_bytes())?;
        }
        Command::MinimalQ => {
            let t = cmd_minimal_q(&cfg, &cli.steps(&cfg.table_steps))?;
            emit(&t, cli.out.as_ref(), stdout)?;
        }
        Command::SimulateIntegrals => {
            let step = cli.single_step(cfg.integral_step)?;
            let t = cmd_simulate_integrals(&cfg, step, cli.paths.unwrap_or(cfg.integral_paths))?;
            emit(&t, cli.out.as_ref(), stdout)?;
        }
        Command::Solve { .. } => {
            let t = cmd_solve(&cfg, cli.single_step(cfg.solve_step)?)?;
            emit(&t, cli.out.as_ref(), stdout)?;
        }
        Command::Convergence { plot } => {
            let plot = plot.clone().or_else(|| cli.out.as_ref().map(|p| p.with_extension("svg")));
            let t = cmd_convergence(
                &cfg,
                &cli.steps(&cfg.convergence_steps),
                cli.paths.unwrap_or(cfg.convergence_paths),
                plot.as_deref(),
            )?;
            emit(&t, cli.out.as_ref(), stdout)?;
        }
    }
    Ok(())
}

/// Process exit status for an error category.
pub fn exit_code(e: &Error) -> i32 {
    match e.category() {
        "argument" => 3,
        "shape" => 4,
        "capacity" => 5,
        "format" => 6,
        "config" => 7,
        _ => 8,
    }
}
