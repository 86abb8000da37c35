use std::num::NonZeroUsize;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use deloc::estimate::gamma_grid;
use deloc::{FitConfig, OrthogonalizationMode};

use crate::CliError;

/// Largest depth the dense oracle is asked to handle.
pub const VERIFY_MAX_N: usize = 30;

#[derive(Debug, Parser)]
#[command(name = "deloc", version, about = "Krylov-distance delocalization experiment on Z²")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep disorder values and realizations; write sweep.csv, summary.csv, manifest.json.
    Sweep(SweepArgs),
    /// Shell-energy profiles of m_k; write energy_<c>.csv per disorder value.
    Energy(EnergyArgs),
    /// Compare the engine against the dense oracle.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeKind {
    Full,
    #[value(alias = "lanczos")]
    Recurrence,
}

#[derive(Debug, Clone, Args)]
pub struct ModeArgs {
    /// Orthogonalization: full Gram-Schmidt or the three-term recurrence.
    #[arg(long, value_enum, default_value = "recurrence")]
    pub mode: ModeKind,
    /// Recurrence only: reorthogonalize every N steps (0 = never).
    #[arg(long, default_value_t = 0)]
    pub reorth_every: usize,
    /// Recurrence only: vectors retained for reorthogonalization (0 = all).
    #[arg(long, default_value_t = 0)]
    pub reorth_window: usize,
}

impl ModeArgs {
    pub fn mode(&self) -> OrthogonalizationMode {
        match self.mode {
            ModeKind::Full => OrthogonalizationMode::FullGramSchmidt,
            ModeKind::Recurrence => OrthogonalizationMode::ThreeTermRecurrence {
                reorthogonalize_every: NonZeroUsize::new(self.reorth_every),
                window: NonZeroUsize::new(self.reorth_window),
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Explicit disorder values, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with_all = ["c_min", "c_max", "c_step"])]
    pub c_list: Option<Vec<f64>>,
    #[arg(long, requires_all = ["c_max", "c_step"])]
    pub c_min: Option<f64>,
    #[arg(long, requires_all = ["c_min", "c_step"])]
    pub c_max: Option<f64>,
    #[arg(long, requires_all = ["c_min", "c_max"])]
    pub c_step: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub realizations: u64,
    /// Krylov depth.
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub mode: ModeArgs,
    #[arg(long, default_value_t = 0.10)]
    pub gamma_min: f64,
    #[arg(long, default_value_t = 2.00)]
    pub gamma_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub gamma_step: f64,
    /// First k used by the fit and the lower estimate (default n/2).
    #[arg(long)]
    pub tail_start: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, env = "DELOC_THREADS")]
    pub threads: Option<usize>,
}

/// `min, min + step, …, ≤ max`, rounded to 12 decimals.
pub fn linear_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(min.is_finite() && max.is_finite() && step > 0.0 && max >= min) {
        return Err(CliError::Usage(format!(
            "invalid grid: min {min}, max {max}, step {step}"
        )));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((min + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn check_disorders(values: &[f64]) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Usage("no disorder values given".into()));
    }
    if let Some(c) = values.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        return Err(CliError::Usage(format!("disorder must be non-negative, got {c}")));
    }
    Ok(())
}

impl SweepArgs {
    pub fn c_values(&self) -> Result<Vec<f64>, CliError> {
        let values = match (&self.c_list, self.c_min, self.c_max, self.c_step) {
            (Some(list), ..) => list.clone(),
            (None, Some(min), Some(max), Some(step)) => linear_grid(min, max, step)?,
            _ => {
                return Err(CliError::Usage(
                    "give either --c-list or all of --c-min, --c-max, --c-step".into(),
                ))
            }
        };
        check_disorders(&values)?;
        Ok(values)
    }

    pub fn fit(&self) -> Result<FitConfig, CliError> {
        let grid = gamma_grid(self.gamma_min, self.gamma_max, self.gamma_step)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(FitConfig {
            gamma_grid: grid,
            tail_start: self.tail_start,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct EnergyArgs {
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub c_list: Vec<f64>,
    /// Krylov step whose vector m_k is profiled.
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub realization: u64,
    #[command(flatten)]
    pub mode: ModeArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, env = "DELOC_THREADS")]
    pub threads: Option<usize>,
}

impl EnergyArgs {
    pub fn c_values(&self) -> Result<Vec<f64>, CliError> {
        check_disorders(&self.c_list)?;
        Ok(self.c_list.clone())
    }
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 25)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "0,0.5,2.0")]
    pub c_list: Vec<f64>,
    /// Seeds 1..=SEEDS are checked for every disorder value.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
}

impl VerifyArgs {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.n == 0 || self.n > VERIFY_MAX_N {
            return Err(CliError::Usage(format!(
                "--n must be between 1 and {VERIFY_MAX_N}, got {}",
                self.n
            )));
        }
        if self.seeds == 0 {
            return Err(CliError::Usage("--seeds must be at least 1".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(CliError::Usage(format!("invalid tolerance {}", self.tolerance)));
        }
        check_disorders(&self.c_list)
    }
}
