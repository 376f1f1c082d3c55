//! Flag definitions and the key=value config file.
//!
//! Every long flag can also be supplied by a config file (`--config FILE`)
//! with lines `key = value`, keys matching the flag names; flags win on
//! conflict. Fields are therefore `Option`s merged after parsing.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::CliError;

#[derive(Parser)]
#[command(
    name = "fibdisc",
    version,
    about = "Fixed-volume discrepancy of Fibonacci lattice point sets",
    propagate_version = true
)]
pub struct Cli {
    /// Key=value config file mirroring the long flags (flags win).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Print the Fibonacci point set as CSV (mu,x1,x2).
    Points(PointsArgs),
    /// One fixed-volume discrepancy value as a JSON record.
    Discrepancy(DiscrepancyArgs),
    /// Scaling tables, minimal-norm tables, worst-box profiles, constants.
    Study(StudyArgs),
    /// Run the invariant suites and print measured constants.
    Check(CheckArgs),
}

#[derive(Args)]
pub struct PointsArgs {
    /// Fibonacci index (n >= 2).
    #[arg(long)]
    pub n: Option<u32>,
    /// Output file (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct DiscrepancyArgs {
    /// Fibonacci index (n >= 2).
    #[arg(long)]
    pub n: Option<u32>,
    /// Smoothness order r >= 1.
    #[arg(long)]
    pub r: Option<u32>,
    /// Norm exponent over shifts: a real >= 1 or "inf".
    #[arg(long)]
    pub p: Option<String>,
    /// Box volume in (0, 1].
    #[arg(long)]
    pub v: Option<f64>,
    /// Periodic (torus) setting; false routes to the non-periodic engine.
    #[arg(long)]
    pub periodic: Option<bool>,
    /// Aspect ratios scanned (default 33).
    #[arg(long)]
    pub shapes: Option<u32>,
    /// Shift grid per axis for p != 2 (default 256; 512 for p = inf).
    #[arg(long)]
    pub shifts: Option<u32>,
    /// Center grid per axis for the non-periodic engine (default 64).
    #[arg(long)]
    pub centers: Option<u32>,
    /// Truncated-series engine for p = 2: spectral cutoff max|k_j|.
    #[arg(long)]
    pub cutoff: Option<i64>,
    /// Truncated-series engine for p = 2: grow the cutoff until the
    /// certified tail drops below this target.
    #[arg(long, value_name = "TAIL")]
    pub tail_target: Option<f64>,
    /// Output file (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct StudyArgs {
    /// Minimal-hyperbolic-norm table instead of a scaling table.
    #[arg(long)]
    pub gamma: bool,
    /// Worst-box profile over a volume grid (single n).
    #[arg(long)]
    pub profile: bool,
    /// Measured bound constants (JSON).
    #[arg(long)]
    pub constants: bool,

    /// Index or inclusive range, e.g. `12` or `8..16`.
    #[arg(long)]
    pub n: Option<String>,
    /// Smoothness order r >= 1.
    #[arg(long)]
    pub r: Option<u32>,
    /// Norm exponent: real >= 1 or "inf".
    #[arg(long)]
    pub p: Option<String>,
    /// Fixed volume for every row.
    #[arg(long)]
    pub v: Option<f64>,
    /// Volume policy: `fixed:V`, `prop:C` (v = min(1, C/b_n), C >= 16) or
    /// `list:v1,v2,...`.
    #[arg(long, value_name = "POLICY")]
    pub v_policy: Option<String>,
    /// Volume grid for --profile: `lo:hi:count` (log-spaced) or a comma list.
    #[arg(long, value_name = "GRID")]
    pub v_grid: Option<String>,
    /// Periodic setting (default true); false measures the non-periodic sup.
    #[arg(long)]
    pub periodic: Option<bool>,
    #[arg(long)]
    pub shapes: Option<u32>,
    #[arg(long)]
    pub shifts: Option<u32>,
    #[arg(long)]
    pub centers: Option<u32>,
    /// Sample count for --constants (>= 50).
    #[arg(long)]
    pub samples: Option<u32>,
    /// Sigma-sum dimension for --constants (1..=4).
    #[arg(long)]
    pub d: Option<usize>,
    /// RNG seed for --constants.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CheckArgs {
    /// Run a single suite: lattice, splines, discrepancy or study.
    #[arg(long)]
    pub suite: Option<String>,
    /// RNG seed for the randomized checks.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Key=value pairs loaded from `--config`.
pub struct ConfigMap(HashMap<String, String>);

impl ConfigMap {
    pub fn empty() -> Self {
        ConfigMap(HashMap::new())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut map = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "config {}:{}: expected `key = value`, got {raw:?}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigMap(map))
    }

    /// Fill `slot` from the config when the flag was not given.
    pub fn fill<T: FromStr>(&self, slot: &mut Option<T>, key: &str) -> Result<(), CliError> {
        if slot.is_none() {
            if let Some(raw) = self.0.get(key) {
                let parsed = raw.parse::<T>().map_err(|_| {
                    CliError::Usage(format!("config key {key}: cannot parse {raw:?}"))
                })?;
                *slot = Some(parsed);
            }
        }
        Ok(())
    }
}

/// Inclusive index range `a..b` or a single index `a`.
pub fn parse_range(text: &str) -> Result<(u32, u32), CliError> {
    let parse_end = |s: &str| -> Result<u32, CliError> {
        s.trim()
            .parse::<u32>()
            .map_err(|_| CliError::Usage(format!("cannot parse index {s:?}")))
    };
    if let Some((lo, hi)) = text.split_once("..") {
        let (lo, hi) = (parse_end(lo)?, parse_end(hi)?);
        if hi < lo {
            return Err(CliError::Usage(format!("empty index range {text:?}")));
        }
        Ok((lo, hi))
    } else {
        let n = parse_end(text)?;
        Ok((n, n))
    }
}
