use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Integer budgets written as `100000`, `1e8` or `2.5e6`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !(v >= 0.0) || v.fract() != 0.0 || v > 9.007_199_254_740_992e15 {
        return Err(format!("'{s}' is not a non-negative integer"));
    }
    Ok(v as u64)
}

/// Reals, with `inf` accepted.
pub fn parse_real(s: &str) -> Result<f64, String> {
    match s {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => s.parse::<f64>().map_err(|_| format!("'{s}' is not a number")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelArg {
    Orbit,
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Thm32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Seed; falls back to LDLAB_SEED, then 1
    #[arg(long, env = "LDLAB_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    #[serde(skip)]
    pub workers: Option<usize>,
    /// Output directory
    #[arg(long, default_value = "ldlab-out")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Artifacts to write besides the manifest
    #[arg(long, value_enum, value_delimiter = ',', action = ArgAction::Set, default_value = "csv,json")]
    #[serde(skip)]
    pub formats: Vec<Format>,
    /// Exit with status 3 if the built-in self-check fails
    #[arg(long)]
    #[serde(skip)]
    pub check: bool,
}

#[derive(Debug, Parser)]
#[command(name = "ldlab", version, about = "Large deviations of unbounded observables on expanding maps")]
pub struct Cli {
    /// key = value file of flags for the subcommand; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[command(args_override_self = true)]
pub enum Command {
    /// Monte Carlo tail probabilities P(S_n - n mean >= n eps)
    Tail(TailArgs),
    /// Fit the stretched exponent gamma in -ln p_n ~ n^gamma
    Exponent(ExponentArgs),
    /// Certify the explicit lower-bound interval near the fixed point
    Lowerbound(LowerBoundArgs),
    /// Exact autocorrelations through the transfer operator
    Autocorr(AutocorrArgs),
    /// Exact L^p norms of P^n(phi - mean)
    Lpdecay(LpDecayArgs),
    /// Martingale-coboundary decomposition of a truncated observable
    Martingale(MartingaleArgs),
    /// Erdos-Renyi maximal window averages
    Erdos(ErdosArgs),
    /// Close returns to the periodic point and forced window exceedances
    Obstruct(ObstructArgs),
    /// Pressure lower-bound slopes and integrability of e^{t S_n}
    Pressure(PressureArgs),
    /// Exact Young-tower coboundary, S_n law and log-MGF curve
    Tower(TowerArgs),
    /// Cylinder dynamic programme against Monte Carlo
    Oracle(OracleArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Tail(_) => "tail",
            Command::Exponent(_) => "exponent",
            Command::Lowerbound(_) => "lowerbound",
            Command::Autocorr(_) => "autocorr",
            Command::Lpdecay(_) => "lpdecay",
            Command::Martingale(_) => "martingale",
            Command::Erdos(_) => "erdos",
            Command::Obstruct(_) => "obstruct",
            Command::Pressure(_) => "pressure",
            Command::Tower(_) => "tower",
            Command::Oracle(_) => "oracle",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Tail(a) => &a.common,
            Command::Exponent(a) => &a.common,
            Command::Lowerbound(a) => &a.common,
            Command::Autocorr(a) => &a.common,
            Command::Lpdecay(a) => &a.common,
            Command::Martingale(a) => &a.common,
            Command::Erdos(a) => &a.common,
            Command::Obstruct(a) => &a.common,
            Command::Pressure(a) => &a.common,
            Command::Tower(a) => &a.common,
            Command::Oracle(a) => &a.common,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TailArgs {
    /// doubling, tent or pwl:<cuts>:<slopes>
    #[arg(long, default_value = "doubling")]
    pub map: String,
    /// Observable, e.g. logpow:1:0, invpow:0.5, loglog:0, cylinder:v0,v1
    #[arg(long, default_value = "logpow:1:0")]
    pub obs: String,
    #[arg(long, value_enum, default_value = "orbit")]
    pub channel: ChannelArg,
    /// Birkhoff lengths
    #[arg(long, value_parser = parse_count, value_delimiter = ',', action = ArgAction::Set, required = true)]
    pub n: Vec<u64>,
    /// Deviations
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, required = true)]
    pub eps: Vec<f64>,
    /// upper, lower or two-sided
    #[arg(long, default_value = "upper")]
    pub side: String,
    /// Sample paths
    #[arg(long = "N", value_parser = parse_count, default_value = "1e6")]
    pub samples: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExponentArgs {
    /// Exponent of phi = (-ln x)^alpha
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, default_value = "doubling")]
    pub map: String,
    /// Deviation (preset default: 0.3 for alpha = 1, 3 for alpha = 2)
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_parser = parse_count, value_delimiter = ',', action = ArgAction::Set, default_value = "25,50,100,200,400")]
    pub n: Vec<u64>,
    #[arg(long = "N", value_parser = parse_count, default_value = "1e6")]
    pub samples: u64,
    /// Allowed |gamma_hat - 1/(1+alpha)| under --check
    #[arg(long, default_value_t = 0.15)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LowerBoundArgs {
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, value_parser = parse_count, default_value = "100")]
    pub n: u64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, value_parser = parse_count, default_value = "1000")]
    pub samples: u64,
    #[arg(long, default_value = "doubling")]
    pub map: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AutocorrArgs {
    #[arg(long, default_value = "logpow:1:0")]
    pub obs: String,
    #[arg(long, default_value_t = 18)]
    pub nmax: u32,
    /// Largest acceptable fitted log-slope under --check
    #[arg(long, default_value_t = -0.3, allow_negative_numbers = true)]
    pub max_slope: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LpDecayArgs {
    #[arg(long, default_value = "invpow:0.5")]
    pub obs: String,
    /// Exponent p >= 1, or inf
    #[arg(long, value_parser = parse_real, default_value = "1")]
    pub p: f64,
    #[arg(long, default_value_t = 20)]
    pub nmax: u32,
    #[arg(long, default_value_t = -0.3, allow_negative_numbers = true)]
    pub max_slope: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MartingaleArgs {
    #[arg(long, default_value = "logpow:1:0")]
    pub obs: String,
    #[arg(long, value_parser = parse_count, default_value = "256")]
    pub n: u64,
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    /// Decay rate; ln 2 is rigorous for the doubling map
    #[arg(long, default_value_t = std::f64::consts::LN_2)]
    pub theta: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ErdosArgs {
    #[arg(long, value_enum, default_value = "iid")]
    pub channel: ChannelArg,
    #[arg(long, default_value = "doubling")]
    pub map: String,
    #[arg(long, default_value = "logpow:1:0")]
    pub obs: String,
    /// Window level alpha
    #[arg(long, default_value_t = 1.5)]
    pub level: f64,
    /// Rate I(alpha); defaults to alpha - 1 - ln alpha for Exp(1) inputs
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long, value_parser = parse_count, default_value = "1e6")]
    pub n: u64,
    #[arg(long, value_parser = parse_count, default_value = "20")]
    pub seeds: u64,
    /// Allowed relative distance of the median from the level under --check
    #[arg(long, default_value_t = 0.3)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ObstructArgs {
    #[arg(long, default_value = "tent")]
    pub map: String,
    /// Uncentered observable; it is centered before use
    #[arg(long, default_value = "loglog:0")]
    pub obs: String,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.25)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    #[arg(long, value_parser = parse_count, default_value = "1e7")]
    pub nmax: u64,
    #[arg(long, value_parser = parse_count, default_value = "10")]
    pub seeds: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PressureArgs {
    #[arg(long, default_value = "doubling")]
    pub map: String,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    #[arg(long = "M", value_delimiter = ',', action = ArgAction::Set, default_value = "5,10,20,40")]
    pub levels: Vec<f64>,
    #[arg(long, value_parser = parse_count, value_delimiter = ',', action = ArgAction::Set, default_value = "1,2,3,4")]
    pub n: Vec<u64>,
    #[arg(long, value_parser = parse_count, default_value = "100")]
    pub neval: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TowerArgs {
    /// Largest column kept
    #[arg(long = "K", default_value_t = 3)]
    pub k: u32,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub t: f64,
    #[arg(long, value_parser = parse_count, default_value = "2000")]
    pub nmax: u64,
    #[arg(long, value_parser = parse_count, default_value = "1000")]
    pub trajectories: u64,
    #[arg(long, value_parser = parse_count, default_value = "1000")]
    pub length: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OracleArgs {
    /// Observable; non-cylinder observables need --depth
    #[arg(long, default_value = "cylinder:0,1,1,0")]
    pub obs: String,
    /// Discretize to dyadic cells of this depth
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long, default_value_t = 16)]
    pub n: u32,
    #[arg(long)]
    pub eps: f64,
    /// upper or lower
    #[arg(long, default_value = "upper")]
    pub side: String,
    /// Grid spacing of the DP (default: 1e-3 of the value range)
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "N", value_parser = parse_count, default_value = "1e6")]
    pub samples: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}
