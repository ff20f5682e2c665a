//! Command-line and config-file parameters.
//!
//! Every subcommand's parameters are plain `Option`s so that a JSON config
//! file and the flags can be overlaid key by key; flags win.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use cfhj_core::initial_data::DatumSpec;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "cfhj", version, about = "Numerical laboratory for a singular Hamilton-Jacobi equation")]
pub struct Cli {
    /// JSON file with parameters for the subcommand; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a scaled stationary profile with its slope and residual.
    Profile(ProfileArgs),
    /// Check admissibility of an initial datum.
    ValidateInit(ValidateArgs),
    /// Sample an initial datum from the catalog.
    Datum(DatumArgs),
    /// Run the finite-difference or semi-Lagrangian solver.
    Solve(SolveArgs),
    /// Integrate characteristics from a list of start points.
    Chars(CharsArgs),
    /// Long-time convergence study against the predicted limit.
    Longtime(LongtimeArgs),
    /// Probe study for the oscillating datum.
    Noncvg(NoncvgArgs),
    /// Randomized property checks.
    Selftest(SelftestArgs),
}

/// Catalog name, or a full descriptor when given in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatumRef {
    Name(String),
    Spec(DatumSpec),
}

impl FromStr for DatumRef {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(DatumRef::Name(s.to_string()))
    }
}

/// `key=value,key=value`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Params(pub BTreeMap<String, f64>);

impl FromStr for Params {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut map = BTreeMap::new();
        for item in s.split(',').filter(|i| !i.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{item}`"))?;
            let v: f64 = v.trim().parse().map_err(|_| format!("bad number in `{item}`"))?;
            map.insert(k.trim().to_string(), v);
        }
        Ok(Params(map))
    }
}

/// `qmin:qmax` (a comma also works).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QRange(pub [f64; 2]);

impl FromStr for QRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s
            .split_once(':')
            .or_else(|| s.split_once(','))
            .ok_or_else(|| format!("expected qmin:qmax, got `{s}`"))?;
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad number in `{s}`"));
        Ok(QRange([parse(a)?, parse(b)?]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Fd,
    Sl,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Stepper {
    Euler,
    Rk2,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xmax: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateArgs {
    /// Atoms as `size:weight,size:weight,...`.
    #[arg(long, conflicts_with = "datum")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub datum: Option<DatumRef>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Params>,
    /// Largest sample point of the sublinearity proxy.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xmax: Option<f64>,
    /// Required first moment.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatumArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<DatumRef>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Params>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xmax: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emit: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub datum: Option<DatumRef>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Params>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[arg(long = "L")]
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long = "T")]
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub final_time: Option<f64>,
    /// Record times `t1,t2,...`; defaults to `T`.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_scheme: Option<Stepper>,
    /// Window `[0, x]` that must stay trusted up to `T`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observe_xmax: Option<f64>,
    /// Only advance nodes that can still influence the observed window.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub active_margin: Option<f64>,
    /// Experimental: Dirichlet data from the profile with this scale at `x = L`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub right_profile: Option<f64>,
    /// Control spacing of the semi-Lagrangian scheme.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dq: Option<f64>,
    /// Control range `qmin:qmax`.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qrange: Option<QRange>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharsArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub datum: Option<DatumRef>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Params>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starts: Option<Vec<f64>>,
    #[arg(long = "T")]
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub final_time: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LongtimeArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub datum: Option<DatumRef>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Params>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[arg(long = "T")]
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub final_time: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    /// Observation window `[0, window]`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<f64>>,
    /// Number of equally spaced record times.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Domain length beyond the domain of dependence of the window.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dq: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoncvgArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// Number of probe times to simulate.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelftestArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Random cases per property.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cases: Option<usize>,
}

/// Overlays the flags onto the config file's object.
pub fn merge<T: Serialize + DeserializeOwned>(flags: T, file: Option<&Value>) -> Result<T> {
    let mut base = match file {
        None => serde_json::Map::new(),
        Some(Value::Object(map)) => map.clone(),
        Some(_) => return Err(CliError::Usage("config file must hold a JSON object".into())),
    };
    if let Value::Object(over) = serde_json::to_value(flags)? {
        base.extend(over);
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Usage(format!("config: {e}")))
}
