//! Experiment configs: `{"command": …, "params": {…}}`. A manifest written by
//! a previous run is also a valid config.

use std::fs;
use std::path::{Path, PathBuf};

use cancellab::autocorr::{WindowMode, DEFAULT_MEMORY_BUDGET, DEFAULT_WINDOW_RATIO};
use cancellab::processes::{ProcessSpec, DEFAULT_CANCEL_TOL};
use cancellab::seqgen::GeneratorDescriptor;
use cancellab::spectral::{DEFAULT_ATOM_THRESHOLD, DEFAULT_GRID};
use cancellab::symbolic::{BlockLayout, CoverSpec, Growth, OracleSpec, PointMode, Word};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

pub const COMMANDS: [&str; 9] = [
    "gen", "spectrum", "autocorr", "density", "cancel", "torus", "symbolic", "hochman", "report",
];

/// Top-level keys accepted besides `command` and `params`; manifests carry
/// the first three.
const EXTRA_KEYS: [&str; 4] = ["tool", "version", "artifacts", "out"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenParams {
    pub sequence: GeneratorDescriptor,
    /// Also write `seq.csv`.
    #[serde(default)]
    pub csv: bool,
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

fn default_threshold() -> f64 {
    DEFAULT_ATOM_THRESHOLD
}

fn default_budget() -> usize {
    DEFAULT_MEMORY_BUDGET
}

fn default_ratio() -> f64 {
    DEFAULT_WINDOW_RATIO
}

fn default_mode() -> WindowMode {
    WindowMode::Sampled
}

fn default_tolerance() -> f64 {
    DEFAULT_CANCEL_TOL
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    pub input: PathBuf,
    #[serde(default = "default_grid")]
    pub grid: usize,
    pub ts: Vec<usize>,
    #[serde(default = "default_threshold")]
    pub atom_threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutocorrParams {
    pub input: PathBuf,
    pub ns: Vec<usize>,
    pub tau_max: usize,
    #[serde(default = "default_budget")]
    pub memory_budget: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityParams {
    pub input: PathBuf,
    pub epsilon: f64,
    pub n_lo: usize,
    pub n_hi: usize,
    pub t: usize,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default = "default_mode")]
    pub mode: WindowMode,
    #[serde(default = "default_budget")]
    pub memory_budget: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CancelParams {
    pub x: PathBuf,
    pub process: ProcessSpec,
    pub seeds: Vec<u64>,
    pub ts: Vec<usize>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Ensemble size for the mean-cancellation curve (seeds `0..K`).
    #[serde(default)]
    pub ensemble: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusParams {
    pub beta: f64,
    pub alpha: f64,
    pub m1: i64,
    pub m2: i64,
    pub n: usize,
    /// `[u_lo, u_hi, v_lo, v_hi]` box for the discrepancy, in turns.
    #[serde(default, rename = "box")]
    pub arcs: Option<[f64; 4]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolicOp {
    Generic,
    Strong,
    Lemma10,
    Cover,
    Prune,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolicParams {
    pub op: SymbolicOp,
    pub oracle: OracleSpec,
    #[serde(default)]
    pub word: Option<Word>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub m: Option<u64>,
    #[serde(default)]
    pub cover: Option<CoverSpec>,
}

fn default_scales() -> usize {
    12
}

fn default_growth() -> Growth {
    Growth::Quadratic
}

fn default_point_mode() -> PointMode {
    PointMode::Split
}

fn default_layout() -> BlockLayout {
    BlockLayout::Global
}

fn default_k() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HochmanParams {
    /// Schedule JSON file; when absent the periodic schedule of `u` is used.
    #[serde(default)]
    pub covers: Option<PathBuf>,
    #[serde(default)]
    pub u: Option<Word>,
    #[serde(default = "default_scales")]
    pub scales: usize,
    #[serde(default = "default_growth")]
    pub growth: Growth,
    /// Horizon of the `cyl,count,freq` table.
    pub t: u64,
    #[serde(default = "default_point_mode")]
    pub mode: PointMode,
    #[serde(default = "default_layout")]
    pub layout: BlockLayout,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Period of the periodic point `y`; defaults to the oracle's point.
    #[serde(default)]
    pub y: Option<Word>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportParams {
    pub dirs: Vec<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Params {
    Gen(GenParams),
    Spectrum(SpectrumParams),
    Autocorr(AutocorrParams),
    Density(DensityParams),
    Cancel(CancelParams),
    Torus(TorusParams),
    Symbolic(SymbolicParams),
    Hochman(HochmanParams),
    Report(ReportParams),
}

impl Params {
    pub fn command(&self) -> &'static str {
        match self {
            Params::Gen(_) => "gen",
            Params::Spectrum(_) => "spectrum",
            Params::Autocorr(_) => "autocorr",
            Params::Density(_) => "density",
            Params::Cancel(_) => "cancel",
            Params::Torus(_) => "torus",
            Params::Symbolic(_) => "symbolic",
            Params::Hochman(_) => "hochman",
            Params::Report(_) => "report",
        }
    }

    pub fn to_value(&self) -> Value {
        let v = match self {
            Params::Gen(p) => serde_json::to_value(p),
            Params::Spectrum(p) => serde_json::to_value(p),
            Params::Autocorr(p) => serde_json::to_value(p),
            Params::Density(p) => serde_json::to_value(p),
            Params::Cancel(p) => serde_json::to_value(p),
            Params::Torus(p) => serde_json::to_value(p),
            Params::Symbolic(p) => serde_json::to_value(p),
            Params::Hochman(p) => serde_json::to_value(p),
            Params::Report(p) => serde_json::to_value(p),
        };
        v.expect("params serialize")
    }
}

/// A config after flag overrides, before typing.
#[derive(Clone, Debug)]
pub struct RawConfig {
    pub command: String,
    pub params: Value,
    pub out: Option<PathBuf>,
}

impl RawConfig {
    pub fn empty(command: &str) -> Self {
        RawConfig {
            command: command.to_string(),
            params: Value::Object(Map::new()),
            out: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let v: Value = serde_json::from_str(text).map_err(|e| CliError::schema(None, format!("config is not JSON: {e}")))?;
        let Value::Object(mut top) = v else {
            return Err(CliError::schema(None, "config must be a JSON object"));
        };
        let command = match top.remove("command") {
            Some(Value::String(c)) if COMMANDS.contains(&c.as_str()) => c,
            Some(Value::String(c)) => return Err(CliError::schema(Some("command"), format!("unknown command `{c}`"))),
            Some(_) => return Err(CliError::schema(Some("command"), "command must be a string")),
            None => return Err(CliError::schema(Some("command"), "missing field `command`")),
        };
        let params = top.remove("params").unwrap_or_else(|| Value::Object(Map::new()));
        if !params.is_object() {
            return Err(CliError::schema(Some("params"), "params must be an object"));
        }
        let out = match top.remove("out") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => return Err(CliError::schema(Some("out"), "out must be a string")),
        };
        if let Some(k) = top.keys().find(|k| !EXTRA_KEYS.contains(&k.as_str())) {
            return Err(CliError::schema(Some(k), format!("unknown field `{k}`")));
        }
        Ok(RawConfig { command, params, out })
    }

    /// Sets `params.<path>`, creating intermediate objects.
    pub fn set(&mut self, path: &[&str], value: Value) {
        let mut cur = &mut self.params;
        for key in &path[..path.len() - 1] {
            let obj = cur.as_object_mut().expect("params objects");
            cur = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Map::new()));
            if !cur.is_object() {
                *cur = Value::Object(Map::new());
            }
        }
        cur.as_object_mut()
            .expect("params objects")
            .insert(path[path.len() - 1].to_string(), value);
    }

    pub fn get(&self, path: &[&str]) -> Option<&Value> {
        path.iter().try_fold(&self.params, |v, k| v.get(k))
    }

    pub fn resolve(&self) -> Result<Params, CliError> {
        let v = self.params.clone();
        Ok(match self.command.as_str() {
            "gen" => Params::Gen(typed(v)?),
            "spectrum" => Params::Spectrum(typed(v)?),
            "autocorr" => Params::Autocorr(typed(v)?),
            "density" => Params::Density(typed(v)?),
            "cancel" => Params::Cancel(typed(v)?),
            "torus" => Params::Torus(typed(v)?),
            "symbolic" => Params::Symbolic(typed(v)?),
            "hochman" => Params::Hochman(typed(v)?),
            "report" => Params::Report(typed(v)?),
            other => return Err(CliError::schema(Some("command"), format!("unknown command `{other}`"))),
        })
    }
}

fn typed<T: DeserializeOwned>(v: Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let message = e.inner().to_string();
        let mut path = String::from("params");
        let inner = e.path().to_string();
        if inner != "." {
            path.push('.');
            path.push_str(&inner);
        }
        // serde reports a missing field at the enclosing object
        if let Some(field) = message
            .strip_prefix("missing field `")
            .and_then(|rest| rest.split('`').next())
        {
            path.push('.');
            path.push_str(field);
        }
        CliError::schema(Some(&path), message)
    })
}
