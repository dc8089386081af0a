//! Experiment configuration.
//!
//! A config file is TOML with a top-level `experiment` name and an optional
//! `[parameters]` table:
//!
//! ```toml
//! experiment = "fig3_breaktime"
//!
//! [parameters]
//! n_list = [100, 200, 400]
//! t_end = 4.0
//! ```
//!
//! Every experiment accepts the keys listed in its defaults (see
//! [`Experiment::defaults`]) plus `output_dir` and `workers`. Unknown keys and
//! values of the wrong type are rejected. Command-line `key=value` overrides
//! are applied on top of the file, with values parsed as TOML literals.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use toml::{Table, Value};

use crate::error::CliError;

/// Environment variable naming the directory experiment outputs go under.
pub const OUTPUT_ROOT_ENV: &str = "POLEX_OUTPUT_ROOT";

/// Output root when the environment variable is unset.
pub const DEFAULT_OUTPUT_ROOT: &str = "polex-output";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Fig2MftAngles,
    Fig3Breaktime,
    Fig4Zeta,
    Fig5Entropy,
    Fig6ZetaRot,
    Fig7Plateau,
    Fig8Pulse,
    RateCalc,
    OracleCheck,
}

const BREAK_TIME_DEFAULTS: &str = r#"
n_list = [100, 200, 400, 800, 1600]
t_end = 4.0
dt = 2e-3
tol = 1e-10
hold_band = 0.02
peak_prominence = 0.1
"#;

const PLATEAU_DEFAULTS: &str = r#"
n_list = [15, 30, 60]
cos_theta = 1.0
t_end_per_n = 1.3
t_end_offset = 10.0
dt = 0.01
tol = 1e-10
rise_fraction = 0.9
plateau_band = 0.05
"#;

const ROTATED_DEFAULTS: &str = r#"
n_list = [15, 30, 60]
cos_theta = 0.96
t_end_per_n = 1.3
t_end_offset = 10.0
dt = 0.01
tol = 1e-10
rise_level = 0.3
"#;

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Fig2MftAngles,
        Experiment::Fig3Breaktime,
        Experiment::Fig4Zeta,
        Experiment::Fig5Entropy,
        Experiment::Fig6ZetaRot,
        Experiment::Fig7Plateau,
        Experiment::Fig8Pulse,
        Experiment::RateCalc,
        Experiment::OracleCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig2MftAngles => "fig2_mft_angles",
            Experiment::Fig3Breaktime => "fig3_breaktime",
            Experiment::Fig4Zeta => "fig4_zeta",
            Experiment::Fig5Entropy => "fig5_entropy",
            Experiment::Fig6ZetaRot => "fig6_zeta_rot",
            Experiment::Fig7Plateau => "fig7_plateau",
            Experiment::Fig8Pulse => "fig8_pulse",
            Experiment::RateCalc => "rate_calc",
            Experiment::OracleCheck => "oracle_check",
        }
    }

    /// Default parameters as TOML. The key set is the experiment's schema and
    /// each value's type is the expected type.
    pub fn defaults_toml(self) -> &'static str {
        match self {
            Experiment::Fig2MftAngles => {
                "one_minus_cos_theta = [1e-1, 1e-3, 1e-5, 1e-7]\nt_end = 30.0\ntol = 1e-11\n"
            }
            Experiment::Fig3Breaktime | Experiment::Fig4Zeta | Experiment::Fig5Entropy => BREAK_TIME_DEFAULTS,
            Experiment::Fig6ZetaRot => ROTATED_DEFAULTS,
            Experiment::Fig7Plateau => PLATEAU_DEFAULTS,
            Experiment::Fig8Pulse => {
                "cos_theta = 0.99\nlength = 0.5\nnz = 251\ncourant = 1.0\nramp_time = 0.05\nt_max = 1.5\n\
                 snapshot_interval = 0.1\nsteady_tol = 1e-6\nstanding_from = 0.6\n"
            }
            Experiment::RateCalc => "omega1 = 1.0\nomega2 = 1.0\nrho = 1.0\ni1 = 1.0\ni2 = 1.0\nvolume = 1.0\n",
            Experiment::OracleCheck => "n_list = [1, 2, 3]\nthetas = [0.0, 0.2, 1.5707963267948966]\nt_end = 5.0\ndt = 0.05\n",
        }
    }

    pub fn defaults(self) -> Table {
        let mut t: Table = toml::from_str(self.defaults_toml()).expect("built-in defaults parse");
        t.insert("workers".into(), Value::Integer(0));
        t
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
            CliError::Config(format!("unknown experiment `{s}`; expected one of {}", names.join(", ")))
        })
    }
}

/// A validated experiment configuration with every parameter resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Defaults merged with user values.
    pub parameters: Table,
    /// Explicit output directory; otherwise derived from the output root.
    pub output_dir: Option<PathBuf>,
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

/// Coerce `given` to the type of `template`, accepting integers for floats.
fn coerce(key: &str, template: &Value, given: &Value) -> Result<Value, CliError> {
    let mismatch = || {
        CliError::Config(format!("parameter `{key}` expects {}, got {}", type_name(template), type_name(given)))
    };
    match (template, given) {
        (Value::Float(_), Value::Float(x)) => Ok(Value::Float(*x)),
        (Value::Float(_), Value::Integer(i)) => Ok(Value::Float(*i as f64)),
        (Value::Integer(_), Value::Integer(i)) if *i >= 0 => Ok(Value::Integer(*i)),
        (Value::Integer(_), Value::Integer(i)) => {
            Err(CliError::Config(format!("parameter `{key}` must be nonnegative, got {i}")))
        }
        (Value::String(_), Value::String(s)) => Ok(Value::String(s.clone())),
        (Value::Array(tpl), Value::Array(items)) => {
            if items.is_empty() {
                return Err(CliError::Config(format!("parameter `{key}` must not be empty")));
            }
            let elem = tpl.first().expect("default lists are non-empty");
            items.iter().map(|v| coerce(key, elem, v)).collect::<Result<Vec<_>, _>>().map(Value::Array)
        }
        _ => Err(mismatch()),
    }
}

/// Parse a `key=value` override. The value is read as a TOML literal and
/// falls back to a bare string.
pub fn parse_override(s: &str) -> Result<(String, Value), CliError> {
    let (key, raw) =
        s.split_once('=').ok_or_else(|| CliError::Config(format!("override `{s}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!("override `{s}` has an empty key")));
    }
    let raw = raw.trim();
    let value = match toml::from_str::<Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };
    Ok((key.to_string(), value))
}

impl ExperimentConfig {
    /// Validate `user` parameters against the experiment schema and merge
    /// them over the defaults.
    pub fn new(experiment: Experiment, user: &Table) -> Result<Self, CliError> {
        let mut parameters = experiment.defaults();
        let mut output_dir = None;
        for (key, value) in user {
            if key == "output_dir" {
                let Value::String(s) = value else {
                    return Err(CliError::Config(format!("parameter `output_dir` expects string, got {}", type_name(value))));
                };
                output_dir = Some(PathBuf::from(s));
                continue;
            }
            let template = parameters.get(key).ok_or_else(|| {
                let mut known: Vec<&str> = parameters.keys().map(String::as_str).collect();
                known.push("output_dir");
                CliError::Config(format!(
                    "unknown parameter `{key}` for {experiment}; accepted: {}",
                    known.join(", ")
                ))
            })?;
            let v = coerce(key, template, value)?;
            parameters.insert(key.clone(), v);
        }
        Ok(Self { experiment, parameters, output_dir })
    }

    /// Parse a config file's text, then apply overrides in order.
    pub fn from_toml_str(text: &str, overrides: &[(String, Value)]) -> Result<Self, CliError> {
        let mut doc: Table = toml::from_str(text).map_err(|e| CliError::Config(format!("config parse: {e}")))?;
        let experiment = match doc.remove("experiment") {
            Some(Value::String(s)) => s.parse()?,
            Some(v) => return Err(CliError::Config(format!("`experiment` must be a string, got {}", type_name(&v)))),
            None => return Err(CliError::Config("config has no `experiment`".into())),
        };
        let mut user = match doc.remove("parameters") {
            Some(Value::Table(t)) => t,
            Some(v) => return Err(CliError::Config(format!("`parameters` must be a table, got {}", type_name(&v)))),
            None => Table::new(),
        };
        if let Some(key) = doc.keys().next() {
            return Err(CliError::Config(format!("unknown top-level key `{key}`")));
        }
        for (k, v) in overrides {
            user.insert(k.clone(), v.clone());
        }
        Self::new(experiment, &user)
    }

    pub fn load(path: &Path, overrides: &[(String, Value)]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml_str(&text, overrides)
    }

    /// Replace one parameter, with the same validation as file values.
    pub fn with(&self, key: &str, value: Value) -> Result<Self, CliError> {
        let mut user = self.user_table();
        user.insert(key.to_string(), value);
        Self::new(self.experiment, &user)
    }

    fn user_table(&self) -> Table {
        let mut t = self.parameters.clone();
        if let Some(dir) = &self.output_dir {
            t.insert("output_dir".into(), Value::String(dir.display().to_string()));
        }
        t
    }

    pub fn keys(&self) -> BTreeSet<&str> {
        self.parameters.keys().map(String::as_str).collect()
    }

    fn get(&self, key: &str) -> &Value {
        self.parameters.get(key).unwrap_or_else(|| panic!("`{key}` is not a parameter of {}", self.experiment))
    }

    pub fn f64(&self, key: &str) -> f64 {
        self.get(key).as_float().unwrap_or_else(|| panic!("`{key}` is not a float"))
    }

    pub fn usize(&self, key: &str) -> usize {
        self.get(key).as_integer().unwrap_or_else(|| panic!("`{key}` is not an integer")) as usize
    }

    pub fn f64_list(&self, key: &str) -> Vec<f64> {
        let items = self.get(key).as_array().unwrap_or_else(|| panic!("`{key}` is not a list"));
        items.iter().map(|v| v.as_float().expect("validated float list")).collect()
    }

    pub fn usize_list(&self, key: &str) -> Vec<usize> {
        let items = self.get(key).as_array().unwrap_or_else(|| panic!("`{key}` is not a list"));
        items.iter().map(|v| v.as_integer().expect("validated integer list") as usize).collect()
    }

    /// `output_dir` if given, else `$POLEX_OUTPUT_ROOT/<experiment>`.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match &self.output_dir {
            Some(d) => d.clone(),
            None => output_root().join(self.experiment.name()),
        }
    }

    /// Resolved parameters as JSON, for manifests.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(&self.parameters).expect("toml values convert to json")
    }
}

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}
