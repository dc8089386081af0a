//! Parameter sweeps: one sub-run per axis value, each in its own directory,
//! joined into `aggregate.csv`.

use std::collections::BTreeSet;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use toml::Value;

use polex::meanfield::{linear_fit, log_scaling_fit};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::experiments::{run_here, with_workers};
use crate::manifest::{num, RunManifest};

#[derive(Clone, Debug, Serialize)]
pub struct SubRun {
    pub index: usize,
    pub value: String,
    pub output_dir: PathBuf,
    /// `None` on success.
    pub error: Option<String>,
    #[serde(skip)]
    pub manifest: Option<RunManifest>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepFit {
    /// `first_crossing` against `ln N` or against `-ln(1 - cos θ)`.
    pub abscissa: &'static str,
    pub slope: f64,
    pub intercept: f64,
    pub residual: Option<f64>,
    pub mean_spacing: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub experiment: String,
    pub axis: String,
    pub output_dir: PathBuf,
    pub runs: Vec<SubRun>,
    pub fit: Option<SweepFit>,
}

impl SweepSummary {
    pub fn failed(&self) -> usize {
        self.runs.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Config key an axis name refers to, and whether that key holds a list.
/// `N` is shorthand for `n_list`.
pub fn axis_key(config: &ExperimentConfig, axis: &str) -> Result<(String, bool), CliError> {
    let key = if axis == "N" { "n_list" } else { axis };
    if key == "workers" {
        return Err(CliError::Config("cannot sweep over `workers`".into()));
    }
    let template = config.parameters.get(key).ok_or_else(|| {
        CliError::Config(format!("axis `{axis}` is not a parameter of {}", config.experiment))
    })?;
    Ok((key.to_string(), template.is_array()))
}

fn value_label(v: &Value) -> String {
    match v {
        Value::Float(x) => num(*x),
        Value::Integer(i) => i.to_string(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
}

/// Run `template` once per value of `axis`. Sub-run failures are recorded
/// and the sweep continues.
pub fn sweep(template: &ExperimentConfig, axis: &str, values: &[Value]) -> Result<SweepSummary, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let (key, is_list) = axis_key(template, axis)?;
    let base = template.resolved_output_dir();
    let configs = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let value = if is_list { Value::Array(vec![v.clone()]) } else { v.clone() };
            let mut c = template.with(&key, value)?;
            c.output_dir = Some(base.join(format!("{axis}_{i:03}")));
            Ok(c)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let results = with_workers(template.usize("workers"), || {
        configs.par_iter().map(run_here).collect::<Vec<_>>()
    })?;
    let runs: Vec<SubRun> = results
        .into_iter()
        .zip(values)
        .zip(&configs)
        .enumerate()
        .map(|(index, ((r, v), c))| {
            let output_dir = c.resolved_output_dir();
            let value = value_label(v);
            match r {
                Ok(m) => SubRun { index, value, output_dir, error: None, manifest: Some(m) },
                Err(e) => SubRun { index, value, output_dir, error: Some(e.to_string()), manifest: None },
            }
        })
        .collect();
    std::fs::create_dir_all(&base).map_err(|e| CliError::io(&base, e))?;
    write_aggregate(&base, axis, &runs)?;
    let fit = fit_runs(&key, values, &runs);
    let summary = SweepSummary {
        experiment: template.experiment.name().to_string(),
        axis: axis.to_string(),
        output_dir: base.clone(),
        runs,
        fit,
    };
    let path = base.join("sweep.json");
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(summary)
}

fn write_aggregate(base: &std::path::Path, axis: &str, runs: &[SubRun]) -> Result<(), CliError> {
    let keys: BTreeSet<&str> =
        runs.iter().filter_map(|r| r.manifest.as_ref()).flat_map(|m| m.scalars.keys().map(String::as_str)).collect();
    let mut w = csv::Writer::from_path(base.join("aggregate.csv"))?;
    let mut header = vec!["index", axis, "status", "checks_passed", "error"];
    header.extend(keys.iter().copied());
    w.write_record(&header)?;
    for r in runs {
        let mut row = vec![r.index.to_string(), r.value.clone()];
        match &r.manifest {
            Some(m) => {
                row.extend(["ok".to_string(), m.passed().to_string(), String::new()]);
                row.extend(keys.iter().map(|k| m.scalars.get(*k).map_or(String::new(), |v| num(*v))));
            }
            None => {
                row.extend(["failed".to_string(), String::new(), r.error.clone().unwrap_or_default()]);
                row.extend(keys.iter().map(|_| String::new()));
            }
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(base.join("aggregate.csv"), e))
}

/// Fit `first_crossing` over the successful sub-runs of an `N` or angle
/// sweep.
fn fit_runs(key: &str, values: &[Value], runs: &[SubRun]) -> Option<SweepFit> {
    let pts: Vec<(f64, f64)> = runs
        .iter()
        .zip(values)
        .filter_map(|(r, v)| Some((as_f64(v)?, *r.manifest.as_ref()?.scalars.get("first_crossing")?)))
        .collect();
    match key {
        "n_list" if pts.len() >= 2 => {
            let logs: Vec<(f64, f64)> = pts.iter().map(|&(n, t)| (n.ln(), t)).collect();
            let (slope, intercept) = linear_fit(&logs);
            Some(SweepFit { abscissa: "ln N", slope, intercept, residual: None, mean_spacing: None })
        }
        "one_minus_cos_theta" => log_scaling_fit(&pts).ok().map(|f| SweepFit {
            abscissa: "-ln(1 - cos theta)",
            slope: f.slope,
            intercept: f.intercept,
            residual: Some(f.residual),
            mean_spacing: Some(f.mean_spacing),
        }),
        _ => None,
    }
}
