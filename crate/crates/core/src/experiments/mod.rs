//! Declarative experiment runner.
//!
//! A run is described by a flat TOML document:
//!
//! ```toml
//! name = "estimate_saturation"
//! seed = 7
//! p = 2
//! q = 2
//!
//! [sweep]
//! amplitude = [10, 100, 1000, 10000]
//! ```
//!
//! `name` selects the recipe, every other top-level key is a recipe parameter
//! (unset parameters take the recipe defaults listed by [`recipe_defaults`]),
//! and the optional `[sweep]` table lists values to take the cartesian product
//! over. Sweep points are numbered in grid order with the last key varying
//! fastest; point `i` runs with seed `seed + i`.

mod output;
mod params;
mod recipes;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Trajectory;

pub use output::{records_to_csv, records_to_json, write_outputs, OutputFormat};
pub use params::{ParamValue, Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    FlatValidation,
    ConvergenceOrder,
    BlowupFit,
    EstimateSaturation,
    TraceMeasurement,
    DichotomyProbe,
    RemovabilitySweep,
    SubsolutionCheck,
    MeanValueCheck,
}

impl Recipe {
    pub const ALL: [Recipe; 9] = [
        Recipe::FlatValidation,
        Recipe::ConvergenceOrder,
        Recipe::BlowupFit,
        Recipe::EstimateSaturation,
        Recipe::TraceMeasurement,
        Recipe::DichotomyProbe,
        Recipe::RemovabilitySweep,
        Recipe::SubsolutionCheck,
        Recipe::MeanValueCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Recipe::FlatValidation => "flat_validation",
            Recipe::ConvergenceOrder => "convergence_order",
            Recipe::BlowupFit => "blowup_fit",
            Recipe::EstimateSaturation => "estimate_saturation",
            Recipe::TraceMeasurement => "trace_measurement",
            Recipe::DichotomyProbe => "dichotomy_probe",
            Recipe::RemovabilitySweep => "removability_sweep",
            Recipe::SubsolutionCheck => "subsolution_check",
            Recipe::MeanValueCheck => "mean_value_check",
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Recipe {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Recipe::ALL.into_iter().find(|r| r.as_str() == s).ok_or_else(|| {
            let names: Vec<_> = Recipe::ALL.iter().map(|r| r.as_str()).collect();
            format!("unknown recipe `{s}`; expected one of {}", names.join(", "))
        })
    }
}

fn float(x: f64) -> Option<ParamValue> {
    Some(ParamValue::Float(x))
}

fn int(x: i64) -> Option<ParamValue> {
    Some(ParamValue::Int(x))
}

fn text(s: &str) -> Option<ParamValue> {
    Some(ParamValue::Text(s.to_string()))
}

fn floats(xs: &[f64]) -> Option<ParamValue> {
    Some(ParamValue::Floats(xs.to_vec()))
}

fn ints(xs: &[i64]) -> Option<ParamValue> {
    Some(ParamValue::Ints(xs.to_vec()))
}

/// Keys read by `recipe` with their defaults; `None` marks a required key.
pub fn recipe_defaults(recipe: Recipe) -> Vec<(&'static str, Option<ParamValue>)> {
    let pair = vec![("p", None), ("q", None)];
    let mesh = |nodes: i64| {
        vec![
            ("dim", int(1)),
            ("domain", text("interval")),
            ("extent", float(1.0)),
            ("nodes", int(nodes)),
            ("bc", text("neumann")),
        ]
    };
    let stepping = |dt_init: f64, tol: f64| {
        vec![
            ("theta", float(1.0)),
            ("tol_step", float(tol)),
            ("dt_init", float(dt_init)),
            ("dt_min", float(1e-14)),
            ("dt_max", float(0.1)),
        ]
    };
    let ic = |kind: &str, amplitude: f64, width: f64| {
        vec![
            ("ic", text(kind)),
            ("amplitude", float(amplitude)),
            ("width", float(width)),
            ("center", float(0.0)),
            ("ic_noise", float(0.0)),
        ]
    };
    let times = |t_start: f64, t_end: f64, n_out: i64, spacing: &str, t_first: f64| {
        vec![
            ("t_start", float(t_start)),
            ("t_end", float(t_end)),
            ("n_out", int(n_out)),
            ("spacing", text(spacing)),
            ("t_first", float(t_first)),
        ]
    };

    let mut keys: Vec<(&'static str, Option<ParamValue>)> = Vec::new();
    match recipe {
        Recipe::FlatValidation => {
            keys.extend(pair);
            keys.extend(mesh(401));
            keys.extend(stepping(1e-4, 1e-4));
            keys.extend(ic("flat_exact", 1.0, 0.1));
            keys.extend(times(0.1, 1.0, 9, "linear", 0.2));
        }
        Recipe::ConvergenceOrder => {
            keys.extend(pair);
            keys.extend(mesh(101));
            keys.extend([
                ("nodes_list", ints(&[101, 201, 401])),
                ("dt_list", floats(&[1e-2, 5e-3, 2.5e-3])),
                ("t_probe", float(1.0)),
                ("mask", float(0.2)),
            ]);
        }
        Recipe::BlowupFit => {
            keys.extend(pair);
            keys.extend(mesh(101));
            keys.extend(stepping(1e-4, 1e-7));
            keys.extend(ic("flat_exact", 1.0, 0.1));
            keys.extend(times(0.1, 1.0, 45, "linear", 0.2));
            keys.extend([
                ("fit_lo", float(0.1)),
                ("fit_hi", float(1.0)),
                ("margin_fraction", float(0.2)),
            ]);
        }
        Recipe::EstimateSaturation => {
            keys.extend(pair);
            keys.extend(mesh(201));
            keys.extend(stepping(1e-6, 1e-5));
            keys.extend(ic("flat", 10.0, 0.1));
            keys.extend(times(0.0, 0.1, 1, "linear", 0.01));
            keys.push(("margin_fraction", float(0.2)));
        }
        Recipe::TraceMeasurement => {
            keys.extend(pair);
            keys.extend(mesh(401));
            keys.extend(stepping(1e-6, 1e-4));
            keys.extend(ic("bump", 1.0, 0.05));
            keys.extend(times(0.0, 0.5, 30, "log", 1e-4));
            keys.extend([("psi_center", float(0.0)), ("psi_width", float(0.5))]);
        }
        Recipe::DichotomyProbe => {
            keys.extend(pair);
            keys.extend(mesh(401));
            keys.extend(stepping(1e-6, 1e-4));
            keys.extend(ic("smooth", 1.0, 0.025));
            keys.extend([
                ("t_start", float(0.0)),
                ("n_out", int(60)),
                ("windows", floats(&[0.004, 0.002, 0.001, 0.0005])),
                ("t_hi", float(1.0)),
                ("region", float(0.1)),
                ("growth_ratio", float(10.0)),
                ("saturation_tol", float(0.05)),
            ]);
        }
        Recipe::RemovabilitySweep => {
            keys.extend(pair);
            keys.extend(mesh(1601));
            keys.extend(stepping(1e-6, 1e-4));
            keys.extend([
                ("amplitude", float(1.0)),
                ("center", float(0.0)),
                ("eps", floats(&[0.2, 0.1, 0.05, 0.025])),
                ("t_probe", float(0.05)),
            ]);
        }
        Recipe::SubsolutionCheck => {
            keys.extend(pair);
            keys.extend(mesh(101).into_iter().filter(|(k, _)| *k != "nodes"));
            keys.extend(stepping(1e-4, 1e-6));
            keys.extend(ic("flat_exact", 1.0, 0.1));
            keys.extend(times(0.1, 1.0, 45, "linear", 0.2));
            keys.push(("nodes_list", ints(&[101, 201, 401])));
        }
        Recipe::MeanValueCheck => {
            keys.extend(mesh(401).into_iter().map(|(k, v)| if k == "extent" { (k, float(2.0)) } else { (k, v) }));
            keys.extend(stepping(1e-4, 1e-5));
            keys.extend(ic("gaussian", 1.0, 0.05));
            keys.extend(times(0.05, 1.0, 200, "linear", 0.1));
            keys.extend([
                ("power_s", float(1.0)),
                ("x0", float(0.0)),
                ("t0", float(0.5)),
                ("rho", float(0.5)),
                ("eps", floats(&[0.1, 0.2, 0.4])),
            ]);
        }
    }
    keys
}

/// A validated experiment: recipe, parameters with defaults filled, base
/// seed, and the sweep grid (empty for a single run).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub recipe: Recipe,
    pub seed: u64,
    pub params: Params,
    pub sweep: Vec<(String, Vec<ParamValue>)>,
}

fn config_error(text: &str, key: Option<&str>, section: Option<&str>, message: impl Into<String>) -> Error {
    Error::Config {
        line: key.and_then(|k| line_of(text, k, section)),
        key: key.map(str::to_string),
        message: message.into(),
    }
}

/// 1-based line of the first assignment to `key` inside `section` (top level
/// when `None`).
fn line_of(text: &str, key: &str, section: Option<&str>) -> Option<usize> {
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = Some(line.trim_matches(|c| c == '[' || c == ']').trim().to_string());
            continue;
        }
        if current.as_deref() != section {
            continue;
        }
        let Some(rest) = line.strip_prefix(key) else { continue };
        let rest = rest.trim_start();
        let rest = rest.strip_prefix('"').map(str::trim_start).unwrap_or(rest);
        if rest.starts_with('=') {
            return Some(i + 1);
        }
    }
    None
}

fn toml_line(text: &str, err: &toml::de::Error) -> Option<usize> {
    err.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config {
        line: toml_line(text, &e),
        key: None,
        message: e.message().to_string(),
    })?;

    let recipe = match table.get("name") {
        None => return Err(config_error(text, None, None, "missing required key `name`")),
        Some(toml::Value::String(s)) => {
            Recipe::from_str(s).map_err(|m| config_error(text, Some("name"), None, m))?
        }
        Some(_) => return Err(config_error(text, Some("name"), None, "`name` must be a string")),
    };
    let seed = match table.get("seed") {
        None => 0,
        Some(toml::Value::Integer(i)) if *i >= 0 => *i as u64,
        Some(_) => {
            return Err(config_error(text, Some("seed"), None, "`seed` must be a nonnegative integer"));
        }
    };

    let defaults = recipe_defaults(recipe);
    let schema = |key: &str, section: Option<&str>| {
        let kind = params::kind_of(key)
            .ok_or_else(|| config_error(text, Some(key), section, format!("unknown key `{key}`")))?;
        if !defaults.iter().any(|(k, _)| *k == key) {
            return Err(config_error(
                text,
                Some(key),
                section,
                format!("key `{key}` is not used by recipe `{recipe}`"),
            ));
        }
        Ok(kind)
    };

    let mut params = Params::default();
    let mut sweep = Vec::new();
    for (key, value) in &table {
        match key.as_str() {
            "name" | "seed" => {}
            "sweep" => {
                let toml::Value::Table(grid) = value else {
                    return Err(config_error(text, Some("sweep"), None, "`sweep` must be a table"));
                };
                for (k, list) in grid {
                    let kind = schema(k, Some("sweep"))?;
                    let items = list.as_array().filter(|a| !a.is_empty()).ok_or_else(|| {
                        config_error(text, Some(k), Some("sweep"), format!("sweep values for `{k}` must be a nonempty array"))
                    })?;
                    let values = items
                        .iter()
                        .map(|v| params::convert(k, kind, v))
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|m| config_error(text, Some(k), Some("sweep"), m))?;
                    sweep.push((k.clone(), values));
                }
            }
            _ => {
                let kind = schema(key, None)?;
                let v = params::convert(key, kind, value).map_err(|m| config_error(text, Some(key), None, m))?;
                params.insert(key, v);
            }
        }
    }
    for (key, default) in defaults {
        if params.get(key).is_none() {
            match default {
                Some(v) => params.insert(key, v),
                None if sweep.iter().any(|(k, _)| k == key) => {}
                None => {
                    return Err(config_error(
                        text,
                        None,
                        None,
                        format!("missing required key `{key}` for recipe `{recipe}`"),
                    ))
                }
            }
        }
    }
    Ok(ExperimentSpec {
        recipe,
        seed,
        params,
        sweep,
    })
}

impl ExperimentSpec {
    /// Single-run specs for every grid point, in grid order.
    pub fn grid_points(&self) -> Vec<ExperimentSpec> {
        let mut points = vec![self.params.clone()];
        for (key, values) in &self.sweep {
            points = points
                .into_iter()
                .flat_map(|base| {
                    values.iter().map(move |v| {
                        let mut p = base.clone();
                        p.insert(key, v.clone());
                        p
                    })
                })
                .collect();
        }
        points
            .into_iter()
            .enumerate()
            .map(|(i, params)| ExperimentSpec {
                recipe: self.recipe,
                seed: self.seed + i as u64,
                params,
                sweep: Vec::new(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub recipe: Recipe,
    pub seed: u64,
    pub params: Params,
    pub outcome: BTreeMap<String, serde_json::Value>,
    /// `ok` or `failed`.
    pub status: String,
    pub error: Option<String>,
    pub wall_time_s: f64,
    pub version: String,
}

/// Tabular side output of a run, written as `<name>_<run_id>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub trajectory: Option<Trajectory>,
    pub series: Vec<Series>,
    /// Set when the run failed inside the numerics rather than on its inputs.
    pub numerical_failure: bool,
}

fn run_point(spec: &ExperimentSpec, index: usize) -> RunOutput {
    let run_id = format!("{}-{index:03}", spec.recipe);
    let start = Instant::now();
    let result = recipes::run(spec);
    let wall_time_s = start.elapsed().as_secs_f64();
    let mut record = RunRecord {
        run_id,
        recipe: spec.recipe,
        seed: spec.seed,
        params: spec.params.clone(),
        outcome: BTreeMap::new(),
        status: "ok".to_string(),
        error: None,
        wall_time_s,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    match result {
        Ok(res) => {
            record.outcome = res.outcome.0;
            RunOutput {
                record,
                trajectory: res.trajectory,
                series: res.series,
                numerical_failure: false,
            }
        }
        Err(e) => {
            record.status = "failed".to_string();
            record.error = Some(e.to_string());
            RunOutput {
                record,
                trajectory: None,
                series: Vec::new(),
                numerical_failure: e.is_numerical(),
            }
        }
    }
}

/// Runs the base point of `spec`, ignoring any sweep grid.
pub fn run_experiment(spec: &ExperimentSpec) -> RunOutput {
    let base = ExperimentSpec {
        sweep: Vec::new(),
        ..spec.clone()
    };
    run_point(&base, 0)
}

/// Runs every grid point, in parallel, returning outputs in grid order.
/// Failures are recorded per point.
pub fn sweep(spec: &ExperimentSpec) -> Vec<RunOutput> {
    spec.grid_points()
        .par_iter()
        .enumerate()
        .map(|(i, point)| run_point(point, i))
        .collect()
}
