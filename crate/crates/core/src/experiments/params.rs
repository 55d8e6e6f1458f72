use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A single configuration value after type checking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
    Ints(Vec<i64>),
    Floats(Vec<f64>),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join<T: ToString>(xs: &[T]) -> String {
            xs.iter().map(T::to_string).collect::<Vec<_>>().join(";")
        }
        match self {
            ParamValue::Int(x) => write!(f, "{x}"),
            ParamValue::Float(x) => write!(f, "{x}"),
            ParamValue::Text(s) => f.write_str(s),
            ParamValue::Ints(xs) => f.write_str(&join(xs)),
            ParamValue::Floats(xs) => f.write_str(&join(xs)),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Kind {
    Real,
    Positive,
    NonNegative,
    Count,
    Choice(&'static [&'static str]),
    PositiveList,
    CountList,
}

pub(crate) const KEYS: &[(&str, Kind)] = &[
    ("p", Kind::Positive),
    ("q", Kind::Positive),
    ("dim", Kind::Count),
    ("domain", Kind::Choice(&["interval", "ball"])),
    ("extent", Kind::Positive),
    ("nodes", Kind::Count),
    ("nodes_list", Kind::CountList),
    ("bc", Kind::Choice(&["neumann", "dirichlet"])),
    ("theta", Kind::Positive),
    ("tol_step", Kind::Positive),
    ("dt_init", Kind::Positive),
    ("dt_min", Kind::Positive),
    ("dt_max", Kind::Positive),
    ("t_start", Kind::NonNegative),
    ("t_end", Kind::Positive),
    ("t_first", Kind::Positive),
    ("n_out", Kind::Count),
    ("spacing", Kind::Choice(&["linear", "log"])),
    ("ic", Kind::Choice(&["flat_exact", "flat", "bump", "smooth", "gaussian"])),
    ("amplitude", Kind::NonNegative),
    ("width", Kind::Positive),
    ("center", Kind::Real),
    ("ic_noise", Kind::NonNegative),
    ("eps", Kind::PositiveList),
    ("t_probe", Kind::Positive),
    ("windows", Kind::PositiveList),
    ("t_hi", Kind::Positive),
    ("region", Kind::Positive),
    ("growth_ratio", Kind::Positive),
    ("saturation_tol", Kind::Positive),
    ("fit_lo", Kind::Positive),
    ("fit_hi", Kind::Positive),
    ("dt_list", Kind::PositiveList),
    ("mask", Kind::Positive),
    ("margin_fraction", Kind::NonNegative),
    ("psi_center", Kind::Real),
    ("psi_width", Kind::Positive),
    ("power_s", Kind::Positive),
    ("x0", Kind::Real),
    ("t0", Kind::Positive),
    ("rho", Kind::Positive),
];

pub(crate) fn kind_of(key: &str) -> Option<Kind> {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, kind)| *kind)
}

fn describe(v: &toml::Value) -> &'static str {
    match v {
        toml::Value::String(_) => "a string",
        toml::Value::Integer(_) => "an integer",
        toml::Value::Float(_) => "a float",
        toml::Value::Boolean(_) => "a boolean",
        toml::Value::Datetime(_) => "a datetime",
        toml::Value::Array(_) => "an array",
        toml::Value::Table(_) => "a table",
    }
}

fn number(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Integer(i) => Some(*i as f64),
        toml::Value::Float(x) => Some(*x),
        _ => None,
    }
}

/// Type-checks `value` against the schema entry for `key`.
pub(crate) fn convert(key: &str, kind: Kind, value: &toml::Value) -> Result<ParamValue, String> {
    let mismatch = |want: &str| format!("expected {want} for `{key}`, found {}", describe(value));
    let positive = |x: f64| {
        if x > 0.0 && x.is_finite() {
            Ok(x)
        } else {
            Err(format!("`{key}` must be positive, got {x}"))
        }
    };
    match kind {
        Kind::Real => {
            let x = number(value).ok_or_else(|| mismatch("a number"))?;
            if x.is_finite() {
                Ok(ParamValue::Float(x))
            } else {
                Err(format!("`{key}` must be finite"))
            }
        }
        Kind::Positive => Ok(ParamValue::Float(positive(
            number(value).ok_or_else(|| mismatch("a number"))?,
        )?)),
        Kind::NonNegative => {
            let x = number(value).ok_or_else(|| mismatch("a number"))?;
            if x >= 0.0 && x.is_finite() {
                Ok(ParamValue::Float(x))
            } else {
                Err(format!("`{key}` must be nonnegative, got {x}"))
            }
        }
        Kind::Count => match value {
            toml::Value::Integer(i) if *i > 0 => Ok(ParamValue::Int(*i)),
            toml::Value::Integer(i) => Err(format!("`{key}` must be a positive integer, got {i}")),
            _ => Err(mismatch("an integer")),
        },
        Kind::Choice(options) => match value {
            toml::Value::String(s) if options.contains(&s.as_str()) => Ok(ParamValue::Text(s.clone())),
            toml::Value::String(s) => Err(format!(
                "`{key}` must be one of {}, got \"{s}\"",
                options.join(", ")
            )),
            _ => Err(mismatch("a string")),
        },
        Kind::PositiveList => {
            let items = value.as_array().ok_or_else(|| mismatch("an array of numbers"))?;
            if items.is_empty() {
                return Err(format!("`{key}` must not be empty"));
            }
            items
                .iter()
                .map(|v| number(v).ok_or_else(|| mismatch("an array of numbers")).and_then(positive))
                .collect::<Result<Vec<_>, _>>()
                .map(ParamValue::Floats)
        }
        Kind::CountList => {
            let items = value.as_array().ok_or_else(|| mismatch("an array of integers"))?;
            if items.is_empty() {
                return Err(format!("`{key}` must not be empty"));
            }
            items
                .iter()
                .map(|v| match v {
                    toml::Value::Integer(i) if *i > 0 => Ok(*i),
                    _ => Err(mismatch("an array of positive integers")),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(ParamValue::Ints)
        }
    }
}

/// Validated parameter set of one run. Every key the recipe reads is present.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Params(pub(crate) BTreeMap<String, ParamValue>);

impl Params {
    pub fn get(&self, key: &str) -> Option<&ParamValue> {
        self.0.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ParamValue)> {
        self.0.iter()
    }

    pub(crate) fn insert(&mut self, key: &str, value: ParamValue) {
        self.0.insert(key.to_string(), value);
    }

    fn missing(key: &str) -> ! {
        panic!("parameter `{key}` is not part of this recipe's schema")
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.0.get(key) {
            Some(ParamValue::Float(x)) => *x,
            Some(ParamValue::Int(i)) => *i as f64,
            _ => Self::missing(key),
        }
    }

    pub fn count(&self, key: &str) -> usize {
        match self.0.get(key) {
            Some(ParamValue::Int(i)) => *i as usize,
            _ => Self::missing(key),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.0.get(key) {
            Some(ParamValue::Text(s)) => s,
            _ => Self::missing(key),
        }
    }

    pub fn floats(&self, key: &str) -> Vec<f64> {
        match self.0.get(key) {
            Some(ParamValue::Floats(xs)) => xs.clone(),
            _ => Self::missing(key),
        }
    }

    pub fn counts(&self, key: &str) -> Vec<usize> {
        match self.0.get(key) {
            Some(ParamValue::Ints(xs)) => xs.iter().map(|&i| i as usize).collect(),
            _ => Self::missing(key),
        }
    }
}
