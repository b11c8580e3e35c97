//! Typed scenario parameters and their schemas.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum ParamValue {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Floats(Vec<f64>),
    Ints(Vec<i64>),
}

impl ParamValue {
    pub fn kind(&self) -> &'static str {
        match self {
            ParamValue::Float(_) => "float",
            ParamValue::Int(_) => "integer",
            ParamValue::Bool(_) => "bool",
            ParamValue::Text(_) => "string",
            ParamValue::Floats(_) => "float list",
            ParamValue::Ints(_) => "integer list",
        }
    }

    /// Convert a TOML value to the same variant as `self`. Integers widen
    /// to floats; nothing else is coerced.
    pub fn coerce(&self, v: &toml::Value) -> Option<ParamValue> {
        let as_f = |v: &toml::Value| v.as_float().or_else(|| v.as_integer().map(|i| i as f64));
        match self {
            ParamValue::Float(_) => as_f(v).map(ParamValue::Float),
            ParamValue::Int(_) => v.as_integer().map(ParamValue::Int),
            ParamValue::Bool(_) => v.as_bool().map(ParamValue::Bool),
            ParamValue::Text(_) => v.as_str().map(|s| ParamValue::Text(s.to_string())),
            ParamValue::Floats(_) => v
                .as_array()?
                .iter()
                .map(as_f)
                .collect::<Option<Vec<_>>>()
                .map(ParamValue::Floats),
            ParamValue::Ints(_) => v
                .as_array()?
                .iter()
                .map(|x| x.as_integer())
                .collect::<Option<Vec<_>>>()
                .map(ParamValue::Ints),
        }
    }

    pub fn to_toml(&self) -> toml::Value {
        match self {
            ParamValue::Float(f) => toml::Value::Float(*f),
            ParamValue::Int(i) => toml::Value::Integer(*i),
            ParamValue::Bool(b) => toml::Value::Boolean(*b),
            ParamValue::Text(s) => toml::Value::String(s.clone()),
            ParamValue::Floats(v) => toml::Value::Array(v.iter().map(|f| toml::Value::Float(*f)).collect()),
            ParamValue::Ints(v) => toml::Value::Array(v.iter().map(|i| toml::Value::Integer(*i)).collect()),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Float(x) => write!(f, "{x}"),
            ParamValue::Int(x) => write!(f, "{x}"),
            ParamValue::Bool(x) => write!(f, "{x}"),
            ParamValue::Text(x) => write!(f, "{x:?}"),
            ParamValue::Floats(v) => write!(f, "{v:?}"),
            ParamValue::Ints(v) => write!(f, "{v:?}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: ParamValue,
    pub unit: &'static str,
    pub help: &'static str,
    /// Belongs to the `[truncation]` section rather than `[params]`.
    pub truncation: bool,
}

impl ParamSpec {
    pub fn new(name: &'static str, default: ParamValue, unit: &'static str, help: &'static str) -> Self {
        Self {
            name,
            default,
            unit,
            help,
            truncation: false,
        }
    }

    pub fn float(name: &'static str, v: f64, unit: &'static str, help: &'static str) -> Self {
        Self::new(name, ParamValue::Float(v), unit, help)
    }

    pub fn int(name: &'static str, v: i64, help: &'static str) -> Self {
        Self::new(name, ParamValue::Int(v), "1", help)
    }

    pub fn boolean(name: &'static str, v: bool, help: &'static str) -> Self {
        Self::new(name, ParamValue::Bool(v), "-", help)
    }

    pub fn text(name: &'static str, v: &str, help: &'static str) -> Self {
        Self::new(name, ParamValue::Text(v.to_string()), "-", help)
    }

    pub fn floats(name: &'static str, v: &[f64], unit: &'static str, help: &'static str) -> Self {
        Self::new(name, ParamValue::Floats(v.to_vec()), unit, help)
    }

    pub fn ints(name: &'static str, v: &[i64], help: &'static str) -> Self {
        Self::new(name, ParamValue::Ints(v.to_vec()), "1", help)
    }

    /// A Fock or spin cutoff, overridable from `[truncation]`.
    pub fn cutoff(name: &'static str, v: i64, help: &'static str) -> Self {
        Self {
            truncation: true,
            ..Self::new(name, ParamValue::Int(v), "1", help)
        }
    }
}

/// Fully resolved parameters of one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params {
    values: BTreeMap<String, ParamValue>,
}

impl Params {
    pub fn defaults(schema: &[ParamSpec]) -> Self {
        Self {
            values: schema.iter().map(|p| (p.name.to_string(), p.default.clone())).collect(),
        }
    }

    pub fn set(&mut self, name: &str, v: ParamValue) {
        self.values.insert(name.to_string(), v);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ParamValue)> {
        self.values.iter()
    }

    fn get(&self, name: &str) -> Result<&ParamValue> {
        self.values
            .get(name)
            .ok_or_else(|| HarnessError::Config(format!("parameter {name} is not defined for this scenario")))
    }

    fn mismatch(name: &str, want: &str) -> HarnessError {
        HarnessError::Config(format!("parameter {name} is not a {want}"))
    }

    pub fn f64(&self, name: &str) -> Result<f64> {
        match self.get(name)? {
            ParamValue::Float(x) => Ok(*x),
            _ => Err(Self::mismatch(name, "float")),
        }
    }

    pub fn i64(&self, name: &str) -> Result<i64> {
        match self.get(name)? {
            ParamValue::Int(x) => Ok(*x),
            _ => Err(Self::mismatch(name, "integer")),
        }
    }

    /// A nonnegative integer parameter, bounded below by `min`.
    pub fn usize_min(&self, name: &str, min: usize) -> Result<usize> {
        let v = self.i64(name)?;
        if v < min as i64 {
            return Err(HarnessError::Config(format!("{name} = {v} must be at least {min}")));
        }
        Ok(v as usize)
    }

    pub fn bool(&self, name: &str) -> Result<bool> {
        match self.get(name)? {
            ParamValue::Bool(x) => Ok(*x),
            _ => Err(Self::mismatch(name, "bool")),
        }
    }

    pub fn text(&self, name: &str) -> Result<&str> {
        match self.get(name)? {
            ParamValue::Text(x) => Ok(x),
            _ => Err(Self::mismatch(name, "string")),
        }
    }

    pub fn floats(&self, name: &str) -> Result<&[f64]> {
        match self.get(name)? {
            ParamValue::Floats(x) => Ok(x),
            _ => Err(Self::mismatch(name, "float list")),
        }
    }

    pub fn usizes(&self, name: &str, min: usize) -> Result<Vec<usize>> {
        match self.get(name)? {
            ParamValue::Ints(x) => x
                .iter()
                .map(|&v| {
                    if v < min as i64 {
                        Err(HarnessError::Config(format!("{name} entries must be at least {min}")))
                    } else {
                        Ok(v as usize)
                    }
                })
                .collect(),
            _ => Err(Self::mismatch(name, "integer list")),
        }
    }
}
