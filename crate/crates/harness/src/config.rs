//! Run configuration: a TOML file plus command-line overrides.
//!
//! ```toml
//! scenario = "eqs-concurrence"   # optional, must match the CLI id
//! seed = 7
//! threads = 2
//! out = "results/concurrence"
//!
//! [params]
//! g = 1.0
//! points = 64
//!
//! [truncation]
//! n_max = 40
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::params::{ParamSpec, Params};

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: BTreeMap<String, toml::Value>,
    #[serde(default)]
    pub truncation: BTreeMap<String, toml::Value>,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Apply `key=value`. Keys may be bare or prefixed with `params.` or
    /// `truncation.`; values use TOML syntax, with bare words read as strings.
    pub fn apply_set(&mut self, kv: &str, schema: &[ParamSpec]) -> Result<()> {
        let (key, raw) = kv
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("--set expects key=value, got {kv:?}")))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        let (section, name) = match key.split_once('.') {
            Some(("params", n)) => (Some(false), n),
            Some(("truncation", n)) => (Some(true), n),
            Some(_) => return Err(HarnessError::Config(format!("unknown section in key {key:?}"))),
            None => (None, key),
        };
        let trunc = match section {
            Some(t) => t,
            None => schema
                .iter()
                .find(|p| p.name == name)
                .map(|p| p.truncation)
                .ok_or_else(|| HarnessError::Config(format!("unknown parameter {name:?}")))?,
        };
        let map = if trunc { &mut self.truncation } else { &mut self.params };
        map.insert(name.to_string(), value);
        Ok(())
    }

    /// Merge overrides into the schema defaults, rejecting unknown keys and
    /// type mismatches.
    pub fn resolve(&self, schema: &[ParamSpec]) -> Result<Params> {
        let mut out = Params::defaults(schema);
        for (section, map, trunc) in [("params", &self.params, false), ("truncation", &self.truncation, true)] {
            for (k, v) in map {
                let spec = schema
                    .iter()
                    .find(|p| p.name == k)
                    .ok_or_else(|| HarnessError::Config(format!("unknown key {section}.{k}")))?;
                if spec.truncation != trunc {
                    let right = if spec.truncation { "truncation" } else { "params" };
                    return Err(HarnessError::Config(format!(
                        "{k} belongs in [{right}], not [{section}]"
                    )));
                }
                let pv = spec.default.coerce(v).ok_or_else(|| {
                    HarnessError::Config(format!("{section}.{k} must be a {}, got {v}", spec.default.kind()))
                })?;
                out.set(k, pv);
            }
        }
        Ok(out)
    }
}
