//! Flat `section.field = value` configuration files.
//!
//! Every field of every component config is addressable. Blank lines and
//! lines starting with `#` are ignored; unknown keys and values of the
//! wrong type are errors.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::association::AssociationConfig;
use crate::ba::BaConfig;
use crate::error::{Error, Result};
use crate::pipeline::PipelineConfig;
use crate::tracker::TrackerConfig;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub tracker: TrackerConfig,
    pub association: AssociationConfig,
    pub ba: BaConfig,
    pub pipeline: PipelineConfig,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.tracker.validate()?;
        self.association.validate()?;
        self.ba.validate()?;
        self.pipeline.validate()
    }

    /// Parses `key = value` lines over the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tree = serde_json::to_value(Config::default()).map_err(|e| Error::Parse(e.to_string()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            set(&mut tree, key.trim(), value.trim()).map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        }
        let cfg: Config = serde_json::from_value(tree).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Every field as one `key = value` line, parseable by [`Config::parse`].
    pub fn to_text(&self) -> String {
        let tree = serde_json::to_value(self).expect("config serialises");
        let mut out = String::new();
        if let Value::Object(sections) = tree {
            for (section, fields) in sections {
                if let Value::Object(fields) = fields {
                    for (name, v) in fields {
                        let shown = match v {
                            Value::String(s) => s,
                            other => other.to_string(),
                        };
                        out.push_str(&format!("{section}.{name} = {shown}\n"));
                    }
                }
            }
        }
        out
    }
}

fn set(tree: &mut Value, key: &str, raw: &str) -> std::result::Result<(), String> {
    let (section, field) = key.split_once('.').ok_or_else(|| format!("key {key:?} is not section.field"))?;
    let fields: &mut Map<String, Value> = tree
        .get_mut(section)
        .and_then(Value::as_object_mut)
        .ok_or_else(|| format!("unknown section {section:?}"))?;
    let slot = fields.get_mut(field).ok_or_else(|| format!("unknown key {key:?}"))?;
    *slot = match slot {
        Value::Bool(_) => Value::Bool(raw.parse().map_err(|_| format!("{key}: expected true/false, got {raw:?}"))?),
        Value::Number(n) if n.is_u64() => {
            Value::from(raw.parse::<u64>().map_err(|_| format!("{key}: expected an unsigned integer, got {raw:?}"))?)
        }
        Value::Number(_) => {
            let x: f64 = raw.parse().map_err(|_| format!("{key}: expected a number, got {raw:?}"))?;
            serde_json::Number::from_f64(x)
                .map(Value::Number)
                .ok_or_else(|| format!("{key}: non-finite value"))?
        }
        Value::String(_) => Value::String(raw.trim_matches('"').to_string()),
        _ => return Err(format!("{key}: unsupported value type")),
    };
    Ok(())
}
