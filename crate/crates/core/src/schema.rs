//! Strict JSON config files.
//!
//! Every file is a JSON object with a `kind` discriminator (`model`,
//! `hardware` or `precision`) followed by that kind's fields. Unknown keys
//! are errors, with a suggestion when a known key is close.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::config::{
    HardwareConfig, HardwareFields, ModelConfig, ModelFields, PrecisionFields, PrecisionSpec,
};
use crate::error::{Error, Result};

pub const MODEL_KEYS: &[&str] = &[
    "name",
    "layers",
    "hidden_dim",
    "intermediate_dim",
    "attention_heads",
    "vocab_size",
    "seq_len",
    "nominal_params",
    "provenance",
];

pub const HARDWARE_KEYS: &[&str] = &[
    "name",
    "peak_flops",
    "mem_bw",
    "storage_bw",
    "h2d_bw",
    "net_bw",
    "u_compute",
    "u_memory",
    "u_storage",
    "u_h2d",
    "u_net",
    "e_flop",
    "e_byte",
    "peak_flops_by_precision",
    "provenance",
];

pub const PRECISION_KEYS: &[&str] = &["name", "bits_per_element", "provenance"];

/// Any one parsed configuration file.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigItem {
    Model(ModelConfig),
    Hardware(HardwareConfig),
    Precision(PrecisionSpec),
}

impl ConfigItem {
    pub fn kind(&self) -> &'static str {
        match self {
            ConfigItem::Model(_) => "model",
            ConfigItem::Hardware(_) => "hardware",
            ConfigItem::Precision(_) => "precision",
        }
    }
}

pub fn parse_config(text: &str) -> Result<ConfigItem> {
    let value: Value = serde_json::from_str(text)?;
    let Value::Object(mut map) = value else {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "config must be a JSON object".into(),
        });
    };
    let kind = match map.remove("kind") {
        Some(Value::String(k)) => k,
        Some(_) => return Err(Error::invalid("kind", "must be a string")),
        None => {
            return Err(Error::invalid(
                "kind",
                "missing discriminator (expected model, hardware or precision)",
            ))
        }
    };
    match kind.as_str() {
        "model" => {
            let fields: ModelFields = typed(text, "model", MODEL_KEYS, map)?;
            ModelConfig::new(fields).map(ConfigItem::Model)
        }
        "hardware" => {
            let fields: HardwareFields = typed(text, "hardware", HARDWARE_KEYS, map)?;
            HardwareConfig::new(fields).map(ConfigItem::Hardware)
        }
        "precision" => {
            let fields: PrecisionFields = typed(text, "precision", PRECISION_KEYS, map)?;
            PrecisionSpec::try_from(fields).map(ConfigItem::Precision)
        }
        other => Err(Error::invalid(
            "kind",
            format!("unknown kind `{other}` (expected model, hardware or precision)"),
        )),
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ConfigItem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Serializes a config back to its file form, `kind` first.
pub fn to_config_json(item: &ConfigItem) -> String {
    let fields = match item {
        ConfigItem::Model(m) => serde_json::to_value(m),
        ConfigItem::Hardware(h) => serde_json::to_value(h),
        ConfigItem::Precision(p) => serde_json::to_value(p),
    }
    .expect("config types always serialize");
    let mut map = Map::new();
    map.insert("kind".into(), Value::String(item.kind().into()));
    if let Value::Object(rest) = fields {
        map.extend(rest);
    }
    let mut out = serde_json::to_string_pretty(&Value::Object(map)).expect("value serializes");
    out.push('\n');
    out
}

fn typed<T: DeserializeOwned>(
    text: &str,
    kind: &str,
    known: &[&str],
    map: Map<String, Value>,
) -> Result<T> {
    for key in map.keys() {
        if !known.contains(&key.as_str()) {
            let suggestion = known
                .iter()
                .map(|k| (strsim::levenshtein(k, key), *k))
                .filter(|(d, k)| *d <= 3.max(k.len() / 3))
                .min()
                .map(|(_, k)| k.to_string());
            return Err(Error::UnknownKey {
                kind: kind.into(),
                key: key.clone(),
                suggestion,
            });
        }
    }
    serde_path_to_error::deserialize(Value::Object(map)).map_err(|e| {
        let path = e.path().to_string();
        let top = path.split(['.', '[']).next().unwrap_or_default();
        let (line, column) = locate_key(text, top);
        Error::Parse {
            line,
            column,
            message: format!("field `{path}`: {}", e.inner()),
        }
    })
}

/// 1-based position of the first `"key"` occurrence, or (0, 0).
fn locate_key(text: &str, key: &str) -> (usize, usize) {
    let needle = format!("\"{key}\"");
    text.lines()
        .enumerate()
        .find_map(|(i, line)| line.find(&needle).map(|c| (i + 1, c + 1)))
        .unwrap_or((0, 0))
}
