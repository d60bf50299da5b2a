//! Built-in device, model and precision presets.
//!
//! Presets are ordinary config files under `presets/` in this crate, embedded
//! at build time and parsed with the same strict loader as user configs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use serde::Serialize;

use crate::config::{HardwareConfig, ModelConfig, PrecisionSpec, Source};
use crate::counts::param_count;
use crate::error::{Error, Result};
use crate::schema::{load_config, parse_config, ConfigItem};

const PRESET_FILES: &[(&str, &str)] = &[
    (
        "devices/raspberry-pi-4.json",
        include_str!("../presets/devices/raspberry-pi-4.json"),
    ),
    (
        "devices/raspberry-pi-5.json",
        include_str!("../presets/devices/raspberry-pi-5.json"),
    ),
    (
        "devices/jetson-orin-nano-super.json",
        include_str!("../presets/devices/jetson-orin-nano-super.json"),
    ),
    (
        "models/tinyllama-1.1b.json",
        include_str!("../presets/models/tinyllama-1.1b.json"),
    ),
    (
        "models/gemma3-1b.json",
        include_str!("../presets/models/gemma3-1b.json"),
    ),
    (
        "models/llama3.2-1b.json",
        include_str!("../presets/models/llama3.2-1b.json"),
    ),
    (
        "models/deepseek-r1-1.5b.json",
        include_str!("../presets/models/deepseek-r1-1.5b.json"),
    ),
    (
        "precisions/FP32.json",
        include_str!("../presets/precisions/FP32.json"),
    ),
    (
        "precisions/FP16.json",
        include_str!("../presets/precisions/FP16.json"),
    ),
    (
        "precisions/INT8.json",
        include_str!("../presets/precisions/INT8.json"),
    ),
    (
        "precisions/INT4.json",
        include_str!("../presets/precisions/INT4.json"),
    ),
];

/// Immutable, name-sorted collection of presets.
#[derive(Debug, Clone, Default)]
pub struct PresetCatalog {
    devices: BTreeMap<String, HardwareConfig>,
    models: BTreeMap<String, ModelConfig>,
    precisions: BTreeMap<String, PrecisionSpec>,
}

impl PresetCatalog {
    /// The catalog shipped with the crate.
    pub fn builtin() -> &'static PresetCatalog {
        static CATALOG: OnceLock<PresetCatalog> = OnceLock::new();
        CATALOG.get_or_init(|| {
            let mut catalog = PresetCatalog::default();
            for (file, text) in PRESET_FILES {
                let item = parse_config(text)
                    .unwrap_or_else(|e| panic!("built-in preset {file} is invalid: {e}"));
                catalog.insert(item);
            }
            catalog
        })
    }

    pub fn insert(&mut self, item: ConfigItem) {
        match item {
            ConfigItem::Model(m) => {
                self.models.insert(m.name().to_string(), m);
            }
            ConfigItem::Hardware(h) => {
                self.devices.insert(h.name().to_string(), h);
            }
            ConfigItem::Precision(p) => {
                self.precisions.insert(p.name().to_string(), p);
            }
        }
    }

    pub fn devices(&self) -> impl Iterator<Item = &HardwareConfig> {
        self.devices.values()
    }
    pub fn models(&self) -> impl Iterator<Item = &ModelConfig> {
        self.models.values()
    }
    pub fn precisions(&self) -> impl Iterator<Item = &PrecisionSpec> {
        self.precisions.values()
    }

    pub fn device(&self, name: &str) -> Result<HardwareConfig> {
        self.devices
            .get(name)
            .cloned()
            .ok_or_else(|| unknown("device", name, self.devices.keys()))
    }

    pub fn model(&self, name: &str) -> Result<ModelConfig> {
        self.models
            .get(name)
            .cloned()
            .ok_or_else(|| unknown("model", name, self.models.keys()))
    }

    /// Precision names match case-insensitively.
    pub fn precision(&self, name: &str) -> Result<PrecisionSpec> {
        self.precisions
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.clone())
            .ok_or_else(|| unknown("precision", name, self.precisions.keys()))
    }

    /// Resolves a preset name, or a path to a config file of the right kind.
    pub fn resolve_device(&self, arg: &str) -> Result<HardwareConfig> {
        match load_if_path(arg)? {
            Some(ConfigItem::Hardware(h)) => Ok(h),
            Some(other) => Err(wrong_kind(arg, "hardware", &other)),
            None => self.device(arg),
        }
    }

    pub fn resolve_model(&self, arg: &str) -> Result<ModelConfig> {
        match load_if_path(arg)? {
            Some(ConfigItem::Model(m)) => Ok(m),
            Some(other) => Err(wrong_kind(arg, "model", &other)),
            None => self.model(arg),
        }
    }

    pub fn resolve_precision(&self, arg: &str) -> Result<PrecisionSpec> {
        match load_if_path(arg)? {
            Some(ConfigItem::Precision(p)) => Ok(p),
            Some(other) => Err(wrong_kind(arg, "precision", &other)),
            None => self.precision(arg),
        }
    }

    pub fn listing(&self) -> PresetListing {
        let entry = |name: &str, source: Source, detail: String| ListingEntry {
            name: name.to_string(),
            provenance: source,
            detail,
        };
        PresetListing {
            devices: self
                .devices
                .values()
                .map(|d| {
                    let cpu = d
                        .provenance()
                        .identity
                        .get("cpu")
                        .cloned()
                        .unwrap_or_default();
                    entry(d.name(), d.provenance().source, cpu)
                })
                .collect(),
            models: self
                .models
                .values()
                .map(|m| {
                    entry(
                        m.name(),
                        m.provenance().source,
                        format!("P={}", param_count(m)),
                    )
                })
                .collect(),
            precisions: self
                .precisions
                .values()
                .map(|p| {
                    entry(
                        p.name(),
                        p.provenance().source,
                        format!("{} bits", p.bits()),
                    )
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ListingEntry {
    pub name: String,
    pub provenance: Source,
    pub detail: String,
}

/// Alphabetical listing of every preset with its provenance flag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PresetListing {
    pub devices: Vec<ListingEntry>,
    pub models: Vec<ListingEntry>,
    pub precisions: Vec<ListingEntry>,
}

impl PresetListing {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (title, entries) in [
            ("devices", &self.devices),
            ("models", &self.models),
            ("precisions", &self.precisions),
        ] {
            let width = entries.iter().map(|e| e.name.len()).max().unwrap_or(0);
            let _ = writeln!(out, "{title}:");
            for e in entries {
                let _ = writeln!(
                    out,
                    "  {:width$}  [{}]  {}",
                    e.name,
                    e.provenance,
                    e.detail,
                    width = width
                );
            }
        }
        out
    }
}

fn unknown<'a>(
    category: &'static str,
    name: &str,
    keys: impl Iterator<Item = &'a String>,
) -> Error {
    Error::UnknownPreset {
        category,
        name: name.to_string(),
        available: keys.cloned().collect(),
    }
}

fn wrong_kind(arg: &str, expected: &str, got: &ConfigItem) -> Error {
    Error::invalid(
        "kind",
        format!("{arg}: expected a {expected} config, found {}", got.kind()),
    )
}

fn load_if_path(arg: &str) -> Result<Option<ConfigItem>> {
    let path = Path::new(arg);
    if arg.ends_with(".json") || path.is_file() {
        load_config(path).map(Some)
    } else {
        Ok(None)
    }
}

pub fn load_device_preset(name: &str) -> Result<HardwareConfig> {
    PresetCatalog::builtin().device(name)
}

pub fn load_model_preset(name: &str) -> Result<ModelConfig> {
    PresetCatalog::builtin().model(name)
}

pub fn load_precision_preset(name: &str) -> Result<PrecisionSpec> {
    PresetCatalog::builtin().precision(name)
}

pub fn list_presets() -> PresetListing {
    PresetCatalog::builtin().listing()
}
