//! Cross products of devices, models and precisions, and the plot series
//! derived from them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::{HardwareConfig, ModelConfig, PrecisionSpec};
use crate::error::{Error, Result};
use crate::latency::Aggregation;
use crate::par::{map_ordered, Concurrency};
use crate::presets::PresetCatalog;
use crate::report::{
    fmt_num, human_bytes, render_csv, run_profile, sig9, Format, ProfileReport, SCHEMA_VERSION,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepResult {
    pub schema_version: u32,
    pub reports: Vec<ProfileReport>,
}

/// Resolves every name (or config path) before evaluating anything, so an
/// unknown entry fails the whole sweep up front.
pub fn run_sweep(
    catalog: &PresetCatalog,
    devices: &[String],
    models: &[String],
    precisions: &[String],
    mode: Aggregation,
    concurrency: Concurrency,
) -> Result<SweepResult> {
    let devices = devices
        .iter()
        .map(|d| catalog.resolve_device(d))
        .collect::<Result<Vec<_>>>()?;
    let models = models
        .iter()
        .map(|m| catalog.resolve_model(m))
        .collect::<Result<Vec<_>>>()?;
    let precisions = precisions
        .iter()
        .map(|p| catalog.resolve_precision(p))
        .collect::<Result<Vec<_>>>()?;
    sweep_configs(devices, models, precisions, mode, concurrency)
}

/// Evaluates the full cross product. Reports are ordered by device name,
/// model name, then precision bits from widest to narrowest, regardless of
/// argument order or concurrency.
pub fn sweep_configs(
    mut devices: Vec<HardwareConfig>,
    mut models: Vec<ModelConfig>,
    mut precisions: Vec<PrecisionSpec>,
    mode: Aggregation,
    concurrency: Concurrency,
) -> Result<SweepResult> {
    devices.sort_by(|a, b| a.name().cmp(b.name()));
    models.sort_by(|a, b| a.name().cmp(b.name()));
    precisions.sort_by(|a, b| b.bits().cmp(&a.bits()).then_with(|| a.name().cmp(b.name())));

    let mut cells = Vec::with_capacity(devices.len() * models.len() * precisions.len());
    for d in &devices {
        for m in &models {
            for p in &precisions {
                cells.push((d, m, p));
            }
        }
    }
    let reports = map_ordered(&cells, concurrency, |(d, m, p)| run_profile(m, d, p, mode))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        schema_version: SCHEMA_VERSION,
        reports,
    })
}

impl SweepResult {
    pub fn canonical(&self) -> SweepResult {
        SweepResult {
            schema_version: self.schema_version,
            reports: self.reports.iter().map(ProfileReport::canonical).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.canonical()).expect("sweep serializes");
        out.push('\n');
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => render_csv(&self.reports),
            Format::Markdown => self.to_markdown(),
        }
    }

    /// One table per device; speed-up is relative to the widest precision
    /// of the same model on the same device.
    fn to_markdown(&self) -> String {
        let mut by_device: BTreeMap<&str, Vec<&ProfileReport>> = BTreeMap::new();
        for r in &self.reports {
            by_device
                .entry(r.inputs.hardware.name())
                .or_default()
                .push(r);
        }
        let mut out = String::new();
        for (device, rows) in by_device {
            let mode = rows[0].inputs.mode;
            let _ = writeln!(out, "### {device} ({mode} aggregation)\n");
            let _ = writeln!(
                out,
                "| Model | Precision | Parameters | Model size | Memory footprint | End-to-end (s) | Speed-up | Arith. intensity | Energy/token (J) |"
            );
            let _ = writeln!(out, "|---|---|---|---|---|---|---|---|---|");
            for r in &rows {
                let baseline = rows
                    .iter()
                    .filter(|b| b.inputs.model.name() == r.inputs.model.name())
                    .max_by_key(|b| b.inputs.precision.bits())
                    .expect("row is its own candidate");
                let c = r.canonical();
                let speedup = baseline.latency.t_total / r.latency.t_total;
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {:.2}x | {} | {} |",
                    c.inputs.model.name(),
                    c.inputs.precision.name(),
                    c.param_count,
                    human_bytes(c.memory.weights),
                    human_bytes(c.memory.total),
                    fmt_num(c.latency.t_total),
                    speedup,
                    fmt_num(c.arithmetic_intensity),
                    fmt_num(c.energy.e_total),
                );
            }
            let _ = writeln!(out);
        }
        out
    }
}

pub fn parse_sweep(json: &str) -> Result<SweepResult> {
    let sweep: SweepResult = serde_json::from_str(json)?;
    if sweep.schema_version != SCHEMA_VERSION {
        return Err(Error::invalid(
            "schema_version",
            format!("expected {SCHEMA_VERSION}, got {}", sweep.schema_version),
        ));
    }
    Ok(sweep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub device: String,
    pub model: String,
    pub precision: String,
    pub bits: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesGroup {
    pub panel: String,
    pub metric: String,
    pub unit: String,
    pub points: Vec<PlotPoint>,
}

/// Six panels: memory, storage I/O, host-to-device, network and end-to-end
/// latency, then energy per token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub schema_version: u32,
    pub groups: Vec<SeriesGroup>,
}

type Metric = fn(&ProfileReport) -> f64;

const PANELS: [(&str, &str, &str, Metric); 6] = [
    ("a", "memory_latency", "s", |r| r.latency.t_mem),
    ("b", "io_latency", "s", |r| r.latency.t_io),
    ("c", "h2d_latency", "s", |r| r.latency.t_h2d),
    ("d", "net_latency", "s", |r| r.latency.t_net),
    ("e", "end_to_end_latency", "s", |r| r.latency.t_total),
    ("f", "energy_per_token", "J", |r| r.energy.e_total),
];

/// Values are copied from the reports unchanged; [`PlotData::to_json`]
/// applies the same rounding as the report JSON.
pub fn emit_plot_data(sweep: &SweepResult) -> Result<PlotData> {
    if sweep.reports.is_empty() {
        return Err(Error::invalid("sweep", "no reports to plot"));
    }
    let groups = PANELS
        .iter()
        .map(|(panel, metric, unit, value)| SeriesGroup {
            panel: panel.to_string(),
            metric: metric.to_string(),
            unit: unit.to_string(),
            points: sweep
                .reports
                .iter()
                .map(|r| PlotPoint {
                    device: r.inputs.hardware.name().to_string(),
                    model: r.inputs.model.name().to_string(),
                    precision: r.inputs.precision.name().to_string(),
                    bits: r.inputs.precision.bits(),
                    value: value(r),
                })
                .collect(),
        })
        .collect();
    Ok(PlotData {
        schema_version: SCHEMA_VERSION,
        groups,
    })
}

impl PlotData {
    pub fn to_json(&self) -> String {
        let mut rounded = self.clone();
        for p in rounded.groups.iter_mut().flat_map(|g| g.points.iter_mut()) {
            p.value = sig9(p.value);
        }
        let mut out = serde_json::to_string_pretty(&rounded).expect("plot data serializes");
        out.push('\n');
        out
    }
}
