//! Profile reports and their canonical renderings.
//!
//! A report echoes every input (including provenance and the values flagged
//! as assumptions) next to the derived metrics, so it can be recomputed from
//! itself. The canonical JSON form rounds derived real-valued metrics to
//! 9 significant digits and prints floats with the shortest representation
//! that round-trips; inputs and byte counts are printed exactly.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{HardwareConfig, ModelConfig, PrecisionSpec};
use crate::counts::{
    arithmetic_intensity, flops_per_token, memory_footprint, param_count, ByteSize,
};
use crate::energy::{energy_per_token, EnergyEstimate};
use crate::error::{Error, Result};
use crate::latency::{
    latency_breakdown, operator_breakdown, Aggregation, LatencyBreakdown, OperatorBreakdown,
};

/// Bumped whenever the report layout changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Columns of the CSV rendering, one report per row.
pub const CSV_HEADER: &[&str] = &[
    "device",
    "model",
    "precision",
    "bits",
    "mode",
    "param_count",
    "flops_per_token",
    "weights_bytes",
    "activations_bytes",
    "kv_cache_bytes",
    "memory_bytes",
    "t_comp_s",
    "t_mem_s",
    "t_io_s",
    "t_h2d_s",
    "t_net_s",
    "t_total_s",
    "arithmetic_intensity",
    "e_compute_j",
    "e_data_j",
    "e_total_j",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Markdown => "markdown",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportInputs {
    pub model: ModelConfig,
    pub hardware: HardwareConfig,
    pub precision: PrecisionSpec,
    pub mode: Aggregation,
}

/// One input value that is an assumption rather than a published number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assumption {
    /// `model`, `hardware` or `precision`.
    pub config: String,
    pub field: String,
    pub value: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryReport {
    pub weights: ByteSize,
    pub activations: ByteSize,
    pub kv_cache: ByteSize,
    pub total: ByteSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileReport {
    pub schema_version: u32,
    pub inputs: ReportInputs,
    pub assumptions: Vec<Assumption>,
    pub param_count: u64,
    pub flops_per_token: u64,
    pub memory: MemoryReport,
    pub latency: LatencyBreakdown,
    pub operators: OperatorBreakdown,
    pub arithmetic_intensity: f64,
    pub energy: EnergyEstimate,
}

/// Rounds to 9 significant digits.
pub fn sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        // also folds -0.0 into 0.0
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn collect_assumptions(config: &str, fields: Value, assumed: &[String], out: &mut Vec<Assumption>) {
    for field in assumed {
        if let Some(value) = fields.get(field) {
            out.push(Assumption {
                config: config.to_string(),
                field: field.clone(),
                value: value.clone(),
            });
        }
    }
}

/// Evaluates every metric for one (model, hardware, precision) point.
pub fn run_profile(
    model: &ModelConfig,
    hardware: &HardwareConfig,
    precision: &PrecisionSpec,
    mode: Aggregation,
) -> Result<ProfileReport> {
    let params = param_count(model);
    let flops = flops_per_token(model);
    let footprint = memory_footprint(model, precision);
    let latency = latency_breakdown(model, hardware, precision, mode);
    let operators = operator_breakdown(model, hardware, precision);
    let intensity = arithmetic_intensity(model, precision);
    let energy = energy_per_token(model, hardware, precision);

    if operators.total_flops() != flops {
        return Err(Error::Invariant(format!(
            "operator FLOPs {} != FLOPs per token {flops}",
            operators.total_flops()
        )));
    }
    let stage_check = (operators.total_seconds() - latency.t_comp).abs();
    if stage_check > 1e-9 * latency.t_comp.abs() {
        return Err(Error::Invariant(format!(
            "operator times {} differ from compute latency {}",
            operators.total_seconds(),
            latency.t_comp
        )));
    }

    let mut assumptions = Vec::new();
    let to_value = |v: serde_json::Result<Value>| v.expect("config serializes");
    collect_assumptions(
        "model",
        to_value(serde_json::to_value(model)),
        &model.provenance().assumed_fields,
        &mut assumptions,
    );
    collect_assumptions(
        "hardware",
        to_value(serde_json::to_value(hardware)),
        &hardware.provenance().assumed_fields,
        &mut assumptions,
    );
    collect_assumptions(
        "precision",
        to_value(serde_json::to_value(precision)),
        &precision.provenance().assumed_fields,
        &mut assumptions,
    );

    Ok(ProfileReport {
        schema_version: SCHEMA_VERSION,
        inputs: ReportInputs {
            model: model.clone(),
            hardware: hardware.clone(),
            precision: precision.clone(),
            mode,
        },
        assumptions,
        param_count: params,
        flops_per_token: flops,
        memory: MemoryReport {
            weights: footprint.weights,
            activations: footprint.activations,
            kv_cache: footprint.kv_cache,
            total: footprint.total(),
        },
        latency,
        operators,
        arithmetic_intensity: intensity,
        energy,
    })
}

impl ProfileReport {
    /// Recomputes the report from its echoed inputs.
    pub fn recompute(&self) -> Result<ProfileReport> {
        let i = &self.inputs;
        run_profile(&i.model, &i.hardware, &i.precision, i.mode)
    }

    /// The report with every derived real value rounded to 9 significant
    /// digits; this is exactly what the JSON form carries.
    pub fn canonical(&self) -> ProfileReport {
        let mut r = self.clone();
        let l = &mut r.latency;
        for v in [
            &mut l.t_comp,
            &mut l.t_mem,
            &mut l.t_io,
            &mut l.t_h2d,
            &mut l.t_net,
            &mut l.t_total,
        ] {
            *v = sig9(*v);
        }
        let o = &mut r.operators;
        for op in [
            &mut o.attn_proj,
            &mut o.kv_matmul,
            &mut o.mlp,
            &mut o.layernorm_softmax,
        ] {
            op.seconds = sig9(op.seconds);
        }
        r.arithmetic_intensity = sig9(r.arithmetic_intensity);
        let e = &mut r.energy;
        for v in [&mut e.e_compute, &mut e.e_data, &mut e.e_total] {
            *v = sig9(*v);
        }
        r
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.canonical()).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => render_csv(std::slice::from_ref(self)),
            Format::Markdown => self.to_markdown(),
        }
    }

    fn csv_row(&self) -> Vec<String> {
        let c = self.canonical();
        let i = &c.inputs;
        let num = |x: f64| serde_json::to_string(&x).expect("float serializes");
        let bytes = |b: ByteSize| serde_json::to_string(&b).expect("bytes serialize");
        vec![
            i.hardware.name().to_string(),
            i.model.name().to_string(),
            i.precision.name().to_string(),
            i.precision.bits().to_string(),
            i.mode.to_string(),
            c.param_count.to_string(),
            c.flops_per_token.to_string(),
            bytes(c.memory.weights),
            bytes(c.memory.activations),
            bytes(c.memory.kv_cache),
            bytes(c.memory.total),
            num(c.latency.t_comp),
            num(c.latency.t_mem),
            num(c.latency.t_io),
            num(c.latency.t_h2d),
            num(c.latency.t_net),
            num(c.latency.t_total),
            num(c.arithmetic_intensity),
            num(c.energy.e_compute),
            num(c.energy.e_data),
            num(c.energy.e_total),
        ]
    }

    fn to_markdown(&self) -> String {
        let c = self.canonical();
        let i = &c.inputs;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "## {} on {} at {} ({} aggregation)\n",
            i.model.name(),
            i.hardware.name(),
            i.precision.name(),
            i.mode
        );
        let _ = writeln!(out, "| Metric | Value |\n|---|---|");
        let rows = [
            ("Parameters", c.param_count.to_string()),
            ("FLOPs per token", c.flops_per_token.to_string()),
            ("Model size (weights)", human_bytes(c.memory.weights)),
            ("Activations", human_bytes(c.memory.activations)),
            ("KV cache", human_bytes(c.memory.kv_cache)),
            ("Memory footprint", human_bytes(c.memory.total)),
            (
                "Arithmetic intensity (FLOP/byte)",
                fmt_num(c.arithmetic_intensity),
            ),
            ("Energy per token (J)", fmt_num(c.energy.e_total)),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "| {k} | {v} |");
        }
        let _ = writeln!(out, "\n| Stage | Seconds |\n|---|---|");
        let l = &c.latency;
        for (k, v) in [
            ("Compute", l.t_comp),
            ("Memory", l.t_mem),
            ("Storage I/O (one-time)", l.t_io),
            ("Host-to-device (one-time)", l.t_h2d),
            ("Network", l.t_net),
            ("End-to-end", l.t_total),
        ] {
            let _ = writeln!(out, "| {k} | {} |", fmt_num(v));
        }
        let _ = writeln!(out, "\n| Operator | FLOPs | Seconds |\n|---|---|---|");
        for (name, op) in c.operators.operators() {
            let _ = writeln!(out, "| {name} | {} | {} |", op.flops, fmt_num(op.seconds));
        }
        write_assumptions(&mut out, &c.assumptions);
        out
    }
}

fn write_assumptions(out: &mut String, assumptions: &[Assumption]) {
    if assumptions.is_empty() {
        return;
    }
    let _ = writeln!(out, "\nAssumed inputs (not measured):\n");
    for a in assumptions {
        let _ = writeln!(out, "- {}.{} = {}", a.config, a.field, a.value);
    }
}

pub(crate) fn fmt_num(x: f64) -> String {
    serde_json::to_string(&x).expect("float serializes")
}

/// Decimal GB/MB, in the style of checkpoint size tables.
pub(crate) fn human_bytes(b: ByteSize) -> String {
    let v = b.as_f64();
    if v >= 1e9 {
        format!("{:.2} GB", v / 1e9)
    } else if v >= 1e6 {
        format!("{:.0} MB", v / 1e6)
    } else {
        format!("{v} B")
    }
}

pub(crate) fn render_csv(reports: &[ProfileReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in reports {
        w.write_record(r.csv_row()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn parse_report(json: &str) -> Result<ProfileReport> {
    let report: ProfileReport = serde_json::from_str(json)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(Error::invalid(
            "schema_version",
            format!("expected {SCHEMA_VERSION}, got {}", report.schema_version),
        ));
    }
    Ok(report)
}
