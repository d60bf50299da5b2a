//! Model, hardware and precision configurations.
//!
//! Each domain type wraps a plain field struct (the on-disk schema) and is
//! only constructible through validation, so every `ModelConfig`,
//! `HardwareConfig` and `PrecisionSpec` in circulation satisfies its
//! invariants. Serde goes through the field structs, which reject unknown
//! keys.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sequence length used when a model file does not set one.
pub const DEFAULT_SEQ_LEN: u64 = 2048;

/// Where a configuration's numbers come from.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Published with the reference experimental setup.
    Paper,
    /// Chosen by us; overridable.
    Assumed,
    /// Supplied by the user.
    #[default]
    User,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Paper => "paper",
            Source::Assumed => "assumed",
            Source::User => "user",
        })
    }
}

/// Provenance metadata carried alongside every configuration.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    #[serde(default)]
    pub source: Source,
    /// Descriptive identity fields (CPU, RAM, ...), never used numerically.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub identity: BTreeMap<String, String>,
    /// Names of numeric fields whose values are assumptions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assumed_fields: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

fn default_seq_len() -> u64 {
    DEFAULT_SEQ_LEN
}

/// On-disk schema of a model configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFields {
    pub name: String,
    pub layers: u64,
    pub hidden_dim: u64,
    pub intermediate_dim: u64,
    pub attention_heads: u64,
    pub vocab_size: u64,
    #[serde(default = "default_seq_len")]
    pub seq_len: u64,
    /// Nominal parameter count of the named checkpoint, for documentation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_params: Option<u64>,
    #[serde(default)]
    pub provenance: Provenance,
}

/// Transformer architecture parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ModelFields", into = "ModelFields")]
pub struct ModelConfig {
    fields: ModelFields,
}

impl TryFrom<ModelFields> for ModelConfig {
    type Error = Error;

    fn try_from(fields: ModelFields) -> Result<Self> {
        let positive = [
            ("layers", fields.layers),
            ("hidden_dim", fields.hidden_dim),
            ("intermediate_dim", fields.intermediate_dim),
            ("attention_heads", fields.attention_heads),
            ("vocab_size", fields.vocab_size),
            ("seq_len", fields.seq_len),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::invalid(name, "must be a positive integer"));
            }
        }
        if !fields.hidden_dim.is_multiple_of(fields.attention_heads) {
            return Err(Error::invalid(
                "attention_heads",
                format!(
                    "hidden_dim {} is not divisible by attention_heads {}",
                    fields.hidden_dim, fields.attention_heads
                ),
            ));
        }
        let config = ModelConfig { fields };
        // Every count must fit in u64; memory bits are at most elements * u32::MAX.
        crate::counts::checked_counts(&config).ok_or_else(|| {
            Error::invalid(
                "layers",
                "parameter, FLOP or element count overflows 64-bit arithmetic",
            )
        })?;
        Ok(config)
    }
}

impl From<ModelConfig> for ModelFields {
    fn from(m: ModelConfig) -> Self {
        m.fields
    }
}

impl ModelConfig {
    pub fn new(fields: ModelFields) -> Result<Self> {
        Self::try_from(fields)
    }

    pub fn name(&self) -> &str {
        &self.fields.name
    }
    pub fn layers(&self) -> u64 {
        self.fields.layers
    }
    pub fn hidden_dim(&self) -> u64 {
        self.fields.hidden_dim
    }
    pub fn intermediate_dim(&self) -> u64 {
        self.fields.intermediate_dim
    }
    pub fn attention_heads(&self) -> u64 {
        self.fields.attention_heads
    }
    pub fn vocab_size(&self) -> u64 {
        self.fields.vocab_size
    }
    pub fn seq_len(&self) -> u64 {
        self.fields.seq_len
    }
    pub fn nominal_params(&self) -> Option<u64> {
        self.fields.nominal_params
    }
    pub fn provenance(&self) -> &Provenance {
        &self.fields.provenance
    }
    pub fn fields(&self) -> &ModelFields {
        &self.fields
    }

    /// Same architecture with a different sequence length.
    pub fn with_seq_len(&self, seq_len: u64) -> Result<Self> {
        let mut fields = self.fields.clone();
        fields.seq_len = seq_len;
        fields.provenance.assumed_fields.retain(|f| f != "seq_len");
        Self::try_from(fields)
    }
}

/// The four named precisions and their widths.
pub const NAMED_PRECISIONS: [(&str, u32); 4] =
    [("FP32", 32), ("FP16", 16), ("INT8", 8), ("INT4", 4)];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecisionFields {
    pub name: String,
    pub bits_per_element: u32,
    #[serde(default)]
    pub provenance: Provenance,
}

/// Numeric storage format. Width is kept in bits so sub-byte formats stay
/// exact (INT4 is half a byte, not zero).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PrecisionFields", into = "PrecisionFields")]
pub struct PrecisionSpec {
    fields: PrecisionFields,
}

impl TryFrom<PrecisionFields> for PrecisionSpec {
    type Error = Error;

    fn try_from(fields: PrecisionFields) -> Result<Self> {
        if fields.bits_per_element == 0 {
            return Err(Error::invalid(
                "bits_per_element",
                "must be a positive integer",
            ));
        }
        if fields.name.trim().is_empty() {
            return Err(Error::invalid("name", "must not be empty"));
        }
        if let Some((named, bits)) = NAMED_PRECISIONS
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(&fields.name))
        {
            if *bits != fields.bits_per_element {
                return Err(Error::invalid(
                    "bits_per_element",
                    format!("{named} is {bits} bits, got {}", fields.bits_per_element),
                ));
            }
        }
        Ok(PrecisionSpec { fields })
    }
}

impl From<PrecisionSpec> for PrecisionFields {
    fn from(p: PrecisionSpec) -> Self {
        p.fields
    }
}

impl PrecisionSpec {
    pub fn new(name: impl Into<String>, bits_per_element: u32) -> Result<Self> {
        Self::try_from(PrecisionFields {
            name: name.into(),
            bits_per_element,
            provenance: Provenance::default(),
        })
    }

    fn named(name: &str, bits: u32) -> Self {
        PrecisionSpec {
            fields: PrecisionFields {
                name: name.to_string(),
                bits_per_element: bits,
                provenance: Provenance {
                    source: Source::Paper,
                    ..Provenance::default()
                },
            },
        }
    }

    pub fn fp32() -> Self {
        Self::named("FP32", 32)
    }
    pub fn fp16() -> Self {
        Self::named("FP16", 16)
    }
    pub fn int8() -> Self {
        Self::named("INT8", 8)
    }
    pub fn int4() -> Self {
        Self::named("INT4", 4)
    }

    pub fn name(&self) -> &str {
        &self.fields.name
    }
    pub fn bits(&self) -> u32 {
        self.fields.bits_per_element
    }
    /// Bytes per element as a float; exact for every width (it is bits / 8).
    pub fn bytes_per_element(&self) -> f64 {
        f64::from(self.fields.bits_per_element) / 8.0
    }
    pub fn provenance(&self) -> &Provenance {
        &self.fields.provenance
    }
}

/// On-disk schema of a hardware configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareFields {
    pub name: String,
    /// FLOPs per second.
    pub peak_flops: f64,
    /// Bytes per second.
    pub mem_bw: f64,
    pub storage_bw: f64,
    pub h2d_bw: f64,
    pub net_bw: f64,
    pub u_compute: f64,
    pub u_memory: f64,
    pub u_storage: f64,
    pub u_h2d: f64,
    pub u_net: f64,
    /// Joules per FLOP.
    pub e_flop: f64,
    /// Joules per byte.
    pub e_byte: f64,
    /// Optional peak FLOP/s keyed by precision name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub peak_flops_by_precision: BTreeMap<String, f64>,
    #[serde(default)]
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HardwareFields", into = "HardwareFields")]
pub struct HardwareConfig {
    fields: HardwareFields,
}

fn check_positive(field: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::invalid(
            field,
            format!("must be finite and > 0, got {value}"),
        ));
    }
    Ok(())
}

fn check_utilization(field: &str, value: f64) -> Result<()> {
    if !(value > 0.0 && value <= 1.0) {
        return Err(Error::invalid(
            field,
            format!("utilization must be in (0,1], got {value}"),
        ));
    }
    Ok(())
}

fn check_denominator(field: &str, bw: f64, u: f64) -> Result<()> {
    let d = bw * u;
    if !d.is_finite() || d <= 0.0 {
        return Err(Error::invalid(
            field,
            "effective throughput (peak x utilization) must be finite and > 0",
        ));
    }
    Ok(())
}

impl TryFrom<HardwareFields> for HardwareConfig {
    type Error = Error;

    fn try_from(f: HardwareFields) -> Result<Self> {
        for (name, v) in [
            ("peak_flops", f.peak_flops),
            ("mem_bw", f.mem_bw),
            ("storage_bw", f.storage_bw),
            ("h2d_bw", f.h2d_bw),
            ("net_bw", f.net_bw),
        ] {
            check_positive(name, v)?;
        }
        for (name, v) in [
            ("u_compute", f.u_compute),
            ("u_memory", f.u_memory),
            ("u_storage", f.u_storage),
            ("u_h2d", f.u_h2d),
            ("u_net", f.u_net),
        ] {
            check_utilization(name, v)?;
        }
        for (name, v) in [("e_flop", f.e_flop), ("e_byte", f.e_byte)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(
                    name,
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        for (precision, v) in &f.peak_flops_by_precision {
            let field = format!("peak_flops_by_precision.{precision}");
            check_positive(&field, *v)?;
            check_denominator(&field, *v, f.u_compute)?;
        }
        check_denominator("peak_flops", f.peak_flops, f.u_compute)?;
        check_denominator("mem_bw", f.mem_bw, f.u_memory)?;
        check_denominator("storage_bw", f.storage_bw, f.u_storage)?;
        check_denominator("h2d_bw", f.h2d_bw, f.u_h2d)?;
        check_denominator("net_bw", f.net_bw, f.u_net)?;
        Ok(HardwareConfig { fields: f })
    }
}

impl From<HardwareConfig> for HardwareFields {
    fn from(h: HardwareConfig) -> Self {
        h.fields
    }
}

impl HardwareConfig {
    pub fn new(fields: HardwareFields) -> Result<Self> {
        Self::try_from(fields)
    }

    pub fn name(&self) -> &str {
        &self.fields.name
    }
    pub fn fields(&self) -> &HardwareFields {
        &self.fields
    }
    pub fn provenance(&self) -> &Provenance {
        &self.fields.provenance
    }

    /// Peak FLOP/s for a precision: the per-precision override if one is
    /// configured, otherwise the shared peak.
    pub fn effective_peak(&self, precision: &PrecisionSpec) -> f64 {
        self.fields
            .peak_flops_by_precision
            .iter()
            .find(|(name, _)| name.eq_ignore_ascii_case(precision.name()))
            .map(|(_, v)| *v)
            .unwrap_or(self.fields.peak_flops)
    }

    /// True when no per-precision compute override is configured.
    pub fn has_shared_peak(&self) -> bool {
        self.fields.peak_flops_by_precision.is_empty()
    }

    /// Copy with one field replaced, re-validated.
    pub fn with_fields(&self, edit: impl FnOnce(&mut HardwareFields)) -> Result<Self> {
        let mut fields = self.fields.clone();
        edit(&mut fields);
        Self::try_from(fields)
    }
}
