//! Analytical profiler for transformer inference on edge devices.
//!
//! Given a model architecture, a hardware description and a numeric
//! precision, the crate derives parameter and FLOP counts, the memory
//! footprint, per-stage latencies, an operator breakdown, arithmetic
//! intensity and energy per token. A separate [`quant`] module simulates
//! uniform integer quantization on tensors.
//!
//! ```
//! use edgeprof_core::{load_device_preset, load_model_preset, run_profile, Aggregation, PrecisionSpec};
//!
//! let model = load_model_preset("tinyllama-1.1b").unwrap();
//! let device = load_device_preset("raspberry-pi-4").unwrap();
//! let report = run_profile(&model, &device, &PrecisionSpec::int8(), Aggregation::Serial).unwrap();
//! assert_eq!(report.param_count, 1_007_681_536);
//! ```

pub mod config;
pub mod counts;
pub mod energy;
pub mod error;
pub mod latency;
pub mod par;
pub mod presets;
pub mod quant;
pub mod report;
pub mod schema;
pub mod sweep;

#[cfg(test)]
mod testutil;

pub use config::{
    HardwareConfig, HardwareFields, ModelConfig, ModelFields, PrecisionFields, PrecisionSpec,
    Provenance, Source, DEFAULT_SEQ_LEN,
};
pub use counts::{
    arithmetic_intensity, flops_per_token, memory_footprint, param_count, weight_bytes, ByteSize,
    MemoryFootprint,
};
pub use energy::{energy_per_token, EnergyEstimate};
pub use error::{Error, Result};
pub use latency::{
    compute_latency, end_to_end, h2d_latency, io_latency, latency_breakdown, memory_latency,
    net_latency, operator_breakdown, Aggregation, LatencyBreakdown, OperatorBreakdown,
    OperatorCost, StageLatencies, STAGE_NAMES,
};
pub use par::Concurrency;
pub use presets::{
    list_presets, load_device_preset, load_model_preset, load_precision_preset, PresetCatalog,
    PresetListing,
};
pub use report::{parse_report, run_profile, Format, ProfileReport, CSV_HEADER, SCHEMA_VERSION};
pub use schema::{load_config, parse_config, to_config_json, ConfigItem};
pub use sweep::{emit_plot_data, parse_sweep, run_sweep, sweep_configs, PlotData, SweepResult};
