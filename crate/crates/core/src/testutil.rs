//! Small fixtures shared by unit tests.

use std::collections::BTreeMap;

use crate::config::{HardwareConfig, HardwareFields, ModelConfig, ModelFields, Provenance};

/// L = H = I = V = S = 1, one head.
pub fn toy_model() -> ModelConfig {
    model(1, 1, 1, 1, 1, 1)
}

pub fn model(
    layers: u64,
    hidden: u64,
    inter: u64,
    heads: u64,
    vocab: u64,
    seq: u64,
) -> ModelConfig {
    ModelConfig::new(ModelFields {
        name: "toy".into(),
        layers,
        hidden_dim: hidden,
        intermediate_dim: inter,
        attention_heads: heads,
        vocab_size: vocab,
        seq_len: seq,
        nominal_params: None,
        provenance: Provenance::default(),
    })
    .unwrap()
}

pub fn tinyllama_scale() -> ModelConfig {
    model(22, 2048, 5632, 32, 32000, 2048)
}

/// Every bandwidth and peak set to `bw`, every utilization 1, no energy cost.
pub fn uniform_hardware(bw: f64) -> HardwareConfig {
    HardwareConfig::new(HardwareFields {
        name: "uniform".into(),
        peak_flops: bw,
        mem_bw: bw,
        storage_bw: bw,
        h2d_bw: bw,
        net_bw: bw,
        u_compute: 1.0,
        u_memory: 1.0,
        u_storage: 1.0,
        u_h2d: 1.0,
        u_net: 1.0,
        e_flop: 0.0,
        e_byte: 0.0,
        peak_flops_by_precision: BTreeMap::new(),
        provenance: Provenance::default(),
    })
    .unwrap()
}
