//! Stage-wise latency model and the per-operator compute split.
//!
//! Compute, memory and network stages are per token. Storage I/O and
//! host-to-device transfer are one-time weight loads; they are still summed
//! into the end-to-end figure, and [`LatencyBreakdown::amortized`] gives the
//! view with the one-time stages spread over a number of generated tokens.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{HardwareConfig, ModelConfig, PrecisionSpec};
use crate::counts::{flops_per_token, memory_footprint, weight_bytes};
use crate::error::Error;

/// How the five stage latencies combine into an end-to-end figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Plain sum of all five stages.
    #[default]
    Serial,
    /// `max(comp, mem) + max(io, h2d) + net`.
    Overlapped,
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Serial => "serial",
            Aggregation::Overlapped => "overlapped",
        })
    }
}

impl FromStr for Aggregation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "serial" => Ok(Aggregation::Serial),
            "overlapped" => Ok(Aggregation::Overlapped),
            other => Err(Error::invalid(
                "mode",
                format!("expected serial or overlapped, got `{other}`"),
            )),
        }
    }
}

/// The five stage latencies in seconds, before aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageLatencies {
    pub t_comp: f64,
    pub t_mem: f64,
    pub t_io: f64,
    pub t_h2d: f64,
    pub t_net: f64,
}

impl StageLatencies {
    pub fn compute(m: &ModelConfig, hw: &HardwareConfig, p: &PrecisionSpec) -> Self {
        StageLatencies {
            t_comp: compute_latency(m, hw, p),
            t_mem: memory_latency(m, hw, p),
            t_io: io_latency(m, hw, p),
            t_h2d: h2d_latency(m, hw, p),
            t_net: net_latency(m, hw, p),
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.t_comp, self.t_mem, self.t_io, self.t_h2d, self.t_net]
    }
}

/// Names of the stages in [`StageLatencies::as_array`] order.
pub const STAGE_NAMES: [&str; 5] = ["compute", "memory", "io", "h2d", "network"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub t_comp: f64,
    pub t_mem: f64,
    pub t_io: f64,
    pub t_h2d: f64,
    pub t_net: f64,
    pub t_total: f64,
    pub aggregation_mode: Aggregation,
}

impl LatencyBreakdown {
    pub fn stages(&self) -> StageLatencies {
        StageLatencies {
            t_comp: self.t_comp,
            t_mem: self.t_mem,
            t_io: self.t_io,
            t_h2d: self.t_h2d,
            t_net: self.t_net,
        }
    }

    /// Index into [`STAGE_NAMES`] of the slowest stage; `None` on a tie for
    /// first place.
    pub fn strict_argmax(&self) -> Option<usize> {
        let stages = self.stages().as_array();
        let (idx, max) =
            stages
                .iter()
                .copied()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
                );
        let ties = stages.iter().filter(|&&v| v == max).count();
        (ties == 1).then_some(idx)
    }

    /// Per-token latency with the one-time weight-load stages (I/O, H2D)
    /// divided over `tokens` generated tokens.
    pub fn amortized(&self, tokens: u64) -> LatencyBreakdown {
        let n = tokens.max(1) as f64;
        end_to_end(
            StageLatencies {
                t_io: self.t_io / n,
                t_h2d: self.t_h2d / n,
                ..self.stages()
            },
            self.aggregation_mode,
        )
    }
}

/// `FLOPs / (effective peak × u_compute)`.
pub fn compute_latency(m: &ModelConfig, hw: &HardwareConfig, p: &PrecisionSpec) -> f64 {
    flops_per_token(m) as f64 / effective_compute(hw, p)
}

/// `M / (mem_bw × u_memory)`.
pub fn memory_latency(m: &ModelConfig, hw: &HardwareConfig, p: &PrecisionSpec) -> f64 {
    let f = hw.fields();
    memory_footprint(m, p).total().as_f64() / (f.mem_bw * f.u_memory)
}

/// Weight load from storage: `P·B / (storage_bw × u_storage)`.
pub fn io_latency(m: &ModelConfig, hw: &HardwareConfig, p: &PrecisionSpec) -> f64 {
    let f = hw.fields();
    weight_bytes(m, p).as_f64() / (f.storage_bw * f.u_storage)
}

/// Weight copy host to device: `P·B / (h2d_bw × u_h2d)`.
pub fn h2d_latency(m: &ModelConfig, hw: &HardwareConfig, p: &PrecisionSpec) -> f64 {
    let f = hw.fields();
    weight_bytes(m, p).as_f64() / (f.h2d_bw * f.u_h2d)
}

/// One KV shard of `S·H` elements over the network: `S·H·B / (net_bw × u_net)`.
pub fn net_latency(m: &ModelConfig, hw: &HardwareConfig, p: &PrecisionSpec) -> f64 {
    let f = hw.fields();
    let shard_bits = u128::from(m.seq_len()) * u128::from(m.hidden_dim()) * u128::from(p.bits());
    (shard_bits as f64 / 8.0) / (f.net_bw * f.u_net)
}

fn effective_compute(hw: &HardwareConfig, p: &PrecisionSpec) -> f64 {
    hw.effective_peak(p) * hw.fields().u_compute
}

pub fn end_to_end(stages: StageLatencies, mode: Aggregation) -> LatencyBreakdown {
    let StageLatencies {
        t_comp,
        t_mem,
        t_io,
        t_h2d,
        t_net,
    } = stages;
    let t_total = match mode {
        Aggregation::Serial => t_comp + t_mem + t_io + t_h2d + t_net,
        Aggregation::Overlapped => t_comp.max(t_mem) + t_io.max(t_h2d) + t_net,
    };
    LatencyBreakdown {
        t_comp,
        t_mem,
        t_io,
        t_h2d,
        t_net,
        t_total,
        aggregation_mode: mode,
    }
}

/// Computes all five stages and aggregates them.
pub fn latency_breakdown(
    m: &ModelConfig,
    hw: &HardwareConfig,
    p: &PrecisionSpec,
    mode: Aggregation,
) -> LatencyBreakdown {
    end_to_end(StageLatencies::compute(m, hw, p), mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorCost {
    pub flops: u64,
    pub seconds: f64,
}

/// Compute split by operator class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorBreakdown {
    /// `L·6H²`
    pub attn_proj: OperatorCost,
    /// `L·4HS`
    pub kv_matmul: OperatorCost,
    /// `L·(4HI + 4IH)`
    pub mlp: OperatorCost,
    /// `L·9H`
    pub layernorm_softmax: OperatorCost,
}

impl OperatorBreakdown {
    pub fn operators(&self) -> [(&'static str, OperatorCost); 4] {
        [
            ("attn_proj", self.attn_proj),
            ("kv_matmul", self.kv_matmul),
            ("mlp", self.mlp),
            ("layernorm_softmax", self.layernorm_softmax),
        ]
    }

    pub fn total_flops(&self) -> u64 {
        self.operators().iter().map(|(_, c)| c.flops).sum()
    }

    pub fn total_seconds(&self) -> f64 {
        self.operators().iter().map(|(_, c)| c.seconds).sum()
    }
}

pub fn operator_breakdown(
    m: &ModelConfig,
    hw: &HardwareConfig,
    p: &PrecisionSpec,
) -> OperatorBreakdown {
    let l = m.layers();
    let h = m.hidden_dim();
    let i = m.intermediate_dim();
    let s = m.seq_len();
    let throughput = effective_compute(hw, p);
    // The model constructor guarantees the total fits in u64, so each part does too.
    let cost = |flops: u64| OperatorCost {
        flops,
        seconds: flops as f64 / throughput,
    };
    OperatorBreakdown {
        attn_proj: cost(l * 6 * h * h),
        kv_matmul: cost(l * 4 * h * s),
        mlp: cost(l * (4 * h * i + 4 * i * h)),
        layernorm_softmax: cost(l * 9 * h),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{tinyllama_scale, toy_model, uniform_hardware};

    fn stages(v: [f64; 5]) -> StageLatencies {
        StageLatencies {
            t_comp: v[0],
            t_mem: v[1],
            t_io: v[2],
            t_h2d: v[3],
            t_net: v[4],
        }
    }

    #[test]
    fn toy_compute_latency() {
        let hw = uniform_hardware(27.0);
        assert_eq!(
            compute_latency(&toy_model(), &hw, &PrecisionSpec::int8()),
            1.0
        );
        let half = hw.with_fields(|f| f.u_compute = 0.5).unwrap();
        assert_eq!(
            compute_latency(&toy_model(), &half, &PrecisionSpec::int8()),
            2.0
        );
    }

    #[test]
    fn tinyllama_compute_latency() {
        let hw = uniform_hardware(1e12)
            .with_fields(|f| f.u_compute = 0.3)
            .unwrap();
        let t = compute_latency(&tinyllama_scale(), &hw, &PrecisionSpec::fp16());
        assert!((t - 0.009_843_985_066_666_667).abs() < 1e-15);
    }

    #[test]
    fn toy_memory_latency() {
        let hw = uniform_hardware(11.0);
        assert_eq!(
            memory_latency(&toy_model(), &hw, &PrecisionSpec::int8()),
            1.0
        );
    }

    #[test]
    fn memory_latency_int8_is_quarter_of_fp32() {
        let hw = uniform_hardware(3.7);
        let m = tinyllama_scale();
        let a = memory_latency(&m, &hw, &PrecisionSpec::int8());
        let b = memory_latency(&m, &hw, &PrecisionSpec::fp32());
        assert_eq!(a, 0.25 * b);
    }

    #[test]
    fn tinyllama_memory_latency() {
        let hw = uniform_hardware(17e9)
            .with_fields(|f| f.u_memory = 0.7)
            .unwrap();
        let t = memory_latency(&tinyllama_scale(), &hw, &PrecisionSpec::fp16());
        assert!((t - 0.201_079_868_235_294_1).abs() < 1e-12);
    }

    #[test]
    fn toy_io_and_h2d() {
        let hw = uniform_hardware(8.0);
        assert_eq!(io_latency(&toy_model(), &hw, &PrecisionSpec::int8()), 1.0);
        let hw = uniform_hardware(16.0);
        assert_eq!(h2d_latency(&toy_model(), &hw, &PrecisionSpec::int8()), 0.5);
        let doubled = uniform_hardware(8.0)
            .with_fields(|f| f.storage_bw = 16.0)
            .unwrap();
        assert_eq!(
            io_latency(&toy_model(), &doubled, &PrecisionSpec::int8()),
            0.5
        );
    }

    #[test]
    fn tinyllama_h2d() {
        let hw = uniform_hardware(8e9)
            .with_fields(|f| f.u_h2d = 0.8)
            .unwrap();
        let t = h2d_latency(&tinyllama_scale(), &hw, &PrecisionSpec::fp16());
        assert!((t - 0.314_900_48).abs() < 1e-12);
    }

    #[test]
    fn net_latency_values() {
        let hw = uniform_hardware(1.0);
        assert_eq!(net_latency(&toy_model(), &hw, &PrecisionSpec::int8()), 1.0);
        let hw = uniform_hardware(1e9)
            .with_fields(|f| f.u_net = 0.9)
            .unwrap();
        let t = net_latency(&tinyllama_scale(), &hw, &PrecisionSpec::fp16());
        assert!((t - 0.009_320_675_555_555_556).abs() < 1e-15);
    }

    #[test]
    fn net_latency_ignores_layers_and_vocab() {
        use crate::testutil::model;
        let hw = uniform_hardware(3.0);
        let a = net_latency(&model(1, 8, 4, 2, 10, 16), &hw, &PrecisionSpec::fp16());
        let b = net_latency(&model(9, 8, 4, 2, 999, 16), &hw, &PrecisionSpec::fp16());
        assert_eq!(a, b);
    }

    #[test]
    fn serial_sum() {
        let b = end_to_end(stages([1.0; 5]), Aggregation::Serial);
        assert_eq!(b.t_total, 5.0);
    }

    #[test]
    fn overlapped_rule() {
        let b = end_to_end(stages([1.0, 2.0, 3.0, 1.0, 0.5]), Aggregation::Overlapped);
        assert_eq!(b.t_total, 5.5);
    }

    #[test]
    fn zero_stages() {
        for mode in [Aggregation::Serial, Aggregation::Overlapped] {
            assert_eq!(end_to_end(stages([0.0; 5]), mode).t_total, 0.0);
        }
    }

    #[test]
    fn amortized_divides_one_time_stages() {
        let b = end_to_end(stages([1.0, 1.0, 10.0, 4.0, 1.0]), Aggregation::Serial);
        let a = b.amortized(2);
        assert_eq!(a.t_io, 5.0);
        assert_eq!(a.t_h2d, 2.0);
        assert_eq!(a.t_total, 10.0);
    }

    #[test]
    fn argmax_ties() {
        let b = end_to_end(stages([1.0, 3.0, 3.0, 0.0, 0.0]), Aggregation::Serial);
        assert_eq!(b.strict_argmax(), None);
        let b = end_to_end(stages([1.0, 3.0, 4.0, 0.0, 0.0]), Aggregation::Serial);
        assert_eq!(b.strict_argmax(), Some(2));
    }

    #[test]
    fn toy_operator_split() {
        let hw = uniform_hardware(27.0);
        let ops = operator_breakdown(&toy_model(), &hw, &PrecisionSpec::int8());
        let flops: Vec<u64> = ops.operators().iter().map(|(_, c)| c.flops).collect();
        assert_eq!(flops, vec![6, 4, 8, 9]);
        assert_eq!(ops.total_flops(), 27);
        assert!((ops.total_seconds() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tinyllama_mlp_share() {
        let hw = uniform_hardware(1e12);
        let ops = operator_breakdown(&tinyllama_scale(), &hw, &PrecisionSpec::fp16());
        let share = ops.mlp.flops as f64 / ops.total_flops() as f64;
        assert!((share - 0.687_405_599_206_651_9).abs() < 1e-12);
        assert_eq!(ops.total_flops(), 2_953_195_520);
    }

    #[test]
    fn mode_parse() {
        assert_eq!(
            "Serial".parse::<Aggregation>().unwrap(),
            Aggregation::Serial
        );
        assert_eq!(
            "overlapped".parse::<Aggregation>().unwrap(),
            Aggregation::Overlapped
        );
        assert!("pipelined".parse::<Aggregation>().is_err());
    }
}
