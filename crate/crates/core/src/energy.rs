use serde::{Deserialize, Serialize};

use crate::config::{HardwareConfig, ModelConfig, PrecisionSpec};
use crate::counts::{flops_per_token, memory_footprint};

/// Energy per generated token, in joules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    /// `FLOPs × e_flop`
    pub e_compute: f64,
    /// `M × e_byte`, using the full memory footprint.
    pub e_data: f64,
    pub e_total: f64,
}

impl EnergyEstimate {
    pub fn from_counts(flops: u64, bytes: f64, e_flop: f64, e_byte: f64) -> Self {
        let e_compute = flops as f64 * e_flop;
        let e_data = bytes * e_byte;
        EnergyEstimate {
            e_compute,
            e_data,
            e_total: e_compute + e_data,
        }
    }
}

pub fn energy_per_token(m: &ModelConfig, hw: &HardwareConfig, p: &PrecisionSpec) -> EnergyEstimate {
    let f = hw.fields();
    EnergyEstimate::from_counts(
        flops_per_token(m),
        memory_footprint(m, p).total().as_f64(),
        f.e_flop,
        f.e_byte,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{model, tinyllama_scale, uniform_hardware};

    #[test]
    fn zero_coefficients() {
        let e = energy_per_token(
            &tinyllama_scale(),
            &uniform_hardware(1.0),
            &PrecisionSpec::fp16(),
        );
        assert_eq!((e.e_compute, e.e_data, e.e_total), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hand_evaluated_counts() {
        let e = EnergyEstimate::from_counts(10, 100.0, 0.1, 0.01);
        assert!((e.e_compute - 1.0).abs() < 1e-15);
        assert!((e.e_data - 1.0).abs() < 1e-15);
        assert!((e.e_total - 2.0).abs() < 1e-15);
    }

    #[test]
    fn toy_model_energy() {
        let m = model(1, 1, 1, 1, 1, 1);
        let hw = uniform_hardware(1.0)
            .with_fields(|f| {
                f.e_flop = 0.1;
                f.e_byte = 0.01;
            })
            .unwrap();
        let e = energy_per_token(&m, &hw, &PrecisionSpec::int8());
        assert!((e.e_compute - 2.7).abs() < 1e-12);
        assert!((e.e_data - 0.11).abs() < 1e-12);
        assert_eq!(e.e_total, e.e_compute + e.e_data);
    }

    #[test]
    fn data_term_only_scales_with_bits() {
        let hw = uniform_hardware(1.0)
            .with_fields(|f| {
                f.e_flop = 0.0;
                f.e_byte = 1e-9;
            })
            .unwrap();
        let m = tinyllama_scale();
        let a = energy_per_token(&m, &hw, &PrecisionSpec::int8());
        let b = energy_per_token(&m, &hw, &PrecisionSpec::fp32());
        assert_eq!(a.e_total / b.e_total, 0.25);
    }
}
