mod common;

use std::collections::BTreeMap;

use common::Arch;
use edgeprof_core::{
    energy_per_token, latency_breakdown, operator_breakdown, run_profile, Aggregation,
    HardwareConfig, HardwareFields, PrecisionSpec, Provenance, StageLatencies,
};
use proptest::prelude::*;

fn arch() -> impl Strategy<Value = Arch> {
    (
        1u64..=32,
        1u64..=16,
        1u64..=128,
        1u64..=8192,
        1u64..=200_000,
        1u64..=8192,
    )
        .prop_map(|(layers, heads, per_head, inter, vocab, seq)| Arch {
            layers,
            hidden: heads * per_head,
            inter,
            heads,
            vocab,
            seq,
        })
}

fn hardware() -> impl Strategy<Value = HardwareConfig> {
    let rate = || 1e6f64..1e13;
    let util = || 0.05f64..=1.0;
    (
        (rate(), rate(), rate(), rate(), rate()),
        (util(), util(), util(), util(), util()),
        (0.0f64..1e-9, 0.0f64..1e-8),
    )
        .prop_map(
            |((pk, mem, sto, h2d, net), (uc, um, us, uh, un), (ef, eb))| {
                HardwareConfig::new(HardwareFields {
                    name: "random".into(),
                    peak_flops: pk,
                    mem_bw: mem,
                    storage_bw: sto,
                    h2d_bw: h2d,
                    net_bw: net,
                    u_compute: uc,
                    u_memory: um,
                    u_storage: us,
                    u_h2d: uh,
                    u_net: un,
                    e_flop: ef,
                    e_byte: eb,
                    peak_flops_by_precision: BTreeMap::new(),
                    provenance: Provenance::default(),
                })
                .unwrap()
            },
        )
}

fn data_stages(s: StageLatencies) -> [f64; 4] {
    [s.t_mem, s.t_io, s.t_h2d, s.t_net]
}

proptest! {
    #[test]
    fn data_stages_scale_exactly_with_width(a in arch(), hw in hardware()) {
        let m = a.config();
        let fp32 = latency_breakdown(&m, &hw, &PrecisionSpec::fp32(), Aggregation::Serial).stages();
        let int8 = latency_breakdown(&m, &hw, &PrecisionSpec::int8(), Aggregation::Serial).stages();
        let int4 = latency_breakdown(&m, &hw, &PrecisionSpec::int4(), Aggregation::Serial).stages();
        for ((f, e), q) in data_stages(fp32).into_iter().zip(data_stages(int8)).zip(data_stages(int4)) {
            prop_assert_eq!(e, 0.25 * f);
            prop_assert_eq!(q, 0.125 * f);
        }
        // shared peak: compute time does not depend on width
        prop_assert_eq!(fp32.t_comp, int8.t_comp);
    }

    #[test]
    fn overlapped_never_exceeds_serial(a in arch(), hw in hardware()) {
        let m = a.config();
        for p in [PrecisionSpec::fp32(), PrecisionSpec::int4()] {
            let serial = latency_breakdown(&m, &hw, &p, Aggregation::Serial);
            let overlapped = latency_breakdown(&m, &hw, &p, Aggregation::Overlapped);
            prop_assert!(overlapped.t_total <= serial.t_total);
            let s = serial.stages().as_array();
            let largest = s.iter().copied().fold(0.0, f64::max);
            prop_assert!(overlapped.t_total >= largest);
        }
    }

    #[test]
    fn serial_total_monotone_in_width(a in arch(), hw in hardware()) {
        let m = a.config();
        let totals: Vec<f64> = [PrecisionSpec::fp32(), PrecisionSpec::fp16(), PrecisionSpec::int8(), PrecisionSpec::int4()]
            .iter()
            .map(|p| latency_breakdown(&m, &hw, p, Aggregation::Serial).t_total)
            .collect();
        for w in totals.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn energy_ratio_bounds(a in arch(), hw in hardware()) {
        let m = a.config();
        let fp32 = energy_per_token(&m, &hw, &PrecisionSpec::fp32());
        let int8 = energy_per_token(&m, &hw, &PrecisionSpec::int8());
        prop_assert_eq!(int8.e_compute, fp32.e_compute);
        prop_assert_eq!(int8.e_data, 0.25 * fp32.e_data);
        if fp32.e_total > 0.0 {
            let r = int8.e_total / fp32.e_total;
            prop_assert!((0.25..=1.0).contains(&r), "ratio {}", r);
        }
    }

    #[test]
    fn operator_identity(a in arch(), hw in hardware()) {
        let m = a.config();
        let p = PrecisionSpec::fp16();
        let ops = operator_breakdown(&m, &hw, &p);
        prop_assert_eq!(ops.total_flops(), edgeprof_core::flops_per_token(&m));
        let t_comp = latency_breakdown(&m, &hw, &p, Aggregation::Serial).t_comp;
        prop_assert!((ops.total_seconds() - t_comp).abs() <= 1e-9 * t_comp);
    }

    #[test]
    fn report_is_self_contained(a in arch(), hw in hardware(), overlapped in any::<bool>()) {
        let mode = if overlapped { Aggregation::Overlapped } else { Aggregation::Serial };
        let r = run_profile(&a.config(), &hw, &PrecisionSpec::int8(), mode).unwrap();
        let parsed = edgeprof_core::parse_report(&r.to_json()).unwrap();
        prop_assert_eq!(&parsed, &r.canonical());
        prop_assert_eq!(parsed.recompute().unwrap().canonical(), parsed.clone());
        prop_assert_eq!(parsed.to_json(), r.to_json());
    }
}
