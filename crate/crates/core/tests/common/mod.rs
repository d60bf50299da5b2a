//! Independent re-evaluation of the counting formulas.
//!
//! Parameters are counted by enumerating every weight matrix, FLOPs by
//! summing each layer's terms one at a time, and byte counts are exact
//! rationals. Nothing here calls into the crate's counting code.

#![allow(dead_code)]

use edgeprof_core::{ByteSize, ModelConfig, ModelFields, PrecisionSpec, Provenance};
use num::{BigInt, BigRational, Zero};
use rand::Rng;

#[derive(Debug, Clone, Copy)]
pub struct Arch {
    pub layers: u64,
    pub hidden: u64,
    pub inter: u64,
    pub heads: u64,
    pub vocab: u64,
    pub seq: u64,
}

impl Arch {
    pub fn random(rng: &mut impl Rng) -> Arch {
        let heads = rng.gen_range(1..=8);
        Arch {
            layers: rng.gen_range(1..=8),
            hidden: heads * rng.gen_range(1..=32),
            inter: rng.gen_range(1..=512),
            heads,
            vocab: rng.gen_range(1..=5000),
            seq: rng.gen_range(1..=4096),
        }
    }

    pub fn config(&self) -> ModelConfig {
        ModelConfig::new(ModelFields {
            name: "random".into(),
            layers: self.layers,
            hidden_dim: self.hidden,
            intermediate_dim: self.inter,
            attention_heads: self.heads,
            vocab_size: self.vocab,
            seq_len: self.seq,
            nominal_params: None,
            provenance: Provenance::default(),
        })
        .expect("random architecture is valid")
    }
}

fn big(x: u64) -> BigInt {
    BigInt::from(x)
}

/// Sum of the sizes of every weight matrix.
pub fn params(a: &Arch) -> BigInt {
    let (h, i, v) = (a.hidden, a.inter, a.vocab);
    let mut matrices: Vec<(u64, u64)> = vec![(v, h), (h, v)];
    for _ in 0..a.layers {
        matrices.extend([(h, h), (h, h), (h, h), (h, h), (h, i), (i, h)]);
    }
    matrices
        .into_iter()
        .fold(BigInt::zero(), |acc, (r, c)| acc + big(r) * big(c))
}

pub fn flops(a: &Arch) -> BigInt {
    let (h, i, s) = (big(a.hidden), big(a.inter), big(a.seq));
    let mut total = BigInt::zero();
    for _ in 0..a.layers {
        total += 6 * &h * &h;
        total += 4 * &h * &s;
        total += 4 * &h * &i;
        total += 4 * &i * &h;
        total += 9 * &h;
    }
    total
}

/// (weights, activations, kv cache) in bytes.
pub fn memory(a: &Arch, bits: u32) -> (BigRational, BigRational, BigRational) {
    let b = BigRational::new(BigInt::from(bits), BigInt::from(8));
    let sh = big(a.seq) * big(a.hidden);
    let weights = BigRational::from_integer(params(a)) * &b;
    let acts = BigRational::from_integer(sh.clone()) * &b;
    let mut kv = BigRational::zero();
    for _ in 0..a.layers {
        // keys and values
        kv += BigRational::from_integer(sh.clone()) * &b;
        kv += BigRational::from_integer(sh.clone()) * &b;
    }
    (weights, acts, kv)
}

pub fn ratio_of(b: ByteSize) -> BigRational {
    let (n, d) = b.as_ratio();
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Precision with an arbitrary bit width and a non-reserved name.
pub fn bits_precision(bits: u32) -> PrecisionSpec {
    PrecisionSpec::new(format!("b{bits}"), bits).expect("valid precision")
}

/// Compares every count for one architecture; `Err` names the mismatch.
pub fn check_counts(a: &Arch, bits: u32) -> Result<(), String> {
    let m = a.config();
    let p = bits_precision(bits);
    let got_p = big(edgeprof_core::param_count(&m));
    if got_p != params(a) {
        return Err(format!("{a:?}: param_count {got_p} != {}", params(a)));
    }
    let got_f = big(edgeprof_core::flops_per_token(&m));
    if got_f != flops(a) {
        return Err(format!("{a:?}: flops {got_f} != {}", flops(a)));
    }
    let fp = edgeprof_core::memory_footprint(&m, &p);
    let (w, act, kv) = memory(a, bits);
    let got = (
        ratio_of(fp.weights),
        ratio_of(fp.activations),
        ratio_of(fp.kv_cache),
    );
    if got != (w.clone(), act.clone(), kv.clone()) {
        return Err(format!("{a:?} at {bits} bits: footprint {got:?}"));
    }
    if ratio_of(fp.total()) != w + act + kv {
        return Err(format!("{a:?} at {bits} bits: total mismatch"));
    }
    Ok(())
}
