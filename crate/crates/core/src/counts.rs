//! Closed-form parameter, FLOP and memory counts for a decoder-only
//! transformer, plus arithmetic intensity.
//!
//! Counts are integers. Byte quantities are held as bit counts so that
//! sub-byte precisions stay exact.

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::config::{ModelConfig, PrecisionSpec};

/// An exact byte quantity stored as a number of bits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ByteSize {
    bits: u128,
}

impl ByteSize {
    pub const ZERO: ByteSize = ByteSize { bits: 0 };

    pub fn from_bits(bits: u128) -> Self {
        ByteSize { bits }
    }

    pub fn from_bytes(bytes: u64) -> Self {
        ByteSize {
            bits: u128::from(bytes) * 8,
        }
    }

    pub fn bits(self) -> u128 {
        self.bits
    }

    /// Exact as long as the bit count is below 2^53.
    pub fn as_f64(self) -> f64 {
        self.bits as f64 / 8.0
    }

    /// Whole number of bytes, if the quantity is byte aligned.
    pub fn whole_bytes(self) -> Option<u128> {
        self.bits.is_multiple_of(8).then_some(self.bits / 8)
    }

    /// `(numerator, denominator)` of the byte count in lowest terms.
    pub fn as_ratio(self) -> (u128, u128) {
        let mut den = 8u128;
        let mut num = self.bits;
        while den > 1 && num.is_multiple_of(2) {
            num /= 2;
            den /= 2;
        }
        (num, den)
    }
}

impl Add for ByteSize {
    type Output = ByteSize;
    fn add(self, rhs: Self) -> Self {
        ByteSize {
            bits: self.bits + rhs.bits,
        }
    }
}

impl fmt::Display for ByteSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_ratio() {
            (n, 1) => write!(f, "{n} B"),
            (n, d) => write!(f, "{n}/{d} B"),
        }
    }
}

// Byte sizes serialize as plain JSON numbers; they are multiples of 1/8 and
// therefore exact in f64 for any realistic model.
impl Serialize for ByteSize {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.whole_bytes() {
            Some(b) if b <= u128::from(u64::MAX) => s.serialize_u64(b as u64),
            _ => s.serialize_f64(self.as_f64()),
        }
    }
}

impl<'de> Deserialize<'de> for ByteSize {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        let bits = v * 8.0;
        if !(bits.is_finite() && bits >= 0.0 && bits.fract() == 0.0) {
            return Err(serde::de::Error::custom(format!(
                "byte size {v} is not a non-negative multiple of 1/8"
            )));
        }
        Ok(ByteSize { bits: bits as u128 })
    }
}

/// The three addends of the memory footprint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryFootprint {
    /// P·B
    pub weights: ByteSize,
    /// S·H·B
    pub activations: ByteSize,
    /// 2·L·S·H·B
    pub kv_cache: ByteSize,
}

impl MemoryFootprint {
    pub fn total(&self) -> ByteSize {
        self.weights + self.activations + self.kv_cache
    }
}

struct Counts {
    params: u128,
    flops: u128,
    elements: u128,
}

fn counts_u128(m: &ModelConfig) -> Option<Counts> {
    let l = u128::from(m.layers());
    let h = u128::from(m.hidden_dim());
    let i = u128::from(m.intermediate_dim());
    let v = u128::from(m.vocab_size());
    let s = u128::from(m.seq_len());

    let hh = h.checked_mul(h)?;
    let hi = h.checked_mul(i)?;
    let hs = h.checked_mul(s)?;

    let per_layer_params = hh.checked_mul(4)?.checked_add(hi.checked_mul(2)?)?;
    let params = l
        .checked_mul(per_layer_params)?
        .checked_add(v.checked_mul(h)?.checked_mul(2)?)?;

    // 6H² + 4HS + 4HI + 4IH + 9H; the two 4HI terms are the two feed-forward matmuls.
    let per_layer_flops = hh
        .checked_mul(6)?
        .checked_add(hs.checked_mul(4)?)?
        .checked_add(hi.checked_mul(4)?)?
        .checked_add(hi.checked_mul(4)?)?
        .checked_add(h.checked_mul(9)?)?;
    let flops = l.checked_mul(per_layer_flops)?;

    let kv = l.checked_mul(hs)?.checked_mul(2)?;
    let elements = params.checked_add(hs)?.checked_add(kv)?;
    Some(Counts {
        params,
        flops,
        elements,
    })
}

/// `Some` when every count fits in u64.
pub(crate) fn checked_counts(m: &ModelConfig) -> Option<()> {
    let c = counts_u128(m)?;
    let max = u128::from(u64::MAX);
    (c.params <= max && c.flops <= max && c.elements <= max).then_some(())
}

fn counts(m: &ModelConfig) -> Counts {
    counts_u128(m).expect("ModelConfig construction rejects overflowing configurations")
}

/// Total weight parameters: `L·4H² + L·2HI + 2VH`.
pub fn param_count(m: &ModelConfig) -> u64 {
    counts(m).params as u64
}

/// FLOPs to generate one token: `L·(6H² + 4HS + 4HI + 4IH + 9H)`.
pub fn flops_per_token(m: &ModelConfig) -> u64 {
    counts(m).flops as u64
}

/// Weights, activations and KV cache: `P·B + S·H·B + 2L·S·H·B`.
pub fn memory_footprint(m: &ModelConfig, p: &PrecisionSpec) -> MemoryFootprint {
    let bits = u128::from(p.bits());
    let params = counts(m).params;
    let hs = u128::from(m.hidden_dim()) * u128::from(m.seq_len());
    let l = u128::from(m.layers());
    // Element counts fit in u64 and bits in u32, so none of these overflow u128.
    MemoryFootprint {
        weights: ByteSize::from_bits(params * bits),
        activations: ByteSize::from_bits(hs * bits),
        kv_cache: ByteSize::from_bits(2 * l * hs * bits),
    }
}

/// Total bytes of weights alone (`P·B`).
pub fn weight_bytes(m: &ModelConfig, p: &PrecisionSpec) -> ByteSize {
    ByteSize::from_bits(counts(m).params * u128::from(p.bits()))
}

/// FLOPs per byte of footprint.
pub fn arithmetic_intensity(m: &ModelConfig, p: &PrecisionSpec) -> f64 {
    flops_per_token(m) as f64 / memory_footprint(m, p).total().as_f64()
}
