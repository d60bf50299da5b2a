//! Integer quantization simulator: symmetric and asymmetric schemes, per
//! tensor or per channel (row), min-max calibration, reconstruction,
//! fake quantization and error statistics.
//!
//! Rounding is half-away-from-zero and codes are clamped to the
//! representable range after rounding. Symmetric codes use the restricted
//! range `±(2^(bits-1) - 1)`; asymmetric codes use the full
//! `[-2^(bits-1), 2^(bits-1) - 1]`.

mod tensor;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;

pub use tensor::{QuantizedTensor, TensorView};

pub const MIN_BITS: u32 = 2;
pub const MAX_BITS: u32 = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantError {
    #[error("tensor is empty")]
    EmptyTensor,
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("shape mismatch: expected {expected:?}, got {got} values")]
    ShapeMismatch {
        expected: (usize, usize),
        got: usize,
    },
    #[error("tensor shapes differ: {0:?} vs {1:?}")]
    TensorShapes((usize, usize), (usize, usize)),
    #[error("expected {expected} parameters, got {got}")]
    SchemeMismatch { expected: Scheme, got: Scheme },
    #[error("expected {expected} parameters, got {got}")]
    GranularityMismatch {
        expected: Granularity,
        got: Granularity,
    },
    #[error("asymmetric parameters need one zero-point per scale")]
    MissingZeroPoint,
    #[error("symmetric parameters carry no zero-points")]
    UnexpectedZeroPoints,
    #[error("{scales} per-channel scales for a tensor with {channels} channels")]
    ChannelMismatch { scales: usize, channels: usize },
    #[error("per-tensor parameters need exactly one scale, got {0}")]
    ScaleCount(usize),
    #[error("bit width {0} outside {MIN_BITS}..={MAX_BITS}")]
    InvalidBits(u32),
    #[error("scale {index} must be finite and > 0, got {value}")]
    InvalidScale { index: usize, value: f64 },
    #[error("zero-point {index} must be finite, got {value}")]
    InvalidZeroPoint { index: usize, value: f64 },
    #[error("{0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Symmetric,
    Asymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    PerTensor,
    PerChannel,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Symmetric => "symmetric",
            Scheme::Asymmetric => "asymmetric",
        })
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::PerTensor => "per_tensor",
            Granularity::PerChannel => "per_channel",
        })
    }
}

impl FromStr for Scheme {
    type Err = QuantError;
    fn from_str(s: &str) -> Result<Self, QuantError> {
        match s.to_ascii_lowercase().as_str() {
            "symmetric" | "sym" => Ok(Scheme::Symmetric),
            "asymmetric" | "asym" => Ok(Scheme::Asymmetric),
            other => Err(QuantError::Parse(format!("unknown scheme `{other}`"))),
        }
    }
}

impl FromStr for Granularity {
    type Err = QuantError;
    fn from_str(s: &str) -> Result<Self, QuantError> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "per_tensor" => Ok(Granularity::PerTensor),
            "per_channel" => Ok(Granularity::PerChannel),
            other => Err(QuantError::Parse(format!("unknown granularity `{other}`"))),
        }
    }
}

/// Scale(s) and zero-point(s) for one quantization configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct QuantParams {
    scheme: Scheme,
    granularity: Granularity,
    bits: u32,
    scales: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    zero_points: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    scheme: Scheme,
    granularity: Granularity,
    bits: u32,
    scales: Vec<f64>,
    #[serde(default)]
    zero_points: Option<Vec<f64>>,
}

impl TryFrom<RawParams> for QuantParams {
    type Error = QuantError;
    fn try_from(r: RawParams) -> Result<Self, QuantError> {
        QuantParams::new(r.scheme, r.granularity, r.bits, r.scales, r.zero_points)
    }
}

impl QuantParams {
    pub fn new(
        scheme: Scheme,
        granularity: Granularity,
        bits: u32,
        scales: Vec<f64>,
        zero_points: Option<Vec<f64>>,
    ) -> Result<Self, QuantError> {
        if !(MIN_BITS..=MAX_BITS).contains(&bits) {
            return Err(QuantError::InvalidBits(bits));
        }
        if scales.is_empty() || (granularity == Granularity::PerTensor && scales.len() != 1) {
            return Err(QuantError::ScaleCount(scales.len()));
        }
        if let Some((index, &value)) = scales
            .iter()
            .enumerate()
            .find(|(_, s)| !(s.is_finite() && **s > 0.0))
        {
            return Err(QuantError::InvalidScale { index, value });
        }
        match (scheme, &zero_points) {
            (Scheme::Symmetric, Some(_)) => return Err(QuantError::UnexpectedZeroPoints),
            (Scheme::Asymmetric, None) => return Err(QuantError::MissingZeroPoint),
            (Scheme::Asymmetric, Some(z)) if z.len() != scales.len() => {
                return Err(QuantError::MissingZeroPoint)
            }
            (Scheme::Asymmetric, Some(z)) => {
                if let Some((index, &value)) = z.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                    return Err(QuantError::InvalidZeroPoint { index, value });
                }
            }
            (Scheme::Symmetric, None) => {}
        }
        Ok(QuantParams {
            scheme,
            granularity,
            bits,
            scales,
            zero_points,
        })
    }

    /// Per-tensor symmetric parameters.
    pub fn symmetric(bits: u32, scale: f64) -> Result<Self, QuantError> {
        Self::new(
            Scheme::Symmetric,
            Granularity::PerTensor,
            bits,
            vec![scale],
            None,
        )
    }

    /// Per-tensor asymmetric parameters.
    pub fn asymmetric(bits: u32, scale: f64, zero_point: f64) -> Result<Self, QuantError> {
        Self::new(
            Scheme::Asymmetric,
            Granularity::PerTensor,
            bits,
            vec![scale],
            Some(vec![zero_point]),
        )
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }
    pub fn granularity(&self) -> Granularity {
        self.granularity
    }
    pub fn bits(&self) -> u32 {
        self.bits
    }
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }
    pub fn zero_points(&self) -> Option<&[f64]> {
        self.zero_points.as_deref()
    }

    /// Largest representable code, `2^(bits-1) - 1`.
    pub fn qmax(&self) -> i64 {
        (1i64 << (self.bits - 1)) - 1
    }

    /// Smallest representable code.
    pub fn qmin(&self) -> i64 {
        match self.scheme {
            Scheme::Symmetric => -self.qmax(),
            Scheme::Asymmetric => -(1i64 << (self.bits - 1)),
        }
    }

    fn index(&self, channel: usize) -> usize {
        match self.granularity {
            Granularity::PerTensor => 0,
            Granularity::PerChannel => channel,
        }
    }

    pub fn scale(&self, channel: usize) -> f64 {
        self.scales[self.index(channel)]
    }

    /// Zero-point of `channel`; 0 for symmetric parameters.
    pub fn zero_point(&self, channel: usize) -> f64 {
        self.zero_points
            .as_ref()
            .map_or(0.0, |z| z[self.index(channel)])
    }

    /// `clamp(round((x - z) / s))` using the parameters of `channel`.
    pub fn quantize_value(&self, x: f64, channel: usize) -> i32 {
        let s = self.scale(channel);
        let z = self.zero_point(channel);
        // f64::round rounds half away from zero
        let code = ((x - z) / s).round();
        code.clamp(self.qmin() as f64, self.qmax() as f64) as i32
    }

    /// `s · q + z` using the parameters of `channel`.
    pub fn dequantize_value(&self, q: i32, channel: usize) -> f64 {
        self.scale(channel) * f64::from(q) + self.zero_point(channel)
    }

    fn check_tensor(&self, channels: usize) -> Result<(), QuantError> {
        if self.granularity == Granularity::PerChannel && self.scales.len() != channels {
            return Err(QuantError::ChannelMismatch {
                scales: self.scales.len(),
                channels,
            });
        }
        Ok(())
    }

    fn check_scheme(&self, expected: Scheme) -> Result<(), QuantError> {
        if self.scheme != expected {
            return Err(QuantError::SchemeMismatch {
                expected,
                got: self.scheme,
            });
        }
        Ok(())
    }
}

/// Min-max calibration. A channel (or tensor) with zero range gets scale 1,
/// and for the asymmetric scheme the zero-point is the constant value, so
/// it reconstructs exactly.
pub fn calibrate(
    t: &TensorView,
    scheme: Scheme,
    granularity: Granularity,
    bits: u32,
) -> Result<QuantParams, QuantError> {
    if !(MIN_BITS..=MAX_BITS).contains(&bits) {
        return Err(QuantError::InvalidBits(bits));
    }
    let qmax = ((1i64 << (bits - 1)) - 1) as f64;
    let qmin = -((1i64 << (bits - 1)) as f64);

    let fit = |values: &[f64]| -> (f64, f64) {
        match scheme {
            Scheme::Symmetric => {
                let amax = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let s = if amax > 0.0 { amax / qmax } else { 1.0 };
                (s, 0.0)
            }
            Scheme::Asymmetric => {
                let (lo, hi) = values
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                        (lo.min(v), hi.max(v))
                    });
                if hi > lo {
                    let s = (hi - lo) / (qmax - qmin);
                    (s, lo - s * qmin)
                } else {
                    (1.0, lo)
                }
            }
        }
    };

    let fitted: Vec<(f64, f64)> = match granularity {
        Granularity::PerTensor => vec![fit(t.values())],
        Granularity::PerChannel => {
            par::map_rows(t.values(), t.elements_per_channel(), |_, row| fit(row))
        }
    };
    let (scales, zeros): (Vec<f64>, Vec<f64>) = fitted.into_iter().unzip();
    let zero_points = (scheme == Scheme::Asymmetric).then_some(zeros);
    QuantParams::new(scheme, granularity, bits, scales, zero_points)
}

/// Quantizes with whatever scheme and granularity `params` describe.
pub fn quantize(t: &TensorView, params: &QuantParams) -> Result<QuantizedTensor, QuantError> {
    params.check_tensor(t.channels())?;
    let values = par::map_elements(t.values(), t.elements_per_channel(), |c, x| {
        params.quantize_value(x, c)
    });
    Ok(QuantizedTensor {
        channels: t.channels(),
        elements_per_channel: t.elements_per_channel(),
        values,
    })
}

pub fn dequantize(q: &QuantizedTensor, params: &QuantParams) -> Result<TensorView, QuantError> {
    params.check_tensor(q.channels)?;
    let values = par::map_elements(&q.values, q.elements_per_channel, |c, v| {
        params.dequantize_value(v, c)
    });
    TensorView::new(q.channels, q.elements_per_channel, values)
}

/// `x_int = round(x / s)`, clamped to the restricted symmetric range.
pub fn quantize_symmetric(
    t: &TensorView,
    params: &QuantParams,
) -> Result<QuantizedTensor, QuantError> {
    params.check_scheme(Scheme::Symmetric)?;
    quantize(t, params)
}

/// `x = s · x_int`.
pub fn dequantize_symmetric(
    q: &QuantizedTensor,
    params: &QuantParams,
) -> Result<TensorView, QuantError> {
    params.check_scheme(Scheme::Symmetric)?;
    dequantize(q, params)
}

/// `x_int = round((x - z) / s)`, clamped to the full signed range.
pub fn quantize_asymmetric(
    t: &TensorView,
    params: &QuantParams,
) -> Result<QuantizedTensor, QuantError> {
    params.check_scheme(Scheme::Asymmetric)?;
    quantize(t, params)
}

/// `x = s · x_int + z`.
pub fn dequantize_asymmetric(
    q: &QuantizedTensor,
    params: &QuantParams,
) -> Result<TensorView, QuantError> {
    params.check_scheme(Scheme::Asymmetric)?;
    dequantize(q, params)
}

/// Row `c` uses `(s_c, z_c)`; `z_c` is 0 for the symmetric scheme.
pub fn quantize_per_channel(
    t: &TensorView,
    params: &QuantParams,
) -> Result<QuantizedTensor, QuantError> {
    if params.granularity != Granularity::PerChannel {
        return Err(QuantError::GranularityMismatch {
            expected: Granularity::PerChannel,
            got: params.granularity,
        });
    }
    quantize(t, params)
}

/// Quantize then dequantize: the forward operator used to simulate
/// quantization noise while keeping real-valued tensors.
pub fn fake_quantize(t: &TensorView, params: &QuantParams) -> Result<TensorView, QuantError> {
    params.check_tensor(t.channels())?;
    let values = par::map_elements(t.values(), t.elements_per_channel(), |c, x| {
        params.dequantize_value(params.quantize_value(x, c), c)
    });
    TensorView::new(t.channels(), t.elements_per_channel(), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mse: f64,
    pub max_abs: f64,
    pub mean_abs: f64,
}

pub fn quant_error_stats(
    original: &TensorView,
    reconstructed: &TensorView,
) -> Result<ErrorStats, QuantError> {
    if original.shape() != reconstructed.shape() {
        return Err(QuantError::TensorShapes(
            original.shape(),
            reconstructed.shape(),
        ));
    }
    let n = original.len() as f64;
    let (sq, abs, max_abs) = original
        .values()
        .iter()
        .zip(reconstructed.values())
        .map(|(a, b)| (a - b).abs())
        .fold((0.0, 0.0, 0.0f64), |(sq, sum, mx), d| {
            (sq + d * d, sum + d, mx.max(d))
        });
    Ok(ErrorStats {
        mse: sq / n,
        max_abs,
        mean_abs: abs / n,
    })
}
