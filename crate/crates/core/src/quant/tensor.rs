use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::QuantError;

/// A finite 2-D tensor stored row-major; rows are channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor<f64>")]
pub struct TensorView {
    channels: usize,
    elements_per_channel: usize,
    values: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTensor<T> {
    channels: usize,
    elements_per_channel: usize,
    values: Vec<T>,
}

impl TryFrom<RawTensor<f64>> for TensorView {
    type Error = QuantError;
    fn try_from(r: RawTensor<f64>) -> Result<Self, QuantError> {
        TensorView::new(r.channels, r.elements_per_channel, r.values)
    }
}

impl TryFrom<RawTensor<i32>> for QuantizedTensor {
    type Error = QuantError;
    fn try_from(r: RawTensor<i32>) -> Result<Self, QuantError> {
        if r.channels == 0 || r.elements_per_channel == 0 {
            return Err(QuantError::EmptyTensor);
        }
        if r.values.len() != r.channels * r.elements_per_channel {
            return Err(QuantError::ShapeMismatch {
                expected: (r.channels, r.elements_per_channel),
                got: r.values.len(),
            });
        }
        Ok(QuantizedTensor {
            channels: r.channels,
            elements_per_channel: r.elements_per_channel,
            values: r.values,
        })
    }
}

impl TensorView {
    pub fn new(
        channels: usize,
        elements_per_channel: usize,
        values: Vec<f64>,
    ) -> Result<Self, QuantError> {
        if channels == 0 || elements_per_channel == 0 {
            return Err(QuantError::EmptyTensor);
        }
        if values.len() != channels * elements_per_channel {
            return Err(QuantError::ShapeMismatch {
                expected: (channels, elements_per_channel),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(QuantError::NonFinite { index });
        }
        Ok(TensorView {
            channels,
            elements_per_channel,
            values,
        })
    }

    /// Single-channel tensor.
    pub fn from_slice(values: &[f64]) -> Result<Self, QuantError> {
        Self::new(1, values.len(), values.to_vec())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, QuantError> {
        let width = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != width) {
            return Err(QuantError::ShapeMismatch {
                expected: (rows.len(), width),
                got: bad.len(),
            });
        }
        Self::new(rows.len(), width, rows.concat())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn elements_per_channel(&self) -> usize {
        self.elements_per_channel
    }
    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.elements_per_channel)
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn row(&self, channel: usize) -> &[f64] {
        let start = channel * self.elements_per_channel;
        &self.values[start..start + self.elements_per_channel]
    }
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.elements_per_channel)
    }

    /// Flat text form: a `channels elements` header line, then one value
    /// per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.channels, self.elements_per_channel);
        for v in &self.values {
            // `{:?}` prints the shortest round-trip representation
            let _ = writeln!(out, "{v:?}");
        }
        out
    }

    /// Parses the form written by [`TensorView::to_text`]. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn from_text(text: &str) -> Result<Self, QuantError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or_else(|| QuantError::Parse("missing shape header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| QuantError::Parse(format!("line {hline}: bad shape header: {e}")))?;
        let [channels, per] = dims[..] else {
            return Err(QuantError::Parse(format!(
                "line {hline}: shape header needs exactly two integers"
            )));
        };
        let values = lines
            .map(|(n, l)| {
                l.parse::<f64>()
                    .map_err(|e| QuantError::Parse(format!("line {n}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(channels, per, values)
    }
}

/// Integer codes with the shape of the tensor they came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor<i32>")]
pub struct QuantizedTensor {
    pub(crate) channels: usize,
    pub(crate) elements_per_channel: usize,
    pub(crate) values: Vec<i32>,
}

impl QuantizedTensor {
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn elements_per_channel(&self) -> usize {
        self.elements_per_channel
    }
    pub fn values(&self) -> &[i32] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            TensorView::from_slice(&[1.0, f64::NAN]),
            Err(QuantError::NonFinite { index: 1 })
        ));
        assert!(TensorView::from_slice(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(TensorView::new(2, 2, vec![1.0; 3]).is_err());
        assert!(TensorView::new(0, 2, vec![]).is_err());
        assert!(TensorView::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let t = TensorView::from_rows(&[vec![0.1, -2.5], vec![93.47, 1e-9]]).unwrap();
        let back = TensorView::from_text(&t.to_text()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn deserialize_checks_shape() {
        let ok = r#"{"channels":1,"elements_per_channel":2,"values":[1.0,2.0]}"#;
        assert_eq!(serde_json::from_str::<TensorView>(ok).unwrap().len(), 2);
        let bad = r#"{"channels":2,"elements_per_channel":2,"values":[1.0,2.0]}"#;
        assert!(serde_json::from_str::<TensorView>(bad).is_err());
        assert!(serde_json::from_str::<QuantizedTensor>(bad).is_err());
    }

    #[test]
    fn text_errors() {
        assert!(TensorView::from_text("").is_err());
        assert!(TensorView::from_text("2\n1\n2\n").is_err());
        assert!(TensorView::from_text("1 2\n1\nx\n").is_err());
        assert!(TensorView::from_text("1 3\n1\n2\n").is_err());
        let t = TensorView::from_text("# fixture\n1 2\n\n1.5\n-2\n").unwrap();
        assert_eq!(t.values(), &[1.5, -2.0]);
    }
}
