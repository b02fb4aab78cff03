use serde::{Deserialize, Serialize};

use super::quant::check_finite;
use super::QuantError;

/// Int8 activations with an absmax scale: `x[i] ≈ values[i] · scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedActivation {
    pub values: Vec<i8>,
    pub scale: f64,
}

impl QuantizedActivation {
    pub fn new(values: Vec<i8>, scale: f64) -> Result<Self, QuantError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(QuantError::InvalidScale(scale));
        }
        if let Some(index) = values.iter().position(|&v| v == i8::MIN) {
            return Err(QuantError::ActivationRange {
                index,
                value: i8::MIN,
            });
        }
        Ok(Self { values, scale })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dequantize(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|&v| f64::from(v) * self.scale)
            .collect()
    }
}

/// Absmax int8 quantization. An all-zero input maps to zeros with scale 1.
pub fn quantize_activation(x: &[f64]) -> Result<QuantizedActivation, QuantError> {
    if x.is_empty() {
        return Ok(QuantizedActivation {
            values: Vec::new(),
            scale: 1.0,
        });
    }
    check_finite(x)?;
    let absmax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if absmax == 0.0 {
        return Ok(QuantizedActivation {
            values: vec![0; x.len()],
            scale: 1.0,
        });
    }
    let scale = absmax / 127.0;
    let values = x
        .iter()
        .map(|v| (v / scale).round().clamp(-127.0, 127.0) as i8)
        .collect();
    Ok(QuantizedActivation { values, scale })
}
