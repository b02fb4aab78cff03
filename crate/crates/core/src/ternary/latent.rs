use serde::{Deserialize, Serialize};

use super::{lut_matvec, quantize_absmean, quantize_activation, QuantError, TernaryMatrix};
use crate::Matrix;

/// Trainable full-precision weights behind a ternary layer.
///
/// The forward pass always runs on the cached ternary form; call
/// [`LatentLayer::refresh`] after mutating the latent weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentLayer {
    weight: Matrix,
    bias: Option<Vec<f64>>,
    cache: TernaryMatrix,
    fresh: bool,
}

impl LatentLayer {
    pub fn new(weight: Matrix, bias: Option<Vec<f64>>) -> Result<Self, QuantError> {
        if let Some(b) = &bias {
            if b.len() != weight.rows {
                return Err(QuantError::DimensionMismatch {
                    expected: weight.rows,
                    actual: b.len(),
                });
            }
        }
        let cache = quantize_absmean(&weight)?;
        Ok(Self {
            weight,
            bias,
            cache,
            fresh: true,
        })
    }

    /// Rebuilds a layer from its deployed ternary form. The latent weights are
    /// set to the dequantized values and the cache keeps the exact codes and
    /// scale, so outputs match the original layer bit for bit.
    pub fn from_ternary(cache: TernaryMatrix, bias: Option<Vec<f64>>) -> Self {
        Self {
            weight: cache.dequantize(),
            bias,
            cache,
            fresh: true,
        }
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    /// Mutable latent weights; marks the cached ternary form stale.
    pub fn weight_mut(&mut self) -> &mut Matrix {
        self.fresh = false;
        &mut self.weight
    }

    /// Mutable latent weights and bias together; marks the cache stale.
    pub fn params_mut(&mut self) -> (&mut Matrix, Option<&mut Vec<f64>>) {
        self.fresh = false;
        (&mut self.weight, self.bias.as_mut())
    }

    pub fn bias(&self) -> Option<&[f64]> {
        self.bias.as_deref()
    }

    pub fn bias_mut(&mut self) -> Option<&mut Vec<f64>> {
        self.bias.as_mut()
    }

    pub fn is_fresh(&self) -> bool {
        self.fresh
    }

    pub fn refresh(&mut self) -> Result<(), QuantError> {
        if !self.fresh {
            self.cache = quantize_absmean(&self.weight)?;
            self.fresh = true;
        }
        Ok(())
    }

    pub fn ternary(&self) -> &TernaryMatrix {
        debug_assert!(self.fresh, "ternary cache read while stale");
        &self.cache
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows
    }

    /// Quantizes `x` to int8, runs the LUT kernel and adds the bias.
    /// Also returns the dequantized activation actually seen by the kernel.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>), QuantError> {
        let q = quantize_activation(x)?;
        let mut out = lut_matvec(self.ternary(), &q)?;
        if let Some(b) = &self.bias {
            out.iter_mut().zip(b).for_each(|(o, b)| *o += b);
        }
        Ok((out, q.dequantize()))
    }
}

/// Straight-through estimator: the gradient with respect to the latent
/// weights is the upstream gradient, unchanged.
pub fn ste_gradient(upstream: &Matrix, layer: &LatentLayer) -> Result<Matrix, QuantError> {
    if upstream.shape() != layer.weight.shape() {
        return Err(QuantError::ShapeMismatch {
            expected: layer.weight.shape(),
            actual: upstream.shape(),
        });
    }
    Ok(upstream.clone())
}
