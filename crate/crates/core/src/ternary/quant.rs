use serde::{Deserialize, Serialize};

use super::pack::{code_at, encode_trit, validate_codes, DECODE};
use super::{kernels::MAX_COLS, QuantError};
use crate::Matrix;

/// Lower bound on the absmean scale so an all-zero tensor still has a valid scale.
pub const SCALE_FLOOR: f64 = 1e-8;

/// Bit-packed {−1, 0, +1} weights with one per-tensor scale.
///
/// Codes are row-major over the whole matrix; rows are not byte-aligned when
/// `cols` is not a multiple of four.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TernaryMatrix {
    rows: usize,
    cols: usize,
    codes: Vec<u8>,
    scale: f64,
}

impl TernaryMatrix {
    /// Builds a matrix from unpacked trits in row-major order.
    pub fn from_trits(
        rows: usize,
        cols: usize,
        trits: &[i8],
        scale: f64,
    ) -> Result<Self, QuantError> {
        if trits.len() != rows * cols {
            return Err(QuantError::DimensionMismatch {
                expected: rows * cols,
                actual: trits.len(),
            });
        }
        let codes = super::pack_trits(trits)?;
        Self::from_packed(rows, cols, codes, scale)
    }

    /// Wraps already-packed codes, validating length, scale and every code.
    pub fn from_packed(
        rows: usize,
        cols: usize,
        codes: Vec<u8>,
        scale: f64,
    ) -> Result<Self, QuantError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(QuantError::InvalidScale(scale));
        }
        if cols > MAX_COLS {
            return Err(QuantError::TooManyColumns(cols));
        }
        let n = rows * cols;
        if codes.len() != n.div_ceil(4) {
            return Err(QuantError::DimensionMismatch {
                expected: n.div_ceil(4),
                actual: codes.len(),
            });
        }
        validate_codes(&codes, n)?;
        Ok(Self {
            rows,
            cols,
            codes,
            scale,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut trits = vec![0i8; n * n];
        for i in 0..n {
            trits[i * n + i] = 1;
        }
        Self::from_trits(n, n, &trits, 1.0).expect("identity is valid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    /// Bytes held by the packed codes, `ceil(rows·cols / 4)`.
    pub fn code_bytes(&self) -> usize {
        self.codes.len()
    }

    #[inline]
    pub fn trit(&self, r: usize, c: usize) -> i8 {
        DECODE[code_at(&self.codes, r * self.cols + c) as usize] as i8
    }

    pub fn to_trits(&self) -> Vec<i8> {
        super::unpack_trits(&self.codes, self.rows * self.cols).expect("validated on construction")
    }

    /// Dense `code · scale` form.
    pub fn dequantize(&self) -> Matrix {
        let data = self
            .to_trits()
            .into_iter()
            .map(|t| f64::from(t) * self.scale)
            .collect();
        Matrix::from_vec(self.rows, self.cols, data)
    }
}

/// Mean absolute value accumulated in `f64`.
pub(crate) fn absmean(values: &[f64]) -> f64 {
    values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64
}

pub(crate) fn check_finite(values: &[f64]) -> Result<(), QuantError> {
    if values.is_empty() {
        return Err(QuantError::Empty);
    }
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(QuantError::NonFinite {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// Absmean ternary quantization: `γ = max(mean|W|, 1e-8)`,
/// `code = clip(round(W / γ), −1, +1)`.
pub fn quantize_absmean(w: &Matrix) -> Result<TernaryMatrix, QuantError> {
    check_finite(&w.data)?;
    let scale = absmean(&w.data).max(SCALE_FLOOR);
    let mut codes = vec![0u8; w.len().div_ceil(4)];
    for (i, &v) in w.data.iter().enumerate() {
        let t = (v / scale).round().clamp(-1.0, 1.0) as i8;
        codes[i >> 2] |= encode_trit(t).expect("clamped") << ((i & 3) * 2);
    }
    TernaryMatrix::from_packed(w.rows, w.cols, codes, scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_example() {
        let w = Matrix::from_rows(&[vec![0.5, -0.5], vec![0.25, 0.0]]);
        let t = quantize_absmean(&w).unwrap();
        assert_eq!(t.scale(), 0.3125);
        assert_eq!(t.to_trits(), vec![1, -1, 1, 0]);
    }

    #[test]
    fn zeros_use_floor() {
        let t = quantize_absmean(&Matrix::zeros(2, 2)).unwrap();
        assert_eq!(t.scale(), SCALE_FLOOR);
        assert_eq!(t.to_trits(), vec![0; 4]);
    }

    #[test]
    fn rejects_non_finite() {
        let w = Matrix::from_rows(&[vec![1.0, f64::NAN]]);
        assert!(matches!(
            quantize_absmean(&w),
            Err(QuantError::NonFinite { index: 1, .. })
        ));
        let w = Matrix::from_rows(&[vec![f64::INFINITY]]);
        assert!(quantize_absmean(&w).is_err());
        assert_eq!(
            quantize_absmean(&Matrix::zeros(0, 3)),
            Err(QuantError::Empty)
        );
    }

    #[test]
    fn code_bytes_are_a_sixteenth_of_f32() {
        let t = quantize_absmean(&Matrix::from_vec(128, 128, vec![0.1; 128 * 128])).unwrap();
        assert_eq!(t.code_bytes(), 128 * 128 / 4);
        assert_eq!(t.code_bytes() * 16, 128 * 128 * 4);
        let odd = quantize_absmean(&Matrix::from_vec(7, 13, vec![0.1; 91])).unwrap();
        assert_eq!(odd.code_bytes(), 23);
    }

    #[test]
    fn from_packed_validates() {
        assert!(matches!(
            TernaryMatrix::from_packed(1, 4, vec![0xFF], 1.0),
            Err(QuantError::ReservedCode { .. })
        ));
        assert!(matches!(
            TernaryMatrix::from_packed(1, 4, vec![0], 0.0),
            Err(QuantError::InvalidScale(_))
        ));
        assert!(matches!(
            TernaryMatrix::from_packed(1, 5, vec![0], 1.0),
            Err(QuantError::DimensionMismatch { .. })
        ));
    }
}
