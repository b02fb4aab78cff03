use serde::{Deserialize, Serialize};

use super::quant::{absmean, check_finite};
use super::{QuantError, QuantizedActivation, SCALE_FLOOR};
use crate::Matrix;

/// Two's-complement 2-bit decode: `00 → 0, 01 → +1, 10 → −2, 11 → −1`.
const DECODE2: [i32; 4] = [0, 1, -2, -1];

/// 2-bit weights `k ∈ {−2, −1, 0, +1}` with a per-tensor scale; the
/// comparison baseline for the ternary kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoBitMatrix {
    rows: usize,
    cols: usize,
    codes: Vec<u8>,
    scale: f64,
}

impl TwoBitMatrix {
    pub fn from_levels(
        rows: usize,
        cols: usize,
        levels: &[i8],
        scale: f64,
    ) -> Result<Self, QuantError> {
        if levels.len() != rows * cols {
            return Err(QuantError::DimensionMismatch {
                expected: rows * cols,
                actual: levels.len(),
            });
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(QuantError::InvalidScale(scale));
        }
        let mut codes = vec![0u8; levels.len().div_ceil(4)];
        for (i, &k) in levels.iter().enumerate() {
            if !(-2..=1).contains(&k) {
                return Err(QuantError::InvalidTrit { index: i, value: k });
            }
            codes[i >> 2] |= ((k as u8) & 0b11) << ((i & 3) * 2);
        }
        Ok(Self {
            rows,
            cols,
            codes,
            scale,
        })
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

    pub fn code_bytes(&self) -> usize {
        self.codes.len()
    }

    #[inline]
    fn level_at(&self, i: usize) -> i32 {
        DECODE2[((self.codes[i >> 2] >> ((i & 3) * 2)) & 0b11) as usize]
    }

    pub fn to_levels(&self) -> Vec<i8> {
        (0..self.rows * self.cols)
            .map(|i| self.level_at(i) as i8)
            .collect()
    }
}

/// `γ = max(mean|W|, 1e-8)`, `k = clip(round(W / γ), −2, +1)`.
pub fn quantize_2bit(w: &Matrix) -> Result<TwoBitMatrix, QuantError> {
    check_finite(&w.data)?;
    let scale = absmean(&w.data).max(SCALE_FLOOR);
    let levels: Vec<i8> = w
        .data
        .iter()
        .map(|v| (v / scale).round().clamp(-2.0, 1.0) as i8)
        .collect();
    TwoBitMatrix::from_levels(w.rows, w.cols, &levels, scale)
}

fn check(m: &TwoBitMatrix, x: &QuantizedActivation) -> Result<(), QuantError> {
    if m.cols != x.len() {
        return Err(QuantError::DimensionMismatch {
            expected: m.cols,
            actual: x.len(),
        });
    }
    Ok(())
}

pub fn twobit_matvec(m: &TwoBitMatrix, x: &QuantizedActivation) -> Result<Vec<f64>, QuantError> {
    check(m, x)?;
    Ok((0..m.rows)
        .map(|r| {
            let base = r * m.cols;
            let acc = x.values.iter().enumerate().fold(0i32, |acc, (c, &v)| {
                acc + m.level_at(base + c) * i32::from(v)
            });
            f64::from(acc) * (m.scale * x.scale)
        })
        .collect())
}

pub fn twobit_reference_matvec(
    m: &TwoBitMatrix,
    x: &QuantizedActivation,
) -> Result<Vec<f64>, QuantError> {
    check(m, x)?;
    let levels = m.to_levels();
    Ok((0..m.rows)
        .map(|r| {
            let sum: f64 = levels[r * m.cols..(r + 1) * m.cols]
                .iter()
                .zip(&x.values)
                .map(|(&k, &v)| f64::from(k) * f64::from(v))
                .sum();
            sum * (m.scale * x.scale)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ternary::quantize_activation;
    use rand::{Rng, SeedableRng};

    #[test]
    fn hand_example() {
        let w = Matrix::from_rows(&[vec![0.5, -0.5], vec![0.25, 0.0]]);
        let m = quantize_2bit(&w).unwrap();
        assert_eq!(m.scale(), 0.3125);
        assert_eq!(m.to_levels(), vec![1, -2, 1, 0]);
    }

    #[test]
    fn negative_two_reachable() {
        let w = Matrix::from_rows(&[vec![-3.0, 0.5, 0.5, 0.0]]);
        assert_eq!(quantize_2bit(&w).unwrap().to_levels(), vec![-2, 1, 1, 0]);
    }

    #[test]
    fn zeros() {
        let m = quantize_2bit(&Matrix::zeros(3, 3)).unwrap();
        assert!(m.to_levels().iter().all(|&k| k == 0));
    }

    #[test]
    fn matches_reference() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let rows = rng.gen_range(1..20);
            let cols = rng.gen_range(1..40);
            let w = Matrix::from_vec(
                rows,
                cols,
                (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            );
            let x: Vec<f64> = (0..cols).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let m = quantize_2bit(&w).unwrap();
            let q = quantize_activation(&x).unwrap();
            assert_eq!(
                twobit_matvec(&m, &q).unwrap(),
                twobit_reference_matvec(&m, &q).unwrap()
            );
        }
    }
}
