use super::pack::{code_at, DECODE};
use super::{QuantError, QuantizedActivation, TernaryMatrix};

/// Largest column count for which `cols · 127` fits an `i32` accumulator.
pub const MAX_COLS: usize = (i32::MAX as usize) / 127;

fn check_dims(t: &TernaryMatrix, x: &QuantizedActivation) -> Result<(), QuantError> {
    if t.cols() != x.len() {
        return Err(QuantError::DimensionMismatch {
            expected: t.cols(),
            actual: x.len(),
        });
    }
    Ok(())
}

#[inline]
fn finish(acc: i32, t: &TernaryMatrix, x: &QuantizedActivation) -> f64 {
    f64::from(acc) * (t.scale() * x.scale)
}

/// Scalar kernel: decode each code and accumulate `±x` in `i32`.
pub fn ternary_matvec(t: &TernaryMatrix, x: &QuantizedActivation) -> Result<Vec<f64>, QuantError> {
    check_dims(t, x)?;
    let cols = t.cols();
    let codes = t.codes();
    let out = (0..t.rows())
        .map(|r| {
            let base = r * cols;
            let acc = x.values.iter().enumerate().fold(0i32, |acc, (c, &v)| {
                acc + DECODE[code_at(codes, base + c) as usize] * i32::from(v)
            });
            finish(acc, t, x)
        })
        .collect();
    Ok(out)
}

/// Signed partial sums for every 8-bit packed weight group.
///
/// Table `g` covers activations `4g..4g+4` (zero past the end) and is indexed
/// directly by the byte holding the group's four codes. Only the 81 indices
/// free of the reserved code are ever read from a valid matrix.
fn build_tables(x: &QuantizedActivation) -> Vec<i32> {
    let groups = x.len().div_ceil(4);
    let mut tables = vec![0i32; groups * 256];
    let act = |i: usize| x.values.get(i).map_or(0, |&v| i32::from(v));
    for g in 0..groups {
        let a = [act(4 * g), act(4 * g + 1), act(4 * g + 2), act(4 * g + 3)];
        let mut low = [0i32; 16];
        let mut high = [0i32; 16];
        for i in 0..16 {
            low[i] = DECODE[i & 3] * a[0] + DECODE[i >> 2] * a[1];
            high[i] = DECODE[i & 3] * a[2] + DECODE[i >> 2] * a[3];
        }
        let table = &mut tables[g * 256..(g + 1) * 256];
        for (hi, &h) in high.iter().enumerate() {
            for (lo, &l) in low.iter().enumerate() {
                table[(hi << 4) | lo] = l + h;
            }
        }
    }
    tables
}

/// Lookup-table kernel with groups of four activations.
///
/// Each row becomes one table gather per group instead of four
/// multiply-accumulates. Results are identical to [`ternary_matvec`].
pub fn lut_matvec(t: &TernaryMatrix, x: &QuantizedActivation) -> Result<Vec<f64>, QuantError> {
    check_dims(t, x)?;
    let cols = t.cols();
    let groups = cols.div_ceil(4);
    let tables = build_tables(x);
    let codes = t.codes();
    let mut out = Vec::with_capacity(t.rows());
    if cols % 4 == 0 {
        for row in codes.chunks_exact(groups.max(1)).take(t.rows()) {
            let acc = row
                .iter()
                .enumerate()
                .fold(0i32, |acc, (g, &b)| acc + tables[g * 256 + b as usize]);
            out.push(finish(acc, t, x));
        }
        // cols == 0: every row sums to zero.
        out.resize(t.rows(), 0.0);
        return Ok(out);
    }
    for r in 0..t.rows() {
        let mut acc = 0i32;
        for g in 0..groups {
            let i = r * cols + 4 * g;
            let byte = i >> 2;
            let raw = u16::from(codes[byte]) | (u16::from(*codes.get(byte + 1).unwrap_or(&0)) << 8);
            let mut idx = (raw >> ((i & 3) * 2)) & 0xFF;
            let valid = cols - 4 * g;
            if valid < 4 {
                idx &= (1u16 << (2 * valid)) - 1;
            }
            acc += tables[g * 256 + idx as usize];
        }
        out.push(finish(acc, t, x));
    }
    Ok(out)
}

/// Float reference over fully unpacked codes. Every partial sum is an integer
/// below 2^53, so the result matches the integer kernels exactly.
pub fn reference_matvec(
    t: &TernaryMatrix,
    x: &QuantizedActivation,
) -> Result<Vec<f64>, QuantError> {
    check_dims(t, x)?;
    let trits = t.to_trits();
    let out = trits
        .chunks(t.cols().max(1))
        .take(t.rows())
        .map(|row| {
            let sum: f64 = row
                .iter()
                .zip(&x.values)
                .map(|(&w, &v)| f64::from(w) * f64::from(v))
                .sum();
            sum * (t.scale() * x.scale)
        })
        .collect::<Vec<_>>();
    Ok(if t.cols() == 0 {
        vec![0.0; t.rows()]
    } else {
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ternary::quantize_activation;

    #[test]
    fn identity() {
        let t = TernaryMatrix::identity(2);
        let x = QuantizedActivation::new(vec![5, -3], 1.0).unwrap();
        assert_eq!(ternary_matvec(&t, &x).unwrap(), vec![5.0, -3.0]);
        assert_eq!(lut_matvec(&t, &x).unwrap(), vec![5.0, -3.0]);
    }

    #[test]
    fn hand_arithmetic() {
        let t = TernaryMatrix::from_trits(1, 2, &[1, -1], 2.0).unwrap();
        let x = QuantizedActivation::new(vec![3, 4], 0.5).unwrap();
        assert_eq!(ternary_matvec(&t, &x).unwrap(), vec![-1.0]);
        assert_eq!(lut_matvec(&t, &x).unwrap(), vec![-1.0]);
        assert_eq!(reference_matvec(&t, &x).unwrap(), vec![-1.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let t = TernaryMatrix::identity(3);
        let x = quantize_activation(&[1.0, 2.0]).unwrap();
        for k in [ternary_matvec, lut_matvec, reference_matvec] {
            assert_eq!(
                k(&t, &x).unwrap_err(),
                QuantError::DimensionMismatch {
                    expected: 3,
                    actual: 2
                }
            );
        }
    }

    #[test]
    fn ragged_tail_group() {
        // 3 rows × 5 cols: rows straddle bytes and the tail group is padded.
        let trits = [1, -1, 0, 1, -1, 0, 0, 1, 1, -1, -1, 1, 0, 0, 1];
        let t = TernaryMatrix::from_trits(3, 5, &trits, 0.25).unwrap();
        let x = QuantizedActivation::new(vec![10, -20, 30, -40, 127], 0.1).unwrap();
        let expected = reference_matvec(&t, &x).unwrap();
        assert_eq!(ternary_matvec(&t, &x).unwrap(), expected);
        assert_eq!(lut_matvec(&t, &x).unwrap(), expected);
    }
}
