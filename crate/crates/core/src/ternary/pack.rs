use super::QuantError;

pub(crate) const CODE_ZERO: u8 = 0b00;
pub(crate) const CODE_PLUS: u8 = 0b01;
pub(crate) const CODE_MINUS: u8 = 0b10;
pub(crate) const CODE_RESERVED: u8 = 0b11;

#[inline]
pub(crate) fn encode_trit(t: i8) -> Option<u8> {
    match t {
        0 => Some(CODE_ZERO),
        1 => Some(CODE_PLUS),
        -1 => Some(CODE_MINUS),
        _ => None,
    }
}

/// Decoded value of each 2-bit code; the reserved code decodes to 0 here and
/// must be rejected by validation before it reaches a kernel.
pub(crate) const DECODE: [i32; 4] = [0, 1, -1, 0];

#[inline]
pub(crate) fn code_at(bytes: &[u8], i: usize) -> u8 {
    (bytes[i >> 2] >> ((i & 3) * 2)) & 0b11
}

pub fn pack_trits(trits: &[i8]) -> Result<Vec<u8>, QuantError> {
    let mut out = vec![0u8; trits.len().div_ceil(4)];
    for (i, &t) in trits.iter().enumerate() {
        let code = encode_trit(t).ok_or(QuantError::InvalidTrit { index: i, value: t })?;
        out[i >> 2] |= code << ((i & 3) * 2);
    }
    Ok(out)
}

pub fn unpack_trits(bytes: &[u8], n: usize) -> Result<Vec<i8>, QuantError> {
    if bytes.len() * 4 < n {
        return Err(QuantError::ShortBuffer {
            available: bytes.len() * 4,
            requested: n,
        });
    }
    (0..n)
        .map(|i| match code_at(bytes, i) {
            CODE_ZERO => Ok(0),
            CODE_PLUS => Ok(1),
            CODE_MINUS => Ok(-1),
            _ => Err(QuantError::ReservedCode { index: i }),
        })
        .collect()
}

/// Checks that the first `n` codes are valid trits.
pub(crate) fn validate_codes(bytes: &[u8], n: usize) -> Result<(), QuantError> {
    for i in 0..n {
        if code_at(bytes, i) == CODE_RESERVED {
            return Err(QuantError::ReservedCode { index: i });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn packs_lowest_pair_first() {
        assert_eq!(pack_trits(&[1, -1, 0, 1]).unwrap(), vec![0b01_00_10_01]);
    }

    #[test]
    fn empty_round_trip() {
        assert!(pack_trits(&[]).unwrap().is_empty());
        assert!(unpack_trits(&[], 0).unwrap().is_empty());
    }

    #[test]
    fn rejects_reserved_code() {
        let err = unpack_trits(&[0b11_00_00_00], 4).unwrap_err();
        assert_eq!(err, QuantError::ReservedCode { index: 3 });
        // Reserved bits past `n` are ignored.
        assert_eq!(unpack_trits(&[0b11_00_00_01], 3).unwrap(), vec![1, 0, 0]);
    }

    #[test]
    fn rejects_non_trit() {
        assert_eq!(
            pack_trits(&[0, 2]).unwrap_err(),
            QuantError::InvalidTrit { index: 1, value: 2 }
        );
    }

    #[test]
    fn short_buffer() {
        assert!(matches!(
            unpack_trits(&[0], 5),
            Err(QuantError::ShortBuffer { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn round_trip(trits in proptest::collection::vec(-1i8..=1, 0..64)) {
            let packed = pack_trits(&trits).unwrap();
            prop_assert_eq!(packed.len(), trits.len().div_ceil(4));
            prop_assert_eq!(unpack_trits(&packed, trits.len()).unwrap(), trits);
        }
    }

    #[test]
    fn thousand_trit_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let trits: Vec<i8> = (0..1000).map(|_| rng.gen_range(-1..=1)).collect();
        let packed = pack_trits(&trits).unwrap();
        assert_eq!(packed.len(), 250);
        assert_eq!(unpack_trits(&packed, 1000).unwrap(), trits);
    }
}
