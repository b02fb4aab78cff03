//! Binary weight-block layout shared with checkpoints:
//! `"BTRL"`, version `u16`, rows `u32`, cols `u32`, scale `f64`, packed codes.
//! All integers little-endian.

use std::io::{Read, Write};

use super::{QuantError, TernaryMatrix};

pub const BLOCK_MAGIC: &[u8; 4] = b"BTRL";
pub const BLOCK_VERSION: u16 = 1;

pub fn write_block<W: Write + ?Sized>(out: &mut W, t: &TernaryMatrix) -> Result<(), QuantError> {
    out.write_all(BLOCK_MAGIC)?;
    out.write_all(&BLOCK_VERSION.to_le_bytes())?;
    out.write_all(
        &u32::try_from(t.rows())
            .map_err(|_| QuantError::BadBlock("rows exceed u32".into()))?
            .to_le_bytes(),
    )?;
    out.write_all(
        &u32::try_from(t.cols())
            .map_err(|_| QuantError::BadBlock("cols exceed u32".into()))?
            .to_le_bytes(),
    )?;
    out.write_all(&t.scale().to_le_bytes())?;
    out.write_all(t.codes())?;
    Ok(())
}

fn read_exact<R: Read + ?Sized, const N: usize>(
    input: &mut R,
    what: &str,
) -> Result<[u8; N], QuantError> {
    let mut buf = [0u8; N];
    input
        .read_exact(&mut buf)
        .map_err(|e| QuantError::BadBlock(format!("truncated {what}: {e}")))?;
    Ok(buf)
}

pub fn read_block<R: Read + ?Sized>(input: &mut R) -> Result<TernaryMatrix, QuantError> {
    let magic: [u8; 4] = read_exact(input, "magic")?;
    if &magic != BLOCK_MAGIC {
        return Err(QuantError::BadBlock(format!("bad magic {magic:?}")));
    }
    let version = u16::from_le_bytes(read_exact(input, "version")?);
    if version != BLOCK_VERSION {
        return Err(QuantError::BadBlock(format!(
            "unsupported version {version}, expected {BLOCK_VERSION}"
        )));
    }
    let rows = u32::from_le_bytes(read_exact(input, "rows")?) as usize;
    let cols = u32::from_le_bytes(read_exact(input, "cols")?) as usize;
    let scale = f64::from_le_bytes(read_exact(input, "scale")?);
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| QuantError::BadBlock("dimension overflow".into()))?;
    let mut codes = vec![0u8; n.div_ceil(4)];
    input
        .read_exact(&mut codes)
        .map_err(|e| QuantError::BadBlock(format!("truncated codes: {e}")))?;
    TernaryMatrix::from_packed(rows, cols, codes, scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_little_endian() {
        let t = TernaryMatrix::from_trits(1, 3, &[1, -1, 0], 0.5).unwrap();
        let mut buf = Vec::new();
        write_block(&mut buf, &t).unwrap();
        let mut expected = b"BTRL".to_vec();
        expected.extend([1, 0, 1, 0, 0, 0, 3, 0, 0, 0]);
        expected.extend(0.5f64.to_le_bytes());
        expected.push(0b00_10_01);
        assert_eq!(buf, expected);
        assert_eq!(read_block(&mut buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn rejects_bad_input() {
        let t = TernaryMatrix::identity(4);
        let mut buf = Vec::new();
        write_block(&mut buf, &t).unwrap();
        assert!(read_block(&mut &buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_block(&mut bad.as_slice()).is_err());
        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(read_block(&mut bad.as_slice()).is_err());
        let mut bad = buf;
        *bad.last_mut().unwrap() = 0xFF;
        assert!(matches!(
            read_block(&mut bad.as_slice()),
            Err(QuantError::ReservedCode { .. })
        ));
    }
}
