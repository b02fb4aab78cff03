//! Binary checkpoint of a Q-network.
//!
//! Layout (little-endian): magic `"BTRLCKPT"`, version `u16`, state dim `u32`,
//! action count `u32`, layer count `u32`, then `(rows u32, cols u32)` per
//! layer, then one tagged block per tensor in layer order. Tag `b'T'` is
//! followed by a ternary weight block (`"BTRL"` layout); tag `b'D'` by
//! `rows u32, cols u32` and `rows · cols` `f64` values. Each layer stores its
//! weight block and then its bias as a `1 × out` `D` block.

use std::io::{Read, Write};
use std::path::Path;

use super::{AgentError, Linear, QNetwork};
use crate::ternary::{read_block, write_block, LatentLayer};
use crate::Matrix;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"BTRLCKPT";
pub const CHECKPOINT_VERSION: u16 = 1;

const TAG_TERNARY: u8 = b'T';
const TAG_DENSE: u8 = b'D';

fn ck(msg: impl Into<String>) -> AgentError {
    AgentError::Checkpoint(msg.into())
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<(), AgentError> {
    let v = u32::try_from(v).map_err(|_| ck("dimension exceeds u32"))?;
    out.extend(v.to_le_bytes());
    Ok(())
}

fn put_dense(out: &mut Vec<u8>, m: &Matrix) -> Result<(), AgentError> {
    out.push(TAG_DENSE);
    put_u32(out, m.rows)?;
    put_u32(out, m.cols)?;
    for v in &m.data {
        out.extend(v.to_le_bytes());
    }
    Ok(())
}

/// Serializes the network to bytes. Identical networks give identical bytes.
pub fn encode_checkpoint(net: &QNetwork) -> Result<Vec<u8>, AgentError> {
    let mut out = Vec::new();
    out.extend(CHECKPOINT_MAGIC);
    out.extend(CHECKPOINT_VERSION.to_le_bytes());
    put_u32(&mut out, net.state_dim())?;
    put_u32(&mut out, net.num_actions())?;
    put_u32(&mut out, net.hidden.len() + 2)?;
    put_u32(&mut out, net.input.out_dim())?;
    put_u32(&mut out, net.input.in_dim())?;
    for h in &net.hidden {
        put_u32(&mut out, h.out_dim())?;
        put_u32(&mut out, h.in_dim())?;
    }
    put_u32(&mut out, net.head.out_dim())?;
    put_u32(&mut out, net.head.in_dim())?;

    let bias_row = |b: &[f64]| Matrix::from_vec(1, b.len(), b.to_vec());
    put_dense(&mut out, &net.input.weight)?;
    put_dense(&mut out, &bias_row(&net.input.bias))?;
    for h in &net.hidden {
        out.push(TAG_TERNARY);
        write_block(&mut out, h.ternary())?;
        put_dense(
            &mut out,
            &bias_row(h.bias().unwrap_or(&vec![0.0; h.out_dim()])),
        )?;
    }
    put_dense(&mut out, &net.head.weight)?;
    put_dense(&mut out, &bias_row(&net.head.bias))?;
    Ok(out)
}

struct Reader<'a> {
    input: &'a mut dyn Read,
}

impl Reader<'_> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N], AgentError> {
        let mut b = [0u8; N];
        self.input
            .read_exact(&mut b)
            .map_err(|_| ck(format!("truncated checkpoint while reading {what}")))?;
        Ok(b)
    }

    fn u32(&mut self, what: &str) -> Result<usize, AgentError> {
        Ok(u32::from_le_bytes(self.bytes(what)?) as usize)
    }

    fn tag(&mut self, expected: u8) -> Result<(), AgentError> {
        let [t] = self.bytes::<1>("block tag")?;
        if t != expected {
            return Err(ck(format!(
                "expected block tag {:?}, found {:?}",
                expected as char, t as char
            )));
        }
        Ok(())
    }

    fn dense(&mut self, rows: usize, cols: usize) -> Result<Matrix, AgentError> {
        self.tag(TAG_DENSE)?;
        let (r, c) = (self.u32("rows")?, self.u32("cols")?);
        if (r, c) != (rows, cols) {
            return Err(ck(format!(
                "dense block is {r}×{c}, header says {rows}×{cols}"
            )));
        }
        let data = (0..r * c)
            .map(|_| self.bytes::<8>("f64 data").map(f64::from_le_bytes))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Matrix::from_vec(r, c, data))
    }
}

pub fn decode_checkpoint(input: &mut dyn Read) -> Result<QNetwork, AgentError> {
    let mut rd = Reader { input };
    let magic: [u8; 8] = rd.bytes("magic")?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(ck("not a checkpoint: bad magic"));
    }
    let version = u16::from_le_bytes(rd.bytes("version")?);
    if version != CHECKPOINT_VERSION {
        return Err(ck(format!(
            "checkpoint version {version} unsupported, expected {CHECKPOINT_VERSION}"
        )));
    }
    let d = rd.u32("state dim")?;
    let actions = rd.u32("action count")?;
    let layers = rd.u32("layer count")?;
    if !(2..=16).contains(&layers) {
        return Err(ck(format!("implausible layer count {layers}")));
    }
    let dims = (0..layers)
        .map(|_| Ok((rd.u32("layer rows")?, rd.u32("layer cols")?)))
        .collect::<Result<Vec<_>, AgentError>>()?;
    if dims[0].1 != d || dims[layers - 1].0 != actions {
        return Err(ck("layer dims disagree with state dim / action count"));
    }

    let input = Linear::new(
        rd.dense(dims[0].0, dims[0].1)?,
        rd.dense(1, dims[0].0)?.data,
    );
    let mut hidden = Vec::new();
    for &(rows, cols) in &dims[1..layers - 1] {
        rd.tag(TAG_TERNARY)?;
        let t = read_block(rd.input)?;
        if (t.rows(), t.cols()) != (rows, cols) {
            return Err(ck("ternary block dims disagree with header"));
        }
        let bias = rd.dense(1, rows)?.data;
        hidden.push(LatentLayer::from_ternary(t, Some(bias)));
    }
    let (hr, hc) = dims[layers - 1];
    let head = Linear::new(rd.dense(hr, hc)?, rd.dense(1, hr)?.data);
    let mut trailing = [0u8; 1];
    if rd
        .input
        .read(&mut trailing)
        .map_err(|e| ck(e.to_string()))?
        != 0
    {
        return Err(ck("trailing bytes after checkpoint"));
    }
    Ok(QNetwork {
        input,
        hidden,
        head,
    })
}

/// Writes atomically: a sibling temp file is written, synced and renamed.
pub fn save_checkpoint(net: &QNetwork, path: impl AsRef<Path>) -> Result<(), AgentError> {
    let path = path.as_ref();
    let bytes = encode_checkpoint(net)?;
    let io = |source| AgentError::Io {
        path: path.display().to_string(),
        source,
    };
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp).map_err(io)?;
        f.write_all(&bytes).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    std::fs::rename(&tmp, path).map_err(io)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<QNetwork, AgentError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| AgentError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_checkpoint(&mut bytes.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn net(seed: u64) -> QNetwork {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        QNetwork::new(20, 221, 2, &mut rng).unwrap()
    }

    #[test]
    fn round_trip_bit_exact() {
        let n = net(1);
        let bytes = encode_checkpoint(&n).unwrap();
        let back = decode_checkpoint(&mut bytes.as_slice()).unwrap();
        for i in 0..10 {
            let x: Vec<f64> = (0..20)
                .map(|j| ((i * 20 + j) as f64 * 0.37).sin())
                .collect();
            let a = n.q_values(&x).unwrap();
            let b = back.q_values(&x).unwrap();
            assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_eq!(encode_checkpoint(&back).unwrap(), bytes);
    }

    #[test]
    fn deterministic_bytes() {
        assert_eq!(
            encode_checkpoint(&net(3)).unwrap(),
            encode_checkpoint(&net(3)).unwrap()
        );
    }

    #[test]
    fn rejects_damage() {
        let bytes = encode_checkpoint(&net(2)).unwrap();
        for cut in [0, 7, 12, 40, bytes.len() / 2, bytes.len() - 1] {
            assert!(decode_checkpoint(&mut &bytes[..cut]).is_err(), "cut {cut}");
        }
        let mut bad = bytes.clone();
        bad[8] = 2;
        let err = decode_checkpoint(&mut bad.as_slice()).unwrap_err();
        assert!(err.to_string().contains("version"));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_checkpoint(&mut bad.as_slice()).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(decode_checkpoint(&mut long.as_slice()).is_err());
    }

    #[test]
    fn atomic_save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agent.ckpt");
        let n = net(4);
        save_checkpoint(&n, &path).unwrap();
        assert!(!path.with_extension("tmp").exists());
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(
            encode_checkpoint(&back).unwrap(),
            encode_checkpoint(&n).unwrap()
        );
    }
}
