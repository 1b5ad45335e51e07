//! Packed binary snapshot matrices.
//!
//! Layout: a 32-byte header (`"MDK1"`, `u32 n_s`, `u32 n_t`, `u32 flags`,
//! 16 reserved zero bytes) followed by `n_s·n_t` little-endian `f64` in
//! column-major order. All integers are little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, RMatrix, Result};

pub const MAGIC: &[u8; 4] = b"MDK1";
pub const HEADER_LEN: usize = 32;
/// Flag bit: the temporal mean was removed before saving.
pub const FLAG_MEAN_REMOVED: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PackedHeader {
    pub n_s: usize,
    pub n_t: usize,
    pub flags: u32,
}

impl PackedHeader {
    fn encode(&self) -> Result<[u8; HEADER_LEN]> {
        let dim = |n: usize, what: &str| {
            u32::try_from(n).map_err(|_| Error::Domain(format!("{what} = {n} does not fit the packed header")))
        };
        let mut h = [0u8; HEADER_LEN];
        h[..4].copy_from_slice(MAGIC);
        h[4..8].copy_from_slice(&dim(self.n_s, "n_s")?.to_le_bytes());
        h[8..12].copy_from_slice(&dim(self.n_t, "n_t")?.to_le_bytes());
        h[12..16].copy_from_slice(&self.flags.to_le_bytes());
        Ok(h)
    }

    fn decode(h: &[u8; HEADER_LEN], path: &Path) -> Result<Self> {
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message,
        };
        if &h[..4] != MAGIC {
            return Err(bad(format!("bad magic {:?}", &h[..4])));
        }
        let word = |i: usize| u32::from_le_bytes([h[i], h[i + 1], h[i + 2], h[i + 3]]);
        if h[16..].iter().any(|&b| b != 0) {
            return Err(bad("reserved header bytes are not zero".into()));
        }
        Ok(PackedHeader {
            n_s: word(4) as usize,
            n_t: word(8) as usize,
            flags: word(12),
        })
    }
}

pub fn write_packed(path: &Path, values: &RMatrix, flags: u32) -> Result<()> {
    let io = |e| Error::io(path, e);
    let header = PackedHeader {
        n_s: values.nrows(),
        n_t: values.ncols(),
        flags,
    }
    .encode()?;
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(&header).map_err(io)?;
    for x in values.as_slice() {
        w.write_all(&x.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_packed(path: &Path) -> Result<(RMatrix, PackedHeader)> {
    let io = |e| Error::io(path, e);
    let mut r = BufReader::new(File::open(path).map_err(io)?);
    let mut h = [0u8; HEADER_LEN];
    r.read_exact(&mut h).map_err(io)?;
    let header = PackedHeader::decode(&h, path)?;
    let count = header
        .n_s
        .checked_mul(header.n_t)
        .ok_or_else(|| Error::Domain("packed dimensions overflow".into()))?;
    let mut bytes = Vec::with_capacity(count * 8);
    r.read_to_end(&mut bytes).map_err(io)?;
    if bytes.len() != count * 8 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("expected {} data bytes, found {}", count * 8, bytes.len()),
        });
    }
    let data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((RMatrix::from_vec(header.n_s, header.n_t, data), header))
}
