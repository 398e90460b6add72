//! Binary container for states and operators.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic     8 bytes   "PLRNBIN\0"
//! version   u32       1
//! kind      u32       0 = composite state, 1 = dense matrix, 2 = sparse triplets
//! alpha     f64
//! ndims     u32
//! dims      ndims x u64
//! config    32 bytes  SHA-256 of the canonical configuration (zeros if none)
//! count     u64       number of entries
//! entries   count x (re f64, im f64)            kinds 0 and 1
//!           count x (row u64, col u64, re, im)  kind 2
//! ```

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"PLRNBIN\0";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    State = 0,
    Dense = 1,
    Sparse = 2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub kind: Kind,
    pub alpha: f64,
    pub dims: Vec<u64>,
    pub config_hash: [u8; 32],
    pub entries: Vec<Complex64>,
    /// Populated for sparse records only.
    pub positions: Vec<(u64, u64)>,
}

pub fn write_record(w: &mut impl Write, r: &Record) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(r.kind as u32).to_le_bytes())?;
    w.write_all(&r.alpha.to_le_bytes())?;
    w.write_all(&(r.dims.len() as u32).to_le_bytes())?;
    for d in &r.dims {
        w.write_all(&d.to_le_bytes())?;
    }
    w.write_all(&r.config_hash)?;
    w.write_all(&(r.entries.len() as u64).to_le_bytes())?;
    if r.kind == Kind::Sparse && r.positions.len() != r.entries.len() {
        return Err(Error::Validation("sparse record needs one position per entry".into()));
    }
    for (k, e) in r.entries.iter().enumerate() {
        if r.kind == Kind::Sparse {
            let (row, col) = r.positions[k];
            w.write_all(&row.to_le_bytes())?;
            w.write_all(&col.to_le_bytes())?;
        }
        w.write_all(&e.re.to_le_bytes())?;
        w.write_all(&e.im.to_le_bytes())?;
    }
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn read_record(r: &mut impl Read) -> Result<Record> {
    if &take::<8>(r)? != MAGIC {
        return Err(Error::Validation("not a polaron binary container".into()));
    }
    let version = u32::from_le_bytes(take(r)?);
    if version != VERSION {
        return Err(Error::Validation(format!("unsupported container version {version}")));
    }
    let kind = match u32::from_le_bytes(take(r)?) {
        0 => Kind::State,
        1 => Kind::Dense,
        2 => Kind::Sparse,
        k => return Err(Error::Validation(format!("unknown record kind {k}"))),
    };
    let alpha = f64::from_le_bytes(take(r)?);
    let ndims = u32::from_le_bytes(take(r)?) as usize;
    let dims = (0..ndims).map(|_| take(r).map(u64::from_le_bytes)).collect::<Result<Vec<_>>>()?;
    let config_hash = take::<32>(r)?;
    let count = u64::from_le_bytes(take(r)?) as usize;
    let mut entries = Vec::with_capacity(count.min(1 << 24));
    let mut positions = Vec::new();
    for _ in 0..count {
        if kind == Kind::Sparse {
            let row = u64::from_le_bytes(take(r)?);
            let col = u64::from_le_bytes(take(r)?);
            positions.push((row, col));
        }
        let re = f64::from_le_bytes(take(r)?);
        let im = f64::from_le_bytes(take(r)?);
        entries.push(Complex64::new(re, im));
    }
    Ok(Record {
        kind,
        alpha,
        dims,
        config_hash,
        entries,
        positions,
    })
}
