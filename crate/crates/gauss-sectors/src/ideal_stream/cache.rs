//! Binary persistence of the (p, a, b) table.
//!
//! Layout (little endian): 8-byte magic, u32 format revision, u32 reserved,
//! u64 bound X, u64 record count, then 16-byte records (u64 p, u32 a, u32 b).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{CacheError, Result};

use super::PrimeTable;
use super::Triple;

pub const MAGIC: [u8; 8] = *b"GSPRIMES";
pub const FORMAT_REVISION: u32 = 1;
pub const HEADER_LEN: u64 = 32;
pub const RECORD_LEN: u64 = 16;

pub fn cache_store(path: &Path, table: &PrimeTable) -> Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut w = BufWriter::with_capacity(1 << 20, File::create(&tmp)?);
        w.write_all(&MAGIC)?;
        w.write_all(&FORMAT_REVISION.to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        w.write_all(&table.bound.to_le_bytes())?;
        w.write_all(&(table.triples.len() as u64).to_le_bytes())?;
        for t in &table.triples {
            w.write_all(&t.p.to_le_bytes())?;
            w.write_all(&t.a.to_le_bytes())?;
            w.write_all(&t.b.to_le_bytes())?;
        }
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn cache_load(path: &Path, bound: u64) -> Result<PrimeTable> {
    let file = File::open(path)?;
    let found_len = file.metadata()?.len();
    let mut r = BufReader::with_capacity(1 << 20, file);
    if found_len < HEADER_LEN {
        return Err(CacheError::CorruptHeader.into());
    }
    let mut header = [0u8; HEADER_LEN as usize];
    r.read_exact(&mut header)?;
    if header[..8] != MAGIC {
        return Err(CacheError::CorruptHeader.into());
    }
    let u32_at = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let u64_at = |i: usize| u64::from_le_bytes(header[i..i + 8].try_into().unwrap());
    let revision = u32_at(8);
    if revision != FORMAT_REVISION {
        return Err(CacheError::Version(revision).into());
    }
    if u32_at(12) != 0 {
        return Err(CacheError::CorruptHeader.into());
    }
    let file_bound = u64_at(16);
    let count = u64_at(24);
    let expected = count
        .checked_mul(RECORD_LEN)
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or(CacheError::CorruptHeader)?;
    if expected != found_len {
        return Err(CacheError::Truncated {
            expected,
            found: found_len,
        }
        .into());
    }
    if file_bound != bound {
        return Err(CacheError::BoundMismatch {
            found: file_bound,
            requested: bound,
        }
        .into());
    }
    let mut triples = Vec::with_capacity(count as usize);
    let mut rec = [0u8; RECORD_LEN as usize];
    for i in 0..count {
        r.read_exact(&mut rec)?;
        let t = Triple {
            p: u64::from_le_bytes(rec[0..8].try_into().unwrap()),
            a: u32::from_le_bytes(rec[8..12].try_into().unwrap()),
            b: u32::from_le_bytes(rec[12..16].try_into().unwrap()),
        };
        if !t.is_consistent() || t.p > bound {
            return Err(CacheError::CorruptRecord(i).into());
        }
        triples.push(t);
    }
    Ok(PrimeTable { bound, triples })
}
