//! Binary checkpoint format.
//!
//! ```text
//! magic        4 bytes   "PAGC"
//! version      u16 LE    1
//! group count  u32 LE
//! per group:
//!   name len   u32 LE
//!   name       UTF-8 bytes
//!   rank       u32 LE
//!   dims       rank × u32 LE
//!   values     prod(dims) × f32 LE
//! checksum     u64 LE    FNV-1a 64 over every preceding byte
//! ```

use std::collections::HashSet;
use std::path::Path;

use crate::agent::AgentParams;
use crate::error::{Error, Result};
use crate::neural::Parameterized;
use crate::rng::fnv1a64;

pub const MAGIC: &[u8; 4] = b"PAGC";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct StoredGroup {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

pub fn encode(model: &impl Parameterized) -> Vec<u8> {
    let groups = model.groups();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(groups.len() as u32).to_le_bytes());
    for g in groups {
        out.extend_from_slice(&(g.name.len() as u32).to_le_bytes());
        out.extend_from_slice(g.name.as_bytes());
        out.extend_from_slice(&(g.shape.len() as u32).to_le_bytes());
        for &d in &g.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &g.values {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let sum = fnv1a64(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> std::result::Result<Vec<StoredGroup>, String> {
    if bytes.len() < 4 + 2 + 4 + 8 {
        return Err("file too short".into());
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    let actual = fnv1a64(body);
    if stored != actual {
        return Err(format!("checksum mismatch (stored {stored:016x}, computed {actual:016x})"));
    }
    let mut r = Reader { bytes: body, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err("bad magic".into());
    }
    let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
    if version != VERSION {
        return Err(format!("unsupported format version {version}"));
    }
    let count = r.u32()? as usize;
    let mut groups = Vec::with_capacity(count.min(1024));
    let mut seen = HashSet::new();
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| "group name is not UTF-8".to_string())?
            .to_string();
        if !seen.insert(name.clone()) {
            return Err(format!("duplicate group {name}"));
        }
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<std::result::Result<Vec<_>, _>>()?;
        let n: usize = shape.iter().product();
        let raw = r.take(n.checked_mul(4).ok_or("group too large")?)?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        groups.push(StoredGroup { name, shape, values });
    }
    if r.pos != body.len() {
        return Err(format!("{} trailing bytes before checksum", body.len() - r.pos));
    }
    Ok(groups)
}

/// Copies stored groups into `model`, requiring identical names and shapes
/// in identical order.
pub fn apply(model: &mut impl Parameterized, stored: &[StoredGroup]) -> std::result::Result<(), String> {
    let mut groups = model.groups_mut();
    if groups.len() != stored.len() {
        return Err(format!("expected {} groups, found {}", groups.len(), stored.len()));
    }
    for (g, s) in groups.iter_mut().zip(stored) {
        if g.name != s.name || g.shape != s.shape {
            return Err(format!(
                "group mismatch: expected {} {:?}, found {} {:?}",
                g.name, g.shape, s.name, s.shape
            ));
        }
        for (v, &x) in g.values.iter_mut().zip(&s.values) {
            *v = f64::from(x);
        }
    }
    Ok(())
}

pub fn from_bytes(bytes: &[u8]) -> std::result::Result<AgentParams, String> {
    let stored = decode(bytes)?;
    let mut params = AgentParams::zeros();
    apply(&mut params, &stored)?;
    Ok(params)
}

pub fn save(path: &Path, params: &AgentParams) -> Result<()> {
    std::fs::write(path, encode(params)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<AgentParams> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes).map_err(|reason| Error::Checkpoint {
        path: path.to_path_buf(),
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_byte_identical() {
        let mut p = AgentParams::init(5);
        p.film.weight.values[3] = 0.123_456_789;
        let a = encode(&p);
        let loaded = from_bytes(&a).unwrap();
        assert_eq!(encode(&loaded), a);
        let mut rounded = p.clone();
        rounded.round_to_f32();
        assert_eq!(loaded, rounded);
    }

    #[test]
    fn header_arithmetic() {
        let p = AgentParams::zeros();
        let bytes = encode(&p);
        let groups = p.groups();
        let expected: usize = 4 + 2 + 4
            + groups
                .iter()
                .map(|g| 4 + g.name.len() + 4 + 4 * g.shape.len() + 4 * g.len())
                .sum::<usize>()
            + 8;
        assert_eq!(bytes.len(), expected);
        assert_eq!(&bytes[..4], b"PAGC");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
    }

    #[test]
    fn corruption_is_detected() {
        let mut bytes = encode(&AgentParams::init(1));
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        let err = from_bytes(&bytes).unwrap_err();
        assert!(err.contains("checksum"), "{err}");
        assert!(from_bytes(&bytes[..10]).is_err());
    }

    #[test]
    fn load_error_names_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        let mut bytes = encode(&AgentParams::init(1));
        bytes[20] ^= 1;
        std::fs::write(&path, bytes).unwrap();
        let msg = load(&path).unwrap_err().to_string();
        assert!(msg.contains("bad.ckpt") && msg.contains("checksum"), "{msg}");
    }
}
