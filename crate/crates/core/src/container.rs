//! Versioned binary container for persisted indexes and models.
//!
//! Layout: 8-byte magic, format tag (u16 length + UTF-8), version (u32 LE),
//! parameter block (u32 length + JSON), payload (bincode). All lengths are
//! little endian.

use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"ANSTYPE\0";

pub fn write<P: Serialize, T: Serialize>(path: &Path, tag: &str, version: u32, params: &P, payload: &T) -> Result<()> {
    let params = serde_json::to_vec(params).map_err(|e| Error::Encoding(e.to_string()))?;
    let body = bincode::serialize(payload).map_err(|e| Error::Encoding(e.to_string()))?;
    let mut buf = Vec::with_capacity(32 + tag.len() + params.len() + body.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(tag.len() as u16).to_le_bytes());
    buf.extend_from_slice(tag.as_bytes());
    buf.extend_from_slice(&version.to_le_bytes());
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    buf.extend_from_slice(&params);
    buf.extend_from_slice(&body);
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Read a container, checking tag and version. Returns the parameter block
/// and the payload.
pub fn read<P: DeserializeOwned, T: DeserializeOwned>(path: &Path, tag: &str, version: u32) -> Result<(P, T)> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    let bad = |what: &str| Error::Format(format!("{}: {what}", path.display()));

    let mut cur = Cursor { buf: &buf, pos: 0 };
    if cur.take(8).ok_or_else(|| bad("truncated header"))? != MAGIC {
        return Err(bad("bad magic"));
    }
    let tag_len = u16::from_le_bytes(cur.array().ok_or_else(|| bad("truncated header"))?) as usize;
    let found_tag = cur.take(tag_len).ok_or_else(|| bad("truncated header"))?;
    if found_tag != tag.as_bytes() {
        return Err(bad(&format!("expected {tag}, found {}", String::from_utf8_lossy(found_tag))));
    }
    let found_version = u32::from_le_bytes(cur.array().ok_or_else(|| bad("truncated header"))?);
    if found_version != version {
        return Err(bad(&format!("unsupported version {found_version}, expected {version}")));
    }
    let params_len = u32::from_le_bytes(cur.array().ok_or_else(|| bad("truncated header"))?) as usize;
    let params = cur.take(params_len).ok_or_else(|| bad("truncated parameter block"))?;
    let params = serde_json::from_slice(params).map_err(|e| bad(&e.to_string()))?;
    let payload = bincode::deserialize(&buf[cur.pos..]).map_err(|e| bad(&e.to_string()))?;
    Ok((params, payload))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.buf.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }

    fn array<const N: usize>(&mut self) -> Option<[u8; N]> {
        self.take(N).map(|s| s.try_into().unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_tag_check() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        write(&p, "demo", 3, &serde_json::json!({"k1": 1.2}), &vec![1u32, 2, 3]).unwrap();
        let (params, body): (serde_json::Value, Vec<u32>) = read(&p, "demo", 3).unwrap();
        assert_eq!(params["k1"], 1.2);
        assert_eq!(body, [1, 2, 3]);
        assert!(read::<serde_json::Value, Vec<u32>>(&p, "other", 3).is_err());
        assert!(read::<serde_json::Value, Vec<u32>>(&p, "demo", 4).is_err());
    }
}
