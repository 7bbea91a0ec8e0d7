//! Binary container for per-video feature sequences.
//!
//! Layout (all little-endian): magic bytes `VFEA`, `u32` step count T,
//! `u32` dimension D, then T*D `f32` values row-major by time step.

use crate::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"VFEA";

/// Read a feature file: T vectors of dimension D, exactly as stored.
pub fn read_features(path: impl AsRef<Path>) -> Result<Vec<Vec<f32>>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    read_features_bytes(&bytes).map_err(|e| Error::Corpus(format!("{}: {e}", path.display())))
}

/// Decode a feature payload from memory.
pub fn read_features_bytes(bytes: &[u8]) -> std::result::Result<Vec<Vec<f32>>, String> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err("bad magic".into());
    }
    if bytes.len() < 12 {
        return Err("truncated payload".into());
    }
    let t = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if t == 0 {
        return Err("empty feature sequence (T=0)".into());
    }
    if d == 0 {
        return Err("zero feature dimension (D=0)".into());
    }
    let expected = 12 + t * d * 4;
    if bytes.len() < expected {
        return Err("truncated payload".into());
    }
    if bytes.len() > expected {
        return Err("trailing data after payload".into());
    }
    let mut out = Vec::with_capacity(t);
    let mut off = 12;
    for _ in 0..t {
        let mut row = Vec::with_capacity(d);
        for _ in 0..d {
            row.push(f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()));
            off += 4;
        }
        out.push(row);
    }
    Ok(out)
}

/// Write a feature sequence. All rows must share one dimension and the
/// sequence must be non-empty.
pub fn write_features(path: impl AsRef<Path>, features: &[Vec<f32>]) -> Result<()> {
    let path = path.as_ref();
    if features.is_empty() {
        return Err(Error::Corpus("cannot write empty feature sequence".into()));
    }
    let d = features[0].len();
    if d == 0 || features.iter().any(|row| row.len() != d) {
        return Err(Error::Corpus(
            "feature rows must share one non-zero dimension".into(),
        ));
    }
    let mut bytes = Vec::with_capacity(12 + features.len() * d * 4);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(features.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&(d as u32).to_le_bytes());
    for row in features {
        for &v in row {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(t: u32, d: u32, values: &[f32]) -> Vec<u8> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"VFEA");
        bytes.extend_from_slice(&t.to_le_bytes());
        bytes.extend_from_slice(&d.to_le_bytes());
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes
    }

    #[test]
    fn reads_row_major() {
        let bytes = fixture(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let rows = read_features_bytes(&bytes).unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = fixture(1, 1, &[1.0]);
        bytes[0] = b'X';
        assert_eq!(read_features_bytes(&bytes).unwrap_err(), "bad magic");
    }

    #[test]
    fn truncated_payload() {
        // declares T=2, D=2 but carries only 3 floats
        let bytes = fixture(2, 2, &[1.0, 2.0, 3.0]);
        assert_eq!(read_features_bytes(&bytes).unwrap_err(), "truncated payload");
    }

    #[test]
    fn zero_steps_rejected() {
        let bytes = fixture(0, 2, &[]);
        assert!(read_features_bytes(&bytes).unwrap_err().contains("T=0"));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = fixture(1, 1, &[1.0]);
        bytes.push(0);
        assert!(read_features_bytes(&bytes).unwrap_err().contains("trailing"));
    }

    #[test]
    fn file_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.vfea");
        let rows = vec![
            vec![0.1f32, -2.5, 3.25e-8],
            vec![f32::MIN_POSITIVE, 1e30, -0.0],
        ];
        write_features(&path, &rows).unwrap();
        let back = read_features(&path).unwrap();
        let bits = |r: &[Vec<f32>]| -> Vec<u32> {
            r.iter().flatten().map(|v| v.to_bits()).collect()
        };
        assert_eq!(bits(&rows), bits(&back));
    }
}
