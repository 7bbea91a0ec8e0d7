//! Named trainable parameters with their Adam moment accumulators, plus the
//! binary checkpoint format.
//!
//! Checkpoint layout (little-endian): magic `PSTO`, u32 entry count, then
//! per entry: u32 name length, UTF-8 name, u32 rank, u32 dims, the f64
//! parameter payload followed by the f64 m and v payloads; finally the u64
//! shared step counter.

use super::Array;
use crate::{Error, Result};
use rand::distributions::{Distribution, Uniform};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

const MAGIC: &[u8; 4] = b"PSTO";

/// Default half-width of the uniform initialization interval.
pub const INIT_SCALE: f64 = 0.08;

#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    names: Vec<String>,
    index: HashMap<String, usize>,
    params: Vec<Array>,
    m: Vec<Array>,
    v: Vec<Array>,
    step: u64,
}

impl ParamStore {
    pub fn new() -> ParamStore {
        ParamStore::default()
    }

    pub fn insert(&mut self, name: &str, value: Array) -> Result<usize> {
        if self.index.contains_key(name) {
            return Err(Error::Numcore(format!("duplicate parameter '{name}'")));
        }
        let idx = self.params.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), idx);
        self.m.push(Array::zeros(value.shape()));
        self.v.push(Array::zeros(value.shape()));
        self.params.push(value);
        Ok(idx)
    }

    /// Register a parameter drawn from U(-INIT_SCALE, INIT_SCALE).
    pub fn init_uniform(&mut self, name: &str, shape: &[usize], rng: &mut ChaCha8Rng) -> Result<usize> {
        let dist = Uniform::new(-INIT_SCALE, INIT_SCALE);
        let numel: usize = shape.iter().product();
        let data: Vec<f64> = (0..numel).map(|_| dist.sample(rng)).collect();
        self.insert(name, Array::from_vec(shape, data)?)
    }

    /// Register a zero-initialized parameter (used for biases).
    pub fn init_zeros(&mut self, name: &str, shape: &[usize]) -> Result<usize> {
        self.insert(name, Array::zeros(shape))
    }

    pub fn idx(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Result<&Array> {
        self.idx(name)
            .map(|i| &self.params[i])
            .ok_or_else(|| Error::Numcore(format!("unknown parameter '{name}'")))
    }

    pub fn name_at(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn at(&self, idx: usize) -> &Array {
        &self.params[idx]
    }

    pub fn at_mut(&mut self, idx: usize) -> &mut Array {
        &mut self.params[idx]
    }

    pub(crate) fn moments_mut(&mut self, idx: usize) -> (&mut Array, &mut Array, &mut Array) {
        // split borrows of params/m/v for the optimizer
        (&mut self.params[idx], &mut self.m[idx], &mut self.v[idx])
    }

    pub fn moment_m(&self, idx: usize) -> &Array {
        &self.m[idx]
    }

    pub fn moment_v(&self, idx: usize) -> &Array {
        &self.v[idx]
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub(crate) fn bump_step(&mut self) -> u64 {
        self.step += 1;
        self.step
    }

    /// Total number of scalar parameters.
    pub fn total_numel(&self) -> usize {
        self.params.iter().map(Array::numel).sum()
    }

    /// Copy of the parameter values only (not the optimizer moments).
    pub fn snapshot(&self) -> Vec<Array> {
        self.params.clone()
    }

    pub fn restore(&mut self, snapshot: &[Array]) -> Result<()> {
        if snapshot.len() != self.params.len() {
            return Err(Error::Numcore(
                "snapshot does not match parameter store layout".into(),
            ));
        }
        for (dst, src) in self.params.iter_mut().zip(snapshot) {
            if dst.shape() != src.shape() {
                return Err(Error::Numcore(
                    "snapshot does not match parameter store layout".into(),
                ));
            }
            dst.data_mut().copy_from_slice(src.data());
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::write_atomic(path.as_ref(), &self.to_bytes())
    }

    /// Serialize to the checkpoint wire format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        for i in 0..self.params.len() {
            let name = self.names[i].as_bytes();
            bytes.extend_from_slice(&(name.len() as u32).to_le_bytes());
            bytes.extend_from_slice(name);
            let shape = self.params[i].shape();
            bytes.extend_from_slice(&(shape.len() as u32).to_le_bytes());
            for &d in shape {
                bytes.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for arr in [&self.params[i], &self.m[i], &self.v[i]] {
                for &x in arr.data() {
                    bytes.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        bytes.extend_from_slice(&self.step.to_le_bytes());
        bytes
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ParamStore> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
            .map_err(|e| Error::Numcore(format!("checkpoint {}: {e}", path.display())))
    }

    fn from_bytes(bytes: &[u8]) -> std::result::Result<ParamStore, String> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err("bad magic".into());
        }
        let count = r.u32()? as usize;
        let mut store = ParamStore::new();
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|_| "parameter name is not UTF-8".to_string())?;
            let rank = r.u32()? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u32()? as usize);
            }
            let numel: usize = shape.iter().product();
            let mut payloads = Vec::with_capacity(3);
            for _ in 0..3 {
                let mut data = Vec::with_capacity(numel);
                for _ in 0..numel {
                    data.push(r.f64()?);
                }
                payloads.push(data);
            }
            let v = payloads.pop().unwrap();
            let m = payloads.pop().unwrap();
            let theta = payloads.pop().unwrap();
            let idx = store
                .insert(&name, Array::from_vec(&shape, theta).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            store.m[idx] = Array::from_vec(&shape, m).map_err(|e| e.to_string())?;
            store.v[idx] = Array::from_vec(&shape, v).map_err(|e| e.to_string())?;
        }
        store.step = r.u64()?;
        if r.pos != bytes.len() {
            return Err("trailing data after payload".into());
        }
        Ok(store)
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        if self.pos + n > self.bytes.len() {
            return Err("truncated payload".into());
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn insert_and_lookup() {
        let mut store = ParamStore::new();
        store.insert("w", Array::vector(vec![1.0, 2.0])).unwrap();
        assert_eq!(store.get("w").unwrap().data(), &[1.0, 2.0]);
        assert!(store.get("missing").is_err());
        assert!(store.insert("w", Array::scalar(0.0)).is_err());
    }

    #[test]
    fn uniform_init_is_seeded_and_bounded() {
        let mut a = ParamStore::new();
        let mut b = ParamStore::new();
        let mut rng1 = ChaCha8Rng::seed_from_u64(7);
        let mut rng2 = ChaCha8Rng::seed_from_u64(7);
        a.init_uniform("w", &[4, 3], &mut rng1).unwrap();
        b.init_uniform("w", &[4, 3], &mut rng2).unwrap();
        assert_eq!(a.get("w").unwrap(), b.get("w").unwrap());
        assert!(a.get("w").unwrap().data().iter().all(|x| x.abs() < INIT_SCALE));
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        store.init_uniform("enc.w", &[3, 2], &mut rng).unwrap();
        store.init_uniform("dec.b", &[5], &mut rng).unwrap();
        store.m[0].data_mut()[1] = 0.25;
        store.v[1].data_mut()[4] = 1e-9;
        store.step = 17;
        store.save(&path).unwrap();

        let back = ParamStore::load(&path).unwrap();
        assert_eq!(back.names(), store.names());
        assert_eq!(back.step(), 17);
        for i in 0..store.len() {
            assert_eq!(back.params[i], store.params[i]);
            assert_eq!(back.m[i], store.m[i]);
            assert_eq!(back.v[i], store.v[i]);
        }
    }

    #[test]
    fn checkpoint_bad_magic() {
        let err = ParamStore::from_bytes(b"XSTO\x00\x00\x00\x00").unwrap_err();
        assert_eq!(err, "bad magic");
    }

    #[test]
    fn checkpoint_truncated() {
        let mut store = ParamStore::new();
        store.insert("w", Array::vector(vec![1.0, 2.0, 3.0])).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ckpt");
        store.save(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 5);
        let err = ParamStore::from_bytes(&bytes).unwrap_err();
        assert_eq!(err, "truncated payload");
    }

    #[test]
    fn snapshot_restore() {
        let mut store = ParamStore::new();
        store.insert("w", Array::vector(vec![1.0, 2.0])).unwrap();
        let snap = store.snapshot();
        store.at_mut(0).data_mut()[0] = 99.0;
        store.restore(&snap).unwrap();
        assert_eq!(store.get("w").unwrap().data(), &[1.0, 2.0]);
    }
}
