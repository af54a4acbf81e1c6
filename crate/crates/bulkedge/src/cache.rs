//! On-disk spectrum cache, keyed by a SHA-256 of the spec and mode order.
//!
//! File layout (little endian): magic, format version, engine tag, key,
//! then the payload. Floats are stored as raw bits, so reloads are exact.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fock::{ModeIndex, SectorEigen, SectorSpectrum};
use crate::free::FreeSpectrum;
use crate::geometry::Site;
use crate::model::{Mode, ModelSpec};

const MAGIC: &[u8; 8] = b"BESPEC\0\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey(pub [u8; 32]);

impl CacheKey {
    pub fn new(spec: &ModelSpec, modes: &ModeIndex, engine_tag: &str) -> Result<CacheKey> {
        let mut h = Sha256::new();
        h.update(engine_tag.as_bytes());
        h.update([0]);
        h.update(serde_json::to_vec(spec).map_err(|e| Error::Cache(e.to_string()))?);
        h.update(serde_json::to_vec(modes.modes()).map_err(|e| Error::Cache(e.to_string()))?);
        Ok(CacheKey(h.finalize().into()))
    }

    pub fn hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub struct SpectrumCache {
    dir: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Tag {
    Free = 0,
    Ed = 1,
}

impl SpectrumCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(SpectrumCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.spec", key.hex()))
    }

    fn write(&self, key: &CacheKey, tag: Tag, payload: Vec<u8>) -> Result<()> {
        let mut buf = Vec::with_capacity(payload.len() + 48);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.push(tag as u8);
        buf.extend_from_slice(&key.0);
        buf.extend_from_slice(&payload);
        let path = self.path(key);
        let tmp = path.with_extension("tmp");
        fs::File::create(&tmp)?.write_all(&buf)?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    fn read(&self, key: &CacheKey, tag: Tag) -> Result<Option<Reader>> {
        let path = self.path(key);
        if !path.exists() {
            return Ok(None);
        }
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Cache("bad magic".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Cache(format!(
                "format version {version}, expected {FORMAT_VERSION}"
            )));
        }
        if r.u8()? != tag as u8 {
            return Err(Error::Cache("engine tag mismatch".into()));
        }
        if r.take(32)? != key.0 {
            return Err(Error::Cache("key mismatch".into()));
        }
        Ok(Some(r))
    }

    pub fn store_free(&self, key: &CacheKey, s: &FreeSpectrum) -> Result<()> {
        let mut w = Vec::new();
        w.push(s.real_form as u8);
        put_f64s(&mut w, &s.energies);
        put_matrix(&mut w, &s.vectors);
        self.write(key, Tag::Free, w)
    }

    pub fn load_free(&self, key: &CacheKey) -> Result<Option<FreeSpectrum>> {
        let Some(mut r) = self.read(key, Tag::Free)? else {
            return Ok(None);
        };
        let real_form = r.u8()? != 0;
        let energies = r.f64s()?;
        let vectors = r.matrix()?;
        r.finish()?;
        Ok(Some(FreeSpectrum {
            energies,
            vectors: Arc::new(vectors),
            real_form,
        }))
    }

    pub fn store_ed(&self, key: &CacheKey, s: &SectorSpectrum) -> Result<()> {
        let mut w = Vec::new();
        put_u64(&mut w, s.modes.len() as u64);
        for m in &s.modes {
            w.extend_from_slice(&m.site.x1.to_le_bytes());
            w.extend_from_slice(&m.site.x2.to_le_bytes());
            put_u64(&mut w, m.orbital as u64);
        }
        put_u64(&mut w, s.sectors.len() as u64);
        for (&n, e) in &s.sectors {
            put_u64(&mut w, n as u64);
            put_f64s(&mut w, &e.values);
            put_matrix(&mut w, &e.vectors);
        }
        self.write(key, Tag::Ed, w)
    }

    pub fn load_ed(&self, key: &CacheKey) -> Result<Option<SectorSpectrum>> {
        let Some(mut r) = self.read(key, Tag::Ed)? else {
            return Ok(None);
        };
        let nm = r.u64()? as usize;
        let mut modes = Vec::with_capacity(nm);
        for _ in 0..nm {
            let x1 = r.i64()?;
            let x2 = r.i64()?;
            let j = r.u64()? as usize;
            modes.push(Mode::new(Site::new(x1, x2), j));
        }
        let ns = r.u64()? as usize;
        let mut sectors = BTreeMap::new();
        for _ in 0..ns {
            let n = r.u64()? as usize;
            let values = r.f64s()?;
            let vectors = r.matrix()?;
            sectors.insert(n, SectorEigen { values, vectors });
        }
        r.finish()?;
        Ok(Some(SectorSpectrum { modes, sectors }))
    }
}

fn put_u64(w: &mut Vec<u8>, v: u64) {
    w.extend_from_slice(&v.to_le_bytes());
}

fn put_f64s(w: &mut Vec<u8>, v: &[f64]) {
    put_u64(w, v.len() as u64);
    for x in v {
        w.extend_from_slice(&x.to_bits().to_le_bytes());
    }
}

fn put_matrix(w: &mut Vec<u8>, m: &Array2<C64>) {
    put_u64(w, m.nrows() as u64);
    put_u64(w, m.ncols() as u64);
    for z in m.iter() {
        w.extend_from_slice(&z.re.to_bits().to_le_bytes());
        w.extend_from_slice(&z.im.to_bits().to_le_bytes());
    }
}

struct Reader {
    bytes: Vec<u8>,
    pos: usize,
}

impl Reader {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Cache("truncated file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u64()? as usize;
        (0..n).map(|_| self.f64()).collect()
    }

    fn matrix(&mut self) -> Result<Array2<C64>> {
        let r = self.u64()? as usize;
        let c = self.u64()? as usize;
        let mut data = Vec::with_capacity(r * c);
        for _ in 0..r * c {
            let re = self.f64()?;
            let im = self.f64()?;
            data.push(C64::new(re, im));
        }
        Array2::from_shape_vec((r, c), data).map_err(|e| Error::Cache(e.to_string()))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Cache("trailing bytes".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{assemble, diagonalize, EdConfig};
    use crate::free::{diagonalize_one_body, one_body};
    use crate::model::flux;

    #[test]
    fn free_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SpectrumCache::new(dir.path()).unwrap();
        let spec = ModelSpec::hofstadter(2, flux(0.15));
        let modes = ModeIndex::for_spec(&spec);
        let key = CacheKey::new(&spec, &modes, "free").unwrap();
        assert!(cache.load_free(&key).unwrap().is_none());
        let s = diagonalize_one_body(&one_body(&spec).unwrap()).unwrap();
        cache.store_free(&key, &s).unwrap();
        let back = cache.load_free(&key).unwrap().unwrap();
        assert_eq!(back.real_form, s.real_form);
        assert!(back.energies.iter().zip(&s.energies).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(*back.vectors, *s.vectors);
    }

    #[test]
    fn ed_round_trip_and_key_sensitivity() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SpectrumCache::new(dir.path()).unwrap();
        let spec = ModelSpec::hofstadter_hubbard(1, 1.0, 1.0)
            .with_region(crate::geometry::SiteSet::rectangle(0, 1, 0, 0));
        let modes = ModeIndex::for_spec(&spec);
        let cfg = EdConfig::default();
        let s = diagonalize(&assemble(&spec, &modes, &cfg).unwrap(), &cfg).unwrap();
        let key = CacheKey::new(&spec, &modes, "ed").unwrap();
        cache.store_ed(&key, &s).unwrap();
        assert_eq!(cache.load_ed(&key).unwrap().unwrap(), s);
        assert!(cache.load_free(&key).is_err());

        let other = spec.clone().with_field(1.0 + 1e-15);
        assert_ne!(CacheKey::new(&other, &modes, "ed").unwrap(), key);
    }
}
