//! Binary cache for weight tables. Layout is documented in `docs/FORMATS.md`.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{KernelParams, WeightTable};
use crate::error::{Error, Result};
use crate::geometry::GridSpec;

const MAGIC: &[u8; 4] = b"FSWT";
const VERSION: u32 = 1;

/// How [`WeightTable::load_or_build`] obtained its table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    /// No usable file existed; the table was built and written.
    Built,
    /// A file existed but was corrupt or keyed differently; it was replaced.
    Rebuilt,
}

/// File name derived from (N, s, c, h, R).
pub fn cache_file_name(params: &KernelParams, h: f64, radius: f64) -> String {
    let mut hasher = Sha256::new();
    hasher.update((params.dim() as u32).to_le_bytes());
    for v in [params.s(), params.c(), h, radius] {
        hasher.update(v.to_bits().to_le_bytes());
    }
    let digest = hasher.finalize();
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("weights-{hex}.fswt")
}

impl WeightTable {
    /// Serializes the table: header, canonical offset/weight rows, SHA-256.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        for v in [self.params().s(), self.params().c(), self.h(), self.radius()] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend_from_slice(&(self.canonical().len() as u64).to_le_bytes());
        for (k, w) in self.canonical() {
            for &v in k {
                buf.extend_from_slice(&(v as i32).to_le_bytes());
            }
            buf.extend_from_slice(&w.to_le_bytes());
        }
        let digest = Sha256::digest(&buf);
        buf.extend_from_slice(&digest);
        out.write_all(&buf)?;
        Ok(())
    }

    /// Parses the format written by [`WeightTable::write_to`], verifying the
    /// checksum.
    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut buf = Vec::new();
        input.read_to_end(&mut buf)?;
        if buf.len() < 32 + 48 {
            return Err(Error::Format("weight cache truncated".into()));
        }
        let (body, digest) = buf.split_at(buf.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Format("weight cache checksum mismatch".into()));
        }
        let mut cur = Cursor { bytes: body, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::Format("not a weight cache file".into()));
        }
        let version = cur.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported weight cache version {version}")));
        }
        let dim = cur.u32()? as usize;
        let (s, c, h, radius) = (cur.f64()?, cur.f64()?, cur.f64()?, cur.f64()?);
        let count = cur.u64()? as usize;
        let params = KernelParams::with_constant(dim, s, c)?;
        let mut canonical = Vec::with_capacity(count);
        for _ in 0..count {
            let mut k = Vec::with_capacity(dim);
            for _ in 0..dim {
                k.push(cur.i32()? as i64);
            }
            canonical.push((k, cur.f64()?));
        }
        if cur.pos != body.len() {
            return Err(Error::Format("trailing bytes in weight cache".into()));
        }
        WeightTable::assemble(params, h, radius, canonical)
    }

    /// Loads the table for (grid.h, params, radius) from `dir`, building and
    /// storing it when absent or invalid.
    pub fn load_or_build(
        dir: &Path,
        grid: &GridSpec,
        params: &KernelParams,
        radius: f64,
    ) -> Result<(Self, CacheStatus)> {
        let path: PathBuf = dir.join(cache_file_name(params, grid.h(), radius));
        let mut existed = false;
        if let Ok(file) = fs::File::open(&path) {
            existed = true;
            if let Ok(table) = Self::read_from(std::io::BufReader::new(file)) {
                let same = table.params() == params
                    && table.h().to_bits() == grid.h().to_bits()
                    && table.radius().to_bits() == radius.to_bits();
                if same {
                    return Ok((table, CacheStatus::Hit));
                }
            }
        }
        let table = Self::build(grid, params, radius)?;
        fs::create_dir_all(dir)?;
        let tmp = path.with_extension("tmp");
        {
            let mut file = std::io::BufWriter::new(fs::File::create(&tmp)?);
            table.write_to(&mut file)?;
            file.flush()?;
        }
        fs::rename(&tmp, &path)?;
        let status = if existed {
            CacheStatus::Rebuilt
        } else {
            CacheStatus::Built
        };
        Ok((table, status))
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Format("weight cache truncated".into()));
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
