//! On-disk cache of assembled weights keyed by domain, grid size, dimension, `s` and `p`.
//!
//! Layout: one ASCII header line holding the key, then `M` as little-endian
//! `u64`, then `W` and `V` as little-endian `f64`.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{assemble, KernelWeights};
use crate::error::{Error, Result};
use crate::grid::{DomainSpec, Grid};
use crate::params::ProblemParams;

const MAGIC: &str = "fraclog-weights v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheStatus {
    Hit,
    Miss,
    Disabled,
}

#[derive(Clone, Debug)]
pub struct WeightCache {
    dir: PathBuf,
}

fn hex(x: f64) -> String {
    format!("{:016x}", x.to_bits())
}

impl WeightCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        WeightCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Exact key: floats are recorded by their bit patterns.
    pub fn key(grid: &Grid, params: &ProblemParams) -> String {
        let domain = match grid.domain {
            DomainSpec::Interval { a, b } => format!("interval:{}:{}", hex(a), hex(b)),
            DomainSpec::Rectangle { x0, x1, y0, y1 } => {
                format!("rectangle:{}:{}:{}:{}", hex(x0), hex(x1), hex(y0), hex(y1))
            }
        };
        format!(
            "domain={domain} n={} dim={} s={} p={}",
            grid.n,
            params.dim,
            hex(params.s),
            hex(params.p)
        )
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        // FNV-1a
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in key.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        self.dir.join(format!("weights-{h:016x}.bin"))
    }

    /// Returns `None` when no entry exists for this exact key.
    pub fn load(&self, grid: &Arc<Grid>, params: &ProblemParams) -> Result<Option<KernelWeights>> {
        let key = Self::key(grid, params);
        let path = self.path_for(&key);
        let mut bytes = Vec::new();
        match fs::File::open(&path) {
            Ok(mut f) => {
                f.read_to_end(&mut bytes)?;
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        }
        let header = format!("{MAGIC} {key}\n");
        if !bytes.starts_with(header.as_bytes()) {
            // hash collision or foreign file
            return Ok(None);
        }
        let body = &bytes[header.len()..];
        let m = grid.len();
        let expected = 8 + 8 * (m * m + m);
        if body.len() != expected {
            return Err(Error::Cache(format!(
                "{} has {} payload bytes, expected {expected}",
                path.display(),
                body.len()
            )));
        }
        let stored_m = u64::from_le_bytes(body[..8].try_into().unwrap()) as usize;
        if stored_m != m {
            return Err(Error::Cache(format!("{} records {stored_m} cells", path.display())));
        }
        let mut vals = body[8..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let w: Vec<f64> = vals.by_ref().take(m * m).collect();
        let v: Vec<f64> = vals.collect();
        KernelWeights::from_parts(grid.clone(), params.s, params.p, w, v).map(Some)
    }

    pub fn store(&self, kw: &KernelWeights, params: &ProblemParams) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let key = Self::key(kw.grid(), params);
        let path = self.path_for(&key);
        let mut buf = Vec::with_capacity(64 + 8 * (kw.w_dense().len() + kw.len() + 1));
        buf.extend_from_slice(format!("{MAGIC} {key}\n").as_bytes());
        buf.extend_from_slice(&(kw.len() as u64).to_le_bytes());
        for x in kw.w_dense().iter().chain(kw.v()) {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        // write then rename so readers never see a partial file
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&buf)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }
}

/// Loads weights from the cache when present, otherwise assembles and stores them.
pub fn assemble_cached(
    grid: Arc<Grid>,
    params: &ProblemParams,
    cache: Option<&WeightCache>,
) -> Result<(KernelWeights, CacheStatus)> {
    let Some(cache) = cache else {
        return Ok((assemble(grid, params)?, CacheStatus::Disabled));
    };
    if let Some(kw) = cache.load(&grid, params)? {
        return Ok((kw, CacheStatus::Hit));
    }
    let kw = assemble(grid, params)?;
    cache.store(&kw, params)?;
    Ok((kw, CacheStatus::Miss))
}
