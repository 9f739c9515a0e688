//! On-disk result cache keyed by a content hash of the inputs.
//!
//! An entry is `LMC1\n<key>\n<json payload>`. A header or key mismatch, or
//! an unparsable payload, is reported as a warning and the value recomputed.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

const MAGIC: &str = "LMC1";

/// Hash of the canonical graph serialization, the operation tag and the
/// parameters that determine the result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheKey(String);

impl CacheKey {
    pub fn new(graphs: &[String], tag: &str, params: &impl Serialize) -> Self {
        let mut h = Sha256::new();
        h.update(env!("CARGO_PKG_VERSION").as_bytes());
        h.update([0]);
        h.update(tag.as_bytes());
        h.update([0]);
        for g in graphs {
            h.update(g.as_bytes());
            h.update([0]);
        }
        h.update(serde_json::to_string(params).expect("cache parameters serialize").as_bytes());
        Self(hex::encode(h.finalize()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Disabled,
    Miss,
    Hit,
    /// Entry existed but was unusable.
    Recomputed,
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: Option<PathBuf>,
    pub warnings: Vec<String>,
}

impl Cache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir, warnings: Vec::new() }
    }

    pub fn disabled() -> Self {
        Self::new(None)
    }

    fn entry_path(dir: &Path, tag: &str, key: &CacheKey) -> PathBuf {
        dir.join(format!("{tag}-{}.lmc", &key.0[..16]))
    }

    /// Returns the cached value for `key`, computing and storing it on a miss.
    pub fn get_or_compute<T, F>(&mut self, tag: &str, key: &CacheKey, compute: F) -> CliResult<(T, CacheStatus)>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> CliResult<T>,
    {
        let Some(dir) = self.dir.clone() else {
            return Ok((compute()?, CacheStatus::Disabled));
        };
        let path = Self::entry_path(&dir, tag, key);
        let mut status = CacheStatus::Miss;
        if let Ok(bytes) = std::fs::read(&path) {
            match decode(&bytes, key) {
                Ok(value) => return Ok((value, CacheStatus::Hit)),
                Err(why) => {
                    self.warnings.push(format!("cache entry {} is unusable ({why}); recomputing", path.display()));
                    status = CacheStatus::Recomputed;
                }
            }
        }
        let value = compute()?;
        let payload = serde_json::to_string(&value).map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::create_dir_all(&dir)?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, format!("{MAGIC}\n{}\n{payload}", key.0))?;
        std::fs::rename(&tmp, &path)?;
        Ok((value, status))
    }
}

fn decode<T: DeserializeOwned>(bytes: &[u8], key: &CacheKey) -> Result<T, String> {
    let text = std::str::from_utf8(bytes).map_err(|_| "not UTF-8".to_string())?;
    let mut parts = text.splitn(3, '\n');
    if parts.next() != Some(MAGIC) {
        return Err("bad header".into());
    }
    if parts.next() != Some(key.0.as_str()) {
        return Err("key mismatch".into());
    }
    let payload = parts.next().ok_or("missing payload")?;
    serde_json::from_str(payload).map_err(|e| format!("bad payload: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_depends_on_every_input() {
        let a = CacheKey::new(&["g".into()], "op", &(1, 2));
        assert_eq!(a, CacheKey::new(&["g".into()], "op", &(1, 2)));
        assert_ne!(a, CacheKey::new(&["h".into()], "op", &(1, 2)));
        assert_ne!(a, CacheKey::new(&["g".into()], "op2", &(1, 2)));
        assert_ne!(a, CacheKey::new(&["g".into()], "op", &(1, 3)));
    }

    #[test]
    fn hit_miss_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let mut cache = Cache::new(Some(dir.path().to_path_buf()));
        let key = CacheKey::new(&[], "t", &0);
        let (v, s) = cache.get_or_compute("t", &key, || Ok(vec![0.1f64, 1.0 / 3.0])).unwrap();
        assert_eq!(s, CacheStatus::Miss);
        let (w, s) = cache.get_or_compute::<Vec<f64>, _>("t", &key, || panic!("should hit")).unwrap();
        assert_eq!(s, CacheStatus::Hit);
        assert_eq!(v, w);

        let path = Cache::entry_path(dir.path(), "t", &key);
        std::fs::write(&path, "LMC1\nnot-the-key\n[1.0]").unwrap();
        let (w, s) = cache.get_or_compute("t", &key, || Ok(vec![0.1f64, 1.0 / 3.0])).unwrap();
        assert_eq!(s, CacheStatus::Recomputed);
        assert_eq!(v, w);
        assert_eq!(cache.warnings.len(), 1);
    }
}
