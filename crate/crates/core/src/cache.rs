//! On-disk cache of expansions, one file per `(form, order, code version)`.
//!
//! A file is a header line `sha256 <hex>` followed by the interchange text;
//! the hash covers the interchange text only. Writers hold `.lock` in the
//! cache directory and publish by rename.

use crate::fourier::{from_interchange, to_interchange, FourierSeries3, TruncRegion};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::thread::sleep;
use std::time::Duration;
use thiserror::Error;

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache file {} is corrupt: {reason}", path.display())]
    Corrupt { path: PathBuf, reason: String },
    #[error("cache i/o at {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("cache lock {} is held by another writer", .0.display())]
    Locked(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CacheError + '_ {
    move |source| CacheError::Io { path: path.to_path_buf(), source }
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Short hash of [`CODE_VERSION`], part of every cache key.
pub fn version_hash() -> String {
    sha256_hex(CODE_VERSION)[..16].to_string()
}

/// Header line plus interchange text.
pub fn encode(form: &str, s: &FourierSeries3) -> String {
    let body = to_interchange(form, s);
    format!("sha256 {}\n{body}", sha256_hex(&body))
}

/// Check the header hash and parse the body.
pub fn decode(text: &str) -> Result<(String, FourierSeries3), String> {
    let (head, body) = text.split_once('\n').ok_or("missing header line")?;
    let want = head.strip_prefix("sha256 ").ok_or("header is not a sha256 line")?;
    let got = sha256_hex(body);
    if want != got {
        return Err(format!("content hash {got} does not match header {want}"));
    }
    from_interchange(body).map_err(|e| e.to_string())
}

pub struct Cache {
    dir: PathBuf,
}

/// Removes the lock file when dropped.
pub struct LockGuard(PathBuf);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

impl Cache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Cache, CacheError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Cache { dir })
    }

    fn slug(form: &str) -> String {
        form.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect()
    }

    pub fn path(&self, form: &str, order: i64) -> PathBuf {
        self.dir.join(format!("{}.o{order}.{}.series", Self::slug(form), version_hash()))
    }

    /// Cached orders of `form` for this code version, ascending.
    fn orders(&self, form: &str) -> Result<Vec<i64>, CacheError> {
        let prefix = format!("{}.o", Self::slug(form));
        let suffix = format!(".{}.series", version_hash());
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir).map_err(io_err(&self.dir))? {
            let name = entry.map_err(io_err(&self.dir))?.file_name();
            let name = name.to_string_lossy();
            if let Some(o) = name.strip_prefix(&prefix).and_then(|r| r.strip_suffix(&suffix)) {
                if let Ok(o) = o.parse() {
                    out.push(o);
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// The cached expansion of `form` truncated to `region`, taken from the
    /// smallest cached order whose box covers it.
    pub fn load(&self, form: &str, order: i64, region: TruncRegion) -> Result<Option<FourierSeries3>, CacheError> {
        for o in self.orders(form)?.into_iter().filter(|o| *o >= order) {
            let path = self.path(form, o);
            let text = match fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) if e.kind() == io::ErrorKind::NotFound => continue,
                Err(e) => return Err(io_err(&path)(e)),
            };
            let (name, s) = decode(&text).map_err(|reason| CacheError::Corrupt { path: path.clone(), reason })?;
            if name != form {
                return Err(CacheError::Corrupt { path, reason: format!("holds form {name}") });
            }
            if let Ok(r) = s.restrict(region) {
                return Ok(Some(r));
            }
        }
        Ok(None)
    }

    /// Take the writer lock, waiting up to ten seconds.
    pub fn lock(&self) -> Result<LockGuard, CacheError> {
        self.lock_within(200)
    }

    fn lock_within(&self, tries: usize) -> Result<LockGuard, CacheError> {
        let path = self.dir.join(".lock");
        for _ in 0..tries {
            match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    let _ = writeln!(f, "{}", std::process::id());
                    return Ok(LockGuard(path));
                }
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => sleep(Duration::from_millis(50)),
                Err(e) => return Err(io_err(&path)(e)),
            }
        }
        Err(CacheError::Locked(path))
    }

    pub fn store(&self, form: &str, order: i64, s: &FourierSeries3) -> Result<(), CacheError> {
        let _guard = self.lock()?;
        let path = self.path(form, order);
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, encode(form, s)).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{ExpTriple, GaussInt};

    fn sample(region: TruncRegion) -> FourierSeries3 {
        FourierSeries3::from_terms(
            [
                (ExpTriple::new(2, 2, 2), GaussInt::one()),
                (ExpTriple::new(6, -2, 2), GaussInt::new(-3, 4)),
                (ExpTriple::new(10, 0, 10), GaussInt::real(7)),
            ],
            region,
        )
    }

    #[test]
    fn round_trip_and_cover() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::open(dir.path()).unwrap();
        let big = sample(TruncRegion::new(12, 12));
        c.store("x.y", 12, &big).unwrap();
        let small = TruncRegion::new(8, 8);
        let got = c.load("x.y", 8, small).unwrap().unwrap();
        assert_eq!(got, big.truncate(small));
        assert!(c.load("x.y", 16, TruncRegion::new(16, 16)).unwrap().is_none());
        assert!(!dir.path().join(".lock").exists());
    }

    #[test]
    fn tampering_detected() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::open(dir.path()).unwrap();
        c.store("x.y", 12, &sample(TruncRegion::new(12, 12))).unwrap();
        let p = c.path("x.y", 12);
        let text = fs::read_to_string(&p).unwrap().replace("\"7\"", "\"8\"");
        fs::write(&p, text).unwrap();
        assert!(matches!(c.load("x.y", 12, TruncRegion::new(12, 12)), Err(CacheError::Corrupt { .. })));
    }

    #[test]
    fn held_lock_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::open(dir.path()).unwrap();
        let g = c.lock().unwrap();
        assert!(matches!(c.lock_within(2), Err(CacheError::Locked(_))));
        drop(g);
        assert!(c.lock().is_ok());
    }
}
