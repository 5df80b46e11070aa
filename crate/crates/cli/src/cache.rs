//! Content-addressed result cache.
//!
//! An entry is a small text header followed by the payload:
//!
//! ```text
//! curvelab-cache 1
//! sha256 <hex digest of the payload>
//! flags <number of numerically flagged results>
//! <payload>
//! ```
//!
//! Entries are written to a temporary file in the cache directory and renamed
//! into place, so concurrent writers never expose a partial entry.

use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

const MAGIC: &str = "curvelab-cache 1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of the configuration subset, operation name and arguments.
pub fn cache_key(config: &str, op: &str, args: &[String]) -> String {
    let mut h = Sha256::new();
    for part in [config, op].into_iter().chain(args.iter().map(String::as_str)) {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub payload: Vec<u8>,
    pub flags: usize,
}

#[derive(Debug)]
pub enum Lookup {
    Hit(Entry),
    Miss,
    /// The entry exists but failed its digest check or could not be read.
    Broken(String),
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf() }
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.entry"))
    }

    pub fn get(&self, key: &str) -> Lookup {
        let path = self.path_for(key);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Lookup::Miss,
            Err(e) => return Lookup::Broken(format!("cannot read {}: {e}", path.display())),
        };
        match parse(&bytes) {
            Some(entry) => Lookup::Hit(entry),
            None => Lookup::Broken(format!("digest mismatch in {}", path.display())),
        }
    }

    pub fn put(&self, key: &str, entry: &Entry) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        write!(tmp, "{MAGIC}\nsha256 {}\nflags {}\n", sha256_hex(&entry.payload), entry.flags)?;
        tmp.write_all(&entry.payload)?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.path_for(key)).map_err(|e| e.error)?;
        Ok(())
    }
}

fn parse(bytes: &[u8]) -> Option<Entry> {
    let mut rest = bytes;
    let mut line = || -> Option<&str> {
        let end = rest.iter().position(|b| *b == b'\n')?;
        let l = std::str::from_utf8(&rest[..end]).ok()?;
        rest = &rest[end + 1..];
        Some(l)
    };
    if line()? != MAGIC {
        return None;
    }
    let digest = line()?.strip_prefix("sha256 ")?.to_string();
    let flags = line()?.strip_prefix("flags ")?.parse().ok()?;
    if sha256_hex(rest) != digest {
        return None;
    }
    Some(Entry { payload: rest.to_vec(), flags })
}
