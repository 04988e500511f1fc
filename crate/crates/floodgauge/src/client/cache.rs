//! Content-addressed on-disk store of [`LmmExchange`] records.
//!
//! One JSON file per key under the cache directory. Writes go through a
//! temp file plus atomic rename, so concurrent readers never observe a
//! partial record and concurrent writers of the same key settle on a
//! complete one. Eviction is manual (`cache clear` in the CLI).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{LmmError, LmmExchange};

pub struct ExchangeCache {
    dir: PathBuf,
}

impl ExchangeCache {
    pub fn open(dir: &Path) -> Result<Self, LmmError> {
        fs::create_dir_all(dir)
            .map_err(|e| LmmError::Storage(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Returns the cached exchange for `key`, or `None` on a miss.
    /// Unreadable or corrupt entries count as misses.
    pub fn lookup(&self, key: &str) -> Option<LmmExchange> {
        let text = fs::read_to_string(self.path_for(key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn store(&self, key: &str, exchange: &LmmExchange) -> Result<(), LmmError> {
        let json = serde_json::to_string_pretty(exchange)
            .map_err(|e| LmmError::Storage(e.to_string()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)
            .map_err(|e| LmmError::Storage(e.to_string()))?;
        tmp.write_all(json.as_bytes())
            .map_err(|e| LmmError::Storage(e.to_string()))?;
        tmp.persist(self.path_for(key))
            .map_err(|e| LmmError::Storage(e.to_string()))?;
        Ok(())
    }

    /// Keys of all complete entries, sorted.
    pub fn keys(&self) -> Result<Vec<String>, LmmError> {
        let mut keys = Vec::new();
        let entries = fs::read_dir(&self.dir)
            .map_err(|e| LmmError::Storage(format!("{}: {e}", self.dir.display())))?;
        for entry in entries {
            let entry = entry.map_err(|e| LmmError::Storage(e.to_string()))?;
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if let Some(key) = name.strip_suffix(".json") {
                keys.push(key.to_string());
            }
        }
        keys.sort();
        Ok(keys)
    }

    pub fn len(&self) -> Result<usize, LmmError> {
        Ok(self.keys()?.len())
    }

    pub fn is_empty(&self) -> Result<bool, LmmError> {
        Ok(self.len()? == 0)
    }

    /// Removes every entry; returns how many were removed.
    pub fn clear(&self) -> Result<usize, LmmError> {
        let keys = self.keys()?;
        for key in &keys {
            fs::remove_file(self.path_for(key))
                .map_err(|e| LmmError::Storage(e.to_string()))?;
        }
        Ok(keys.len())
    }
}
