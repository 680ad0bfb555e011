//! Content-addressed file cache: one JSON file per key, written atomically
//! (temp file then rename) so interrupted runs never leave partial entries.

use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache io error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub struct FileCache {
    root: PathBuf,
}

impl FileCache {
    pub fn new(root: &Path) -> Self {
        FileCache {
            root: root.to_path_buf(),
        }
    }

    fn entry_path(&self, namespace: &str, key: &str) -> PathBuf {
        self.root.join(namespace).join(format!("{key}.json"))
    }

    pub fn get(&self, namespace: &str, key: &str) -> Result<Option<String>, CacheError> {
        let path = self.entry_path(namespace, key);
        match fs::read_to_string(&path) {
            Ok(text) => Ok(Some(text)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(CacheError::Io { path, source }),
        }
    }

    /// Idempotent atomic write: temp file in the same directory, then rename.
    pub fn put(&self, namespace: &str, key: &str, value: &str) -> Result<(), CacheError> {
        let path = self.entry_path(namespace, key);
        let dir = path.parent().expect("entry path has a parent");
        fs::create_dir_all(dir).map_err(|source| CacheError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let temp = dir.join(format!(".{key}.tmp"));
        fs::write(&temp, value).map_err(|source| CacheError::Io {
            path: temp.clone(),
            source,
        })?;
        fs::rename(&temp, &path).map_err(|source| CacheError::Io { path, source })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FileCache::new(dir.path());
        assert_eq!(cache.get("gen", "abc").unwrap(), None);
        cache.put("gen", "abc", "{\"x\":1}").unwrap();
        assert_eq!(cache.get("gen", "abc").unwrap().as_deref(), Some("{\"x\":1}"));
        // overwrite is idempotent
        cache.put("gen", "abc", "{\"x\":1}").unwrap();
        assert_eq!(cache.get("gen", "abc").unwrap().as_deref(), Some("{\"x\":1}"));
        // namespaces are separate
        assert_eq!(cache.get("emb", "abc").unwrap(), None);
    }
}
