//! Persistent, write-once translation cache.
//!
//! On disk the cache is a directory of append-only JSON-lines files, one per
//! (engine, source language, target language). Each line holds
//! `{"key": <hex sha256>, "source": <text>, "translation": <text>}`.
//! The key digests the source text, both language tags and the engine id, so
//! entries from different engines never alias.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::sentence::LanguageTag;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt cache file {path} at line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CacheError + '_ {
    move |source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Content digest identifying one translation request.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CacheKey(String);

impl CacheKey {
    pub fn new(text: &str, source: &LanguageTag, target: &LanguageTag, engine_id: &str) -> Self {
        let mut hasher = Sha256::new();
        for field in [text, source.as_str(), target.as_str(), engine_id] {
            hasher.update((field.len() as u64).to_le_bytes());
            hasher.update(field.as_bytes());
        }
        Self(hex::encode(hasher.finalize()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// One line of a cache file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheLine {
    pub key: CacheKey,
    pub source: String,
    pub translation: String,
}

/// In-memory map of translations, optionally mirrored to a directory.
///
/// Reads take a shared lock. Inserts are serialized through a single writer
/// lock and hold an exclusive file lock while appending, so several processes
/// may share one directory.
#[derive(Debug, Default)]
pub struct TranslationCache {
    dir: Option<PathBuf>,
    entries: RwLock<HashMap<CacheKey, String>>,
    writer: Mutex<()>,
}

impl TranslationCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (creating if needed) a cache directory and replays every file in it.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, CacheError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let cache = Self {
            dir: Some(dir),
            ..Self::default()
        };
        cache.reload()?;
        Ok(cache)
    }

    /// Opens an existing directory without creating it.
    pub fn open_existing(dir: impl AsRef<Path>) -> Result<Self, CacheError> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(CacheError::Io {
                path: dir.to_path_buf(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "cache directory not found"),
            });
        }
        Self::open(dir)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Re-reads all cache files, merging their entries into memory.
    pub fn reload(&self) -> Result<(), CacheError> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io_err(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "jsonl"))
            .collect();
        paths.sort();

        let mut loaded = HashMap::new();
        for path in &paths {
            read_cache_file(path, &mut loaded)?;
        }
        let mut entries = self.entries.write().expect("cache lock poisoned");
        for (key, value) in loaded {
            entries.entry(key).or_insert(value);
        }
        Ok(())
    }

    pub fn get(&self, key: &CacheKey) -> Option<String> {
        self.entries.read().expect("cache lock poisoned").get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores a translation unless the key is already present, returning the
    /// value that is now cached for `key`.
    pub fn insert(
        &self,
        engine_id: &str,
        source_lang: &LanguageTag,
        target_lang: &LanguageTag,
        source_text: &str,
        translation: &str,
    ) -> Result<String, CacheError> {
        let key = CacheKey::new(source_text, source_lang, target_lang, engine_id);
        let _guard = self.writer.lock().expect("cache writer poisoned");
        if let Some(existing) = self.get(&key) {
            return Ok(existing);
        }
        if let Some(dir) = &self.dir {
            let path = dir.join(cache_file_name(engine_id, source_lang, target_lang));
            let line = CacheLine {
                key: key.clone(),
                source: source_text.to_string(),
                translation: translation.to_string(),
            };
            append_line(&path, &line)?;
        }
        self.entries
            .write()
            .expect("cache lock poisoned")
            .insert(key, translation.to_string());
        Ok(translation.to_string())
    }
}

/// File name holding entries for one engine and language pair.
pub fn cache_file_name(engine_id: &str, source: &LanguageTag, target: &LanguageTag) -> String {
    let slug: String = engine_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    let digest = hex::encode(Sha256::digest(engine_id.as_bytes()));
    format!("{slug}-{}__{source}-{target}.jsonl", &digest[..8])
}

fn append_line(path: &Path, line: &CacheLine) -> Result<(), CacheError> {
    let mut buf = serde_json::to_vec(line).expect("cache line serializes");
    buf.push(b'\n');
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    file.lock().map_err(io_err(path))?;
    let written = file.write_all(&buf).and_then(|_| file.flush());
    let _ = file.unlock();
    written.map_err(io_err(path))
}

fn read_cache_file(path: &Path, into: &mut HashMap<CacheKey, String>) -> Result<(), CacheError> {
    let file = File::open(path).map_err(io_err(path))?;
    let reader = BufReader::new(file);
    let lines: Vec<String> = reader
        .lines()
        .collect::<Result<_, _>>()
        .map_err(io_err(path))?;
    let last = lines.len();
    for (idx, raw) in lines.iter().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CacheLine>(raw) {
            Ok(line) => {
                into.entry(line.key).or_insert(line.translation);
            }
            // A torn final append from an interrupted writer is ignored.
            Err(_) if idx + 1 == last && !ends_with_newline(path) => {
                log::warn!("ignoring incomplete trailing line in {}", path.display());
            }
            Err(e) => {
                return Err(CacheError::Corrupt {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(())
}

fn ends_with_newline(path: &Path) -> bool {
    fs::read(path).map(|b| b.last() == Some(&b'\n')).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag(s: &str) -> LanguageTag {
        LanguageTag::new(s).unwrap()
    }

    #[test]
    fn key_separates_every_field() {
        let k = CacheKey::new("ab", &tag("en"), &tag("fr"), "e1");
        assert_ne!(k, CacheKey::new("ab", &tag("en"), &tag("fr"), "e2"));
        assert_ne!(k, CacheKey::new("ab", &tag("fr"), &tag("en"), "e1"));
        assert_ne!(k, CacheKey::new("a", &tag("en"), &tag("fr"), "e1"));
        assert_eq!(k, CacheKey::new("ab", &tag("en"), &tag("fr"), "e1"));
        assert_eq!(k.as_str().len(), 64);
    }

    #[test]
    fn write_once_per_key() {
        let cache = TranslationCache::in_memory();
        let first = cache.insert("e", &tag("en"), &tag("fr"), "good", "bon").unwrap();
        let second = cache.insert("e", &tag("en"), &tag("fr"), "good", "bien").unwrap();
        assert_eq!(first, "bon");
        assert_eq!(second, "bon");
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn replays_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        {
            let cache = TranslationCache::open(dir.path()).unwrap();
            cache.insert("e", &tag("en"), &tag("fr"), "good", "bon").unwrap();
            cache.insert("e", &tag("fr"), &tag("en"), "bon", "good").unwrap();
            cache.insert("e", &tag("en"), &tag("fr"), "cat", "chat").unwrap();
        }
        let files = fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(files, 2);

        let cache = TranslationCache::open(dir.path()).unwrap();
        assert_eq!(cache.len(), 3);
        let key = CacheKey::new("cat", &tag("en"), &tag("fr"), "e");
        assert_eq!(cache.get(&key).as_deref(), Some("chat"));
    }

    #[test]
    fn torn_trailing_line_is_ignored_but_inner_corruption_is_not() {
        let dir = tempfile::tempdir().unwrap();
        {
            let cache = TranslationCache::open(dir.path()).unwrap();
            cache.insert("e", &tag("en"), &tag("fr"), "good", "bon").unwrap();
        }
        let path = dir.path().join(cache_file_name("e", &tag("en"), &tag("fr")));
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"key\":\"abc\",\"sou").unwrap();
        drop(f);
        assert_eq!(TranslationCache::open(dir.path()).unwrap().len(), 1);

        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"\n").unwrap();
        drop(f);
        let err = TranslationCache::open(dir.path()).unwrap_err();
        assert!(matches!(err, CacheError::Corrupt { line: 2, .. }));
    }

    #[test]
    fn file_name_is_stable_and_safe() {
        let name = cache_file_name("http-api/v1", &tag("en"), &tag("fr"));
        assert!(name.starts_with("http_api_v1-"));
        assert!(name.ends_with("__en-fr.jsonl"));
        assert!(!name.contains('/'));
    }
}
