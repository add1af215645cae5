//! On-disk cache of decoder output, keyed by source content and sampling mode.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::decoder::Decoder;
use crate::error::{Error, Result};
use crate::frame::{list_images, SamplingMode};

const ENTRY_FILE: &str = "entry.json";
const FRAMES_DIR: &str = "frames";

#[derive(Debug, Clone)]
pub struct FrameCache {
    root: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    files: Vec<CachedFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CachedFile {
    name: String,
    size: u64,
    sha256: String,
}

impl FrameCache {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| {
            Error::Environment(format!("cache root {} is not writable: {e}", root.display()))
        })?;
        tempfile::NamedTempFile::new_in(&root).map_err(|e| {
            Error::Environment(format!("cache root {} is not writable: {e}", root.display()))
        })?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Cache key for a source under a sampling mode.
    pub fn key(source: &Path, mode: &SamplingMode) -> Result<String> {
        let content = sha256_file(source)?;
        let mut hasher = Sha256::new();
        hasher.update(content.as_bytes());
        hasher.update(format!("{:?}|{}", mode.kind, mode.interval_s).as_bytes());
        Ok(hex::encode(hasher.finalize()))
    }

    /// Returns a directory of decoded frames for `source`, decoding only when
    /// no intact entry exists. Damaged entries are discarded and rebuilt.
    pub fn cache_frames(&self, source: &Path, mode: &SamplingMode, decoder: &Decoder) -> Result<PathBuf> {
        let key = Self::key(source, mode)?;
        let entry_dir = self.root.join(&key);
        if entry_dir.exists() {
            if verify_entry(&entry_dir, &key) {
                log::debug!("frame cache hit {key}");
                return Ok(entry_dir.join(FRAMES_DIR));
            }
            log::warn!("frame cache entry {key} is damaged; rebuilding");
            std::fs::remove_dir_all(&entry_dir).map_err(|e| Error::io(&entry_dir, e))?;
        }

        let staging = tempfile::Builder::new()
            .prefix(".staging-")
            .tempdir_in(&self.root)
            .map_err(|e| Error::Environment(format!("cannot stage cache entry: {e}")))?;
        let frames = staging.path().join(FRAMES_DIR);
        std::fs::create_dir(&frames).map_err(|e| Error::io(&frames, e))?;
        decoder.run(source, mode.interval_s, &frames)?;

        let mut files = Vec::new();
        for path in list_images(&frames)? {
            files.push(CachedFile {
                name: path.file_name().unwrap().to_string_lossy().into_owned(),
                size: std::fs::metadata(&path).map_err(|e| Error::io(&path, e))?.len(),
                sha256: sha256_file(&path)?,
            });
        }
        let entry = CacheEntry { key: key.clone(), files };
        let entry_path = staging.path().join(ENTRY_FILE);
        std::fs::write(&entry_path, serde_json::to_vec_pretty(&entry)?)
            .map_err(|e| Error::io(&entry_path, e))?;

        let staged = staging.keep();
        if let Err(e) = std::fs::rename(&staged, &entry_dir) {
            // Another worker may have published the same entry first.
            let _ = std::fs::remove_dir_all(&staged);
            if !verify_entry(&entry_dir, &key) {
                return Err(Error::io(&entry_dir, e));
            }
        }
        Ok(entry_dir.join(FRAMES_DIR))
    }
}

fn verify_entry(dir: &Path, key: &str) -> bool {
    let Ok(raw) = std::fs::read(dir.join(ENTRY_FILE)) else {
        return false;
    };
    let Ok(entry) = serde_json::from_slice::<CacheEntry>(&raw) else {
        return false;
    };
    if entry.key != key {
        return false;
    }
    let frames = dir.join(FRAMES_DIR);
    let Ok(present) = list_images(&frames) else {
        return false;
    };
    if present.len() != entry.files.len() {
        return false;
    }
    entry.files.iter().all(|f| {
        let path = frames.join(&f.name);
        std::fs::metadata(&path).map(|m| m.len() == f.size).unwrap_or(false)
            && sha256_file(&path).map(|h| h == f.sha256).unwrap_or(false)
    })
}

pub(crate) fn sha256_file(path: &Path) -> Result<String> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}
