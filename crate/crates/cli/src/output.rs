//! File emission with checksums. Files written through an [`OutputGuard`]
//! are deleted again unless the guard is committed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "WALSH_NOISE_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Artifact {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Default)]
pub struct OutputGuard {
    written: Vec<PathBuf>,
    created_dir: Option<PathBuf>,
    committed: bool,
}

impl OutputGuard {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates `dir` if needed; a directory created here is removed on
    /// rollback when it is left empty.
    pub fn prepare_dir(&mut self, dir: &Path) -> Result<()> {
        if !dir.exists() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            self.created_dir.get_or_insert_with(|| dir.to_path_buf());
        }
        Ok(())
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<Artifact> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            self.prepare_dir(parent)?;
        }
        self.written.push(path.to_path_buf());
        let mut f =
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        f.write_all(bytes)
            .with_context(|| format!("writing {}", path.display()))?;
        f.sync_all().ok();
        Ok(Artifact {
            file: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        })
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for p in self.written.iter().rev() {
            let _ = fs::remove_file(p);
        }
        if let Some(d) = &self.created_dir {
            let _ = fs::remove_dir(d);
        }
    }
}

/// Where a single-table subcommand writes: `-` is stdout, a bare file name
/// lands in the output directory.
pub fn resolve(out: Option<&Path>, out_dir: Option<&Path>, default_name: &str) -> Option<PathBuf> {
    match out {
        Some(p) if p == Path::new("-") => None,
        Some(p) if p.is_absolute() || p.parent().is_some_and(|d| !d.as_os_str().is_empty()) => {
            Some(p.to_path_buf())
        }
        Some(p) => Some(
            out_dir
                .map(|d| d.join(p))
                .unwrap_or_else(|| p.to_path_buf()),
        ),
        None => Some(out_dir.unwrap_or(Path::new(".")).join(default_name)),
    }
}
