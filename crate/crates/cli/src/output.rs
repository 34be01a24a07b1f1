//! Atomic file emission and CSV formatting.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Write `content` to `dir/name` atomically: the bytes land in a temp file
/// that is renamed into place only on success.
pub fn write_atomic(dir: &Path, name: &str, content: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let final_path = dir.join(name);
    let tmp_path = dir.join(format!(".{name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp_path)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", tmp_path.display())))?;
        f.write_all(content)
            .map_err(|e| CliError::Runtime(format!("write {}: {e}", tmp_path.display())))?;
        f.sync_all()
            .map_err(|e| CliError::Runtime(format!("sync {}: {e}", tmp_path.display())))?;
    }
    std::fs::rename(&tmp_path, &final_path)
        .map_err(|e| CliError::Runtime(format!("rename to {}: {e}", final_path.display())))?;
    Ok(final_path)
}

/// Minimal CSV builder; all our fields are numeric or simple tokens, so no
/// quoting is needed. Floats use the shortest round-trip representation.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        let mut buf = String::new();
        buf.push_str(header);
        buf.push('\n');
        Self { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
