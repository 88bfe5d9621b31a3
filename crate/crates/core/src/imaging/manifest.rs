use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{EpsrError, Result};

/// One dataset line: an HR image and optionally its pre-generated LR image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub hr: PathBuf,
    pub lr: Option<PathBuf>,
}

impl ManifestEntry {
    pub fn stem(&self) -> String {
        self.hr
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "image".into())
    }
}

/// Parses `hr[<TAB>lr]` lines. Blank lines and `#` comments are skipped;
/// relative paths are resolved against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let resolve = |p: &str| {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let entry = match fields.as_slice() {
            [hr] => ManifestEntry { hr: resolve(hr), lr: None },
            [hr, lr] if !lr.is_empty() => ManifestEntry {
                hr: resolve(hr),
                lr: Some(resolve(lr)),
            },
            [hr, _] => ManifestEntry { hr: resolve(hr), lr: None },
            _ => {
                return Err(EpsrError::Dataset(format!(
                    "manifest line {}: expected `hr` or `hr<TAB>lr`",
                    no + 1
                )))
            }
        };
        out.push(entry);
    }
    Ok(out)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| EpsrError::Dataset(format!("cannot read manifest {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let entries = parse_manifest(&text, base)?;
    if entries.is_empty() {
        return Err(EpsrError::Dataset(format!("manifest {} lists no images", path.display())));
    }
    Ok(entries)
}

pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for e in entries {
        match &e.lr {
            Some(lr) => writeln!(f, "{}\t{}", e.hr.display(), lr.display())?,
            None => writeln!(f, "{}", e.hr.display())?,
        }
    }
    Ok(())
}
