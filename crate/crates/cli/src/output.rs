//! Output-path resolution, provenance headers, and small write helpers.
//!
//! Every artifact the tool produces is traceable: text outputs begin with a
//! `#`-prefixed provenance line (tool version, hash of the resolved
//! parameters, dataset checksum), JSON sidecars embed the same fields, and the
//! line is echoed to stdout for binary artifacts whose formats cannot carry
//! comments.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Environment variable naming the default output directory. Relative output
/// paths are joined under it when it is set.
pub const OUT_DIR_ENV: &str = "IPNSW_OUT_DIR";

/// Joins a relative output path under `IPNSW_OUT_DIR` when the variable is
/// set; absolute paths and unset environments pass through unchanged.
pub fn resolve_out_path(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Provenance fields stamped on every output.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool_version: &'static str,
    pub config_hash: String,
    pub dataset_checksum: String,
}

impl Provenance {
    pub fn new(config_hash: String, dataset_checksum: Option<&str>) -> Self {
        Provenance {
            tool_version: env!("CARGO_PKG_VERSION"),
            config_hash,
            dataset_checksum: dataset_checksum.unwrap_or("-").to_string(),
        }
    }

    /// The header line: `# ipnsw v<version> config=<hash> dataset=<checksum>`.
    /// Extra `key=value` pairs (e.g. `mode=parallel`) are appended in order.
    pub fn header_line(&self, extra: &[(&str, &str)]) -> String {
        let mut line = format!(
            "# ipnsw v{} config={} dataset={}",
            self.tool_version, self.config_hash, self.dataset_checksum
        );
        for (key, value) in extra {
            line.push_str(&format!(" {key}={value}"));
        }
        line
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create output directory {}", parent.display()))?;
        }
    }
    Ok(())
}

/// Writes a text artifact with the provenance line prepended and echoes the
/// line to stdout so the run itself is traceable.
pub fn write_text(
    path: &Path,
    provenance: &Provenance,
    extra: &[(&str, &str)],
    body: &str,
) -> Result<()> {
    let header = provenance.header_line(extra);
    create_parent(path)?;
    let mut file =
        fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    writeln!(file, "{header}")?;
    file.write_all(body.as_bytes())?;
    println!("{header}");
    println!("wrote {}", path.display());
    Ok(())
}

/// Writes a JSON artifact as `{"provenance": {...}, ...fields}`.
pub fn write_json<T: Serialize>(path: &Path, provenance: &Provenance, payload: &T) -> Result<()> {
    let mut value = serde_json::to_value(payload).context("cannot encode JSON payload")?;
    let obj = value
        .as_object_mut()
        .context("JSON artifacts must serialize to an object")?;
    obj.insert(
        "provenance".into(),
        serde_json::to_value(provenance).expect("provenance serializes"),
    );
    create_parent(path)?;
    let file =
        fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &value)?;
    println!("{}", provenance.header_line(&[]));
    println!("wrote {}", path.display());
    Ok(())
}

/// Ensures the parent directory of a binary artifact exists and echoes the
/// provenance line; the artifact itself is written by the caller.
pub fn announce_binary(path: &Path, provenance: &Provenance) -> Result<()> {
    create_parent(path)?;
    println!("{}", provenance.header_line(&[]));
    Ok(())
}

/// Nearest-rank percentile of a sorted slice: the smallest element with at
/// least `pct`% of the values at or below it.
pub fn percentile_sorted(sorted: &[u64], pct: f64) -> u64 {
    assert!(!sorted.is_empty(), "percentile of an empty set");
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_line_format() {
        let p = Provenance::new("abcd".into(), Some("ff00"));
        assert_eq!(
            p.header_line(&[]),
            format!(
                "# ipnsw v{} config=abcd dataset=ff00",
                env!("CARGO_PKG_VERSION")
            )
        );
        assert_eq!(
            p.header_line(&[("mode", "parallel")]),
            format!(
                "# ipnsw v{} config=abcd dataset=ff00 mode=parallel",
                env!("CARGO_PKG_VERSION")
            )
        );
        let none = Provenance::new("abcd".into(), None);
        assert!(none.header_line(&[]).ends_with("dataset=-"));
    }

    #[test]
    fn nearest_rank_percentiles() {
        let v: Vec<u64> = (1..=100).collect();
        assert_eq!(percentile_sorted(&v, 50.0), 50);
        assert_eq!(percentile_sorted(&v, 95.0), 95);
        assert_eq!(percentile_sorted(&v, 100.0), 100);
        assert_eq!(percentile_sorted(&[7], 50.0), 7);
        assert_eq!(percentile_sorted(&[7], 95.0), 7);
        let three = [10, 20, 30];
        assert_eq!(percentile_sorted(&three, 50.0), 20);
        assert_eq!(percentile_sorted(&three, 95.0), 30);
    }
}
