//! Batch-run manifests: an ordered list of tagged integral files, each with
//! optional one-body operator files, plus kick parameters shared by every
//! entry. Tags are the scan abscissa (bond lengths, coupling strengths);
//! the engine never interprets them.

use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanManifest {
    #[serde(default)]
    pub entries: Vec<Entry>,
    pub kick: Option<KickParams>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub tag: String,
    pub fcidump: PathBuf,
    #[serde(default)]
    pub opers: Vec<PathBuf>,
    pub nelec: Option<usize>,
    pub ms2: Option<i32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KickParams {
    /// One field weight per operator file, in entry order.
    pub q: Vec<f64>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub lambda_scan: Vec<f64>,
    #[serde(default)]
    pub require_zero_mean: bool,
}

fn default_lambda() -> f64 {
    0.1
}

/// Parses and validates a manifest. Relative paths are resolved against
/// the manifest's own directory so a manifest can travel with its data.
pub fn load_manifest(path: &Path) -> Result<ScanManifest, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut man: ScanManifest =
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut seen = std::collections::BTreeSet::new();
    for entry in &mut man.entries {
        if entry.tag.contains(',') || entry.tag.contains('\n') {
            return Err(format!("tag {:?} would break the CSV output", entry.tag));
        }
        if !seen.insert(entry.tag.clone()) {
            return Err(format!("duplicate tag {:?}", entry.tag));
        }
        entry.fcidump = resolve(base, &entry.fcidump);
        if !entry.fcidump.is_file() {
            return Err(format!("{}: no such file", entry.fcidump.display()));
        }
        for op in &mut entry.opers {
            *op = resolve(base, op);
            if !op.is_file() {
                return Err(format!("{}: no such file", op.display()));
            }
        }
        if let Some(kick) = &man.kick {
            if entry.opers.len() != kick.q.len() {
                return Err(format!(
                    "entry {:?} lists {} operator files but the kick block has {} weights",
                    entry.tag,
                    entry.opers.len(),
                    kick.q.len()
                ));
            }
        }
    }
    Ok(man)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
