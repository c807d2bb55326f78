//! JSON artifact output with a determinism hash.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Fields left out of the determinism hash.
const VOLATILE_META: [&str; 2] = ["timestamp", "determinism_hash"];

/// SHA-256 over the compact JSON of `doc` without the volatile fields and
/// without any top-level `timing` entry. Object keys serialize sorted.
pub fn determinism_hash(doc: &Value) -> String {
    let mut doc = doc.clone();
    if let Some(obj) = doc.as_object_mut() {
        obj.remove("timing");
        if let Some(meta) = obj.get_mut("meta").and_then(Value::as_object_mut) {
            for key in VOLATILE_META {
                meta.remove(key);
            }
        }
    }
    let digest = Sha256::digest(doc.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Serializes `artifact`, stamping `meta.timestamp` and
/// `meta.determinism_hash`.
pub fn render<T: Serialize>(artifact: &T) -> CliResult<String> {
    let mut doc = serde_json::to_value(artifact).map_err(|e| CliError::Artifact(e.to_string()))?;
    let hash = determinism_hash(&doc);
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    if let Some(meta) = doc.get_mut("meta").and_then(Value::as_object_mut) {
        meta.insert("timestamp".into(), Value::from(now));
        meta.insert("determinism_hash".into(), Value::from(hash));
    }
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Artifact(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Writes to `path`, or standard output for `-`.
pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if path.as_os_str() == "-" {
        let mut out = std::io::stdout().lock();
        return out
            .write_all(text.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| CliError::io(path, e));
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Artifact(format!("{}: {e}", path.display())))
}
