use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::cli_error::CliError;

/// Write bytes through a temp file + rename, so interrupted runs never
/// leave half-written outputs and reruns with the same --out are idempotent.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_default()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::runtime(format!("cannot hash {}: {e}", path.display())))?;
    let mut h = Sha256::new();
    h.update(&bytes);
    Ok(format!("sha256:{:x}", h.finalize()))
}

/// Hash every regular file under a directory (sorted relative paths).
pub fn hash_dir(dir: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut files: Vec<PathBuf> = Vec::new();
    collect_files(dir, &mut files)?;
    files.sort();
    let mut out = Vec::with_capacity(files.len());
    for f in files {
        let rel = f.strip_prefix(dir).unwrap_or(&f).to_string_lossy().into_owned();
        out.push((rel, sha256_file(&f)?));
    }
    Ok(out)
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// The `run.json` sidecar: subcommand, fully resolved config, and content
/// hashes of every input file.
pub fn write_run_json<C: Serialize>(
    out_dir: &Path,
    subcommand: &str,
    config: &C,
    input_hashes: &[(String, String)],
) -> Result<(), CliError> {
    let inputs: serde_json::Map<String, Value> = input_hashes
        .iter()
        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
        .collect();
    let doc = serde_json::json!({
        "subcommand": subcommand,
        "config": serde_json::to_value(config)?,
        "inputs": Value::Object(inputs),
    });
    atomic_write(&out_dir.join("run.json"), serde_json::to_string_pretty(&doc)?.as_bytes())
}

/// `--config FILE` support: overlay the JSON object from the file onto the
/// flag-derived config (file wins), then re-parse.
pub fn apply_config_file<C: Serialize + serde::de::DeserializeOwned>(
    base: C,
    config_path: Option<&Path>,
) -> Result<C, CliError> {
    let Some(path) = config_path else { return Ok(base) };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("cannot read {}: {e}", path.display())))?;
    let overlay: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::parse(format!("bad config file {}: {e}", path.display())))?;
    let mut merged = serde_json::to_value(&base)?;
    merge_values(&mut merged, &overlay);
    serde_json::from_value(merged)
        .map_err(|e| CliError::config(format!("config file {}: {e}", path.display())))
}

fn merge_values(base: &mut Value, overlay: &Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge_values(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}
