//! Versioned JSON documents for bandit instances.

use std::fs;
use std::path::{Path, PathBuf};

use cascade_bandits_core::BanditInstance;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const INSTANCE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct InstanceDocument {
    version: u32,
    #[serde(flatten)]
    instance: BanditInstance,
}

pub fn instance_to_json(instance: &BanditInstance) -> Result<String> {
    #[derive(Serialize)]
    struct Doc<'a> {
        version: u32,
        #[serde(flatten)]
        instance: &'a BanditInstance,
    }
    Ok(serde_json::to_string_pretty(&Doc {
        version: INSTANCE_FORMAT_VERSION,
        instance,
    })?)
}

pub fn instance_from_json(text: &str) -> Result<BanditInstance> {
    let doc: InstanceDocument = serde_json::from_str(text)?;
    if doc.version != INSTANCE_FORMAT_VERSION {
        return Err(HarnessError::Runtime(format!(
            "unsupported instance format version {}",
            doc.version
        )));
    }
    doc.instance.validate()?;
    Ok(doc.instance)
}

pub fn write_instance(path: &Path, instance: &BanditInstance) -> Result<()> {
    fs::write(path, instance_to_json(instance)?).map_err(|e| HarnessError::io(path, e))
}

pub fn read_instance(path: &Path) -> Result<BanditInstance> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    instance_from_json(&text).map_err(|e| match e {
        HarnessError::Io { .. } => e,
        other => HarnessError::Runtime(format!("{}: {other}", path.display())),
    })
}

/// Reads one file, or every `*.json` instance in a directory in file-name
/// order (the `stats.json` sidecar is skipped).
pub fn read_instances(path: &Path, limit: Option<usize>) -> Result<Vec<BanditInstance>> {
    if path.is_file() {
        return Ok(vec![read_instance(path)?]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| HarnessError::io(path, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "json")
                && p.file_name().is_some_and(|n| n != crate::letor::STATS_FILE_NAME)
        })
        .collect();
    files.sort();
    if let Some(n) = limit {
        files.truncate(n);
    }
    if files.is_empty() {
        return Err(HarnessError::Runtime(format!(
            "no instance files found in {}",
            path.display()
        )));
    }
    files.iter().map(|p| read_instance(p)).collect()
}
