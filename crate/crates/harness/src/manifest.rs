//! Every CLI run drops a manifest.json beside its outputs so a result can be
//! traced back to the exact command and configuration. Deliberately no
//! timestamps or host info: identical runs produce identical manifests.

use std::fs;
use std::path::Path;

use crate::Error;

pub fn write_manifest(
    path: &Path,
    command: &str,
    config: serde_json::Value,
) -> Result<(), Error> {
    let doc = serde_json::json!({
        "command": command,
        "config": config,
        "versions": { "iso3d": env!("CARGO_PKG_VERSION") },
    });
    fs::write(path, format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
    Ok(())
}
