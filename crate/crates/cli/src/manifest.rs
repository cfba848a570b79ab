//! Run manifest: the resolved configuration plus a content digest of every
//! produced file. Identical runs produce identical manifests, which is the
//! reproducibility contract.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::config::Resolved;
use crate::CliError;

/// Output subdirectories covered by the manifest (inputs like pings and
/// tract geometry are not products of a run).
const PRODUCT_DIRS: [&str; 8] = [
    "trips", "stops", "networks", "metrics", "compare", "figures", "reports", "report",
];

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn walk(dir: &Path, root: &Path, files: &mut BTreeMap<String, String>) -> Result<(), CliError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::Data(format!("cannot list {}: {e}", dir.display())))?;
    let mut paths: Vec<_> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    for path in paths {
        if path.is_dir() {
            walk(&path, root, files)?;
        } else {
            let rel = path
                .strip_prefix(root)
                .unwrap_or(&path)
                .to_string_lossy()
                .replace('\\', "/");
            files.insert(rel, sha256_file(&path)?);
        }
    }
    Ok(())
}

/// Hashes every product file under the out dir. Deterministic: paths are
/// visited in sorted order.
pub fn product_digests(out_dir: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut files = BTreeMap::new();
    for sub in PRODUCT_DIRS {
        let dir = out_dir.join(sub);
        if dir.is_dir() {
            walk(&dir, out_dir, &mut files)?;
        }
    }
    Ok(files)
}

/// Rewrites `manifest.json` from the current product tree and the resolved
/// config echo.
pub fn write_manifest(cfg: &Resolved) -> Result<(), CliError> {
    let files = product_digests(&cfg.out_dir)?;
    let doc = serde_json::json!({
        "config": cfg.raw,
        "files": files,
    });
    let path = cfg.out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Data(format!("manifest encode: {e}")))?;
    std::fs::write(&path, text + "\n")
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}
