use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct Build {
    pub version: &'static str,
    pub git: &'static str,
}

pub const BUILD: Build = Build {
    version: env!("CARGO_PKG_VERSION"),
    git: env!("TDUR_GIT_REV"),
};

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Record of one command invocation. Holds no timestamps, so reruns with
/// identical inputs write identical bytes.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a str,
    pub args: Vec<String>,
    pub build: Build,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<&'a RunConfig>,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_file(path: &Path) -> Result<(u64, String), CliError> {
    let mut file = fs::File::open(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = file
            .read(&mut buf)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok((total, format!("{:x}", hasher.finalize())))
}

fn collect_files(path: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        for e in entries {
            collect_files(&e, out)?;
        }
    } else {
        out.push(path.to_path_buf());
    }
    Ok(())
}

/// Writes `manifest_path` listing every file under `outputs` with its hash.
pub fn write_manifest(
    manifest_path: &Path,
    command: &str,
    config: Option<&RunConfig>,
    outputs: &[PathBuf],
) -> Result<(), CliError> {
    let mut files = Vec::new();
    for o in outputs {
        collect_files(o, &mut files)?;
    }
    files.retain(|f| f != manifest_path);
    let artifacts = files
        .iter()
        .map(|f| {
            let (bytes, sha256) = sha256_file(f)?;
            Ok(Artifact {
                path: f.display().to_string(),
                bytes,
                sha256,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let manifest = RunManifest {
        command,
        args: std::env::args().skip(1).collect(),
        build: BUILD,
        config,
        artifacts,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::data(e.to_string()))?;
    if let Some(parent) = manifest_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::data(format!("{}: {e}", parent.display())))?;
    }
    fs::write(manifest_path, text + "\n").map_err(|e| CliError::data(format!("{}: {e}", manifest_path.display())))
}
