//! Versioned JSON envelopes and atomic file output.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, ErrorKind};

pub const RB_SOLUTION: &str = "svcrb.rb_solution/1";
pub const MUSMDP_SOLUTION: &str = "svcrb.musmdp_solution/1";
pub const RANKING: &str = "svcrb.ranking/1";
pub const METRICS: &str = "svcrb.metrics/1";
pub const SWEEP: &str = "svcrb.sweep/1";
pub const ANALYSIS: &str = "svcrb.analysis/1";

#[derive(Serialize)]
struct Envelope<'a, T> {
    schema: &'a str,
    data: &'a T,
}

#[derive(Deserialize)]
struct RawEnvelope {
    schema: String,
    data: serde_json::Value,
}

/// Writes `bytes` to a sibling temp file and renames it over `path`, so
/// readers never see a half-written artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(e, dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(e, dir))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(e, path))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let perms = std::fs::Permissions::from_mode(0o644);
        std::fs::set_permissions(tmp.path(), perms).map_err(|e| CliError::io(e, path))?;
    }
    tmp.persist(path).map_err(|e| CliError::io(e.error, path))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, schema: &str, data: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(&Envelope { schema, data })
        .map_err(|e| CliError::new(ErrorKind::Artifact, e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Reads an artifact, refusing other names and other major versions. A
/// missing file is a dependency error naming `producer`.
pub fn read_json<T: DeserializeOwned>(path: &Path, schema: &str, producer: &str) -> Result<T, CliError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(CliError::new(
                ErrorKind::Dependency,
                format!("missing {}; run `{producer}` first", path.display()),
            )
            .at(path.display().to_string()))
        }
        Err(e) => return Err(CliError::io(e, path)),
    };
    let bad = |msg: String| CliError::new(ErrorKind::Artifact, msg).at(path.display().to_string());
    let raw: RawEnvelope = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    svcrb_lp::check_schema(&raw.schema, schema).map_err(|e| bad(e.to_string()))?;
    serde_json::from_value(raw.data).map_err(|e| bad(e.to_string()))
}

pub fn write_csv<S: Serialize>(path: &Path, rows: impl IntoIterator<Item = S>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| CliError::new(ErrorKind::Artifact, e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::new(ErrorKind::Artifact, e.to_string()))?;
    write_atomic(path, &bytes)
}
