//! Output writers. JSON documents carry the run config in a `config` member,
//! CSV files in a leading `# config:` comment, binary dumps in a sidecar.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::{RunConfig, CSV_CONFIG_PREFIX};
use crate::CliError;

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    config: &'a RunConfig,
    result: &'a T,
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Compute(format!("cannot create {}: {e}", path.display())))
}

fn write_err(path: Option<&Path>, e: impl std::fmt::Display) -> CliError {
    match path {
        Some(p) => CliError::Compute(format!("writing {}: {e}", p.display())),
        None => CliError::Compute(format!("writing to stdout: {e}")),
    }
}

pub fn json_string<T: Serialize>(config: &RunConfig, result: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(&Document { config, result })
        .map_err(|e| CliError::Compute(format!("serializing result: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes the report to `path`, or to stdout when `path` is `None`.
pub fn write_report<T: Serialize>(path: Option<&Path>, config: &RunConfig, result: &T) -> Result<(), CliError> {
    let s = json_string(config, result)?;
    match path {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(s.as_bytes()).and_then(|_| w.flush()).map_err(|e| write_err(path, e))
        }
        None => std::io::stdout().write_all(s.as_bytes()).map_err(|e| write_err(None, e)),
    }
}

pub fn config_comment(config: &RunConfig) -> Result<String, CliError> {
    let json = serde_json::to_string(config).map_err(|e| CliError::Compute(format!("serializing config: {e}")))?;
    Ok(format!("{}{json}", CSV_CONFIG_PREFIX.trim_start_matches("# ")))
}

/// Creates `path`, writes the config comment line and hands the writer to `body`.
pub fn write_csv(
    path: &Path,
    config: &RunConfig,
    body: impl FnOnce(&mut BufWriter<File>, &[String]) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let mut w = create(path)?;
    let comments = [config_comment(config)?];
    body(&mut w, &comments).and_then(|_| w.flush()).map_err(|e| write_err(Some(path), e))
}

pub fn write_config(path: &Path, config: &RunConfig) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, config)
        .map_err(|e| write_err(Some(path), e))
        .and_then(|_| w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| write_err(Some(path), e)))
}
