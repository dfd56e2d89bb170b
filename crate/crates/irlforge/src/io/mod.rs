//! Configuration, persistence, run manifests, CSV/SVG emission, logging.

pub mod checkpoint;
pub mod config;
pub mod manifest;
pub mod svg;

pub use checkpoint::{CheckpointFile, EnvSignature, NetKind};
pub use config::Config;
pub use manifest::RunManifest;

use std::path::Path;

use crate::error::Result;

/// Log levels selected by the IRLFORGE_LOG environment variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LogLevel {
    Error,
    Info,
    Debug,
}

pub fn log_level() -> LogLevel {
    match std::env::var("IRLFORGE_LOG").as_deref() {
        Ok("debug") => LogLevel::Debug,
        Ok("info") => LogLevel::Info,
        _ => LogLevel::Error,
    }
}

pub fn log_info(msg: impl AsRef<str>) {
    if log_level() >= LogLevel::Info {
        eprintln!("[info] {}", msg.as_ref());
    }
}

pub fn log_debug(msg: impl AsRef<str>) {
    if log_level() >= LogLevel::Debug {
        eprintln!("[debug] {}", msg.as_ref());
    }
}

/// Atomic write: temp file in the same directory, then rename.
pub fn write_atomic(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp~");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Full-precision float formatting for CSV cells (round-trips exactly).
pub fn fmt_float(v: f64) -> String {
    format!("{v:?}")
}
