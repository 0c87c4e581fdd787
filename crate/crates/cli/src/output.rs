use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Raised for invalid invocations; exits with code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Usage(pub String);

/// Hex SHA-256 of the canonical JSON form of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    Sha256::digest(&bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

pub fn hash_line(hash: &str) -> String {
    format!("# config_hash={hash}\n")
}

/// Writes to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| anyhow::anyhow!(qpchain::Error::Io(e)).context(p.display().to_string()))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Formats an optional float; missing values are empty cells.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Exit code and machine-readable error object.
pub fn error_json(e: &anyhow::Error) -> (u8, String) {
    let (code, kind) = if e.downcast_ref::<Usage>().is_some() {
        (2, "usage")
    } else if let Some(q) = e.chain().find_map(|c| c.downcast_ref::<qpchain::Error>()) {
        (1, q.kind())
    } else {
        (1, "other")
    };
    let message = format!("{e:#}");
    (code, serde_json::json!({ "error": kind, "message": message }).to_string())
}
