//! Configuration, CSV/SVG emission and run manifests.

pub mod config;
pub mod csv;
pub mod manifest;
pub mod run;
pub mod svg;

use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
