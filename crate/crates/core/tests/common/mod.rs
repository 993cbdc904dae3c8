#![allow(dead_code)]

pub mod invariants;
pub mod oracle;
pub mod xmc_instances;

use std::path::PathBuf;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}
