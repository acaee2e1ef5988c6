//! Subcommand implementations. Each returns the run metadata (with the
//! fully resolved config echoed) and the result table.

pub mod disentangle;
pub mod exact;
pub mod locent;
pub mod scan;
pub mod vmps;

use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::output::{Cell, Meta};
use crate::CliError;

/// Seed for grid point `index`, derived by hashing so neighboring points
/// get unrelated streams and the mapping is stable across runs.
pub fn point_seed(master: u64, index: usize) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"clusterchain-point");
    hasher.update(master.to_le_bytes());
    hasher.update((index as u64).to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 yields 32 bytes"))
}

/// Per-grid-point checkpointing: completed points are stored as JSON rows
/// keyed by a hash of everything that determines them, and reloaded on
/// rerun instead of recomputed.
pub struct Checkpoint {
    dir: Option<PathBuf>,
}

impl Checkpoint {
    pub fn new(dir: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)
                .map_err(|e| CliError::config(format!("checkpoint dir {}: {e}", d.display())))?;
        }
        Ok(Checkpoint { dir })
    }

    pub fn get_or(
        &self,
        key: &impl Serialize,
        compute: impl FnOnce() -> Result<Vec<Vec<Cell>>, CliError>,
    ) -> Result<Vec<Vec<Cell>>, CliError> {
        let Some(dir) = &self.dir else {
            return compute();
        };
        let key_json = serde_json::to_string(key).expect("checkpoint keys are plain data");
        let path = dir.join(format!("{}.json", crate::output::sha256_hex(&key_json)));
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(rows) = serde_json::from_str::<Vec<Vec<Cell>>>(&text) {
                return Ok(rows);
            }
        }
        let rows = compute()?;
        let text =
            serde_json::to_string(&rows).expect("result cells contain no non-finite floats");
        std::fs::write(&path, text).map_err(CliError::from)?;
        Ok(rows)
    }
}

/// Builds the metadata block for a subcommand run.
pub fn meta_for(
    command: &'static str,
    common: &crate::config::Common,
    config: &impl Serialize,
) -> Meta {
    Meta {
        command,
        seed: common.seed,
        deterministic: common.deterministic,
        config: serde_json::to_value(config).expect("configs are plain data"),
        notes: Vec::new(),
    }
}
