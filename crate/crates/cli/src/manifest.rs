use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Everything needed to rerun a training or evaluation command.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub grammar_sha256: String,
    pub dataset_sha256: String,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: BTreeMap<String, String>,
        seed: Option<u64>,
        grammar: &str,
        dataset: &[&[u8]],
    ) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            seed,
            grammar_sha256: sha256_hex(&[grammar.as_bytes()]),
            dataset_sha256: sha256_hex(dataset),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
