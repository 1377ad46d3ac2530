//! Game file loading, spec hashing, and build identification.

use std::path::Path;

use anyhow::{Context, Result};
use lss_core::game::{Game, GameSpec};
use sha2::{Digest, Sha256};

pub struct LoadedGame {
    pub game: Game,
    pub spec: GameSpec,
    pub hash: String,
}

pub fn load_game(path: &Path) -> Result<LoadedGame> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading game file {}", path.display()))?;
    let spec = GameSpec::from_json(&text)?;
    let game = spec.build()?;
    let hash = game_hash(&spec);
    Ok(LoadedGame { game, spec, hash })
}

/// sha-256 of the canonical JSON spec, hex-encoded.
pub fn game_hash(spec: &GameSpec) -> String {
    let canonical = spec.to_json();
    let digest = Sha256::digest(canonical.as_bytes());
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub fn build_info() -> serde_json::Value {
    serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "git": env!("LSS_GIT_DESCRIBE"),
    })
}

/// Comma-separated float list ("0.3,-0.3").
pub fn parse_floats(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid number `{t}`"))
        })
        .collect()
}
