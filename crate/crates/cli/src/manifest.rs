use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Result;
use wheelgen_core::config::RunConfig;

/// FNV-1a over the serialized config; cheap content hash for the manifest.
pub fn config_hash(config: &RunConfig) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in config.to_text().bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

fn build_id() -> String {
    let git = std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string());
    match git {
        Some(d) if !d.is_empty() => format!("{}+{d}", env!("CARGO_PKG_VERSION")),
        _ => env!("CARGO_PKG_VERSION").to_string(),
    }
}

/// Writes `manifest.txt` plus the full config snapshot into an output
/// directory so the run is reproducible from its manifest.
pub fn write_run_manifest(dir: &Path, config: &RunConfig, command: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH)?.as_secs();
    let text = format!(
        "command = {command}\nbuild = {}\nconfig_hash = {}\nseed = {}\nunix_time = {stamp}\n",
        build_id(),
        config_hash(config),
        config.seed,
    );
    std::fs::write(dir.join("manifest.txt"), text)?;
    std::fs::write(dir.join("config.snapshot"), config.to_text())?;
    Ok(())
}
