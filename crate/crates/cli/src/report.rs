use std::path::Path;

use anyhow::{bail, Result};
use wheelgen_core::config::RunConfig;

pub fn emit(_config: &RunConfig, _run: &Path, _out: &Path) -> Result<()> {
    bail!("report: evaluation wiring pending")
}
