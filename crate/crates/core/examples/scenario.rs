//! Runs a scenario script and prints its trace.
//!
//! ```text
//! cargo run --example scenario -- examples/scenarios/tcp_handshake.pnfv
//! ```

use anyhow::{Context, Result};
use pnfv::sim::run_scenario_file;

fn main() -> Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/scenarios/firewall.pnfv").into());
    let trace = run_scenario_file(&path).with_context(|| format!("running {path}"))?;
    print!("{trace}");
    let mismatches = trace.mismatches();
    eprintln!(
        "{} frames, {} verdict mismatches; cloud ops: {:?}",
        trace.verdicts.len(),
        mismatches,
        trace.cloud_counts
    );
    anyhow::ensure!(mismatches == 0, "{mismatches} verdicts differ from the script");
    Ok(())
}
