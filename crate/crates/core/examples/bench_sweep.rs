//! A small policies sweep through the library API, with the trend summary.

use anyhow::Result;
use pnfv::bench::{sweep, trends, write_csv, Axis, BenchConfig};
use pnfv::schemes::SchemeId;

fn main() -> Result<()> {
    let mut rows = Vec::new();
    for scheme in [SchemeId::Bgn, SchemeId::Peks] {
        let base = BenchConfig {
            scheme,
            trials: 3,
            seed: 7,
            ..BenchConfig::default()
        };
        rows.extend(sweep(&base, Axis::Policies, 5, &[1, 5, 10])?);
    }
    write_csv(&rows, std::io::stdout().lock())?;
    for t in trends(&rows, Axis::Policies) {
        eprintln!("{t}");
    }
    Ok(())
}
