use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pnfv::bench::{
    aggregate_ms, run_benchmark, sweep, trends, write_csv, Axis, Backend, BenchConfig, BenchRow, BACKEND_ENV,
    PUBLISHED_MS, PUBLISHED_SHAPE,
};
use pnfv::schemes::SchemeId;

#[derive(Parser)]
#[command(name = "pnfv-bench", about = "Time and count the PNFV schemes per phase")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One configuration.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        fields: usize,
        #[arg(long, default_value_t = 10)]
        policies: usize,
    },
    /// Vary fields or policies with the other axis fixed.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        axis: Axis,
        /// Value of the axis that is not swept.
        #[arg(long, default_value_t = 10)]
        fixed: usize,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', default_values_t = [5, 10, 15, 20, 25, 30])]
        values: Vec<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Comma-separated: bgn, peks, fhe.
    #[arg(long, value_delimiter = ',', default_value = "bgn")]
    scheme: Vec<SchemeId>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = BACKEND_ENV, default_value = "exponent")]
    backend: Backend,
    /// Fraction of packets that match a policy.
    #[arg(long, default_value_t = 0.0)]
    match_rate: f64,
    /// Range policies on 16-bit fields.
    #[arg(long)]
    ranges: bool,
    /// Run trials concurrently.
    #[arg(long)]
    parallel: bool,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self, scheme: SchemeId, n_fields: usize, n_policies: usize) -> BenchConfig {
        BenchConfig {
            scheme,
            n_fields,
            n_policies,
            trials: self.trials,
            backend: self.backend,
            seed: self.seed,
            match_rate: self.match_rate,
            ranges: self.ranges,
            parallel: self.parallel,
        }
    }

    fn emit(&self, rows: &[BenchRow]) -> Result<()> {
        match &self.out {
            Some(p) => write_csv(
                rows,
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )?,
            None => write_csv(rows, io::stdout().lock())?,
        }
        Ok(())
    }
}

fn print_published(rows: &[BenchRow]) {
    let mut err = io::stderr().lock();
    let (n, big_n) = PUBLISHED_SHAPE;
    let _ = writeln!(
        err,
        "reference timings of the original prototype at n={n}, N={big_n} (not comparable across backends):"
    );
    for (scheme, phase, ms) in PUBLISHED_MS {
        let measured = rows
            .iter()
            .find(|r| r.scheme == *scheme && r.phase == *phase && r.n_fields == n && r.n_policies == big_n)
            .map_or("-".to_string(), |r| format!("{:.3} ms", r.median_ms));
        let _ = writeln!(err, "  {scheme} {phase}: published {ms} ms, measured {measured}");
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Command::Bench {
            common,
            fields,
            policies,
        } => {
            let mut rows = Vec::new();
            for &s in &common.scheme {
                let r = run_benchmark(&common.config(s, fields, policies))?;
                eprintln!("{s}: per-packet total {:.3} ms", aggregate_ms(&r));
                rows.extend(r);
            }
            common.emit(&rows)?;
            print_published(&rows);
        }
        Command::Sweep {
            common,
            axis,
            fixed,
            values,
        } => {
            let mut rows = Vec::new();
            for &s in &common.scheme {
                rows.extend(sweep(&common.config(s, 1, 1), axis, fixed, &values)?);
            }
            common.emit(&rows)?;
            for t in trends(&rows, axis) {
                eprintln!("{t}");
            }
            print_published(&rows);
        }
    }
    Ok(())
}
