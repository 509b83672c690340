//! Parses a policy file and evaluates it on plaintext packets.
//!
//! ```text
//! cargo run --example policy_file -- examples/scenarios/nat.pol
//! ```

use std::sync::Arc;

use anyhow::{Context, Result};
use pnfv::netfn::{eval, ipv4, parse_policy_file, Layout, Packet};

fn main() -> Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/scenarios/nat.pol").into());
    let layout = Arc::new(Layout::ipv4());
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {path}"))?;
    let nf = parse_policy_file(&text, &layout)?;
    println!("{} policies from {path}", nf.len());

    let ip = |s: &str| u64::from(u32::from(s.parse::<std::net::Ipv4Addr>().unwrap()));
    for (src, dst, d_port) in [
        ("198.51.100.7", "203.0.113.10", 443),
        ("198.51.100.7", "203.0.113.10", 22),
        ("198.51.100.7", "203.0.113.11", 443),
    ] {
        let x = Packet::new(layout.clone(), vec![ip(src), ip(dst), 51000, d_port, 6, 0, 0, 0])?;
        let y = eval(&nf, &x)?;
        println!(
            "{src} -> {dst}:{d_port}  =>  d_ip {}  tag {}",
            std::net::Ipv4Addr::from(y.get(ipv4::D_IP)? as u32),
            y.get(ipv4::TAG)?
        );
    }
    Ok(())
}
