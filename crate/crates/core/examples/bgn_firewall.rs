//! The policy-hiding scheme on a 5-tuple firewall: the cloud sees packets
//! but not the rules.

use std::sync::Arc;

use anyhow::Result;
use pnfv::netfn::{eval, ipv4, tag, Layout, NetworkFunction, Packet, Policy};
use pnfv::ops::OpCounts;
use pnfv::schemes::bgn;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let layout = Arc::new(Layout::ipv4());
    let loopback = u64::from(u32::from(std::net::Ipv4Addr::LOCALHOST));
    let nf = NetworkFunction::new(vec![
        Policy::equality(ipv4::S_IP, loopback, ipv4::TAG, tag::DROP),
        Policy::range(ipv4::D_PORT, 6000, 6063, ipv4::TAG, tag::DROP),
    ])?;

    let (pk, sk) = bgn::keygen(bgn::DEFAULT_PRIME_BITS, &mut rng)?;
    let mut client = OpCounts::default();
    let f = bgn::transform(&pk, &nf, &layout, &mut rng, &mut client)?;
    println!(
        "transformed {} policies into {} ciphertexts",
        nf.len(),
        f.ciphertext_count()
    );

    for (s_ip, d_port) in [(0x0a00_0001u64, 80u64), (loopback, 80), (0x0a00_0001, 6010)] {
        let x = Packet::new(layout.clone(), vec![s_ip, 0x0a00_0002, 40000, d_port, 6, 0, 0, 0])?;
        let mut cloud = OpCounts::default();
        let ex = bgn::encrypt_packet(&pk, &x, f.has_range(), &mut rng, &mut cloud)?;
        let r = bgn::process(&pk, &f, &ex, &mut cloud)?;
        let mut dec = OpCounts::default();
        let y = bgn::decrypt_result(&sk, &nf, &layout, &r, &mut dec)?;
        assert_eq!(y, eval(&nf, &x)?);
        println!(
            "s_ip {:>15} d_port {d_port:>5} -> tag {} (cloud pairings {}, client dlogs {})",
            std::net::Ipv4Addr::from(s_ip as u32).to_string(),
            y.get(ipv4::TAG)?,
            cloud.pairings,
            dec.dlogs
        );
    }
    Ok(())
}
