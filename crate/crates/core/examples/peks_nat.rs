//! The searchable-encryption scheme on a NAT: the cloud sees neither the
//! rules nor the packet, only shuffled ciphertexts and trapdoor hits.

use std::sync::Arc;

use anyhow::Result;
use pnfv::crypto::PrpKey;
use pnfv::netfn::{eval, ipv4, Layout, NetworkFunction, Packet, Policy};
use pnfv::ops::OpCounts;
use pnfv::schemes::peks;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let layout = Arc::new(Layout::ipv4());
    let public_ip = 0xcb00_710a; // 203.0.113.10
    let internal = 0x0a00_0050; // 10.0.0.80
    let nf = NetworkFunction::single(Policy::equality(ipv4::D_IP, public_ip, ipv4::D_IP, internal));

    let (pks, keys) = peks::keygen(&mut rng);
    let mut c = OpCounts::default();
    let f = peks::transform(&keys, &nf, &layout, &mut rng, &mut c)?;
    let prp = PrpKey::generate(&mut rng);

    for (nonce, d_ip) in [(0u64, public_ip), (1, 0xcb00_710b)] {
        let x = Packet::new(layout.clone(), vec![0xc633_6407, d_ip, 51000, 443, 6, 0, 0, 0])?;
        let mut entry = OpCounts::default();
        let out = peks::entry_process(&pks, &prp, nonce, &x, &mut rng, &mut entry)?;
        let mut cloud = OpCounts::default();
        let cts = peks::cloud_process(&pks, &f, out, &mut cloud)?;
        let mut client = OpCounts::default();
        let y = peks::decrypt(&keys, &layout, &cts, &mut client)?;
        assert_eq!(y, eval(&nf, &x)?);
        println!(
            "d_ip {} -> {}  (entry enc {}, cloud tests {} + index tests {}, client dec {})",
            std::net::Ipv4Addr::from(d_ip as u32),
            std::net::Ipv4Addr::from(y.get(ipv4::D_IP)? as u32),
            entry.encryptions,
            cloud.tests,
            cloud.index_tests,
            client.decryptions
        );
    }
    Ok(())
}
