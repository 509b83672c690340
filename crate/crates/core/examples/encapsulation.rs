//! The cloud-to-client wire format on a minimal frame.

use anyhow::Result;
use pnfv::netfn::tag;
use pnfv::schemes::bgn::{self, BgnCompact};
use pnfv::sim::{decapsulate, encapsulate, PnfvPayload, RawFrame};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let x = RawFrame::build("127.0.0.1".parse()?, "10.0.0.2".parse()?, 0, &[])?;
    let (pk, _) = bgn::keygen(bgn::DEFAULT_PRIME_BITS, &mut rng)?;
    let compact = BgnCompact {
        current: pk.encrypt_target(0, &mut rng)?,
        replacement: pk.encrypt(tag::DROP, &mut rng)?,
        c: pk.encrypt_target(1, &mut rng)?,
    };
    let p = PnfvPayload::bgn(0, &compact, &pk)?;
    let e = encapsulate(&x, &p, "198.51.100.1".parse()?, "203.0.113.1".parse()?)?;
    let bytes = e.to_bytes()?;
    println!(
        "inner frame {} + outer header 20 + payload {} = {} bytes",
        x.len(),
        p.to_bytes()?.len(),
        bytes.len()
    );
    println!("payload header: {}", hex::encode(&p.to_bytes()?[..3]));
    let (inner, payload) = decapsulate(&bytes)?;
    println!("round trip exact: {}", inner == x && payload == p);
    Ok(())
}
