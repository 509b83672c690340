//! The fully homomorphic scheme with chained range and equality policies.
//! The backend is a functional mock, so this shows the data flow and gate
//! counts, not security.

use std::sync::Arc;

use anyhow::Result;
use pnfv::netfn::{eval, FieldIndex, Layout, NetworkFunction, Packet, Policy};
use pnfv::ops::OpCounts;
use pnfv::schemes::fhe;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let layout = Arc::new(Layout::uniform(3, 8)?);
    let f = |i| FieldIndex::new(i).expect("non-zero");
    // ports 100..=150 get class 7; class 7 then rewrites field 3
    let nf = NetworkFunction::new(vec![
        Policy::range(f(1), 100, 150, f(2), 7),
        Policy::equality(f(2), 7, f(3), 255),
    ])?;

    let (pk, sk) = fhe::keygen(&mut rng);
    let mut c = OpCounts::default();
    let tf = fhe::transform(&pk, &nf, &layout, &mut rng, &mut c)?;
    for v in [99u64, 100, 125, 150, 151] {
        let x = Packet::new(layout.clone(), vec![v, 0, 0])?;
        let mut cloud = OpCounts::default();
        let ex = fhe::encrypt_packet(&pk, &x, &mut rng, &mut cloud);
        let out = fhe::process(&pk, &tf, &ex, &mut cloud)?;
        let y = fhe::decrypt(&sk, &layout, &out, &mut OpCounts::default())?;
        assert_eq!(y, eval(&nf, &x)?);
        println!(
            "{v:>3} -> {:?}  ({} adds, {} muls)",
            y.values(),
            cloud.homomorphic_adds,
            cloud.homomorphic_muls
        );
    }
    Ok(())
}
