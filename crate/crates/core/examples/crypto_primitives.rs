//! The building blocks: BGN arithmetic, searchable encryption, hashed
//! ElGamal and the keyed shuffle.

use anyhow::Result;
use pnfv::crypto::{bgn, peks, pke, Permutation, PrpKey};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(1);

    let (pk, sk) = bgn::keygen(bgn::DEFAULT_PRIME_BITS, &mut rng)?;
    let a = pk.encrypt(1200, &mut rng)?;
    let b = pk.encrypt(34, &mut rng)?;
    let sum = pk.add(&a, &b)?;
    let product = pk.mul(&a, &b)?;
    println!("bgn: 1200 + 34 = {}", sk.decrypt(&sum, 1 << 32)?);
    println!(
        "bgn: 1200 * 34 = {} (one multiplication, target group)",
        sk.decrypt(&product, 1 << 32)?
    );
    println!(
        "bgn: product is 40800 without a discrete log: {}",
        sk.is_value(&product, 40800)
    );

    let (ppk, psk) = peks::keygen(&mut rng);
    let c = ppk.encrypt(b"port:443", &mut rng);
    println!(
        "peks: trapdoor(port:443) hits {}, trapdoor(port:22) hits {}",
        ppk.test(&c, &psk.trapdoor(b"port:443")),
        ppk.test(&c, &psk.trapdoor(b"port:22"))
    );

    let (epk, esk) = pke::keygen(&mut rng);
    let ct = epk.encrypt(b"10.0.0.80", &mut rng)?;
    println!(
        "pke: {} byte ciphertext decrypts to {:?}",
        ct.as_bytes().len(),
        String::from_utf8(esk.decrypt(&ct)?)?
    );

    let key = PrpKey::generate(&mut rng);
    let sigma = Permutation::shuffle(&key, 7, 8);
    println!(
        "prp: shuffle of 8 slots under nonce 7: {:?}",
        sigma.apply(&['a', 'b', 'c', 'd', 'e', 'f', 'g', 'h'])
    );
    Ok(())
}
