//! The private state table driven directly: create, look up, update and
//! delete an entry for one connection.

use std::sync::Arc;

use anyhow::Result;
use pnfv::crypto::PrpKey;
use pnfv::netfn::{conn_state, ipv4, tag, Layout, Packet};
use pnfv::ops::OpCounts;
use pnfv::schemes::peks;
use pnfv::schemes::state::{self, StateFields, StateMessage, StateTable};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let layout = Arc::new(Layout::ipv4());
    let (pks, keys) = peks::keygen(&mut rng);
    let prp = PrpKey::generate(&mut rng);
    let fields = StateFields::IPV4;
    let mut table = StateTable::new(fields);
    let x = Packet::new(
        layout.clone(),
        vec![0x0a00_0001, 0x0a00_0002, 40000, 80, 6, 0, 0, 0],
    )?;
    let mut c = OpCounts::default();

    let req = state::create(
        &keys,
        fields,
        &x,
        &ipv4::FIVE_TUPLE,
        conn_state::NEW,
        tag::ALLOW,
        &mut rng,
        &mut c,
    )?;
    let id = table.register(req)?;
    println!("registered entry {id}");

    let lookup = |table: &StateTable, nonce, rng: &mut ChaCha20Rng| -> Result<Option<u32>> {
        let mut c = OpCounts::default();
        let out = peks::entry_process(&pks, &prp, nonce, &x, rng, &mut c)?;
        let hit = table.lookup(&pks, &out.searchable, &mut c);
        println!("  lookup: {hit:?} after {} trapdoor tests", c.state_tests);
        Ok(hit)
    };

    let hit = lookup(&table, 1, &mut rng)?.expect("entry exists");
    let annex = table.annex(&pks, hit, &mut rng, &mut c)?;
    let view = state::open_annex(&keys, fields, &annex, &mut c)?;
    println!("entry {} state {} tag {}", view.id, view.state, view.tag);

    table.apply(state::update_message(
        &keys,
        fields,
        id,
        conn_state::EST,
        &mut rng,
        &mut c,
    )?)?;
    let annex = table.annex(&pks, id, &mut rng, &mut c)?;
    println!(
        "after update: state {}",
        state::open_annex(&keys, fields, &annex, &mut c)?.state
    );

    table.apply(StateMessage::Delete { id })?;
    println!("after delete: {} entries", table.len());
    lookup(&table, 2, &mut rng)?;
    Ok(())
}
