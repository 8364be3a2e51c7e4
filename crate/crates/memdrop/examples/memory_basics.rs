//! Smallest useful tour: build a memory, store two facts, query one back.

use memdrop::{MemoryModule, Policy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> memdrop::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mem = MemoryModule::init(4, 3, 2, &mut rng)?;
    println!(
        "fresh memory: {} slots, key dim {}, value dim {}",
        mem.n_slots(),
        mem.key_dim(),
        mem.value_dim()
    );

    // Keys are normalized on the way in; values are stored as given.
    mem.place(0, &[1.0, 0.0, 0.0], &[1.0, 0.0])?;
    mem.place(1, &[0.0, 1.0, 0.0], &[0.0, 1.0])?;
    println!("ages after two placements: {:?}", mem.ages());

    let got = mem.read(&[0.9, 0.1, 0.0])?;
    println!(
        "query near the first key -> slot {} value {:?}",
        got.slot, got.value
    );
    println!(
        "attention over slots: {:?}",
        got.attention
            .iter()
            .map(|a| format!("{a:.3}"))
            .collect::<Vec<_>>()
    );

    // A few greedy writes. Epsilon 0 means pure merging: the closest slot
    // absorbs each incoming key and its age resets.
    for step in 0..3 {
        let outcome = mem.write_greedy(&[0.8, 0.2, 0.0], &[1.0, 0.0], 0.0, &mut rng)?;
        println!("greedy step {step}: wrote slot {}", outcome.slot());
    }
    println!("ages after merging (everyone else got older): {:?}", mem.ages());
    println!("policies available to the simulator: {} and {}", Policy::Greedy, Policy::MemoryDropout);
    Ok(())
}
