//! One dropout write, decomposed: neighborhood, mixture, surrogate, merge,
//! and the age penalty that marks redundant slots for future eviction.

use memdrop::{MemoryModule, WriteOutcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> memdrop::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut mem = MemoryModule::init(6, 4, 1, &mut rng)?;

    // Warm the memory with a cluster of similar keys so the neighborhood
    // has something redundant to find.
    mem.place(0, &[1.0, 0.05, 0.0, 0.0], &[10.0])?;
    mem.place(1, &[1.0, -0.05, 0.0, 0.0], &[11.0])?;
    mem.place(2, &[0.95, 0.1, 0.0, 0.0], &[12.0])?;
    println!("ages before the write: {:?}", mem.ages());

    let h = [5.0, 0.2, 0.0, 0.0]; // activation-scale query, same cluster
    let nb = mem.nearest_neighbors(&h, 3)?;
    println!("neighborhood slots {:?}", nb.indices);
    println!(
        "similarities {:?}",
        nb.similarities
            .iter()
            .map(|s| format!("{s:.3}"))
            .collect::<Vec<_>>()
    );
    println!(
        "mixing coefficients {:?}",
        mem.mixing_coefficients(&nb)
            .iter()
            .map(|p| format!("{p:.3}"))
            .collect::<Vec<_>>()
    );

    // Epsilon 0 forces the neighborhood branch so we can watch it.
    let written = match mem.write_dropout(&h, &[42.0], 0.0, 3, &mut rng)? {
        WriteOutcome::DropoutUpdate {
            slot,
            sampled,
            neighborhood,
        } => {
            println!("surrogate draw (first entries): {:.3} {:.3}", sampled[0], sampled[1]);
            println!(
                "merged into slot {slot}; penalized neighborhood {:?}",
                neighborhood.indices
            );
            slot
        }
        other => {
            println!("unexpected branch: {other:?}");
            return Ok(());
        }
    };
    println!("ages after the write:  {:?}", mem.ages());
    println!("variance at the written slot now tracks (h - h')^2:");
    let s = &mem.variances()[written];
    println!("  {:?}", s.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>());

    // With epsilon 1 the policy always evicts the oldest slot instead.
    let out = mem.write_dropout(&h, &[7.0], 1.0, 3, &mut rng)?;
    println!("epsilon 1 write: {out:?}");
    Ok(())
}
