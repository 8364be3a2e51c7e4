//! Persist a trained memory to the text snapshot format and read it back
//! bit for bit, then inspect its key correlation.

use memdrop::{
    aggregated_correlation, load_snapshot, run_experiment, save_snapshot, ExperimentConfig,
    Policy, StreamConfig,
};

fn main() -> memdrop::Result<()> {
    let run = run_experiment(&ExperimentConfig {
        policy: Policy::MemoryDropout,
        memory_slots: 32,
        neighborhood: 8,
        epsilon: 0.1,
        record_every: 100,
        stream: StreamConfig {
            n_clusters: 4,
            dim: 32,
            noise_sigma: 0.1,
            steps: 400,
            seed: 21,
        },
    })?;

    let path = std::env::temp_dir().join("memdrop_example.snapshot");
    save_snapshot(&run.memory, &path)?;
    let restored = load_snapshot(&path)?;

    // Snapshots round-trip floats losslessly, so this is real equality,
    // not approximate.
    assert_eq!(run.memory, restored);
    println!(
        "snapshot round trip ok: {} slots, key dim {}",
        restored.n_slots(),
        restored.key_dim()
    );
    println!(
        "aggregated key correlation: {:.4}",
        aggregated_correlation(restored.keys())?
    );
    println!("oldest slot age: {}", restored.ages().iter().max().unwrap());
    println!("snapshot file: {}", path.display());

    std::fs::remove_file(&path).ok();
    Ok(())
}
