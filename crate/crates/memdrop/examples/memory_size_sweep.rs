//! Sweep the memory size for both policies and print the summary CSV that
//! the `memdrop sweep` subcommand would write to a file.

use std::io;

use memdrop::{sweep, write_sweep_csv, ExperimentConfig, Policy, StreamConfig, SweepAxis};

fn main() -> memdrop::Result<()> {
    let base = ExperimentConfig {
        policy: Policy::MemoryDropout, // per-row policy comes from the sweep
        memory_slots: 64,
        neighborhood: 8,
        epsilon: 0.1,
        record_every: 500,
        stream: StreamConfig {
            n_clusters: 4,
            dim: 64,
            noise_sigma: 0.1,
            steps: 1000,
            seed: 3,
        },
    };

    let runs = sweep(&base, SweepAxis::MemorySlots, &[16, 32, 64, 128])?;
    write_sweep_csv(&mut io::stdout().lock(), &runs)?;

    eprintln!();
    eprintln!("one row per (memory size, policy); stream seeds offset per value");
    eprintln!("so the two policies always share a stream.");
    Ok(())
}
