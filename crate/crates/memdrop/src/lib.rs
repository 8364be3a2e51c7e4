//! Key-value external memory with a dropout-style write policy.
//!
//! An N-slot memory stores unit keys with values, per-slot ages, and
//! per-slot variances. Two write policies compete:
//!
//! * **greedy**: with probability epsilon overwrite a random slot, else
//!   merge the incoming key into the most similar slot.
//! * **memory dropout**: with probability epsilon overwrite the *oldest*
//!   slot, else sample a surrogate key from a Gaussian mixture over the
//!   incoming key's neighborhood, merge it in, and age-penalize the
//!   neighbors so redundant slots become the next overwrite targets.
//!
//! Under redundant input streams the dropout policy keeps stored keys less
//! correlated and retrieval less lossy, which is what the bundled simulator
//! and metrics measure. A small KB pipeline expands table rows into
//! (subject, relation, object) triplets and embeds them as key-value pairs
//! so retrieval can be scored end to end.
//!
//! Everything is deterministic per seed (ChaCha8 streams throughout), and
//! all file formats (trajectory CSV, snapshots, configs, embedding files)
//! are byte-stable.
//!
//! # Examples
//!
//! Each major capability has a runnable example under `examples/`:
//!
//! * `memory_basics` — init, read, greedy writes, the aging law
//! * `dropout_write` — one dropout write step by step
//! * `gmm_sampling` — neighborhood mixtures and seeded sampling
//! * `kb_triplets` — row expansion and key-value encoding
//! * `embedding_file` — loading text-format word vectors
//! * `correlation_curves` — greedy vs dropout key-correlation trajectories
//! * `memory_size_sweep` — retrieval F1 across memory sizes
//! * `retrieval_eval` — capacity pressure on a duplicate-heavy pair set
//! * `snapshot_roundtrip` — snapshot write/read and correlation inspection
//!
//! Run one with `cargo run --example memory_basics`.
//!
//! The `memdrop` binary drives the same machinery from config files; see
//! the repository README for the CLI and file-format reference.

pub mod config;
pub mod error;
pub mod kb;
pub mod memory;
pub mod metrics;
pub mod sim;
pub mod snapshot;

pub use config::{ExperimentConfig, Policy, StreamConfig};
pub use error::{Error, Result};
pub use kb::{
    expand_row, hashed_embedding, read_kb_csv, rows_to_pairs, triplet_to_kv, EmbeddingProvider,
    KBRow, KeyValuePair, Triplet,
};
pub use memory::{
    augment, gmm_sample, merge_key, MemoryModule, MixtureModel, Neighborhood, ReadResult,
    WriteOutcome,
};
pub use metrics::{aggregated_correlation, corpus_entity_f1, entity_f1, pearson_matrix, F1Report};
pub use sim::{
    clustered_duplicate_pairs, kb_retrieval_eval, rare_flood_pairs, run_experiment, sweep,
    synth_stream, write_sweep_csv, write_trajectory_csv, EvalConfig, ExperimentRun, StreamItem,
    SweepAxis, SweepRun, SynthStream, TrajectoryRecord, EVAL_QUERIES, TRAJECTORY_HEADER,
};
pub use snapshot::{load_snapshot, read_snapshot, save_snapshot, write_snapshot};
