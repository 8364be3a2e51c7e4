//! Synthetic-stream experiment harness.
//!
//! Streams draw latent vectors around a few fixed unit centroids, which
//! makes incoming keys highly redundant, the regime the dropout policy is
//! built for. The runner drives one write policy over a stream, tracks key
//! correlation and write bookkeeping, and scores retrieval on held-out noisy
//! queries. Everything is a pure function of (config, seed); trajectory CSV
//! output is byte-stable.

use std::collections::HashSet;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{ExperimentConfig, Policy, StreamConfig};
use crate::error::{Error, Result};
use crate::kb::{KeyValuePair, Triplet};
use crate::memory::{dot, l2_norm, normalized, MemoryModule};
use crate::metrics::{aggregated_correlation, corpus_entity_f1, F1Report};

/// Queries per retrieval evaluation inside a run.
pub const EVAL_QUERIES: usize = 200;

/// One stream element: a noisy latent vector, its source cluster, and the
/// one-hot value carrying the cluster label.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamItem {
    pub latent: Vec<f64>,
    pub cluster: usize,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthStream {
    pub centroids: Vec<Vec<f64>>,
    pub items: Vec<StreamItem>,
}

/// Clustered stream standing in for recurrent-net activations: fixed seeded
/// unit centroids, then per step a uniform cluster choice and a noisy copy
/// of its centroid scaled by 1.5*sqrt(dim).
///
/// The scale is load-bearing. Activation vectors have O(1) components, so
/// their dot products against stored unit keys spread over a wide range and
/// the softmax mixing weights in the dropout path stay sharply local. Unit
/// latents would flatten those weights toward uniform, letting the
/// surrogate sampling blend keys across clusters and feed its own jitter
/// back through the variance track until a few dimensions dominate.
pub fn synth_stream(cfg: &StreamConfig) -> Result<SynthStream> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let gain = 1.5 * (cfg.dim as f64).sqrt();
    let centroids: Vec<Vec<f64>> = (0..cfg.n_clusters)
        .map(|_| random_unit(cfg.dim, &mut rng))
        .collect();
    let items = (0..cfg.steps)
        .map(|_| {
            let cluster = rng.random_range(0..cfg.n_clusters);
            let noisy: Vec<f64> = centroids[cluster]
                .iter()
                .map(|c| {
                    let z: f64 = rng.sample(StandardNormal);
                    gain * (c + cfg.noise_sigma * z)
                })
                .collect();
            // Noise cancelling the centroid exactly has probability zero;
            // fall back to the scaled centroid rather than emit a zero
            // vector, which the write path rejects.
            let latent = if l2_norm(&noisy) > 1e-12 {
                noisy
            } else {
                centroids[cluster].iter().map(|c| gain * c).collect()
            };
            let mut value = vec![0.0; cfg.n_clusters];
            value[cluster] = 1.0;
            StreamItem {
                latent,
                cluster,
                value,
            }
        })
        .collect();
    Ok(SynthStream { centroids, items })
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(u) = normalized(&v) {
            return u;
        }
    }
}

/// One recorded point of a run. `retrieval_f1` is present only on the final
/// record.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub agg_correlation: f64,
    pub overwrite_count: u64,
    pub mean_age: f64,
    pub retrieval_f1: Option<f64>,
}

/// A completed run: its records plus the final memory state (for
/// snapshotting and inspection).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub records: Vec<TrajectoryRecord>,
    pub memory: MemoryModule,
}

/// Drive one policy over a synthetic stream. Records are taken before any
/// write (step 0), every `record_every` steps, and at the final step, which
/// also carries a retrieval score over the stream's centroid facts.
///
/// Seeds derive from the stream seed: +1 for memory init, +2 for the write
/// policy, +3 for the retrieval eval.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    cfg.validate()?;
    let stream = synth_stream(&cfg.stream)?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.stream.seed.wrapping_add(1));
    let mut mem = MemoryModule::init(
        cfg.memory_slots,
        cfg.stream.dim,
        cfg.stream.n_clusters,
        &mut init_rng,
    )?;
    let mut policy_rng = ChaCha8Rng::seed_from_u64(cfg.stream.seed.wrapping_add(2));
    let mut overwrites: u64 = 0;
    let mut records = vec![record_at(0, &mem, 0, None)?];
    for (i, item) in stream.items.iter().enumerate() {
        let step = i + 1;
        let outcome = match cfg.policy {
            Policy::Greedy => {
                mem.write_greedy(&item.latent, &item.value, cfg.epsilon, &mut policy_rng)?
            }
            Policy::MemoryDropout => mem.write_dropout(
                &item.latent,
                &item.value,
                cfg.epsilon,
                cfg.neighborhood,
                &mut policy_rng,
            )?,
        };
        if outcome.is_overwrite() {
            overwrites += 1;
        }
        debug_assert!(mem.keys().iter().all(|k| (l2_norm(k) - 1.0).abs() < 1e-9));
        debug_assert_eq!(*mem.ages().iter().min().expect("nonempty"), 1);
        if step == stream.items.len() {
            let f1 = centroid_retrieval_f1(cfg, &stream)?;
            records.push(record_at(step, &mem, overwrites, Some(f1))?);
        } else if step % cfg.record_every == 0 {
            records.push(record_at(step, &mem, overwrites, None)?);
        }
    }
    Ok(ExperimentRun {
        records,
        memory: mem,
    })
}

fn record_at(
    step: usize,
    mem: &MemoryModule,
    overwrites: u64,
    retrieval_f1: Option<f64>,
) -> Result<TrajectoryRecord> {
    Ok(TrajectoryRecord {
        step,
        agg_correlation: aggregated_correlation(mem.keys())?,
        overwrite_count: overwrites,
        mean_age: mem.mean_age(),
        retrieval_f1,
    })
}

/// Held-out retrieval on the stream's own facts: one pair per cluster
/// (centroid key, one-hot value), queried under the stream's noise level.
fn centroid_retrieval_f1(cfg: &ExperimentConfig, stream: &SynthStream) -> Result<f64> {
    let pairs: Vec<KeyValuePair> = stream
        .centroids
        .iter()
        .enumerate()
        .map(|(c, centroid)| {
            let mut value = vec![0.0; stream.centroids.len()];
            value[c] = 1.0;
            KeyValuePair {
                key: centroid.clone(),
                value,
                provenance: Triplet::new(
                    format!("cluster-{c}"),
                    "centroid",
                    format!("label-{c}"),
                ),
            }
        })
        .collect();
    let eval = EvalConfig {
        policy: cfg.policy,
        memory_slots: cfg.memory_slots,
        neighborhood: cfg.neighborhood,
        epsilon: cfg.epsilon,
        query_noise: cfg.stream.noise_sigma,
        n_queries: EVAL_QUERIES,
        seed: cfg.stream.seed.wrapping_add(3),
    };
    Ok(kb_retrieval_eval(&pairs, &eval)?.f1)
}

/// How to load and query a pair set in `kb_retrieval_eval`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub policy: Policy,
    pub memory_slots: usize,
    pub neighborhood: usize,
    pub epsilon: f64,
    pub query_noise: f64,
    pub n_queries: usize,
    pub seed: u64,
}

/// Load pairs into a fresh memory and score noisy-key retrieval.
///
/// The first min(|pairs|, N) pairs are placed directly into consecutive
/// slots; only the overflow (when |pairs| > N) goes through the configured
/// write policy, so capacity pressure, not loading noise, is what the score
/// measures. Each query perturbs a uniformly chosen pair's key with Gaussian
/// noise (renormalized), reads the memory, and counts a hit when the
/// returned value's nearest object embedding belongs to the gold object.
pub fn kb_retrieval_eval(pairs: &[KeyValuePair], cfg: &EvalConfig) -> Result<F1Report> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no pairs to evaluate".into()));
    }
    if cfg.n_queries == 0 {
        return Err(Error::InvalidArgument("n_queries must be positive".into()));
    }
    if !cfg.query_noise.is_finite() || cfg.query_noise < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "query_noise must be finite and non-negative, got {}",
            cfg.query_noise
        )));
    }
    let key_dim = pairs[0].key.len();
    let value_dim = pairs[0].value.len();
    for p in pairs {
        if p.key.len() != key_dim || p.value.len() != value_dim {
            return Err(Error::InvalidArgument(
                "pairs disagree on key or value dimension".into(),
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut mem = MemoryModule::init(cfg.memory_slots, key_dim, value_dim, &mut rng)?;
    let placed = pairs.len().min(cfg.memory_slots);
    for (slot, pair) in pairs[..placed].iter().enumerate() {
        mem.place(slot, &pair.key, &pair.value)?;
    }
    for pair in &pairs[placed..] {
        match cfg.policy {
            Policy::Greedy => {
                mem.write_greedy(&pair.key, &pair.value, cfg.epsilon, &mut rng)?;
            }
            Policy::MemoryDropout => {
                mem.write_dropout(
                    &pair.key,
                    &pair.value,
                    cfg.epsilon,
                    cfg.neighborhood,
                    &mut rng,
                )?;
            }
        }
    }

    // Distinct objects by provenance token, first occurrence pinning the
    // embedding; prediction = nearest object by cosine.
    let mut objects: Vec<(&str, &[f64])> = Vec::new();
    let mut seen = HashSet::new();
    for p in pairs {
        if seen.insert(p.provenance.object.as_str()) {
            objects.push((p.provenance.object.as_str(), &p.value));
        }
    }

    let mut cases = Vec::with_capacity(cfg.n_queries);
    for _ in 0..cfg.n_queries {
        let idx = rng.random_range(0..pairs.len());
        let noisy: Vec<f64> = pairs[idx]
            .key
            .iter()
            .map(|k| {
                let z: f64 = rng.sample(StandardNormal);
                k + cfg.query_noise * z
            })
            .collect();
        let query = normalized(&noisy).unwrap_or_else(|| pairs[idx].key.clone());
        let read = mem.read(&query)?;
        let predicted = nearest_object(&read.value, &objects);
        let gold = pairs[idx].provenance.object.clone();
        cases.push((
            HashSet::from([predicted.to_string()]),
            HashSet::from([gold]),
        ));
    }
    Ok(corpus_entity_f1(&cases))
}

fn nearest_object<'a>(value: &[f64], objects: &[(&'a str, &[f64])]) -> &'a str {
    let value_norm = l2_norm(value);
    let mut best = objects[0].0;
    let mut best_cos = f64::NEG_INFINITY;
    for (token, emb) in objects {
        let denom = value_norm * l2_norm(emb);
        let cos = if denom > 0.0 {
            dot(value, emb) / denom
        } else {
            0.0
        };
        if cos > best_cos {
            best_cos = cos;
            best = token;
        }
    }
    best
}

/// Synthetic duplicate-heavy pair set: `repeats` jittered copies of
/// `n_facts` distinct facts, interleaved copy-major so any prefix covers as
/// many distinct facts as possible. Stresses redundancy handling when the
/// pair count exceeds memory capacity.
pub fn clustered_duplicate_pairs(
    n_facts: usize,
    repeats: usize,
    dim: usize,
    jitter: f64,
    seed: u64,
) -> Result<Vec<KeyValuePair>> {
    if n_facts == 0 || repeats == 0 || dim == 0 {
        return Err(Error::InvalidArgument(
            "n_facts, repeats, and dim must be positive".into(),
        ));
    }
    if !jitter.is_finite() || jitter < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "jitter must be finite and non-negative, got {jitter}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fact_keys: Vec<Vec<f64>> = (0..n_facts).map(|_| random_unit(dim, &mut rng)).collect();
    let objects: Vec<Vec<f64>> = (0..n_facts).map(|_| random_unit(dim, &mut rng)).collect();
    let mut pairs = Vec::with_capacity(n_facts * repeats);
    for r in 0..repeats {
        for f in 0..n_facts {
            let noisy: Vec<f64> = fact_keys[f]
                .iter()
                .map(|k| {
                    let z: f64 = rng.sample(StandardNormal);
                    k + jitter * z
                })
                .collect();
            let key = normalized(&noisy).unwrap_or_else(|| fact_keys[f].clone());
            pairs.push(KeyValuePair {
                key,
                value: objects[f].clone(),
                provenance: Triplet::new(
                    format!("fact-{f}"),
                    format!("copy-{r}"),
                    format!("object-{f}"),
                ),
            });
        }
    }
    Ok(pairs)
}

/// Duplicate-heavy pair set where rare facts compete with a redundant
/// flood: `n_flood` facts appear over and over (jittered copies) while
/// `n_rare` facts appear exactly once, early. Pair order is two copies of
/// each flood fact, then every rare fact, then the remaining interleaved
/// flood copies. Sized so the first 2*n_flood + n_rare pairs fill a small
/// memory exactly; everything after exercises the write policy, which must
/// keep recycling redundant flood slots without evicting the rare
/// singletons.
pub fn rare_flood_pairs(
    n_rare: usize,
    n_flood: usize,
    flood_copies: usize,
    dim: usize,
    jitter: f64,
    seed: u64,
) -> Result<Vec<KeyValuePair>> {
    if n_rare == 0 || n_flood == 0 || dim == 0 {
        return Err(Error::InvalidArgument(
            "n_rare, n_flood, and dim must be positive".into(),
        ));
    }
    if flood_copies < 2 {
        return Err(Error::InvalidArgument(
            "flood facts need at least two copies".into(),
        ));
    }
    if !jitter.is_finite() || jitter < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "jitter must be finite and non-negative, got {jitter}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rare_keys: Vec<Vec<f64>> = (0..n_rare).map(|_| random_unit(dim, &mut rng)).collect();
    let rare_objects: Vec<Vec<f64>> = (0..n_rare).map(|_| random_unit(dim, &mut rng)).collect();
    let flood_keys: Vec<Vec<f64>> = (0..n_flood).map(|_| random_unit(dim, &mut rng)).collect();
    let flood_objects: Vec<Vec<f64>> =
        (0..n_flood).map(|_| random_unit(dim, &mut rng)).collect();
    let flood_pair = |f: usize, r: usize, rng: &mut ChaCha8Rng| {
        let noisy: Vec<f64> = flood_keys[f]
            .iter()
            .map(|k| {
                let z: f64 = rng.sample(StandardNormal);
                k + jitter * z
            })
            .collect();
        KeyValuePair {
            key: normalized(&noisy).unwrap_or_else(|| flood_keys[f].clone()),
            value: flood_objects[f].clone(),
            provenance: Triplet::new(
                format!("flood-{f}"),
                format!("copy-{r}"),
                format!("flood-object-{f}"),
            ),
        }
    };
    let mut pairs = Vec::with_capacity(n_rare + n_flood * flood_copies);
    for r in 0..2 {
        for f in 0..n_flood {
            pairs.push(flood_pair(f, r, &mut rng));
        }
    }
    for i in 0..n_rare {
        pairs.push(KeyValuePair {
            key: rare_keys[i].clone(),
            value: rare_objects[i].clone(),
            provenance: Triplet::new(
                format!("rare-{i}"),
                "seen-once",
                format!("rare-object-{i}"),
            ),
        });
    }
    for r in 2..flood_copies {
        for f in 0..n_flood {
            pairs.push(flood_pair(f, r, &mut rng));
        }
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    MemorySlots,
    Neighborhood,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "memory" => Ok(SweepAxis::MemorySlots),
            "neighborhood" => Ok(SweepAxis::Neighborhood),
            other => Err(Error::Config(format!(
                "unknown axis '{other}', expected 'memory' or 'neighborhood'"
            ))),
        }
    }
}

/// One grid point of a sweep: the concrete config it ran with and the final
/// trajectory record.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub config: ExperimentConfig,
    pub record: TrajectoryRecord,
}

/// Run both policies at every axis value. The stream seed is offset by the
/// value's grid index, and both policies share it so each grid point is a
/// paired comparison. Rows come back in (value, policy) order with greedy
/// first.
pub fn sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[usize]) -> Result<Vec<SweepRun>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("empty sweep value list".into()));
    }
    let mut runs = Vec::with_capacity(values.len() * 2);
    for (i, &value) in values.iter().enumerate() {
        for policy in [Policy::Greedy, Policy::MemoryDropout] {
            let mut cfg = base.clone();
            cfg.policy = policy;
            match axis {
                SweepAxis::MemorySlots => cfg.memory_slots = value,
                SweepAxis::Neighborhood => cfg.neighborhood = value,
            }
            cfg.stream.seed = base.stream.seed.wrapping_add(i as u64);
            let run = run_experiment(&cfg)?;
            let record = run
                .records
                .last()
                .expect("a run always has records")
                .clone();
            runs.push(SweepRun {
                config: cfg,
                record,
            });
        }
    }
    Ok(runs)
}

pub const TRAJECTORY_HEADER: &str =
    "step,policy,memory_slots,neighborhood,epsilon,seed,agg_correlation,overwrite_count,mean_age,retrieval_f1";

fn write_record_row<W: Write>(
    w: &mut W,
    cfg: &ExperimentConfig,
    rec: &TrajectoryRecord,
) -> io::Result<()> {
    let f1 = match rec.retrieval_f1 {
        Some(v) => format!("{v:.6}"),
        None => String::new(),
    };
    writeln!(
        w,
        "{},{},{},{},{:.6},{},{:.6},{},{:.6},{}",
        rec.step,
        cfg.policy,
        cfg.memory_slots,
        cfg.neighborhood,
        cfg.epsilon,
        cfg.stream.seed,
        rec.agg_correlation,
        rec.overwrite_count,
        rec.mean_age,
        f1,
    )
}

/// Trajectory CSV for one run: header plus one row per record.
pub fn write_trajectory_csv<W: Write>(
    w: &mut W,
    cfg: &ExperimentConfig,
    records: &[TrajectoryRecord],
) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for rec in records {
        write_record_row(w, cfg, rec)?;
    }
    Ok(())
}

/// Sweep summary CSV: same schema, one final-record row per grid run.
pub fn write_sweep_csv<W: Write>(w: &mut W, runs: &[SweepRun]) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for run in runs {
        write_record_row(w, &run.config, &run.record)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn base_config() -> ExperimentConfig {
        ExperimentConfig {
            policy: Policy::MemoryDropout,
            memory_slots: 16,
            neighborhood: 4,
            epsilon: 0.1,
            record_every: 10,
            stream: StreamConfig {
                n_clusters: 3,
                dim: 8,
                noise_sigma: 0.1,
                steps: 30,
                seed: 7,
            },
        }
    }

    #[test]
    fn stream_is_deterministic_scaled_and_labelled() {
        let cfg = base_config().stream;
        let a = synth_stream(&cfg).unwrap();
        let b = synth_stream(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.centroids.len(), 3);
        assert_eq!(a.items.len(), 30);
        let gain = 1.5 * (cfg.dim as f64).sqrt();
        for item in &a.items {
            // Latents carry activation scale, not unit norm.
            let norm = l2_norm(&item.latent);
            assert!(norm > 0.5 * gain && norm < 2.0 * gain, "norm {norm}");
            let cos = dot(&item.latent, &a.centroids[item.cluster]) / norm;
            assert!(cos > 0.8, "latent drifted from its centroid: cos {cos}");
            assert!(item.cluster < 3);
            let mut expected = vec![0.0; 3];
            expected[item.cluster] = 1.0;
            assert_eq!(item.value, expected);
        }
    }

    #[test]
    fn zero_noise_stream_emits_scaled_centroids() {
        let mut cfg = base_config().stream;
        cfg.noise_sigma = 0.0;
        let gain = 1.5 * (cfg.dim as f64).sqrt();
        let s = synth_stream(&cfg).unwrap();
        for item in &s.items {
            for (x, c) in item.latent.iter().zip(&s.centroids[item.cluster]) {
                assert_abs_diff_eq!(*x, gain * c, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn single_cluster_stream_stays_near_its_centroid() {
        let cfg = StreamConfig {
            n_clusters: 1,
            dim: 16,
            noise_sigma: 0.05,
            steps: 200,
            seed: 11,
        };
        let s = synth_stream(&cfg).unwrap();
        for item in &s.items {
            let cos = (dot(&item.latent, &s.centroids[0]) / l2_norm(&item.latent)).clamp(-1.0, 1.0);
            assert!(cos.acos() < 0.6, "angle {} too wide", cos.acos());
        }
    }

    #[test]
    fn record_cadence_and_final_f1() {
        let cfg = base_config();
        let run = run_experiment(&cfg).unwrap();
        let steps: Vec<usize> = run.records.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 10, 20, 30]);
        for (i, rec) in run.records.iter().enumerate() {
            let last = i == run.records.len() - 1;
            assert_eq!(rec.retrieval_f1.is_some(), last);
        }
        // steps strictly increasing, overwrite count non-decreasing
        for w in run.records.windows(2) {
            assert!(w[0].step < w[1].step);
            assert!(w[0].overwrite_count <= w[1].overwrite_count);
        }
    }

    #[test]
    fn record_every_beyond_steps_gives_two_records() {
        let mut cfg = base_config();
        cfg.record_every = 1000;
        let run = run_experiment(&cfg).unwrap();
        let steps: Vec<usize> = run.records.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 30]);
    }

    #[test]
    fn overwrite_count_tracks_epsilon_extremes() {
        let mut cfg = base_config();
        cfg.epsilon = 0.0;
        assert_eq!(
            run_experiment(&cfg)
                .unwrap()
                .records
                .last()
                .unwrap()
                .overwrite_count,
            0
        );
        cfg.epsilon = 1.0;
        assert_eq!(
            run_experiment(&cfg)
                .unwrap()
                .records
                .last()
                .unwrap()
                .overwrite_count,
            30
        );
    }

    #[test]
    fn trajectory_csv_is_byte_stable() {
        let cfg = base_config();
        let mut a = Vec::new();
        write_trajectory_csv(&mut a, &cfg, &run_experiment(&cfg).unwrap().records).unwrap();
        let mut b = Vec::new();
        write_trajectory_csv(&mut b, &cfg, &run_experiment(&cfg).unwrap().records).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TRAJECTORY_HEADER));
        let first = lines.next().unwrap();
        assert!(
            first.starts_with("0,memory_dropout,16,4,0.100000,7,"),
            "{first}"
        );
        assert!(first.ends_with(','), "step-0 row has no retrieval value");
    }

    #[test]
    fn exact_retrieval_with_capacity_is_perfect() {
        let pairs = clustered_duplicate_pairs(10, 1, 16, 0.0, 3).unwrap();
        let eval = EvalConfig {
            policy: Policy::Greedy,
            memory_slots: 16,
            neighborhood: 4,
            epsilon: 0.0,
            query_noise: 0.0,
            n_queries: 50,
            seed: 9,
        };
        let report = kb_retrieval_eval(&pairs, &eval).unwrap();
        assert_eq!(report.f1, 1.0);
        assert_eq!(report.precision, 1.0);
        assert_eq!(report.recall, 1.0);
    }

    #[test]
    fn single_slot_memory_retrieves_one_fact() {
        let pairs = clustered_duplicate_pairs(10, 1, 16, 0.0, 5).unwrap();
        for policy in [Policy::Greedy, Policy::MemoryDropout] {
            let eval = EvalConfig {
                policy,
                memory_slots: 1,
                neighborhood: 4,
                epsilon: 0.0,
                query_noise: 0.0,
                n_queries: 400,
                seed: 2,
            };
            let report = kb_retrieval_eval(&pairs, &eval).unwrap();
            assert!(report.f1 <= 0.25, "{policy}: f1 {} too high", report.f1);
        }
    }

    #[test]
    fn duplicate_pairs_interleave_facts() {
        let pairs = clustered_duplicate_pairs(4, 3, 8, 0.05, 1).unwrap();
        assert_eq!(pairs.len(), 12);
        let first_subjects: Vec<&str> = pairs[..4]
            .iter()
            .map(|p| p.provenance.subject.as_str())
            .collect();
        assert_eq!(first_subjects, vec!["fact-0", "fact-1", "fact-2", "fact-3"]);
        for p in &pairs {
            assert_abs_diff_eq!(l2_norm(&p.key), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn sweep_emits_one_row_per_value_and_policy() {
        let mut cfg = base_config();
        cfg.stream.steps = 10;
        let runs = sweep(&cfg, SweepAxis::MemorySlots, &[8, 16]).unwrap();
        assert_eq!(runs.len(), 4);
        assert_eq!(runs[0].config.policy, Policy::Greedy);
        assert_eq!(runs[0].config.memory_slots, 8);
        assert_eq!(runs[1].config.policy, Policy::MemoryDropout);
        assert_eq!(runs[1].config.memory_slots, 8);
        assert_eq!(runs[2].config.memory_slots, 16);
        // paired seeds per value, offset by grid index
        assert_eq!(runs[0].config.stream.seed, runs[1].config.stream.seed);
        assert_eq!(runs[2].config.stream.seed, cfg.stream.seed + 1);
        assert!(sweep(&cfg, SweepAxis::MemorySlots, &[]).is_err());
        let mut csv = Vec::new();
        write_sweep_csv(&mut csv, &runs).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 5);
    }

    #[test]
    fn single_value_sweep_matches_plain_run() {
        let mut cfg = base_config();
        cfg.policy = Policy::Greedy;
        let runs = sweep(&cfg, SweepAxis::Neighborhood, &[4]).unwrap();
        let direct = run_experiment(&cfg).unwrap();
        assert_eq!(runs[0].record, *direct.records.last().unwrap());
    }

    #[test]
    fn rare_flood_layout_and_labels() {
        let pairs = rare_flood_pairs(3, 2, 4, 16, 0.05, 9).unwrap();
        assert_eq!(pairs.len(), 3 + 2 * 4);
        let subjects: Vec<&str> = pairs
            .iter()
            .map(|p| p.provenance.subject.as_str())
            .collect();
        assert_eq!(
            subjects,
            vec![
                "flood-0", "flood-1", "flood-0", "flood-1", "rare-0", "rare-1", "rare-2",
                "flood-0", "flood-1", "flood-0", "flood-1"
            ]
        );
        assert_eq!(pairs[4].provenance.relation, "seen-once");
        assert_eq!(pairs[0].provenance.relation, "copy-0");
        assert_eq!(pairs[10].provenance.relation, "copy-3");
        for p in &pairs {
            assert_abs_diff_eq!(l2_norm(&p.key), 1.0, epsilon = 1e-9);
        }
        assert_eq!(pairs, rare_flood_pairs(3, 2, 4, 16, 0.05, 9).unwrap());
        assert!(rare_flood_pairs(0, 2, 4, 16, 0.05, 9).is_err());
        assert!(rare_flood_pairs(3, 0, 4, 16, 0.05, 9).is_err());
        assert!(rare_flood_pairs(3, 2, 1, 16, 0.05, 9).is_err());
        assert!(rare_flood_pairs(3, 2, 4, 16, -0.1, 9).is_err());
    }

    #[test]
    fn dropout_protects_rare_facts_at_half_capacity() {
        // 128 pairs into 64 slots: the flood of redundant copies forces
        // evictions, and the eviction choice is the whole difference.
        for s in 0..10u64 {
            let pairs = rare_flood_pairs(12, 2, 58, 64, 0.08, 1000 + s).unwrap();
            let eval = |policy| EvalConfig {
                policy,
                memory_slots: 64,
                neighborhood: 4,
                epsilon: 0.1,
                query_noise: 0.05,
                n_queries: 200,
                seed: 2000 + s,
            };
            let md = kb_retrieval_eval(&pairs, &eval(Policy::MemoryDropout))
                .unwrap()
                .f1;
            let gr = kb_retrieval_eval(&pairs, &eval(Policy::Greedy)).unwrap().f1;
            assert!(md >= gr, "seed {s}: dropout {md} below greedy {gr}");
        }
    }

    #[test]
    fn three_cluster_policies_order_final_correlation() {
        let cfg = |policy| ExperimentConfig {
            policy,
            memory_slots: 64,
            neighborhood: 8,
            epsilon: 0.1,
            record_every: 500,
            stream: StreamConfig {
                n_clusters: 3,
                dim: 64,
                noise_sigma: 0.1,
                steps: 2000,
                seed: 0,
            },
        };
        let greedy = run_experiment(&cfg(Policy::Greedy)).unwrap();
        let dropout = run_experiment(&cfg(Policy::MemoryDropout)).unwrap();
        let gf = greedy.records.last().unwrap().agg_correlation;
        let mf = dropout.records.last().unwrap().agg_correlation;
        assert!(mf < gf, "dropout {mf} not below greedy {gf}");
    }

    #[test]
    fn neighborhood_size_barely_moves_dropout_outcome() {
        // The dropout runs at P in {5, 10, 15} land close together; the
        // greedy run sits far away from all of them.
        let cfg = |policy, neighborhood| ExperimentConfig {
            policy,
            memory_slots: 64,
            neighborhood,
            epsilon: 0.1,
            record_every: 500,
            stream: StreamConfig {
                n_clusters: 4,
                dim: 64,
                noise_sigma: 0.1,
                steps: 2000,
                seed: 5,
            },
        };
        let greedy = run_experiment(&cfg(Policy::Greedy, 8)).unwrap();
        let gf = greedy.records.last().unwrap().agg_correlation;
        let finals: Vec<f64> = [5usize, 10, 15]
            .iter()
            .map(|&p| {
                let run = run_experiment(&cfg(Policy::MemoryDropout, p)).unwrap();
                run.records.last().unwrap().agg_correlation
            })
            .collect();
        let lo = finals.iter().cloned().fold(f64::MAX, f64::min);
        let hi = finals.iter().cloned().fold(f64::MIN, f64::max);
        let spread = hi - lo;
        let gap = (finals.iter().sum::<f64>() / 3.0 - gf).abs();
        assert!(
            spread * 3.0 < gap,
            "spread {spread} not small next to gap {gap}"
        );
    }
}
