//! Content-addressed key-value memory with two write policies.
//!
//! The memory holds N slots of (key, value, age, variance). Keys stay unit
//! norm at all times. Reads attend over key similarities and return the best
//! slot. Writes either overwrite a slot outright (with probability epsilon)
//! or fold the incoming key into the neighborhood of its nearest stored keys.
//! The dropout policy targets the oldest slot for overwrites and ages whole
//! neighborhoods together, which keeps redundant slots cheap to recycle.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Norm below which a vector counts as zero.
pub(crate) const NORM_EPS: f64 = 1e-12;

/// Degenerate-merge threshold: below this the merged sum carries no direction.
const MERGE_EPS: f64 = 1e-8;

/// Tolerance for accepting externally supplied keys as unit norm.
const UNIT_TOL: f64 = 1e-6;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub(crate) fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let n = l2_norm(v);
    if n < NORM_EPS {
        return None;
    }
    Some(v.iter().map(|x| x / n).collect())
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn check_dim(v: &[f64], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: v.len(),
        });
    }
    if !all_finite(v) {
        return Err(Error::InvalidArgument("non-finite vector entry".into()));
    }
    Ok(())
}

/// Max-subtracted softmax. Input must be finite and nonempty.
pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Concatenate a latent vector with its value, e.g. to feed a downstream
/// consumer that wants both halves of a retrieved entry.
pub fn augment(h: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(h.len() + v.len());
    out.extend_from_slice(h);
    out.extend_from_slice(v);
    out
}

/// Unit-normalized sum of a stored (or sampled) key with an incoming one.
///
/// Falls back when the sum carries no direction: first to the normalized
/// incoming vector, then to the existing key unchanged.
pub fn merge_key(key: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    if key.len() != h.len() {
        return Err(Error::DimensionMismatch {
            expected: key.len(),
            actual: h.len(),
        });
    }
    if !all_finite(key) || !all_finite(h) {
        return Err(Error::InvalidArgument("non-finite vector entry".into()));
    }
    let sum: Vec<f64> = key.iter().zip(h).map(|(k, x)| k + x).collect();
    if l2_norm(&sum) >= MERGE_EPS {
        return Ok(normalized(&sum).expect("norm checked above"));
    }
    match normalized(h) {
        Some(nh) => Ok(nh),
        None => Ok(key.to_vec()),
    }
}

/// The slots most similar to a query, most similar first.
///
/// Similarities are raw dot products against unit keys. Ordering is by
/// descending similarity with ties broken toward the lower slot index.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub indices: Vec<usize>,
    pub similarities: Vec<f64>,
}

impl Neighborhood {
    /// Index of the most similar slot.
    pub fn closest(&self) -> usize {
        self.indices[0]
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Diagonal Gaussian mixture over a key neighborhood.
///
/// Weights are strictly positive and sum to one; variances are entry-wise
/// non-negative; all components share one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl MixtureModel {
    pub fn new(means: Vec<Vec<f64>>, variances: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::InvalidArgument("empty mixture".into()));
        }
        if variances.len() != means.len() || weights.len() != means.len() {
            return Err(Error::InvalidArgument(
                "mixture component counts disagree".into(),
            ));
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument("zero-dimensional mixture".into()));
        }
        for (mu, s) in means.iter().zip(&variances) {
            check_dim(mu, dim)?;
            check_dim(s, dim)?;
            if s.iter().any(|x| *x < 0.0) {
                return Err(Error::InvalidArgument("negative mixture variance".into()));
            }
        }
        if !all_finite(&weights) || weights.iter().any(|w| *w <= 0.0) {
            return Err(Error::InvalidArgument(
                "mixture weights must be positive".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            means,
            variances,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }
}

/// Draw one vector from the mixture: pick a component from the weights with
/// a single uniform draw, then add independent per-coordinate Gaussian noise
/// scaled by the component's standard deviations.
///
/// Always consumes exactly one uniform plus `dim` normal draws, so RNG state
/// advances the same way regardless of which component wins. Zero-variance
/// components reproduce their mean exactly.
pub fn gmm_sample<R: Rng>(mix: &MixtureModel, rng: &mut R) -> Vec<f64> {
    let u: f64 = rng.random();
    let mut component = mix.weights.len() - 1;
    let mut cumulative = 0.0;
    for (j, w) in mix.weights.iter().enumerate() {
        cumulative += w;
        if u < cumulative {
            component = j;
            break;
        }
    }
    let mean = &mix.means[component];
    let var = &mix.variances[component];
    (0..mix.dim())
        .map(|t| {
            let z: f64 = rng.sample(StandardNormal);
            mean[t] + z * var[t].sqrt()
        })
        .collect()
}

/// What a write did. Sampling details exist only for the dropout policy's
/// neighborhood branch; plain merges and overwrites carry just the slot.
#[derive(Debug, Clone, PartialEq)]
pub enum WriteOutcome {
    /// A slot was replaced outright (oldest for dropout, random for greedy).
    Overwrite { slot: usize },
    /// Dropout neighborhood update: `sampled` is the mixture draw merged into
    /// the winning slot's key.
    DropoutUpdate {
        slot: usize,
        sampled: Vec<f64>,
        neighborhood: Neighborhood,
    },
    /// Greedy merge into the most similar slot.
    Merge { slot: usize },
}

impl WriteOutcome {
    pub fn slot(&self) -> usize {
        match self {
            WriteOutcome::Overwrite { slot }
            | WriteOutcome::DropoutUpdate { slot, .. }
            | WriteOutcome::Merge { slot } => *slot,
        }
    }

    pub fn is_overwrite(&self) -> bool {
        matches!(self, WriteOutcome::Overwrite { .. })
    }
}

/// Best slot for a query plus the full attention vector over all slots.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadResult {
    pub slot: usize,
    pub value: Vec<f64>,
    pub attention: Vec<f64>,
}

/// N-slot external memory. Keys are unit rows; ages and variances carry the
/// write policies' bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryModule {
    keys: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
    ages: Vec<u64>,
    variances: Vec<Vec<f64>>,
    key_dim: usize,
    value_dim: usize,
}

impl MemoryModule {
    /// Fresh memory: random unit keys, zero values, ages, and variances.
    pub fn init<R: Rng>(
        n_slots: usize,
        key_dim: usize,
        value_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if n_slots == 0 {
            return Err(Error::InvalidArgument("memory needs at least one slot".into()));
        }
        if key_dim == 0 {
            return Err(Error::InvalidArgument("key dimension must be positive".into()));
        }
        let mut keys = Vec::with_capacity(n_slots);
        for _ in 0..n_slots {
            keys.push(random_unit(key_dim, rng));
        }
        Ok(Self {
            keys,
            values: vec![vec![0.0; value_dim]; n_slots],
            ages: vec![0; n_slots],
            variances: vec![vec![0.0; key_dim]; n_slots],
            key_dim,
            value_dim,
        })
    }

    /// Rebuild a memory from raw state, e.g. a parsed snapshot. Validates
    /// every structural invariant; keys are stored exactly as given.
    pub fn from_parts(
        keys: Vec<Vec<f64>>,
        values: Vec<Vec<f64>>,
        ages: Vec<u64>,
        variances: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = keys.len();
        if n == 0 {
            return Err(Error::InvalidArgument("memory needs at least one slot".into()));
        }
        if values.len() != n || ages.len() != n || variances.len() != n {
            return Err(Error::InvalidArgument(format!(
                "slot counts disagree: {} keys, {} values, {} ages, {} variances",
                n,
                values.len(),
                ages.len(),
                variances.len()
            )));
        }
        let key_dim = keys[0].len();
        if key_dim == 0 {
            return Err(Error::InvalidArgument("key dimension must be positive".into()));
        }
        let value_dim = values[0].len();
        for k in &keys {
            check_dim(k, key_dim)?;
            let norm = l2_norm(k);
            if (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidArgument(format!(
                    "key norm {norm} is not unit"
                )));
            }
        }
        for v in &values {
            check_dim(v, value_dim)?;
        }
        for s in &variances {
            check_dim(s, key_dim)?;
            if s.iter().any(|x| *x < 0.0) {
                return Err(Error::InvalidArgument("negative variance entry".into()));
            }
        }
        Ok(Self {
            keys,
            values,
            ages,
            variances,
            key_dim,
            value_dim,
        })
    }

    pub fn n_slots(&self) -> usize {
        self.keys.len()
    }

    pub fn key_dim(&self) -> usize {
        self.key_dim
    }

    pub fn value_dim(&self) -> usize {
        self.value_dim
    }

    pub fn keys(&self) -> &[Vec<f64>] {
        &self.keys
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn ages(&self) -> &[u64] {
        &self.ages
    }

    pub fn variances(&self) -> &[Vec<f64>] {
        &self.variances
    }

    pub fn mean_age(&self) -> f64 {
        self.ages.iter().map(|a| *a as f64).sum::<f64>() / self.ages.len() as f64
    }

    /// Direct slot placement for bulk loading. Normalizes the key, copies the
    /// value, zeroes the slot's variance, and runs the usual age reset plus
    /// global increment so the aging law holds across mixed load/write runs.
    pub fn place(&mut self, slot: usize, key: &[f64], value: &[f64]) -> Result<()> {
        if slot >= self.n_slots() {
            return Err(Error::InvalidArgument(format!(
                "slot {slot} out of range for {} slots",
                self.n_slots()
            )));
        }
        check_dim(key, self.key_dim)?;
        check_dim(value, self.value_dim)?;
        let key = normalized(key)
            .ok_or_else(|| Error::InvalidArgument("cannot place a zero-norm key".into()))?;
        self.keys[slot] = key;
        self.values[slot] = value.to_vec();
        self.variances[slot] = vec![0.0; self.key_dim];
        self.ages[slot] = 0;
        self.age_all();
        Ok(())
    }

    /// Content-addressed read: the slot with the highest key dot product
    /// (ties to the lower index), its value, and softmax attention over all
    /// slots.
    pub fn read(&self, query: &[f64]) -> Result<ReadResult> {
        check_dim(query, self.key_dim)?;
        let dots: Vec<f64> = self.keys.iter().map(|k| dot(k, query)).collect();
        let slot = argmax(&dots);
        Ok(ReadResult {
            slot,
            value: self.values[slot].clone(),
            attention: softmax(&dots),
        })
    }

    /// The `p` most similar slots (clamped to N), most similar first.
    pub fn nearest_neighbors(&self, query: &[f64], p: usize) -> Result<Neighborhood> {
        check_dim(query, self.key_dim)?;
        if p == 0 {
            return Err(Error::InvalidArgument(
                "neighborhood size must be at least 1".into(),
            ));
        }
        let p = p.min(self.n_slots());
        let dots: Vec<f64> = self.keys.iter().map(|k| dot(k, query)).collect();
        let mut order: Vec<usize> = (0..self.n_slots()).collect();
        order.sort_by(|&a, &b| {
            dots[b]
                .partial_cmp(&dots[a])
                .expect("finite similarities")
                .then(a.cmp(&b))
        });
        order.truncate(p);
        let similarities = order.iter().map(|&i| dots[i]).collect();
        Ok(Neighborhood {
            indices: order,
            similarities,
        })
    }

    /// Softmax mixing coefficients over a neighborhood's similarities.
    pub fn mixing_coefficients(&self, nb: &Neighborhood) -> Vec<f64> {
        softmax(&nb.similarities)
    }

    /// Gaussian mixture over a neighborhood: component means are the stored
    /// keys, component variances the stored per-slot variances, and weights
    /// the softmax of the similarities.
    pub fn mixture(&self, nb: &Neighborhood) -> Result<MixtureModel> {
        let means = nb.indices.iter().map(|&i| self.keys[i].clone()).collect();
        let variances = nb
            .indices
            .iter()
            .map(|&i| self.variances[i].clone())
            .collect();
        MixtureModel::new(means, variances, self.mixing_coefficients(nb))
    }

    /// Dropout write. With probability `epsilon` the oldest slot is replaced
    /// by the normalized input. Otherwise a surrogate key is sampled from the
    /// neighborhood mixture, merged with the input into the most similar
    /// slot, that slot's variance is set to the squared input-surrogate gap,
    /// and every neighbor's age is pushed to the pre-update maximum before
    /// the written slot resets to zero. All slots then age by one.
    pub fn write_dropout<R: Rng>(
        &mut self,
        h: &[f64],
        v: &[f64],
        epsilon: f64,
        neighborhood: usize,
        rng: &mut R,
    ) -> Result<WriteOutcome> {
        self.check_write_args(h, v, epsilon)?;
        let coin: f64 = rng.random();
        if coin < epsilon {
            let slot = argmax_u64(&self.ages);
            self.overwrite_slot(slot, h, v);
            return Ok(WriteOutcome::Overwrite { slot });
        }
        let nb = self.nearest_neighbors(h, neighborhood)?;
        let mix = self.mixture(&nb)?;
        let sampled = gmm_sample(&mix, rng);
        let slot = nb.closest();
        let merged = merge_key(&sampled, h)?;
        self.keys[slot] = merged;
        // Pre-assignment maximum, applied to the whole neighborhood at once.
        let max_age = *self.ages.iter().max().expect("nonempty memory");
        for &j in &nb.indices {
            self.ages[j] = max_age;
        }
        for t in 0..self.key_dim {
            self.variances[slot][t] = (h[t] - sampled[t]).powi(2);
        }
        self.ages[slot] = 0;
        self.values[slot] = v.to_vec();
        self.age_all();
        Ok(WriteOutcome::DropoutUpdate {
            slot,
            sampled,
            neighborhood: nb,
        })
    }

    /// Greedy baseline write. With probability `epsilon` a uniformly random
    /// slot is replaced by the normalized input; otherwise the input is
    /// merged into the most similar slot. Ages move exactly as in the
    /// dropout policy's bookkeeping: written slot to zero, then all by one.
    pub fn write_greedy<R: Rng>(
        &mut self,
        h: &[f64],
        v: &[f64],
        epsilon: f64,
        rng: &mut R,
    ) -> Result<WriteOutcome> {
        self.check_write_args(h, v, epsilon)?;
        let coin: f64 = rng.random();
        if coin < epsilon {
            let slot = rng.random_range(0..self.n_slots());
            self.overwrite_slot(slot, h, v);
            return Ok(WriteOutcome::Overwrite { slot });
        }
        let dots: Vec<f64> = self.keys.iter().map(|k| dot(k, h)).collect();
        let slot = argmax(&dots);
        let merged = merge_key(&self.keys[slot], h)?;
        self.keys[slot] = merged;
        self.values[slot] = v.to_vec();
        self.ages[slot] = 0;
        self.age_all();
        Ok(WriteOutcome::Merge { slot })
    }

    fn check_write_args(&self, h: &[f64], v: &[f64], epsilon: f64) -> Result<()> {
        check_dim(h, self.key_dim)?;
        check_dim(v, self.value_dim)?;
        if l2_norm(h) < NORM_EPS {
            return Err(Error::InvalidArgument(
                "cannot write a zero-norm latent vector".into(),
            ));
        }
        if !epsilon.is_finite() || !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidArgument(format!(
                "epsilon {epsilon} outside [0, 1]"
            )));
        }
        Ok(())
    }

    fn overwrite_slot(&mut self, slot: usize, h: &[f64], v: &[f64]) {
        self.keys[slot] = normalized(h).expect("caller checked norm");
        self.values[slot] = v.to_vec();
        self.variances[slot] = vec![0.0; self.key_dim];
        self.ages[slot] = 0;
        self.age_all();
    }

    fn age_all(&mut self) {
        for a in &mut self.ages {
            *a += 1;
        }
    }
}

fn random_unit<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(u) = normalized(&v) {
            return u;
        }
    }
}

/// First index of the maximum (ties to the lower index). Input is nonempty
/// and finite.
fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

fn argmax_u64(xs: &[u64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}
