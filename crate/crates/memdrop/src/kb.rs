//! Tabular knowledge-base rows expanded into (subject, relation, object)
//! triplets and embedded as key-value pairs for the memory.
//!
//! A row of c columns yields c*(c-1) triplets: every ordered pair of
//! distinct cells, with the target cell's column name as the relation. The
//! key of a pair is the normalized sum of the subject and relation
//! embeddings; the value is the object embedding.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::memory::{normalized, NORM_EPS};

/// One table row: parallel column names and cell tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KBRow {
    columns: Vec<String>,
    cells: Vec<String>,
}

impl KBRow {
    /// Columns and cells must have equal length of at least two, and column
    /// names must be distinct.
    pub fn new(columns: Vec<String>, cells: Vec<String>) -> Result<Self> {
        if columns.len() != cells.len() {
            return Err(Error::InvalidArgument(format!(
                "{} columns but {} cells",
                columns.len(),
                cells.len()
            )));
        }
        if columns.len() < 2 {
            return Err(Error::InvalidArgument(
                "a KB row needs at least two columns".into(),
            ));
        }
        for (i, a) in columns.iter().enumerate() {
            if columns[..i].contains(a) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate column name '{a}'"
                )));
            }
        }
        Ok(Self { columns, cells })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn cells(&self) -> &[String] {
        &self.cells
    }
}

/// A single fact. `subject` and `object` come from distinct cells of the
/// originating row; `relation` is the object cell's column name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triplet {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl Triplet {
    pub fn new(
        subject: impl Into<String>,
        relation: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        Self {
            subject: subject.into(),
            relation: relation.into(),
            object: object.into(),
        }
    }
}

/// All ordered (subject, object) cell pairs of a row, row-major: subject
/// position outer, object position inner. Exactly c*(c-1) triplets.
pub fn expand_row(row: &KBRow) -> Vec<Triplet> {
    let c = row.columns.len();
    let mut out = Vec::with_capacity(c * (c - 1));
    for a in 0..c {
        for b in 0..c {
            if a != b {
                out.push(Triplet::new(
                    row.cells[a].clone(),
                    row.columns[b].clone(),
                    row.cells[b].clone(),
                ));
            }
        }
    }
    out
}

/// Read a KB CSV: header row of column names, one row per record.
pub fn read_kb_csv(path: &Path) -> Result<Vec<KBRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let columns: Vec<String> = reader
        .headers()?
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let cells: Vec<String> = record.iter().map(|s| s.to_string()).collect();
        rows.push(KBRow::new(columns.clone(), cells)?);
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no data rows in KB file".into()));
    }
    Ok(rows)
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

/// FNV-1a, pinned so hashed embeddings are portable across platforms.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Deterministic unit vector for a token: the token's FNV-1a hash mixed with
/// `seed` seeds a ChaCha stream of `dim` standard normals, normalized.
pub fn hashed_embedding(token: &str, dim: usize, seed: u64) -> Vec<f64> {
    assert!(dim > 0, "embedding dimension must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a64(token.as_bytes()) ^ seed);
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(u) = normalized(&v) {
            return u;
        }
    }
}

#[derive(Debug, Clone)]
enum Source {
    Hashed { seed: u64 },
    File {
        vocab: HashMap<String, Vec<f64>>,
        fallback_seed: u64,
    },
}

/// Token-to-vector map: either pure hashed vectors, or a loaded vocabulary
/// with hashed fallback for unknown tokens. Pure: the same token always maps
/// to the same vector.
#[derive(Debug, Clone)]
pub struct EmbeddingProvider {
    dim: usize,
    source: Source,
}

impl EmbeddingProvider {
    pub fn hashed(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "embedding dimension must be positive".into(),
            ));
        }
        Ok(Self {
            dim,
            source: Source::Hashed { seed },
        })
    }

    /// Wrap an in-memory vocabulary. All vectors must share one positive
    /// dimension and be finite. Unknown tokens fall back to hashed vectors
    /// drawn with `fallback_seed`.
    pub fn from_vocab(vocab: HashMap<String, Vec<f64>>, fallback_seed: u64) -> Result<Self> {
        let dim = match vocab.values().next() {
            Some(v) => v.len(),
            None => {
                return Err(Error::InvalidArgument("empty vocabulary".into()));
            }
        };
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "embedding dimension must be positive".into(),
            ));
        }
        for (token, v) in &vocab {
            if v.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "token '{token}' has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "token '{token}' has a non-finite entry"
                )));
            }
        }
        Ok(Self {
            dim,
            source: Source::File {
                vocab,
                fallback_seed,
            },
        })
    }

    /// Load a whitespace-separated embedding text file: one token followed
    /// by its vector entries per line, no header. Duplicate tokens keep the
    /// last occurrence with a warning.
    pub fn from_file(path: &Path, fallback_seed: u64) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut vocab = HashMap::new();
        let mut dim = 0usize;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            if line.trim().is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "blank line in embedding file".into(),
                });
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().expect("non-blank line has a first field");
            let vector: Vec<f64> = parts
                .map(|s| {
                    s.parse::<f64>().map_err(|_| Error::Parse {
                        line: line_no,
                        msg: format!("bad float '{s}'"),
                    })
                })
                .collect::<Result<_>>()?;
            if vector.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "non-finite vector entry".into(),
                });
            }
            if dim == 0 {
                if vector.is_empty() {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "no vector entries after the token".into(),
                    });
                }
                dim = vector.len();
            } else if vector.len() != dim {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected {dim} entries, got {}", vector.len()),
                });
            }
            if vocab.insert(token.to_string(), vector).is_some() {
                warn!("duplicate token '{token}' at line {line_no}, keeping the later entry");
            }
        }
        if vocab.is_empty() {
            return Err(Error::Parse {
                line: 0,
                msg: "empty embedding file".into(),
            });
        }
        Self::from_vocab(vocab, fallback_seed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Raw vocabulary hit, if this provider has a vocabulary and knows the
    /// token. Hashed providers always return None here; use `word_vector`.
    pub fn lookup(&self, token: &str) -> Option<&[f64]> {
        match &self.source {
            Source::Hashed { .. } => None,
            Source::File { vocab, .. } => vocab.get(token).map(|v| v.as_slice()),
        }
    }

    /// Vector for a single token, falling back to a hashed vector (with a
    /// warning) when a vocabulary misses it.
    pub fn word_vector(&self, token: &str) -> Vec<f64> {
        match &self.source {
            Source::Hashed { seed } => hashed_embedding(token, self.dim, *seed),
            Source::File {
                vocab,
                fallback_seed,
            } => match vocab.get(token) {
                Some(v) => v.clone(),
                None => {
                    warn!("token '{token}' not in embedding vocabulary, using hashed fallback");
                    hashed_embedding(token, self.dim, *fallback_seed)
                }
            },
        }
    }

    /// Phrase embedding: a single word maps to its vector as-is; multi-word
    /// text maps to the normalized sum of the per-word vectors.
    pub fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let words: Vec<&str> = text.split_whitespace().collect();
        match words.len() {
            0 => Err(Error::InvalidArgument(format!(
                "cannot embed empty text '{text}'"
            ))),
            1 => Ok(self.word_vector(words[0])),
            _ => {
                let mut acc = vec![0.0; self.dim];
                for w in &words {
                    for (a, x) in acc.iter_mut().zip(self.word_vector(w)) {
                        *a += x;
                    }
                }
                normalized(&acc).ok_or_else(|| {
                    Error::InvalidArgument(format!("word vectors of '{text}' cancel to zero"))
                })
            }
        }
    }
}

/// An embedded fact ready for the memory, with the triplet it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyValuePair {
    pub key: Vec<f64>,
    pub value: Vec<f64>,
    pub provenance: Triplet,
}

/// Embed one triplet: key = normalized sum of subject and relation
/// embeddings, value = object embedding. Subject and object are lowercased
/// before embedding; the relation (a column name) is used verbatim.
pub fn triplet_to_kv(t: &Triplet, emb: &EmbeddingProvider) -> Result<KeyValuePair> {
    let subject = emb.embed(&t.subject.to_lowercase())?;
    let relation = emb.embed(&t.relation)?;
    let object = emb.embed(&t.object.to_lowercase())?;
    let sum: Vec<f64> = subject.iter().zip(&relation).map(|(a, b)| a + b).collect();
    let key = normalized(&sum).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "zero-norm key for triplet ({}, {}, {})",
            t.subject, t.relation, t.object
        ))
    })?;
    debug_assert!(key.iter().map(|x| x * x).sum::<f64>().sqrt() > NORM_EPS);
    Ok(KeyValuePair {
        key,
        value: object,
        provenance: t.clone(),
    })
}

/// Expand rows and embed every resulting triplet, in row order.
pub fn rows_to_pairs(rows: &[KBRow], emb: &EmbeddingProvider) -> Result<Vec<KeyValuePair>> {
    let mut pairs = Vec::new();
    for row in rows {
        for t in expand_row(row) {
            pairs.push(triplet_to_kv(&t, emb)?);
        }
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::l2_norm;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::io::Write;

    fn dentist_row() -> KBRow {
        KBRow::new(
            vec!["event".into(), "date".into(), "time".into(), "party".into()],
            vec!["dentist".into(), "the 19th".into(), "5pm".into(), "Mike".into()],
        )
        .unwrap()
    }

    #[test]
    fn fnv_test_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn dentist_row_expands_to_twelve() {
        let triplets = expand_row(&dentist_row());
        assert_eq!(triplets.len(), 12);
        let expected = [
            ("dentist", "date", "the 19th"),
            ("dentist", "time", "5pm"),
            ("dentist", "party", "Mike"),
            ("the 19th", "event", "dentist"),
            ("the 19th", "time", "5pm"),
            ("the 19th", "party", "Mike"),
            ("5pm", "event", "dentist"),
            ("5pm", "date", "the 19th"),
            ("5pm", "party", "Mike"),
            ("Mike", "event", "dentist"),
            ("Mike", "date", "the 19th"),
            ("Mike", "time", "5pm"),
        ];
        for (t, (s, r, o)) in triplets.iter().zip(expected) {
            assert_eq!(t, &Triplet::new(s, r, o));
        }
    }

    #[test]
    fn two_column_row_expands_both_directions() {
        let row = KBRow::new(vec!["a".into(), "b".into()], vec!["x".into(), "y".into()]).unwrap();
        assert_eq!(
            expand_row(&row),
            vec![Triplet::new("x", "b", "y"), Triplet::new("y", "a", "x")]
        );
    }

    #[test]
    fn row_validation_rejects_bad_shapes() {
        assert!(KBRow::new(vec!["a".into()], vec!["x".into()]).is_err());
        assert!(KBRow::new(vec!["a".into(), "b".into()], vec!["x".into()]).is_err());
        assert!(KBRow::new(
            vec!["a".into(), "a".into()],
            vec!["x".into(), "y".into()]
        )
        .is_err());
    }

    #[test]
    fn hashed_embedding_is_deterministic_and_unit() {
        let a = hashed_embedding("coffee", 64, 7);
        let b = hashed_embedding("coffee", 64, 7);
        assert_eq!(a, b);
        assert_abs_diff_eq!(l2_norm(&a), 1.0, epsilon = 1e-12);
        assert_ne!(a, hashed_embedding("coffee", 64, 8));
        assert_ne!(a, hashed_embedding("tea", 64, 7));
    }

    #[test]
    fn key_is_normalized_subject_relation_sum() {
        let emb = EmbeddingProvider::hashed(16, 3).unwrap();
        let t = Triplet::new("dentist", "time", "5pm");
        let kv = triplet_to_kv(&t, &emb).unwrap();
        assert_abs_diff_eq!(l2_norm(&kv.key), 1.0, epsilon = 1e-12);
        let s = emb.embed("dentist").unwrap();
        let r = emb.embed("time").unwrap();
        let sum: Vec<f64> = s.iter().zip(&r).map(|(a, b)| a + b).collect();
        assert_eq!(kv.key, normalized(&sum).unwrap());
        assert_eq!(kv.value, emb.embed("5pm").unwrap());
        assert_eq!(kv.provenance, t);
    }

    #[test]
    fn subject_and_object_are_case_folded_but_relation_is_not() {
        let emb = EmbeddingProvider::hashed(8, 0).unwrap();
        let upper = triplet_to_kv(&Triplet::new("Mike", "time", "5PM"), &emb).unwrap();
        let lower = triplet_to_kv(&Triplet::new("mike", "time", "5pm"), &emb).unwrap();
        assert_eq!(upper.key, lower.key);
        assert_eq!(upper.value, lower.value);
        let relation_upper = triplet_to_kv(&Triplet::new("mike", "Time", "5pm"), &emb).unwrap();
        assert_ne!(relation_upper.key, lower.key);
    }

    #[test]
    fn multiword_cells_use_normalized_word_sums() {
        let emb = EmbeddingProvider::hashed(8, 1).unwrap();
        let phrase = emb.embed("the 19th").unwrap();
        let the = emb.word_vector("the");
        let nineteenth = emb.word_vector("19th");
        let sum: Vec<f64> = the.iter().zip(&nineteenth).map(|(a, b)| a + b).collect();
        assert_eq!(phrase, normalized(&sum).unwrap());
        assert!(emb.embed("   ").is_err());
    }

    #[test]
    fn embedding_file_round_trip() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a 1 0").unwrap();
        writeln!(f, "b 0 1").unwrap();
        f.flush().unwrap();
        let emb = EmbeddingProvider::from_file(f.path(), 0).unwrap();
        assert_eq!(emb.dim(), 2);
        assert_eq!(emb.lookup("a"), Some([1.0, 0.0].as_slice()));
        assert_eq!(emb.embed("a b").unwrap(), normalized(&[1.0, 1.0]).unwrap());
        // Unknown tokens fall back to the hashed vector for the same seed.
        assert_eq!(emb.word_vector("zzz"), hashed_embedding("zzz", 2, 0));
    }

    #[test]
    fn embedding_file_errors_carry_line_numbers() {
        let check = |content: &str| {
            let mut f = tempfile::NamedTempFile::new().unwrap();
            write!(f, "{content}").unwrap();
            f.flush().unwrap();
            EmbeddingProvider::from_file(f.path(), 0)
        };
        match check("a 1 0\nb 0 oops\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        match check("a 1 0\nb 1 2 3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(check("").is_err());
        assert!(check("token\n").is_err());
        assert!(check("a 1 0\n\nb 0 1\n").is_err());
    }

    #[test]
    fn duplicate_vocab_token_keeps_last() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a 1 0").unwrap();
        writeln!(f, "a 0 1").unwrap();
        f.flush().unwrap();
        let emb = EmbeddingProvider::from_file(f.path(), 0).unwrap();
        assert_eq!(emb.lookup("a"), Some([0.0, 1.0].as_slice()));
    }

    #[test]
    fn kb_csv_reader_builds_rows() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "event,date,time,party").unwrap();
        writeln!(f, "dentist,the 19th,5pm,Mike").unwrap();
        f.flush().unwrap();
        let rows = read_kb_csv(f.path()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0], dentist_row());
    }

    #[test]
    fn kb_csv_rejects_headers_only() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "event,date").unwrap();
        f.flush().unwrap();
        assert!(read_kb_csv(f.path()).is_err());
    }

    proptest! {
        #[test]
        fn expansion_count_is_c_times_c_minus_one(c in 2usize..7) {
            let columns: Vec<String> = (0..c).map(|i| format!("col{i}")).collect();
            let cells: Vec<String> = (0..c).map(|i| format!("cell{i}")).collect();
            let row = KBRow::new(columns, cells).unwrap();
            let triplets = expand_row(&row);
            prop_assert_eq!(triplets.len(), c * (c - 1));
            // every (subject, object) pair comes from distinct cell positions
            for t in &triplets {
                prop_assert_ne!(&t.subject, &t.object);
            }
        }

        #[test]
        fn hashed_embeddings_are_unit_for_any_token(token in ".*", dim in 1usize..16) {
            let v = hashed_embedding(&token, dim, 42);
            prop_assert_eq!(v.len(), dim);
            prop_assert!((l2_norm(&v) - 1.0).abs() < 1e-6);
        }
    }
}
