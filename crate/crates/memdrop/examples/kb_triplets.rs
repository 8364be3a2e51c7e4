//! Expand a table row into ordered (subject, relation, object) triplets and
//! encode them as key-value pairs for the memory.

use memdrop::{expand_row, triplet_to_kv, EmbeddingProvider, KBRow};

fn main() -> memdrop::Result<()> {
    let row = KBRow::new(
        vec![
            "event".into(),
            "date".into(),
            "time".into(),
            "party".into(),
        ],
        vec![
            "dentist".into(),
            "the 19th".into(),
            "5pm".into(),
            "Mike".into(),
        ],
    )?;

    // Every ordered pair of cells becomes a triplet, the second cell's
    // column naming the relation: c columns -> c*(c-1) triplets.
    let triplets = expand_row(&row);
    println!("{} columns -> {} triplets:", row.columns().len(), triplets.len());
    for t in &triplets {
        println!("  ({}, {}, {})", t.subject, t.relation, t.object);
    }

    let emb = EmbeddingProvider::hashed(16, 42)?;
    let kv = triplet_to_kv(&triplets[0], &emb)?;
    println!(
        "first triplet encoded: key dim {}, |key| = {:.6}",
        kv.key.len(),
        kv.key.iter().map(|x| x * x).sum::<f64>().sqrt()
    );
    println!(
        "key head: [{:.4}, {:.4}, {:.4}, ...]",
        kv.key[0], kv.key[1], kv.key[2]
    );
    Ok(())
}
