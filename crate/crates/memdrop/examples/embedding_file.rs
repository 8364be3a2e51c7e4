//! Load word vectors from the plain text format (token then floats, space
//! separated, one word per line) and embed multi-word phrases.

use std::fs;

use memdrop::EmbeddingProvider;

fn main() -> memdrop::Result<()> {
    let path = std::env::temp_dir().join("memdrop_example_vectors.txt");
    fs::write(
        &path,
        "dentist 0.5 0.1 -0.3 0.2\n\
         appointment -0.1 0.4 0.0 0.6\n\
         friday 0.2 0.2 0.2 0.2\n",
    )?;

    let emb = EmbeddingProvider::from_file(&path, 1)?;
    println!("loaded vocab with dim {}", emb.dim());
    println!("dentist -> {:?}", emb.lookup("dentist").unwrap());

    // Multi-word text averages word vectors and renormalizes.
    let phrase = emb.embed("dentist appointment")?;
    println!(
        "embed(\"dentist appointment\") norm {:.6}, head [{:.4}, {:.4}]",
        phrase.iter().map(|x| x * x).sum::<f64>().sqrt(),
        phrase[0],
        phrase[1]
    );

    // Out-of-vocabulary words fall back to seeded hash vectors, so the
    // pipeline never stalls on unseen tokens (a warning is logged).
    let oov = emb.embed("saturday")?;
    println!("oov token still embeds, head [{:.4}, {:.4}]", oov[0], oov[1]);

    let single = emb.embed("friday")?;
    println!("single word comes back verbatim: {single:?}");

    fs::remove_file(&path).ok();
    Ok(())
}
