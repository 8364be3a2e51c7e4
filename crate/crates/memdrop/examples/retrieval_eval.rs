//! Capacity pressure on a duplicate-heavy pair set: a handful of facts
//! seen exactly once compete with a flood of near-duplicate copies of two
//! frequent facts. Random eviction loses the singletons; age-based
//! eviction keeps recycling the redundant flood slots instead.

use memdrop::{kb_retrieval_eval, rare_flood_pairs, EvalConfig, Policy};

fn main() -> memdrop::Result<()> {
    // 12 singletons + 2 facts x 58 jittered copies = 128 pairs.
    let seed = 1000;
    let pairs = rare_flood_pairs(12, 2, 58, 64, 0.08, seed)?;
    println!("pair set: {} pairs, {} distinct facts", pairs.len(), 14);

    println!(
        "{:>6} {:>10} {:>16}",
        "slots", "greedy f1", "memory_dropout f1"
    );
    for n in [16, 32, 64, 128] {
        let mut scores = Vec::new();
        for policy in [Policy::Greedy, Policy::MemoryDropout] {
            let report = kb_retrieval_eval(
                &pairs,
                &EvalConfig {
                    policy,
                    memory_slots: n,
                    neighborhood: 4,
                    epsilon: 0.1,
                    query_noise: 0.05,
                    n_queries: 200,
                    seed: 2000,
                },
            )?;
            scores.push(report.f1);
        }
        println!("{:>6} {:>10.3} {:>16.3}", n, scores[0], scores[1]);
    }
    println!();
    println!("single seed shown; averaging over seeds tightens the ordering");
    Ok(())
}
