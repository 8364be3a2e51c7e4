//! Thin CLI over the library: experiments, sweeps, KB expansion, and
//! snapshot inspection. Data goes to stdout or `--out` files; diagnostics go
//! to stderr. Exit codes: 0 success, 1 I/O failure, 2 usage or config
//! error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use memdrop::sim::{write_sweep_csv, write_trajectory_csv};
use memdrop::{
    aggregated_correlation, expand_row, kb, pearson_matrix, read_kb_csv, run_experiment,
    save_snapshot, sweep, Error, ExperimentConfig, KeyValuePair, load_snapshot, MemoryModule,
    Result, SweepAxis,
};

/// Environment variable consulted for a default seed when --seed is absent.
const SEED_ENV: &str = "MEMDROP_SEED";

#[derive(Parser)]
#[command(name = "memdrop", version, about = "Key-value memory experiments with dropout-style forgetting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file and write its trajectory CSV.
    Run {
        /// Experiment config file (flat key = value format).
        config: PathBuf,
        /// Trajectory CSV destination.
        #[arg(long)]
        out: PathBuf,
        /// Seed override (beats the config file and MEMDROP_SEED).
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the final memory state as a snapshot.
        #[arg(long)]
        snapshot_out: Option<PathBuf>,
    },
    /// Sweep memory or neighborhood size, both policies per value.
    Sweep {
        config: PathBuf,
        /// Axis to sweep: 'memory' or 'neighborhood'.
        #[arg(long)]
        axis: String,
        /// Comma-separated positive integers, e.g. 16,32,64.
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Expand a KB CSV into triplets plus a key-value vector dump.
    #[command(name = "expand-kb")]
    ExpandKb {
        /// KB file: CSV with a header row of column names.
        csv: PathBuf,
        /// Embedding source: 'hashed' or 'file:PATH'.
        #[arg(long)]
        emb: String,
        /// Embedding dimension; required for 'hashed', checked for 'file:'.
        #[arg(long)]
        dim: Option<usize>,
        /// Triplet CSV destination; vectors go to the same path with '.kv'
        /// appended.
        #[arg(long)]
        out: PathBuf,
        /// Hash seed for hashed embeddings and vocabulary fallbacks.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print a snapshot's aggregated key correlation.
    Correlate {
        snapshot: PathBuf,
        /// Also dump the full correlation matrix as CSV rows.
        #[arg(long)]
        full: bool,
    },
    /// Summarize a snapshot's slots (age, key norm, variance spread).
    Snapshot { snapshot: PathBuf },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("memdrop: {e}");
            match e {
                Error::Io(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            out,
            seed,
            snapshot_out,
        } => cmd_run(&config, &out, seed, snapshot_out.as_deref()),
        Command::Sweep {
            config,
            axis,
            values,
            out,
            seed,
        } => cmd_sweep(&config, &axis, &values, &out, seed),
        Command::ExpandKb {
            csv,
            emb,
            dim,
            out,
            seed,
        } => cmd_expand_kb(&csv, &emb, dim, &out, seed),
        Command::Correlate { snapshot, full } => cmd_correlate(&snapshot, full),
        Command::Snapshot { snapshot } => cmd_snapshot(&snapshot),
    }
}

/// --seed beats MEMDROP_SEED beats the fallback.
fn resolve_seed(flag: Option<u64>, fallback: u64) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV} is not a valid seed: '{text}'"))),
        Err(_) => Ok(fallback),
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    cfg.stream.seed = resolve_seed(seed, cfg.stream.seed)?;
    Ok(cfg)
}

fn cmd_run(
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    snapshot_out: Option<&Path>,
) -> Result<()> {
    let cfg = load_config(config, seed)?;
    let run = run_experiment(&cfg)?;
    let mut w = BufWriter::new(File::create(out)?);
    write_trajectory_csv(&mut w, &cfg, &run.records)?;
    w.flush()?;
    if let Some(path) = snapshot_out {
        save_snapshot(&run.memory, path)?;
    }
    log::info!(
        "run finished: {} records, final correlation {:.6}",
        run.records.len(),
        run.records.last().expect("nonempty").agg_correlation
    );
    Ok(())
}

fn cmd_sweep(config: &Path, axis: &str, values: &str, out: &Path, seed: Option<u64>) -> Result<()> {
    let cfg = load_config(config, seed)?;
    let axis: SweepAxis = axis.parse()?;
    let values: Vec<usize> = values
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .ok()
                .filter(|v| *v > 0)
                .ok_or_else(|| {
                    Error::Config(format!("sweep values must be positive integers, got '{part}'"))
                })
        })
        .collect::<Result<_>>()?;
    let runs = sweep(&cfg, axis, &values)?;
    let mut w = BufWriter::new(File::create(out)?);
    write_sweep_csv(&mut w, &runs)?;
    w.flush()?;
    Ok(())
}

fn cmd_expand_kb(
    kb_path: &Path,
    emb: &str,
    dim: Option<usize>,
    out: &Path,
    seed: Option<u64>,
) -> Result<()> {
    let seed = resolve_seed(seed, 0)?;
    let rows = read_kb_csv(kb_path)?;
    let provider = if emb == "hashed" {
        let dim = dim.ok_or_else(|| {
            Error::Config("--dim is required with --emb hashed".into())
        })?;
        kb::EmbeddingProvider::hashed(dim, seed)?
    } else if let Some(path) = emb.strip_prefix("file:") {
        let provider = kb::EmbeddingProvider::from_file(Path::new(path), seed)?;
        if let Some(d) = dim {
            if d != provider.dim() {
                return Err(Error::Config(format!(
                    "--dim {d} disagrees with embedding file dimension {}",
                    provider.dim()
                )));
            }
        }
        provider
    } else {
        return Err(Error::Config(format!(
            "--emb must be 'hashed' or 'file:PATH', got '{emb}'"
        )));
    };

    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(out)?;
    let mut pairs: Vec<KeyValuePair> = Vec::new();
    for row in &rows {
        for triplet in expand_row(row) {
            writer.write_record([&triplet.subject, &triplet.relation, &triplet.object])?;
            pairs.push(kb::triplet_to_kv(&triplet, &provider)?);
        }
    }
    writer.flush()?;

    let kv_path = PathBuf::from(format!("{}.kv", out.display()));
    let mut w = BufWriter::new(File::create(&kv_path)?);
    writeln!(w, "# key-value dump, dim = {}", provider.dim())?;
    for pair in &pairs {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            pair.provenance.subject,
            pair.provenance.relation,
            pair.provenance.object,
            join(&pair.key),
            join(&pair.value),
        )?;
    }
    w.flush()?;
    log::info!(
        "expanded {} rows into {} triplets ({} and {})",
        rows.len(),
        pairs.len(),
        out.display(),
        kv_path.display()
    );
    Ok(())
}

fn cmd_correlate(snapshot: &Path, full: bool) -> Result<()> {
    let mem = load_snapshot(snapshot)?;
    println!("{:.6}", aggregated_correlation(mem.keys())?);
    if full {
        let matrix = pearson_matrix(mem.keys())?;
        let mut stdout = std::io::stdout().lock();
        for row in &matrix {
            let line: Vec<String> = row.iter().map(|r| format!("{r:.6}")).collect();
            writeln!(stdout, "{}", line.join(","))?;
        }
    }
    Ok(())
}

fn cmd_snapshot(snapshot: &Path) -> Result<()> {
    let mem: MemoryModule = load_snapshot(snapshot)?;
    let mut stdout = std::io::stdout().lock();
    writeln!(
        stdout,
        "slots={} key_dim={} value_dim={}",
        mem.n_slots(),
        mem.key_dim(),
        mem.value_dim()
    )?;
    writeln!(stdout, "slot,age,key_norm,variance_mean,variance_max")?;
    for slot in 0..mem.n_slots() {
        let key = &mem.keys()[slot];
        let var = &mem.variances()[slot];
        let norm = key.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mean = var.iter().sum::<f64>() / var.len() as f64;
        let max = var.iter().cloned().fold(0.0, f64::max);
        writeln!(
            stdout,
            "{},{},{:.6},{:.6},{:.6}",
            slot,
            mem.ages()[slot],
            norm,
            mean,
            max
        )?;
    }
    Ok(())
}
