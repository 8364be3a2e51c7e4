//! Lossless text snapshots of a memory.
//!
//! Layout, line by line:
//!
//! ```text
//! MEMDROP-SNAPSHOT 1
//! dims <n_slots> <key_dim> <value_dim>
//! keys       (n_slots lines of key_dim floats)
//! values     (n_slots lines of value_dim floats)
//! ages       (n_slots lines of one integer)
//! variances  (n_slots lines of key_dim floats)
//! end
//! ```
//!
//! Floats are written with Rust's shortest-round-trip formatting, so a
//! write/read/write cycle is byte-identical and values survive exactly.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::memory::MemoryModule;

const MAGIC: &str = "MEMDROP-SNAPSHOT 1";

pub fn write_snapshot<W: Write>(mem: &MemoryModule, w: &mut W) -> io::Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(
        w,
        "dims {} {} {}",
        mem.n_slots(),
        mem.key_dim(),
        mem.value_dim()
    )?;
    let write_rows = |w: &mut W, rows: &[Vec<f64>]| -> io::Result<()> {
        for row in rows {
            let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    };
    writeln!(w, "keys")?;
    write_rows(w, mem.keys())?;
    writeln!(w, "values")?;
    write_rows(w, mem.values())?;
    writeln!(w, "ages")?;
    for age in mem.ages() {
        writeln!(w, "{age}")?;
    }
    writeln!(w, "variances")?;
    write_rows(w, mem.variances())?;
    writeln!(w, "end")?;
    Ok(())
}

pub fn read_snapshot<R: BufRead>(r: R) -> Result<MemoryModule> {
    let mut lines = r.lines().enumerate();
    let mut next = move || -> Result<(usize, String)> {
        match lines.next() {
            Some((idx, line)) => Ok((idx + 1, line?)),
            None => Err(Error::Snapshot("unexpected end of file".into())),
        }
    };
    let (_, magic) = next()?;
    if magic != MAGIC {
        return Err(Error::Snapshot(format!(
            "bad header '{magic}', expected '{MAGIC}'"
        )));
    }
    let (line_no, dims) = next()?;
    let parts: Vec<&str> = dims.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "dims" {
        return Err(Error::Snapshot(format!(
            "line {line_no}: expected 'dims <n> <key_dim> <value_dim>'"
        )));
    }
    let parse_count = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Snapshot(format!("line {line_no}: bad count '{s}'")))
    };
    let n = parse_count(parts[1])?;
    let key_dim = parse_count(parts[2])?;
    let value_dim = parse_count(parts[3])?;

    let expect_section = |got: (usize, String), want: &str| -> Result<()> {
        if got.1 != want {
            return Err(Error::Snapshot(format!(
                "line {}: expected section '{want}', got '{}'",
                got.0, got.1
            )));
        }
        Ok(())
    };
    let parse_row = |line_no: usize, line: &str, width: usize| -> Result<Vec<f64>> {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Snapshot(format!("line {line_no}: bad float '{s}'")))
            })
            .collect::<Result<_>>()?;
        if row.len() != width {
            return Err(Error::Snapshot(format!(
                "line {line_no}: expected {width} entries, got {}",
                row.len()
            )));
        }
        Ok(row)
    };

    expect_section(next()?, "keys")?;
    let mut keys = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, line) = next()?;
        keys.push(parse_row(ln, &line, key_dim)?);
    }
    expect_section(next()?, "values")?;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, line) = next()?;
        values.push(parse_row(ln, &line, value_dim)?);
    }
    expect_section(next()?, "ages")?;
    let mut ages = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, line) = next()?;
        let age = line.trim().parse::<u64>().map_err(|_| {
            Error::Snapshot(format!("line {ln}: bad age '{}'", line.trim()))
        })?;
        ages.push(age);
    }
    expect_section(next()?, "variances")?;
    let mut variances = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, line) = next()?;
        variances.push(parse_row(ln, &line, key_dim)?);
    }
    expect_section(next()?, "end")?;

    MemoryModule::from_parts(keys, values, ages, variances)
        .map_err(|e| Error::Snapshot(e.to_string()))
}

pub fn save_snapshot(mem: &MemoryModule, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_snapshot(mem, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<MemoryModule> {
    read_snapshot(BufReader::new(File::open(path)?))
}
