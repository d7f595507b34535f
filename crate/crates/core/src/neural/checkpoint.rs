//! Checkpoint files.
//!
//! A short ASCII header followed by raw parameters:
//!
//! ```text
//! icdqn-checkpoint 1
//! dims 20 200 100 40 625
//! seed 42
//! steps 60000
//! params 53425
//! end
//! <params × 8 bytes, IEEE-754 f64 little-endian>
//! ```
//!
//! The payload stores bit patterns, so a load returns exactly what was saved.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::neural::QNetwork;

const MAGIC: &str = "icdqn-checkpoint 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: QNetwork,
    /// Seed of the run that produced the parameters.
    pub seed: u64,
    /// Gradient steps taken.
    pub steps: u64,
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let dims: Vec<String> = self.network.dims().iter().map(usize::to_string).collect();
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "dims {}", dims.join(" "))?;
        writeln!(out, "seed {}", self.seed)?;
        writeln!(out, "steps {}", self.steps)?;
        writeln!(out, "params {}", self.network.params().len())?;
        writeln!(out, "end")?;
        for p in self.network.params() {
            out.write_all(&p.to_le_bytes())?;
        }
        out.flush()
    }

    pub fn read_from<R: BufRead>(mut input: R) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let mut line = String::new();
        let mut next_line = |input: &mut R| -> Result<String> {
            line.clear();
            input
                .read_line(&mut line)
                .map_err(|e| Error::Checkpoint(e.to_string()))?;
            Ok(line.trim_end().to_string())
        };
        if next_line(&mut input)? != MAGIC {
            return Err(bad("missing header"));
        }
        let (mut dims, mut seed, mut steps, mut count) = (None, None, None, None);
        loop {
            let l = next_line(&mut input)?;
            if l == "end" {
                break;
            }
            if l.is_empty() {
                return Err(bad("unterminated header"));
            }
            let (key, value) = l.split_once(' ').ok_or_else(|| bad("header line"))?;
            let parse = |v: &str| v.parse::<u64>().map_err(|_| bad("header number"));
            match key {
                "dims" => {
                    dims = Some(
                        value
                            .split_whitespace()
                            .map(|d| d.parse::<usize>().map_err(|_| bad("dims")))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "seed" => seed = Some(parse(value)?),
                "steps" => steps = Some(parse(value)?),
                "params" => count = Some(parse(value)? as usize),
                _ => return Err(bad("unknown header key")),
            }
        }
        let dims = dims.ok_or_else(|| bad("no dims"))?;
        let count = count.ok_or_else(|| bad("no parameter count"))?;
        let mut raw = vec![0u8; count * 8];
        input
            .read_exact(&mut raw)
            .map_err(|_| bad("truncated parameters"))?;
        if input
            .read(&mut [0u8; 1])
            .map_err(|e| Error::Checkpoint(e.to_string()))?
            != 0
        {
            return Err(bad("trailing bytes"));
        }
        let params = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Checkpoint {
            network: QNetwork::from_parts(&dims, params)?,
            seed: seed.unwrap_or(0),
            steps: steps.unwrap_or(0),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(f))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::read_from(BufReader::new(f))
    }
}
