//! Plain-text checkpoints: a versioned header, then one decimal value per
//! line. Values are written in shortest round-trip form, so loading
//! reproduces every parameter bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::circuit::{ParamCircuit, ParamVector};
use crate::discriminator::MlpDiscriminator;
use crate::error::{Error, Result};

pub const MAGIC: &str = "qgan-checkpoint";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub rows: usize,
    pub cols: usize,
    pub depth: usize,
    pub seed_circuit: u64,
    pub seed_disc: u64,
    pub seed_sampling: u64,
    pub iteration: usize,
    pub params: ParamVector,
    pub discriminator: MlpDiscriminator,
}

impl Checkpoint {
    pub fn circuit(&self) -> Result<ParamCircuit> {
        ParamCircuit::new(self.rows, self.cols, self.depth)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC} {FORMAT_VERSION}");
        let _ = writeln!(s, "rows {}", self.rows);
        let _ = writeln!(s, "cols {}", self.cols);
        let _ = writeln!(s, "depth {}", self.depth);
        let _ = writeln!(s, "seed_circuit {}", self.seed_circuit);
        let _ = writeln!(s, "seed_disc {}", self.seed_disc);
        let _ = writeln!(s, "seed_sampling {}", self.seed_sampling);
        let _ = writeln!(s, "iteration {}", self.iteration);
        let _ = writeln!(s, "circuit_params {}", self.params.len());
        for v in self.params.values() {
            let _ = writeln!(s, "{v:?}");
        }
        let dims: Vec<String> = self.discriminator.dims().iter().map(|d| d.to_string()).collect();
        let _ = writeln!(s, "disc_dims {}", dims.join(" "));
        let _ = writeln!(s, "disc_leaky_slope {:?}", self.discriminator.leaky_slope());
        let _ = writeln!(s, "disc_params {}", self.discriminator.params().len());
        for v in self.discriminator.params() {
            let _ = writeln!(s, "{v:?}");
        }
        s.push_str("end\n");
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut r = Reader {
            lines: text.lines().enumerate(),
            last: 0,
        };
        let header = r.line()?;
        let version = header
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| r.err("missing checkpoint header"))?;
        if version != FORMAT_VERSION.to_string() {
            return Err(r.err(format!("unsupported format version {version:?}")));
        }
        let rows = r.field("rows")?;
        let cols = r.field("cols")?;
        let depth = r.field("depth")?;
        let seed_circuit = r.field("seed_circuit")?;
        let seed_disc = r.field("seed_disc")?;
        let seed_sampling = r.field("seed_sampling")?;
        let iteration = r.field("iteration")?;

        let n_params: usize = r.field("circuit_params")?;
        let expected = (3 * depth + 1) * rows * cols;
        if n_params != expected {
            return Err(r.err(format!(
                "circuit_params {n_params} does not match {rows}x{cols} depth {depth} ({expected})"
            )));
        }
        let params = ParamVector::new(r.values(n_params)?).map_err(|e| r.err(e.to_string()))?;

        let dims_line = r.keyed("disc_dims")?;
        let dims = dims_line
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| r.err(format!("bad disc_dims: {e}")))?;
        if dims.first() != Some(&(rows * cols)) {
            return Err(r.err("discriminator input width does not match the grid"));
        }
        let slope: f64 = r.field("disc_leaky_slope")?;
        let n_disc: usize = r.field("disc_params")?;
        let disc_values = r.values(n_disc)?;
        let discriminator = MlpDiscriminator::from_params(&dims, disc_values, slope)
            .map_err(|e| r.err(e.to_string()))?;
        if r.line()? != "end" {
            return Err(r.err("expected `end`"));
        }
        Ok(Self {
            rows,
            cols,
            depth,
            seed_circuit,
            seed_disc,
            seed_sampling,
            iteration,
            params,
            discriminator,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

struct Reader<'a, I: Iterator<Item = (usize, &'a str)>> {
    lines: I,
    last: usize,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Reader<'a, I> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Parse {
            line: self.last,
            reason: reason.into(),
        }
    }

    fn line(&mut self) -> Result<&'a str> {
        match self.lines.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok(l.trim())
            }
            None => {
                self.last += 1;
                Err(self.err("unexpected end of file"))
            }
        }
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let line = self.line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.trim()),
            _ => Err(self.err(format!("expected `{key} <value>`, found {line:?}"))),
        }
    }

    fn field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.keyed(key)?;
        raw.parse().map_err(|e| self.err(format!("bad {key} value {raw:?}: {e}")))
    }

    fn values(&mut self, count: usize) -> Result<Vec<f64>> {
        (0..count)
            .map(|_| {
                let l = self.line()?;
                l.parse::<f64>()
                    .map_err(|e| self.err(format!("bad value {l:?}: {e}")))
            })
            .collect()
    }
}
