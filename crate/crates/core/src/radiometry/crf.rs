//! Camera response functions on [0, 1], strictly monotone with f(0) = 0 and
//! f(1) = 1, invertible exactly at table knots.

use crate::error::{Error, Result};
use std::io::{BufRead, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum Crf {
    Linear,
    /// Display-style gamma: f(x) = x^(1/gamma), so f^-1(z) = z^gamma.
    Gamma(f64),
    /// Per-channel lookup of f at the code values i / (2^N - 1); linear
    /// interpolation between knots, exact at them.
    Tabulated { bits: u32, tables: [Vec<f64>; 3] },
}

impl Crf {
    pub fn gamma(g: f64) -> Result<Crf> {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {g}")));
        }
        Ok(Crf::Gamma(g))
    }

    pub fn tabulated(bits: u32, tables: [Vec<f64>; 3]) -> Result<Crf> {
        let crf = Crf::Tabulated { bits, tables };
        crf.validate()?;
        Ok(crf)
    }

    /// Strict monotonicity plus the endpoint pins f(0) = 0 and f(1) = 1.
    pub fn validate(&self) -> Result<()> {
        if let Crf::Tabulated { bits, tables } = self {
            let n = 1usize << bits;
            for (ch, table) in tables.iter().enumerate() {
                if table.len() != n {
                    return Err(Error::InvalidArgument(format!(
                        "channel {ch} table has {} entries, expected {n}",
                        table.len()
                    )));
                }
                if table[0] != 0.0 || table[n - 1] != 1.0 {
                    return Err(Error::CrfNotMonotone {
                        detail: format!(
                            "channel {ch} endpoints are {} and {}, need 0 and 1",
                            table[0],
                            table[n - 1]
                        ),
                    });
                }
                for i in 1..n {
                    if !(table[i] > table[i - 1]) {
                        return Err(Error::CrfNotMonotone {
                            detail: format!("channel {ch} rows {} -> {}", i - 1, i),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// f(x) for exposure x in [0, 1] on the given RGB channel.
    pub fn forward(&self, channel: usize, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            Crf::Linear => x,
            Crf::Gamma(g) => x.powf(1.0 / g),
            Crf::Tabulated { bits, tables } => {
                let table = &tables[channel];
                let zmax = ((1usize << bits) - 1) as f64;
                let t = x * zmax;
                let i = (t.floor() as usize).min(table.len() - 2);
                let frac = t - i as f64;
                table[i] + frac * (table[i + 1] - table[i])
            }
        }
    }

    /// f^-1(z) for a normalized code value z in [0, 1].
    pub fn inverse(&self, channel: usize, z: f64) -> f64 {
        let z = z.clamp(0.0, 1.0);
        match self {
            Crf::Linear => z,
            Crf::Gamma(g) => z.powf(*g),
            Crf::Tabulated { bits, tables } => {
                let table = &tables[channel];
                let zmax = ((1usize << bits) - 1) as f64;
                // strictly increasing, so partition_point gives the first
                // knot with value > z
                let hi = table.partition_point(|&v| v <= z);
                if hi == 0 {
                    return 0.0;
                }
                if hi == table.len() {
                    return 1.0;
                }
                let lo = hi - 1;
                if table[lo] == z {
                    return lo as f64 / zmax;
                }
                let frac = (z - table[lo]) / (table[hi] - table[lo]);
                (lo as f64 + frac) / zmax
            }
        }
    }

    /// Write in the tabulated exchange format: a "CRF v1 bits=N" header, then
    /// one normalized output value per line, 2^N lines per channel, channels
    /// concatenated R, G, B. Gamma/linear kinds are sampled into a table.
    pub fn save(&self, path: &Path, bits: u32) -> Result<()> {
        let n = 1usize << bits;
        let zmax = (n - 1) as f64;
        let mut out = String::new();
        out.push_str(&format!("CRF v1 bits={bits}\n"));
        for ch in 0..3 {
            for i in 0..n {
                out.push_str(&format!("{}\n", self.forward(ch, i as f64 / zmax)));
            }
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Crf> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = std::io::BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::FileFormat {
                format: "CRF",
                path: path.to_path_buf(),
                detail: "empty file".into(),
            })?
            .map_err(|e| Error::io(path, e))?;
        let bits: u32 = header
            .strip_prefix("CRF v1 bits=")
            .and_then(|b| b.trim().parse().ok())
            .ok_or_else(|| Error::FileFormat {
                format: "CRF",
                path: path.to_path_buf(),
                detail: format!("bad header '{header}'"),
            })?;
        let n = 1usize << bits;
        let mut values = Vec::with_capacity(3 * n);
        for line in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            values.push(t.parse::<f64>().map_err(|_| Error::FileFormat {
                format: "CRF",
                path: path.to_path_buf(),
                detail: format!("bad value '{t}'"),
            })?);
        }
        if values.len() != 3 * n {
            return Err(Error::FileFormat {
                format: "CRF",
                path: path.to_path_buf(),
                detail: format!("expected {} values, got {}", 3 * n, values.len()),
            });
        }
        let g = values.split_off(n);
        let (g, b) = {
            let mut g = g;
            let b = g.split_off(n);
            (g, b)
        };
        Crf::tabulated(bits, [values, g, b])
    }
}
