//! Perceptually uniform transfer tables: monotone (linear, pu) knot pairs
//! with piecewise-linear interpolation over the log of the linear axis.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct PuTable {
    linear: Vec<f64>,
    pu: Vec<f64>,
    version: String,
}

impl PuTable {
    /// Both columns must be strictly increasing and the linear column
    /// strictly positive.
    pub fn new(pairs: Vec<(f64, f64)>, version: impl Into<String>) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::InvalidArgument("PU table needs at least 2 knots".into()));
        }
        for (i, pair) in pairs.iter().enumerate() {
            if !(pair.0 > 0.0) || !pair.0.is_finite() || !pair.1.is_finite() {
                return Err(Error::PuTableNotMonotone { row: i });
            }
            if i > 0 && (pair.0 <= pairs[i - 1].0 || pair.1 <= pairs[i - 1].1) {
                return Err(Error::PuTableNotMonotone { row: i });
            }
        }
        let (linear, pu) = pairs.into_iter().unzip();
        Ok(PuTable { linear, pu, version: version.into() })
    }

    /// Identity pairs on `knots` log-spaced values over [lo, hi]. Exact at
    /// the knots; between knots the log-domain interpolation deviates from
    /// the identity by O((knot spacing)^2).
    pub fn identity(lo: f64, hi: f64, knots: usize) -> PuTable {
        let pairs = log_spaced(lo, hi, knots).into_iter().map(|v| (v, v)).collect();
        PuTable::new(pairs, "identity").expect("identity pairs are monotone")
    }

    /// The PU21 banding-glare fit sampled on log-spaced knots over its
    /// published luminance domain [0.005, 10000] cd/m^2. Relative radiance
    /// is mapped to luminance by `nits_per_unit` before evaluation.
    pub fn pu21_banding_glare(knots: usize, nits_per_unit: f64) -> PuTable {
        // V(Y) = p7 ((p1 + p2 Y^p4) / (1 + p3 Y^p4))^p5 - p6), banding+glare
        const P: [f64; 7] = [
            0.353487901,
            0.3734658629,
            8.277049286e-05,
            0.9062562627,
            0.09150303166,
            0.9099319404,
            596.3148142,
        ];
        let fit = |y: f64| {
            let yp = y.powf(P[3]);
            P[6] * (((P[0] + P[1] * yp) / (1.0 + P[2] * yp)).powf(P[4]) - P[5])
        };
        let (lo, hi) = (0.005 / nits_per_unit, 10_000.0 / nits_per_unit);
        let pairs = log_spaced(lo, hi, knots)
            .into_iter()
            .map(|v| (v, fit(v * nits_per_unit)))
            .collect();
        PuTable::new(pairs, "pu21-banding-glare").expect("fit is monotone on its domain")
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn knots(&self) -> usize {
        self.linear.len()
    }

    pub fn knot(&self, i: usize) -> (f64, f64) {
        (self.linear[i], self.pu[i])
    }

    /// Encode one linear value: piecewise-linear in ln(linear), clamped to
    /// the first PU value below the first knot and to the last above.
    pub fn encode(&self, x: f64) -> f64 {
        let n = self.linear.len();
        if x <= self.linear[0] {
            return self.pu[0];
        }
        if x >= self.linear[n - 1] {
            return self.pu[n - 1];
        }
        let hi = self.linear.partition_point(|&v| v <= x);
        let lo = hi - 1;
        if self.linear[lo] == x {
            return self.pu[lo];
        }
        let t = (x.ln() - self.linear[lo].ln()) / (self.linear[hi].ln() - self.linear[lo].ln());
        self.pu[lo] + t * (self.pu[hi] - self.pu[lo])
    }

    /// Save in the exchange format: a "PU v1" header, then one
    /// "linear pu" pair per line.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::from("PU v1\n");
        for (l, p) in self.linear.iter().zip(&self.pu) {
            out.push_str(&format!("{l} {p}\n"));
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<PuTable> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header.trim() != "PU v1" {
            return Err(Error::FileFormat {
                format: "PU",
                path: path.to_path_buf(),
                detail: format!("bad header '{header}'"),
            });
        }
        let mut pairs = Vec::new();
        for line in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let (l, p) = (it.next(), it.next());
            match (l.and_then(|v| v.parse().ok()), p.and_then(|v| v.parse().ok())) {
                (Some(l), Some(p)) => pairs.push((l, p)),
                _ => {
                    return Err(Error::FileFormat {
                        format: "PU",
                        path: path.to_path_buf(),
                        detail: format!("bad pair '{line}'"),
                    })
                }
            }
        }
        PuTable::new(pairs, "file")
    }
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// PU-encode every element of a tensor.
pub fn pu_encode<T: Scalar>(linear: &Tensor<T>, table: &PuTable) -> Tensor<T> {
    linear.map(|v| T::from_f64(table.encode(v.to_f64())))
}

/// PU-encode a slice of linear values.
pub fn pu_encode_slice(linear: &[f64], table: &PuTable) -> Vec<f64> {
    linear.iter().map(|&v| table.encode(v)).collect()
}
