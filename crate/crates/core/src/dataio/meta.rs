//! Plain-text metadata sidecar: key=value lines with keys bits, tau_s,
//! tau_l, cfa, crf.

use super::CfaPhase;
use crate::error::{Error, Result};
use crate::radiometry::Crf;
use std::io::Write;
use std::path::{Path, PathBuf};

/// How a sample's CRF is specified: builtin kinds or a tabulated file whose
/// path is resolved relative to the sidecar's directory.
#[derive(Debug, Clone, PartialEq)]
pub enum CrfSpec {
    Linear,
    Gamma(f64),
    File(PathBuf),
}

impl CrfSpec {
    pub fn resolve(&self, base_dir: &Path) -> Result<Crf> {
        match self {
            CrfSpec::Linear => Ok(Crf::Linear),
            CrfSpec::Gamma(g) => Crf::gamma(*g),
            CrfSpec::File(p) => {
                let path = if p.is_absolute() { p.clone() } else { base_dir.join(p) };
                Crf::load(&path)
            }
        }
    }
}

impl std::fmt::Display for CrfSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CrfSpec::Linear => write!(f, "linear"),
            CrfSpec::Gamma(g) => write!(f, "gamma:{g}"),
            CrfSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl std::str::FromStr for CrfSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "linear" {
            return Ok(CrfSpec::Linear);
        }
        if let Some(g) = s.strip_prefix("gamma:") {
            let g: f64 = g
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad gamma value '{g}'")))?;
            if !(g > 0.0) {
                return Err(Error::InvalidConfig(format!("gamma must be positive, got {g}")));
            }
            return Ok(CrfSpec::Gamma(g));
        }
        if let Some(p) = s.strip_prefix("file:") {
            return Ok(CrfSpec::File(PathBuf::from(p)));
        }
        Err(Error::InvalidConfig(format!(
            "bad CRF spec '{s}' (expected linear, gamma:G or file:PATH)"
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleMeta {
    pub bits: u32,
    pub tau_short: f64,
    pub tau_long: f64,
    pub cfa: CfaPhase,
    pub crf: CrfSpec,
}

impl SampleMeta {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = format!(
            "bits={}\ntau_s={}\ntau_l={}\ncfa={}\ncrf={}\n",
            self.bits, self.tau_short, self.tau_long, self.cfa, self.crf
        );
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<SampleMeta> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut bits = None;
        let mut tau_s = None;
        let mut tau_l = None;
        let mut cfa = None;
        let mut crf = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::FileFormat {
                format: "meta",
                path: path.to_path_buf(),
                detail: format!("line without '=': '{line}'"),
            })?;
            let v = value.trim();
            let bad = |what: &str| Error::FileFormat {
                format: "meta",
                path: path.to_path_buf(),
                detail: format!("bad {what}: '{v}'"),
            };
            match key.trim() {
                "bits" => bits = Some(v.parse().map_err(|_| bad("bits"))?),
                "tau_s" => tau_s = Some(v.parse().map_err(|_| bad("tau_s"))?),
                "tau_l" => tau_l = Some(v.parse().map_err(|_| bad("tau_l"))?),
                "cfa" => cfa = Some(v.parse::<CfaPhase>()?),
                "crf" => crf = Some(v.parse::<CrfSpec>()?),
                other => {
                    return Err(Error::FileFormat {
                        format: "meta",
                        path: path.to_path_buf(),
                        detail: format!("unknown key '{other}'"),
                    })
                }
            }
        }
        let missing = |what: &str| Error::FileFormat {
            format: "meta",
            path: path.to_path_buf(),
            detail: format!("missing key '{what}'"),
        };
        Ok(SampleMeta {
            bits: bits.ok_or_else(|| missing("bits"))?,
            tau_short: tau_s.ok_or_else(|| missing("tau_s"))?,
            tau_long: tau_l.ok_or_else(|| missing("tau_l"))?,
            cfa: cfa.ok_or_else(|| missing("cfa"))?,
            crf: crf.ok_or_else(|| missing("crf"))?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("00001.meta.cfg");
        let meta = SampleMeta {
            bits: 8,
            tau_short: 0.85,
            tau_long: 13.6,
            cfa: CfaPhase::Rggb,
            crf: CrfSpec::Gamma(2.2),
        };
        meta.save(&path).unwrap();
        assert_eq!(SampleMeta::load(&path).unwrap(), meta);
    }

    #[test]
    fn crf_spec_parsing() {
        assert_eq!("linear".parse::<CrfSpec>().unwrap(), CrfSpec::Linear);
        assert_eq!("gamma:2.2".parse::<CrfSpec>().unwrap(), CrfSpec::Gamma(2.2));
        assert_eq!(
            "file:crf.txt".parse::<CrfSpec>().unwrap(),
            CrfSpec::File(PathBuf::from("crf.txt"))
        );
        assert!("gamma:-1".parse::<CrfSpec>().is_err());
        assert!("quadratic".parse::<CrfSpec>().is_err());
    }
}
