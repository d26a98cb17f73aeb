//! Plain-text configuration: `key = value` lines with dotted keys, `#`
//! comments, later keys overriding earlier ones.

use crate::error::{Error, Result};
use crate::network::ModelConfig;
use crate::radiometry::{MaskWeighting, ALPHA_DEFAULT};
use crate::scalar::Dtype;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub fn parse_kv_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("line {}: expected key=value, got '{line}'", lineno + 1))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

pub fn parse_kv_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kv_text(&text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub model: ModelConfig,
    pub batch: usize,
    pub patch: usize,
    pub iterations: u64,
    pub lr_initial: f64,
    pub lr_final: f64,
    pub lambda: f64,
    pub seed: u64,
    pub ckpt_interval: u64,
    pub dtype: Dtype,
    pub mask_alpha: f64,
    pub mask_weighting: MaskWeighting,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("runs/default"),
            model: ModelConfig::default(),
            batch: 16,
            patch: 128,
            iterations: 200_000,
            lr_initial: 2e-4,
            lr_final: 1e-7,
            lambda: 0.1,
            seed: 0,
            ckpt_interval: 1000,
            dtype: Dtype::F64,
            mask_alpha: ALPHA_DEFAULT,
            mask_weighting: MaskWeighting::Binary,
        }
    }
}

impl TrainConfig {
    pub fn from_kv(kv: &BTreeMap<String, String>) -> Result<TrainConfig> {
        let mut c = TrainConfig { model: ModelConfig::from_kv(kv)?, ..TrainConfig::default() };
        for (key, value) in kv {
            let bad = || Error::InvalidConfig(format!("bad {key} '{value}'"));
            match key.as_str() {
                "train.data" => c.data_dir = PathBuf::from(value),
                "train.out" => c.out_dir = PathBuf::from(value),
                "train.batch" => c.batch = value.parse().map_err(|_| bad())?,
                "train.patch" => c.patch = value.parse().map_err(|_| bad())?,
                "train.iterations" => c.iterations = value.parse().map_err(|_| bad())?,
                "train.lr_initial" => c.lr_initial = value.parse().map_err(|_| bad())?,
                "train.lr_final" => c.lr_final = value.parse().map_err(|_| bad())?,
                "train.lambda" => c.lambda = value.parse().map_err(|_| bad())?,
                "train.seed" => c.seed = value.parse().map_err(|_| bad())?,
                "train.ckpt_interval" => c.ckpt_interval = value.parse().map_err(|_| bad())?,
                "train.dtype" => c.dtype = value.parse().map_err(|e| Error::InvalidConfig(e))?,
                "mask.alpha" => c.mask_alpha = value.parse().map_err(|_| bad())?,
                "mask.weighting" => c.mask_weighting = value.parse()?,
                k if k.starts_with("model.") => {} // handled by ModelConfig
                other => {
                    return Err(Error::InvalidConfig(format!("unknown config key '{other}'")))
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<TrainConfig> {
        Self::from_kv(&parse_kv_file(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.patch % 4 != 0 {
            return Err(Error::NotDivisible {
                what: "patch size (phase alignment)",
                by: 4,
                got: self.patch,
            });
        }
        if self.batch == 0 {
            return Err(Error::InvalidConfig("batch must be >= 1".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.mask_alpha > 0.0 && self.mask_alpha < 0.5) {
            return Err(Error::AlphaOutOfRange { alpha: self.mask_alpha });
        }
        if self.ckpt_interval == 0 {
            return Err(Error::InvalidConfig("ckpt_interval must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_config_file_with_comments_and_defaults() {
        let text = "\
# model
model.rb_blocks = 4
model.egb_blocks = 4
model.channels = 16
model.egb_c = 8

train.batch = 2
train.patch = 32
train.iterations = 100
train.seed = 7
train.dtype = f32
mask.alpha = 0.04
";
        let kv = parse_kv_text(text).unwrap();
        let c = TrainConfig::from_kv(&kv).unwrap();
        assert_eq!(c.model.rb_blocks, 4);
        assert_eq!(c.model.channels, 16);
        assert_eq!(c.batch, 2);
        assert_eq!(c.patch, 32);
        assert_eq!(c.dtype, Dtype::F32);
        assert_eq!(c.mask_alpha, 0.04);
        assert_eq!(c.lambda, 0.1); // default held
        assert_eq!(c.lr_initial, 2e-4);
        assert_eq!(c.lr_final, 1e-7);
    }

    #[test]
    fn rejects_unaligned_patch_and_unknown_keys() {
        let mut kv = BTreeMap::new();
        kv.insert("train.patch".to_string(), "30".to_string());
        assert!(TrainConfig::from_kv(&kv).is_err());
        let mut kv = BTreeMap::new();
        kv.insert("train.patchsize".to_string(), "32".to_string());
        assert!(TrainConfig::from_kv(&kv).is_err());
    }

    #[test]
    fn bad_lines_are_reported() {
        assert!(parse_kv_text("model.rb_blocks").is_err());
    }
}
