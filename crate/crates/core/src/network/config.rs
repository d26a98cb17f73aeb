//! Declarative architecture description.

use crate::error::{Error, Result};
use crate::svc::FirstLayerKind;
use std::collections::BTreeMap;

/// How the exposure mask enters the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fusion {
    /// Guidance branch whose block outputs are added into the
    /// reconstruction branch scaled by one learned scalar per block.
    #[default]
    EgbBeta,
    /// Two-channel stack of radiance and mask fed to the reconstruction
    /// branch alone (25 blocks, no guidance branch).
    ConcatInput,
    /// Mask-gated radiance fed to the reconstruction branch alone
    /// (25 blocks, no guidance branch).
    MultiplyInput,
    /// Plain reconstruction branch.
    None,
}

impl std::fmt::Display for Fusion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Fusion::EgbBeta => "egb_beta",
            Fusion::ConcatInput => "concat_input",
            Fusion::MultiplyInput => "multiply_input",
            Fusion::None => "none",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for Fusion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "egb_beta" => Ok(Fusion::EgbBeta),
            "concat_input" => Ok(Fusion::ConcatInput),
            "multiply_input" => Ok(Fusion::MultiplyInput),
            "none" => Ok(Fusion::None),
            other => Err(Error::InvalidConfig(format!("unknown fusion '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub rb_blocks: usize,
    /// 0 disables the guidance branch.
    pub egb_blocks: usize,
    pub channels: usize,
    /// Compressed channel count inside guidance blocks.
    pub egb_c: usize,
    pub rb_head: FirstLayerKind,
    pub egb_head: FirstLayerKind,
    pub fusion: Fusion,
    pub beta_init: f64,
}

impl Default for ModelConfig {
    /// The complete model: SVC heads on both branches, 16 + 16 blocks.
    fn default() -> Self {
        ModelConfig {
            rb_blocks: 16,
            egb_blocks: 16,
            channels: 64,
            egb_c: 34,
            rb_head: FirstLayerKind::Svc(5),
            egb_head: FirstLayerKind::Svc(5),
            fusion: Fusion::EgbBeta,
            beta_init: 1.0,
        }
    }
}

impl ModelConfig {
    /// Reconstruction branch alone with the given head.
    pub fn rb_only(head: FirstLayerKind, blocks: usize) -> ModelConfig {
        ModelConfig {
            rb_blocks: blocks,
            egb_blocks: 0,
            rb_head: head,
            egb_head: FirstLayerKind::OptBase,
            fusion: Fusion::None,
            ..ModelConfig::default()
        }
    }

    /// Input channels of the reconstruction branch head.
    pub fn rb_in_channels(&self) -> usize {
        if self.fusion == Fusion::ConcatInput {
            2
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rb_blocks == 0 || self.channels == 0 {
            return Err(Error::InvalidConfig(
                "rb_blocks and channels must be positive".into(),
            ));
        }
        self.rb_head.validate()?;
        self.egb_head.validate()?;
        if !self.beta_init.is_finite() {
            return Err(Error::InvalidConfig("beta_init must be finite".into()));
        }
        match self.fusion {
            Fusion::EgbBeta => {
                if self.egb_blocks != self.rb_blocks || self.egb_blocks == 0 {
                    return Err(Error::InvalidConfig(format!(
                        "egb_beta fusion needs egb_blocks == rb_blocks (one beta per block), \
                         got {} and {}",
                        self.egb_blocks, self.rb_blocks
                    )));
                }
                if self.egb_c == 0 {
                    return Err(Error::InvalidConfig("egb_c must be positive".into()));
                }
            }
            Fusion::ConcatInput | Fusion::MultiplyInput => {
                if self.egb_blocks != 0 || self.rb_blocks != 25 {
                    return Err(Error::InvalidConfig(format!(
                        "{} requires egb_blocks = 0 and rb_blocks = 25 (matched-capacity rule), \
                         got {} and {}",
                        self.fusion, self.egb_blocks, self.rb_blocks
                    )));
                }
            }
            Fusion::None => {
                if self.egb_blocks != 0 {
                    return Err(Error::InvalidConfig(
                        "fusion none requires egb_blocks = 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Dotted config keys, mirroring the config-file schema.
    pub fn to_kv(&self) -> Vec<(String, String)> {
        vec![
            ("model.rb_blocks".into(), self.rb_blocks.to_string()),
            ("model.egb_blocks".into(), self.egb_blocks.to_string()),
            ("model.channels".into(), self.channels.to_string()),
            ("model.egb_c".into(), self.egb_c.to_string()),
            ("model.rb_head".into(), self.rb_head.to_string()),
            ("model.egb_head".into(), self.egb_head.to_string()),
            ("model.fusion".into(), self.fusion.to_string()),
            ("model.beta_init".into(), self.beta_init.to_string()),
        ]
    }

    /// Build from dotted keys; missing keys keep their defaults.
    pub fn from_kv(kv: &BTreeMap<String, String>) -> Result<ModelConfig> {
        let mut c = ModelConfig::default();
        for (key, value) in kv {
            let bad = |what: &str| Error::InvalidConfig(format!("bad {what} '{value}'"));
            match key.as_str() {
                "model.rb_blocks" => c.rb_blocks = value.parse().map_err(|_| bad(key))?,
                "model.egb_blocks" => c.egb_blocks = value.parse().map_err(|_| bad(key))?,
                "model.channels" => c.channels = value.parse().map_err(|_| bad(key))?,
                "model.egb_c" => c.egb_c = value.parse().map_err(|_| bad(key))?,
                "model.rb_head" => c.rb_head = value.parse()?,
                "model.egb_head" => c.egb_head = value.parse()?,
                "model.fusion" => c.fusion = value.parse()?,
                "model.beta_init" => c.beta_init = value.parse().map_err(|_| bad(key))?,
                _ => {} // other sections are handled by their own parsers
            }
        }
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        ModelConfig::default().validate().unwrap();
    }

    #[test]
    fn egb_beta_requires_matching_block_counts() {
        let mut c = ModelConfig::default();
        c.egb_blocks = 8;
        assert!(c.validate().is_err());
    }

    #[test]
    fn concat_and_multiply_force_the_matched_capacity_shape() {
        for fusion in [Fusion::ConcatInput, Fusion::MultiplyInput] {
            let c = ModelConfig {
                fusion,
                egb_blocks: 0,
                rb_blocks: 25,
                ..ModelConfig::default()
            };
            c.validate().unwrap();
            let bad = ModelConfig { fusion, egb_blocks: 0, rb_blocks: 16, ..ModelConfig::default() };
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn kv_roundtrip() {
        let c = ModelConfig {
            rb_blocks: 4,
            egb_blocks: 4,
            channels: 16,
            egb_c: 8,
            rb_head: FirstLayerKind::Svc(5),
            egb_head: FirstLayerKind::OptBase,
            fusion: Fusion::EgbBeta,
            beta_init: 0.5,
        };
        let kv: BTreeMap<String, String> = c.to_kv().into_iter().collect();
        assert_eq!(ModelConfig::from_kv(&kv).unwrap(), c);
    }
}
