//! Exact parameter and FLOP accounting, independent of any built weights.
//!
//! FLOP convention: one multiply-accumulate and one bias add each count as
//! one operation; only weighted layers count (convolutions, SVC banks and
//! the per-block fusion scalars). Pixel shuffles, packing, activations and
//! skip additions are free. This convention reproduces the per-layer
//! reference totals exactly for the stride-1 baseline, where the FLOP count
//! equals parameters times pixels.

use super::{Fusion, ModelConfig};
use crate::error::{Error, Result};

fn conv_params(c_in: usize, c_out: usize, k: usize) -> usize {
    c_out * c_in * k * k + c_out
}

/// Exact parameter count (weights, biases and fusion scalars).
pub fn count_params(config: &ModelConfig) -> Result<usize> {
    config.validate()?;
    let ch = config.channels;
    let mut total = config.rb_head.param_count(config.rb_in_channels(), ch);
    total += config.rb_blocks * 2 * conv_params(ch, ch, 3);
    total += conv_params(ch, ch, 3); // tail
    total += conv_params(ch, 3, 3); // output head
    if config.fusion == Fusion::EgbBeta {
        total += config.egb_head.param_count(1, ch);
        total += config.egb_blocks
            * (conv_params(ch, config.egb_c, 3) + conv_params(config.egb_c, ch, 3));
        total += config.egb_blocks; // one beta per block
    }
    Ok(total)
}

/// FLOPs of one full-frame forward at H x W; exactly linear in H * W.
pub fn estimate_flops(config: &ModelConfig, height: usize, width: usize) -> Result<u64> {
    config.validate()?;
    if height % 4 != 0 {
        return Err(Error::NotDivisible { what: "flops height", by: 4, got: height });
    }
    if width % 2 != 0 {
        return Err(Error::NotDivisible { what: "flops width", by: 2, got: width });
    }
    let ch = config.channels as u64;
    let conv_per_pixel = |c_in: u64, c_out: u64, k: u64| c_out * (c_in * k * k + 1);

    let mut per_pixel = config
        .rb_head
        .flops_per_pixel(config.rb_in_channels(), config.channels);
    per_pixel += config.rb_blocks as u64 * 2 * conv_per_pixel(ch, ch, 3);
    per_pixel += conv_per_pixel(ch, ch, 3); // tail
    per_pixel += conv_per_pixel(ch, 3, 3); // output head
    if config.fusion == Fusion::EgbBeta {
        per_pixel += config.egb_head.flops_per_pixel(1, config.channels);
        per_pixel += config.egb_blocks as u64
            * (conv_per_pixel(ch, config.egb_c as u64, 3) + conv_per_pixel(config.egb_c as u64, ch, 3));
        // fusion: one multiply-accumulate per feature element per block
        per_pixel += config.egb_blocks as u64 * ch;
    }
    Ok(per_pixel * (height as u64) * (width as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svc::FirstLayerKind;

    fn rb(head: FirstLayerKind) -> ModelConfig {
        ModelConfig::rb_only(head, 16)
    }

    fn rounds_to_millions(params: usize, expected: f64) -> bool {
        (params as f64 / 1e6 * 1000.0).round() / 1000.0 == expected
    }

    #[test]
    fn first_layer_rows_reproduce_the_reference_parameter_totals() {
        let cases = [
            (FirstLayerKind::OptBase, 1_220_995, 1.221),
            (FirstLayerKind::Opt22, 1_221_635, 1.222),
            (FirstLayerKind::Opt42, 1_224_707, 1.225),
            (FirstLayerKind::Opt44, 1_237_763, 1.238),
            (FirstLayerKind::OptRggb, 1_229_827, 1.230),
            (FirstLayerKind::SvcD, 1_227_011, 1.227),
            (FirstLayerKind::Svc(3), 1_225_475, 1.225),
            (FirstLayerKind::Svc(5), 1_233_667, 1.234),
            (FirstLayerKind::Svc(7), 1_245_955, 1.246),
        ];
        for (head, exact, millions) in cases {
            let p = count_params(&rb(head)).unwrap();
            assert_eq!(p, exact, "{head}");
            assert!(rounds_to_millions(p, millions), "{head}: {p}");
        }
    }

    #[test]
    fn rb_plus_egb_with_plain_heads_matches_the_reference_total() {
        let c = ModelConfig {
            rb_head: FirstLayerKind::OptBase,
            egb_head: FirstLayerKind::OptBase,
            ..ModelConfig::default()
        };
        let p = count_params(&c).unwrap();
        assert_eq!(p, 1_849_907);
        assert!(rounds_to_millions(p, 1.850));
    }

    #[test]
    fn complete_model_total() {
        let p = count_params(&ModelConfig::default()).unwrap();
        assert_eq!(p, 1_875_251);
        // within 2.5% of the published 1.912e6 (known reconstruction gap)
        assert!((p as f64 - 1.912e6).abs() / 1.912e6 < 0.025);
    }

    #[test]
    fn matched_capacity_variants_round_to_the_published_totals() {
        let concat = ModelConfig {
            fusion: Fusion::ConcatInput,
            rb_blocks: 25,
            egb_blocks: 0,
            rb_head: FirstLayerKind::OptBase,
            ..ModelConfig::default()
        };
        assert!(rounds_to_millions(count_params(&concat).unwrap(), 1.886));
        let mult = ModelConfig {
            fusion: Fusion::MultiplyInput,
            rb_blocks: 25,
            egb_blocks: 0,
            rb_head: FirstLayerKind::OptBase,
            ..ModelConfig::default()
        };
        assert!(rounds_to_millions(count_params(&mult).unwrap(), 1.886));
    }

    #[test]
    fn flops_are_exactly_linear_in_pixels() {
        let c = ModelConfig::default();
        let f480 = estimate_flops(&c, 480, 480).unwrap();
        let f120 = estimate_flops(&c, 120, 120).unwrap();
        assert_eq!(f480, 16 * f120);
    }

    #[test]
    fn flop_anchors() {
        // baseline: within 1% of 2.813e11 at 480x480
        let base = estimate_flops(&rb(FirstLayerKind::OptBase), 480, 480).unwrap() as f64;
        assert!((base - 2.813e11).abs() / 2.813e11 < 0.01, "baseline {base}");
        // complete model: within 3% of 4.352e11
        let full = estimate_flops(&ModelConfig::default(), 480, 480).unwrap() as f64;
        assert!((full - 4.352e11).abs() / 4.352e11 < 0.03, "complete {full}");
    }

    #[test]
    fn stride_one_baseline_flops_equal_params_times_pixels() {
        let c = rb(FirstLayerKind::OptBase);
        let p = count_params(&c).unwrap() as u64;
        let f = estimate_flops(&c, 64, 64).unwrap();
        assert_eq!(f, p * 64 * 64);
    }

    #[test]
    fn first_layer_flop_deltas_match_the_reference_rounding() {
        // per-pixel head costs shift the 480x480 totals by 1e8-scale
        // amounts: opt_rggb rounds to 2.817, svc_d/svc5 to 2.816, svc7 to
        // 2.819. The one divergence from the reference rounding is opt_2_2
        // (2.812 here vs a published 2.813): its head costs 320 ops/pixel
        // under this convention, 320 less than opt_base, which lands just
        // below the rounding boundary.
        let totals: Vec<(FirstLayerKind, f64)> = vec![
            (FirstLayerKind::OptBase, 2.813),
            (FirstLayerKind::Opt22, 2.812),
            (FirstLayerKind::Opt42, 2.814),
            (FirstLayerKind::Opt44, 2.814),
            (FirstLayerKind::OptRggb, 2.817),
            (FirstLayerKind::SvcD, 2.816),
            (FirstLayerKind::Svc(3), 2.813),
            (FirstLayerKind::Svc(5), 2.816),
            (FirstLayerKind::Svc(7), 2.819),
        ];
        for (head, expected) in totals {
            let f = estimate_flops(&rb(head), 480, 480).unwrap() as f64 / 1e11;
            assert!((f * 1000.0).round() / 1000.0 == expected, "{head}: {f}");
        }
    }
}
