//! Property tests for the structural invariants: brute-force agreement on
//! arbitrary shapes, permutation roundtrips, mask/exposure class rules and
//! loss identities.

use proptest::prelude::*;
use svehdr_core::conv::{conv2d, pack_rggb, pixel_shuffle, pixel_unshuffle, unpack_rggb};
use svehdr_core::dataio::{BayerFrame, CfaPhase, ExposureMap};
use svehdr_core::loss::{total_loss, COLOR_EPS};
use svehdr_core::metrics::PuTable;
use svehdr_core::optim::LrSchedule;
use svehdr_core::oracle;
use svehdr_core::radiometry::{exposure_mask, MaskWeighting};
use svehdr_core::tape::Tape;
use svehdr_core::tensor::{max_rel_diff, Tensor};

fn tensor_strategy(shape: [usize; 4]) -> impl Strategy<Value = Tensor<f64>> {
    let n: usize = shape.iter().product();
    proptest::collection::vec(-2.0f64..2.0, n)
        .prop_map(move |v| Tensor::from_vec(shape, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conv_matches_the_loop_oracle(
        n in 1usize..3, ci in 1usize..3, co in 1usize..4,
        k in 1usize..5, h in 6usize..11, w in 6usize..11,
        s in 1usize..3, p in 0usize..3,
        seed in any::<u64>(),
    ) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = Tensor::<f64>::rand_uniform([n, ci, h, w], 1.0, &mut rng);
        let wt = Tensor::<f64>::rand_uniform([co, ci, k, k], 1.0, &mut rng);
        let fast = conv2d(&x, &wt, None, (s, s), (p, p));
        let slow = oracle::conv2d_naive(&x, &wt, None, (s, s), (p, p));
        match (fast, slow) {
            (Ok(f), Ok(sl)) => prop_assert!(max_rel_diff(&f, &sl).unwrap() <= 1e-12),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "paths disagree on shape validity"),
        }
    }

    #[test]
    fn shuffle_roundtrip_and_pack_roundtrip(
        t in tensor_strategy([2, 4, 3, 5]),
        u in tensor_strategy([1, 1, 6, 8]),
    ) {
        let up = pixel_shuffle(&t, 2).unwrap();
        prop_assert_eq!(pixel_unshuffle(&up, 2).unwrap(), t);
        let packed = pack_rggb(&u).unwrap();
        prop_assert_eq!(unpack_rggb(&packed).unwrap(), u);
    }

    #[test]
    fn exposure_map_has_period_four(h in 1usize..12, ts in 1e-4f64..0.1, ratio in 1.0f64..64.0) {
        let map = ExposureMap::new(h * 4, ts, ts * ratio).unwrap();
        for row in 0..h * 4 - 4 {
            prop_assert_eq!(map.row_time(row), map.row_time(row + 4));
        }
        prop_assert_eq!(map.row_time(0), ts);
        if ratio > 1.0 {
            prop_assert_eq!(map.row_time(2), ts * ratio);
        }
    }

    #[test]
    fn binary_mask_zeroes_only_its_own_class(values in proptest::collection::vec(0u16..256, 32)) {
        let frame = BayerFrame::new(
            values,
            4,
            8,
            8,
            CfaPhase::Rggb,
            ExposureMap::new(8, 0.01, 0.16).unwrap(),
        )
        .unwrap();
        let mask = exposure_mask(&frame, 0.0392, MaskWeighting::Binary).unwrap();
        for row in 0..8 {
            let short = frame.exposure().is_short_row(row);
            for col in 0..4 {
                if mask.at(row, col) == 0.0 {
                    let z = frame.at(row, col) as f64;
                    if short {
                        prop_assert!(z <= 0.0392 * 255.0, "short row masked a bright value");
                    } else {
                        prop_assert!(z >= (1.0 - 0.0392) * 255.0, "long row masked a dark value");
                    }
                }
            }
        }
    }

    #[test]
    fn total_loss_composition_is_exact(
        pred in tensor_strategy([1, 3, 4, 4]),
        gt in tensor_strategy([1, 3, 4, 4]),
        lambda in 0.0f64..2.0,
    ) {
        let mut tape = Tape::new();
        let p = tape.leaf(pred, false);
        let g = tape.leaf(gt, false);
        let (_, v) = total_loss(&mut tape, p, g, lambda).unwrap();
        prop_assert_eq!(v.total, v.l1 + lambda * v.color);
        prop_assert!(v.total.is_finite());
    }

    #[test]
    fn color_loss_ignores_per_pixel_positive_scaling(
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        // keep magnitudes away from zero so the epsilon term stays negligible
        let pred = Tensor::<f64>::rand_uniform([1, 3, 4, 4], 0.45, &mut rng).map(|v| v + 0.55);
        let gt = Tensor::<f64>::rand_uniform([1, 3, 4, 4], 0.45, &mut rng).map(|v| v + 0.55);
        let mut scaled = gt.clone();
        for px in 0..16 {
            let s = 0.5 + 1.5 * rng.random::<f64>();
            for ch in 0..3 {
                let [_, _, hh, ww] = scaled.shape();
                let _ = (hh, ww);
                *scaled.at_mut(0, ch, px / 4, px % 4) = gt.at(0, ch, px / 4, px % 4) * s;
            }
        }
        let base = oracle::color_loss_naive(&pred, &gt, COLOR_EPS);
        let after = oracle::color_loss_naive(&pred, &scaled, COLOR_EPS);
        prop_assert!((base - after).abs() <= 1e-6, "{base} vs {after}");
    }

    #[test]
    fn pu_encoding_is_monotone(a in 1e-6f64..10.0, b in 1e-6f64..10.0) {
        let table = PuTable::pu21_banding_glare(256, 1000.0);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(table.encode(lo) <= table.encode(hi));
    }

    #[test]
    fn cosine_schedule_is_monotone_and_pinned(total in 1u64..5000) {
        let s = LrSchedule::new(2e-4, 1e-7, total).unwrap();
        prop_assert_eq!(s.rate(0), 2e-4);
        prop_assert_eq!(s.rate(total), 1e-7);
        let mut prev = f64::INFINITY;
        let step = (total / 97).max(1);
        for t in (0..=total).step_by(step as usize) {
            let r = s.rate(t);
            prop_assert!(r <= prev);
            prev = r;
        }
    }
}
