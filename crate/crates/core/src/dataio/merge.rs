//! Weighted log-domain merge of a registered exposure pair into a ground
//! truth radiance map, with triangle weights on the raw code values.

use super::ExposurePair;
use crate::error::{Error, Result};
use crate::radiometry::{Crf, RadianceDomain, RadianceImage};

/// Per pixel and channel: ln E = sum_k w(z_k) (ln f^-1(z_k) - ln dt_k) /
/// sum_k w(z_k) with w(z) = min(z, zmax - z). When both weights vanish the
/// observation farther from its failure rail wins unweighted (short:
/// under-exposure at 0, long: over-exposure at zmax; ties go short). Zero
/// codes are floored at half a quantization step before the logarithm.
pub fn merge_ground_truth(pair: &ExposurePair, crf: &Crf) -> Result<RadianceImage> {
    crf.validate()?;
    let (w, h) = (pair.short.width(), pair.short.height());
    let zmax = ((1u32 << pair.short.bits()) - 1) as f64;
    let ln_dt_s = pair.tau_short.ln();
    let ln_dt_l = pair.tau_long.ln();
    let mut data = Vec::with_capacity(w * h * 3);
    for row in 0..h {
        for col in 0..w {
            for ch in 0..3 {
                let zs = pair.short.at(row, col, ch) as f64;
                let zl = pair.long.at(row, col, ch) as f64;
                let ws = zs.min(zmax - zs);
                let wl = zl.min(zmax - zl);
                let ln_rad = |z: f64, ln_dt: f64| {
                    crf.inverse(ch, z.max(0.5) / zmax).ln() - ln_dt
                };
                let ln_e = if ws + wl > 0.0 {
                    let mut num = 0.0;
                    if ws > 0.0 {
                        num += ws * ln_rad(zs, ln_dt_s);
                    }
                    if wl > 0.0 {
                        num += wl * ln_rad(zl, ln_dt_l);
                    }
                    num / (ws + wl)
                } else if zs >= zmax - zl {
                    ln_rad(zs, ln_dt_s)
                } else {
                    ln_rad(zl, ln_dt_l)
                };
                if ln_e.is_nan() {
                    return Err(Error::Numeric(format!(
                        "merge produced NaN at ({row},{col}) channel {ch}"
                    )));
                }
                data.push(ln_e.exp());
            }
        }
    }
    RadianceImage::new(data, w, h, 3, RadianceDomain::Linear, pair.tau_short, pair.tau_long)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::IntImage;
    use crate::oracle::merge_scalar;
    use rand::{Rng, SeedableRng};

    fn image_of(mut f: impl FnMut(usize, usize, usize) -> u16, w: usize, h: usize) -> IntImage {
        let mut data = Vec::new();
        for row in 0..h {
            for col in 0..w {
                for ch in 0..3 {
                    data.push(f(row, col, ch));
                }
            }
        }
        IntImage::new(data, w, h, 3, 8).unwrap()
    }

    #[test]
    fn consistent_midrange_pair_recovers_the_radiance_exactly() {
        // e chosen so both exposures are mid-range under a linear CRF
        let e: f64 = 0.02;
        let (tau_s, tau_l) = (8.0, 32.0);
        let zs = (e * tau_s * 255.0).round() as u16;
        let zl = (e * tau_l * 255.0).round() as u16;
        // re-derive the exactly representable radiance of those codes
        let pair = ExposurePair::new(
            image_of(|_, _, _| zs, 4, 4),
            image_of(|_, _, _| zl, 4, 4),
            tau_s,
            tau_l,
        )
        .unwrap();
        let merged = merge_ground_truth(&pair, &Crf::Linear).unwrap();
        let es = zs as f64 / 255.0 / tau_s;
        let el = zl as f64 / 255.0 / tau_l;
        // both observations agree only up to quantization; when they are the
        // same value the merge must return it to 1e-10
        let pair_exact = ExposurePair::new(
            image_of(|_, _, _| 41, 4, 4),
            image_of(|_, _, _| 164, 4, 4),
            10.0,
            40.0,
        )
        .unwrap();
        let merged_exact = merge_ground_truth(&pair_exact, &Crf::Linear).unwrap();
        let e_exact = 41.0 / 255.0 / 10.0; // == 164 / 255 / 40
        assert!((merged_exact.at(1, 1, 0) - e_exact).abs() < 1e-10 * e_exact.max(1.0));
        // and the general case sits between the two observations
        let m = merged.at(0, 0, 0);
        assert!(m >= es.min(el) - 1e-12 && m <= es.max(el) + 1e-12);
    }

    #[test]
    fn saturated_long_exposure_defers_to_the_short_one() {
        let (tau_s, tau_l) = (4.0, 64.0);
        let pair = ExposurePair::new(
            image_of(|_, _, _| 120, 2, 2),
            image_of(|_, _, _| 255, 2, 2),
            tau_s,
            tau_l,
        )
        .unwrap();
        let merged = merge_ground_truth(&pair, &Crf::Linear).unwrap();
        let expected = 120.0 / 255.0 / tau_s;
        assert!((merged.at(0, 0, 0) - expected).abs() < 1e-12);
    }

    #[test]
    fn random_field_matches_the_scalar_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let crf = Crf::gamma(2.2).unwrap();
        let (tau_s, tau_l) = (0.05, 0.8);
        let short = image_of(|_, _, _| rng.random_range(0..=255), 6, 6);
        let mut rng2 = rand_chacha::ChaCha8Rng::seed_from_u64(18);
        let long = image_of(|_, _, _| rng2.random_range(0..=255), 6, 6);
        let pair = ExposurePair::new(short.clone(), long.clone(), tau_s, tau_l).unwrap();
        let merged = merge_ground_truth(&pair, &crf).unwrap();
        let inv = |z: f64| crf.inverse(0, z);
        for row in 0..6 {
            for col in 0..6 {
                // channel 0 only: the oracle closure fixes one channel
                let expected = merge_scalar(
                    short.at(row, col, 0),
                    long.at(row, col, 0),
                    tau_s,
                    tau_l,
                    &inv,
                    8,
                );
                let got = merged.at(row, col, 0);
                assert!(
                    (got - expected).abs() <= 1e-9 * expected.abs().max(1.0),
                    "({row},{col}): {got} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn both_rails_bright_prefers_the_short_exposure() {
        let pair = ExposurePair::new(
            image_of(|_, _, _| 255, 2, 2),
            image_of(|_, _, _| 255, 2, 2),
            2.0,
            32.0,
        )
        .unwrap();
        let merged = merge_ground_truth(&pair, &Crf::Linear).unwrap();
        assert!((merged.at(0, 0, 0) - 1.0 / 2.0).abs() < 1e-12);
    }
}
