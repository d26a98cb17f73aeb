//! HDR quality metrics: perceptually uniform encoding, then MAE/MSE, PSNR
//! and SSIM on the encoded values (RGB and luma variants).

mod pu;
mod report;
mod ssim;

pub use pu::{pu_encode, pu_encode_slice, PuTable};
pub use report::{MetricReport, MetricRow};
pub use ssim::ssim_plane;

use crate::error::{Error, Result};
use crate::radiometry::{RadianceDomain, RadianceImage};

/// PSNR values are capped at this sentinel so exact matches stay finite.
pub const PSNR_CAP: f64 = 99.0;

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

fn psnr(peak: f64, mse: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP;
    }
    (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP)
}

/// All metrics of one prediction against its reference, measured on the
/// PU-encoded linear radiance. The PSNR peak and the SSIM dynamic range are
/// the PU value of the maximum representable radiance (the reference image's
/// scale), which makes the reference argument order significant.
pub fn compute_metrics(
    pred: &RadianceImage,
    gt: &RadianceImage,
    table: &PuTable,
) -> Result<MetricRow> {
    if pred.domain() != RadianceDomain::Linear {
        return Err(Error::DomainMismatch { expected: "linear", got: pred.domain().name() });
    }
    if gt.domain() != RadianceDomain::Linear {
        return Err(Error::DomainMismatch { expected: "linear", got: gt.domain().name() });
    }
    if pred.width() != gt.width() || pred.height() != gt.height() || pred.channels() != 3 || gt.channels() != 3 {
        return Err(Error::ShapeMismatch {
            op: "compute_metrics",
            detail: format!(
                "pred {}x{}x{} vs gt {}x{}x{}",
                pred.height(),
                pred.width(),
                pred.channels(),
                gt.height(),
                gt.width(),
                gt.channels()
            ),
        });
    }

    let peak = table.encode(gt.scale());
    let p = pu_encode_slice(pred.data(), table);
    let g = pu_encode_slice(gt.data(), table);

    let n = p.len() as f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    for (a, b) in p.iter().zip(&g) {
        let d = a - b;
        abs_sum += d.abs();
        sq_sum += d * d;
    }
    let mae = abs_sum / n;
    let mse = sq_sum / n;

    let (w, h) = (pred.width(), pred.height());
    let plane = |data: &[f64], ch: usize| -> Vec<f64> {
        (0..w * h).map(|i| data[i * 3 + ch]).collect()
    };
    let mut ssim_rgb = 0.0;
    for ch in 0..3 {
        ssim_rgb += ssim_plane(&plane(&p, ch), &plane(&g, ch), w, h, peak)?;
    }
    ssim_rgb /= 3.0;

    let luma = |data: &[f64]| -> Vec<f64> {
        (0..w * h)
            .map(|i| LUMA[0] * data[i * 3] + LUMA[1] * data[i * 3 + 1] + LUMA[2] * data[i * 3 + 2])
            .collect()
    };
    let (py, gy) = (luma(&p), luma(&g));
    let mut ymse = 0.0;
    for (a, b) in py.iter().zip(&gy) {
        ymse += (a - b) * (a - b);
    }
    ymse /= py.len() as f64;

    Ok(MetricRow {
        mae,
        mse,
        psnr_rgb: psnr(peak, mse),
        ssim_rgb,
        psnr_y: psnr(peak, ymse),
        ssim_y: ssim_plane(&py, &gy, w, h, peak)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn radiance(data: Vec<f64>, w: usize, h: usize) -> RadianceImage {
        RadianceImage::new(data, w, h, 3, RadianceDomain::Linear, 1.0, 16.0).unwrap()
    }

    fn random_image(seed: u64, w: usize, h: usize) -> RadianceImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        radiance((0..w * h * 3).map(|_| rng.random::<f64>() * 0.9 + 0.01).collect(), w, h)
    }

    #[test]
    fn identical_images_hit_the_sentinels() {
        let img = random_image(1, 16, 16);
        let table = PuTable::identity(1e-4, 2.0, 512);
        let m = compute_metrics(&img, &img, &table).unwrap();
        assert_eq!(m.mae, 0.0);
        assert_eq!(m.mse, 0.0);
        assert_eq!(m.psnr_rgb, PSNR_CAP);
        assert_eq!(m.psnr_y, PSNR_CAP);
        assert_eq!(m.ssim_rgb, 1.0);
        assert_eq!(m.ssim_y, 1.0);
    }

    #[test]
    fn constant_offset_appears_as_mae_delta_and_mse_delta_squared() {
        // identity-table encoding turns a constant linear offset into a
        // constant PU offset, up to the interpolation granularity
        let img = random_image(2, 12, 12);
        let delta = 0.05;
        let shifted = radiance(img.data().iter().map(|v| v + delta).collect(), 12, 12);
        let table = PuTable::identity(1e-6, 4.0, 8192);
        let m = compute_metrics(&shifted, &img, &table).unwrap();
        assert!((m.mae - delta).abs() < 1e-5, "mae {}", m.mae);
        assert!((m.mse - delta * delta).abs() < 1e-5, "mse {}", m.mse);
    }

    #[test]
    fn rejects_log_domain_inputs() {
        let img = random_image(3, 12, 12);
        let log = RadianceImage::new(
            img.data().iter().map(|v| v.ln()).collect(),
            12,
            12,
            3,
            RadianceDomain::Log,
            1.0,
            16.0,
        )
        .unwrap();
        let table = PuTable::identity(1e-4, 2.0, 128);
        assert!(matches!(
            compute_metrics(&log, &img, &table),
            Err(Error::DomainMismatch { .. })
        ));
    }
}
