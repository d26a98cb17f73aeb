//! Full-frame evaluation against a split and single-frame inference.

use super::dataprep::{load_samples, LoadedSample};
use crate::dataio::BayerFrame;
use crate::error::Result;
use crate::metrics::{compute_metrics, MetricReport, PuTable};
use crate::network::Model;
use crate::radiometry::{
    denormalize, exposure_mask, normalize_for_network, to_radiance, Crf, MaskWeighting,
    NormParams, RadianceImage,
};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use std::path::Path;

fn clamp_unit<T: Scalar>(t: &Tensor<T>) -> Tensor<T> {
    t.map(|v| v.max(T::zero()).min(T::one()))
}

/// Run full-frame inference over every sample of `data_dir/split` and score
/// it against the stored ground truth. Predictions are clamped to the
/// normalized unit range at this boundary only.
pub fn evaluate<T: Scalar>(
    data_dir: &Path,
    split: &str,
    model: &Model<T>,
    table: &PuTable,
    alpha: f64,
    weighting: MaskWeighting,
    provenance: Vec<(String, String)>,
) -> Result<MetricReport> {
    let samples: Vec<LoadedSample<T>> = load_samples(&data_dir.join(split), alpha, weighting)?;
    let gts = crate::dataio::load_split(&data_dir.join(split))?;
    let mut rows = Vec::with_capacity(samples.len());
    for (s, raw) in samples.iter().zip(&gts) {
        let (pred, _) = model.forward(&s.e_norm, Some(&s.mask))?;
        let pred_img = denormalize(&clamp_unit(&pred), &s.norm, s.tau_short, s.tau_long)?;
        let row = compute_metrics(&pred_img, &raw.ground_truth, table)?;
        rows.push((format!("{:05}", s.index), row));
    }
    MetricReport::from_rows(rows, provenance)
}

/// Inference products of one frame.
pub struct InferOutput<T: Scalar> {
    /// Linear-domain full-color radiance prediction.
    pub radiance: RadianceImage,
    /// The raw normalized network output, clamped to [0, 1].
    pub normalized: Tensor<T>,
}

/// Reconstruct one capture: radiance conversion, normalization, mask,
/// forward pass, clamp and denormalization.
pub fn infer_frame<T: Scalar>(
    frame: &BayerFrame,
    crf: &Crf,
    model: &Model<T>,
    alpha: f64,
    weighting: MaskWeighting,
) -> Result<InferOutput<T>> {
    let rad = to_radiance(frame, crf)?;
    let norm = NormParams::linear_for(frame.exposure().tau_short());
    let e_norm: Tensor<T> = normalize_for_network(&rad, &norm)?;
    let mask = exposure_mask(frame, alpha, weighting)?.to_tensor();
    let (pred, _) = model.forward(&e_norm, Some(&mask))?;
    let clamped = clamp_unit(&pred);
    let radiance = denormalize(
        &clamped,
        &norm,
        frame.exposure().tau_short(),
        frame.exposure().tau_long(),
    )?;
    Ok(InferOutput { radiance, normalized: clamped })
}
