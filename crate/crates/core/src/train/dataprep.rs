//! Dataset generation (synthetic scenes) and preparation (real exposure
//! pairs), plus the in-memory training representation of a sample.

use crate::dataio::{
    gen_synthetic_scene, load_split, merge_ground_truth, read_png, simulate_dual_time,
    simulate_from_scene, write_sample, CfaPhase, CrfSpec, ExposurePair, SampleMeta,
};
use crate::error::{Error, Result};
use crate::radiometry::{
    exposure_mask, normalize_for_network, to_radiance, MaskWeighting, NormParams,
};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use std::path::{Path, PathBuf};

/// Fraction of the short-exposure range used by the brightest scene point:
/// tau_short is chosen so that e_max * tau_short equals this, which keeps
/// short rows just under saturation while long rows clip on highlights.
const SHORT_EXPOSURE_HEADROOM: f64 = 0.85;

#[derive(Debug, Clone)]
pub struct GenDataSpec {
    pub out: PathBuf,
    pub count: usize,
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub ratio: f64,
    pub crf: CrfSpec,
    pub bits: u32,
    pub stops: f64,
    pub cfa: CfaPhase,
}

/// Generate train/val/test splits of simulated dual-time captures with the
/// exact scene radiance as ground truth. The val and test splits hold
/// ceil(count / 8) samples each, drawn from disjoint seed ranges.
pub fn generate_dataset(spec: &GenDataSpec) -> Result<Vec<(String, usize)>> {
    if spec.count == 0 {
        return Err(Error::InvalidArgument("count must be >= 1".into()));
    }
    if !(spec.ratio > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "exposure ratio must exceed 1, got {}",
            spec.ratio
        )));
    }
    let crf = spec.crf.resolve(Path::new("."))?;
    let tau_short = SHORT_EXPOSURE_HEADROOM; // scenes are normalized to max 1.0
    let tau_long = tau_short * spec.ratio;
    let side = spec.count.div_ceil(8);
    let splits = [
        ("train", spec.count, 0u64),
        ("val", side, 1_000_000),
        ("test", side, 2_000_000),
    ];
    let mut written = Vec::new();
    for (split, n, seed_base) in splits {
        let dir = spec.out.join(split);
        // a file-referenced CRF is copied next to the samples it describes
        let crf_spec = match &spec.crf {
            CrfSpec::File(_) => {
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                let local = dir.join("crf.txt");
                crf.save(&local, spec.bits)?;
                CrfSpec::File(PathBuf::from("crf.txt"))
            }
            other => other.clone(),
        };
        let meta = SampleMeta {
            bits: spec.bits,
            tau_short,
            tau_long,
            cfa: spec.cfa,
            crf: crf_spec,
        };
        for i in 0..n {
            let scene = gen_synthetic_scene(
                spec.seed.wrapping_add(seed_base).wrapping_add(i as u64),
                spec.height,
                spec.width,
                spec.stops,
            )?;
            let (frame, gt) =
                simulate_from_scene(&scene, &crf, tau_short, tau_long, spec.bits, spec.cfa)?;
            write_sample(&dir, i, &frame, &gt, &meta)?;
        }
        written.push((split.to_string(), n));
    }
    Ok(written)
}

/// Turn directories of registered short/long PNG pairs (matched by sorted
/// file name) into the dataset layout, with merged ground truth.
pub fn prepare_from_pairs(
    short_dir: &Path,
    long_dir: &Path,
    out_dir: &Path,
    tau_short: f64,
    ratio: f64,
    bits: u32,
    crf_spec: &CrfSpec,
    cfa: CfaPhase,
) -> Result<usize> {
    let crf = crf_spec.resolve(short_dir)?;
    let list = |dir: &Path| -> Result<Vec<PathBuf>> {
        let mut names: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "png"))
            .collect();
        names.sort();
        Ok(names)
    };
    let shorts = list(short_dir)?;
    let longs = list(long_dir)?;
    if shorts.len() != longs.len() || shorts.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "pair directories hold {} and {} png files",
            shorts.len(),
            longs.len()
        )));
    }
    let dir = out_dir.join("train");
    let out_crf = match crf_spec {
        CrfSpec::File(_) => {
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let local = dir.join("crf.txt");
            crf.save(&local, bits)?;
            CrfSpec::File(PathBuf::from("crf.txt"))
        }
        other => other.clone(),
    };
    let meta = SampleMeta {
        bits,
        tau_short,
        tau_long: tau_short * ratio,
        cfa,
        crf: out_crf,
    };
    for (i, (sp, lp)) in shorts.iter().zip(&longs).enumerate() {
        let short = read_png(sp, bits)?;
        let long = read_png(lp, bits)?;
        let pair = ExposurePair::new(short, long, tau_short, tau_short * ratio)?;
        let frame = simulate_dual_time(&pair, cfa)?;
        let gt = merge_ground_truth(&pair, &crf)?;
        write_sample(&dir, i, &frame, &gt, &meta)?;
    }
    Ok(shorts.len())
}

/// A sample preprocessed for the network: normalized radiance, mask and
/// normalized ground truth as tensors.
#[derive(Debug, Clone)]
pub struct LoadedSample<T: Scalar> {
    pub index: usize,
    pub e_norm: Tensor<T>,
    pub mask: Tensor<T>,
    pub gt_norm: Tensor<T>,
    pub tau_short: f64,
    pub tau_long: f64,
    pub norm: NormParams,
}

/// Load one split and preprocess every sample for training or evaluation.
pub fn load_samples<T: Scalar>(
    dir: &Path,
    alpha: f64,
    weighting: MaskWeighting,
) -> Result<Vec<LoadedSample<T>>> {
    let samples = load_split(dir)?;
    samples
        .into_iter()
        .map(|s| {
            let rad = to_radiance(&s.frame, &s.crf)?;
            let norm = NormParams::linear_for(s.meta.tau_short);
            let e_norm = normalize_for_network(&rad, &norm)?;
            let mask = exposure_mask(&s.frame, alpha, weighting)?.to_tensor();
            let gt_norm = normalize_for_network(&s.ground_truth, &norm)?;
            Ok(LoadedSample {
                index: s.index,
                e_norm,
                mask,
                gt_norm,
                tau_short: s.meta.tau_short,
                tau_long: s.meta.tau_long,
                norm,
            })
        })
        .collect()
}
