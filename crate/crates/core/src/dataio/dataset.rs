//! On-disk dataset layout: one directory per split holding, per sample,
//! {index:05}.bayer.png, {index:05}.gt.pfm and {index:05}.meta.cfg.

use super::{read_pfm, read_png, write_pfm, write_png, BayerFrame, ExposureMap, IntImage,
    PfmImage, SampleMeta};
use crate::error::{Error, Result};
use crate::radiometry::{Crf, RadianceDomain, RadianceImage};
use std::path::Path;

#[derive(Debug, Clone)]
pub struct Sample {
    pub index: usize,
    pub frame: BayerFrame,
    pub ground_truth: RadianceImage,
    pub meta: SampleMeta,
    pub crf: Crf,
}

pub fn write_sample(
    dir: &Path,
    index: usize,
    frame: &BayerFrame,
    ground_truth: &RadianceImage,
    meta: &SampleMeta,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let bayer = IntImage::new(
        frame.values().to_vec(),
        frame.width(),
        frame.height(),
        1,
        frame.bits(),
    )?;
    write_png(&dir.join(format!("{index:05}.bayer.png")), &bayer)?;
    let linear = ground_truth.to_linear();
    let pfm = PfmImage {
        data: linear.data().iter().map(|&v| v as f32).collect(),
        width: linear.width(),
        height: linear.height(),
        channels: linear.channels(),
    };
    write_pfm(&dir.join(format!("{index:05}.gt.pfm")), &pfm)?;
    meta.save(&dir.join(format!("{index:05}.meta.cfg")))
}

/// Load every sample of a split directory in index order.
pub fn load_split(dir: &Path) -> Result<Vec<Sample>> {
    let mut indices = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix(".bayer.png") {
            if let Ok(idx) = stem.parse::<usize>() {
                indices.push(idx);
            }
        }
    }
    indices.sort_unstable();
    if indices.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no samples found under {}",
            dir.display()
        )));
    }
    indices.iter().map(|&index| load_sample(dir, index)).collect()
}

pub fn load_sample(dir: &Path, index: usize) -> Result<Sample> {
    let meta = SampleMeta::load(&dir.join(format!("{index:05}.meta.cfg")))?;
    let crf = meta.crf.resolve(dir)?;
    let png = read_png(&dir.join(format!("{index:05}.bayer.png")), meta.bits)?;
    if png.channels() != 1 {
        return Err(Error::InvalidArgument(format!(
            "sample {index}: bayer image must be single-channel"
        )));
    }
    let exposure = ExposureMap::new(png.height(), meta.tau_short, meta.tau_long)?;
    let frame = BayerFrame::new(
        png.data().to_vec(),
        png.width(),
        png.height(),
        meta.bits,
        meta.cfa,
        exposure,
    )?;
    let pfm = read_pfm(&dir.join(format!("{index:05}.gt.pfm")))?;
    let ground_truth = RadianceImage::new(
        pfm.data.iter().map(|&v| v as f64).collect(),
        pfm.width,
        pfm.height,
        pfm.channels,
        RadianceDomain::Linear,
        meta.tau_short,
        meta.tau_long,
    )?;
    if ground_truth.width() != frame.width() || ground_truth.height() != frame.height() {
        return Err(Error::ShapeMismatch {
            op: "load_sample",
            detail: format!(
                "sample {index}: frame {}x{} vs ground truth {}x{}",
                frame.height(),
                frame.width(),
                ground_truth.height(),
                ground_truth.width()
            ),
        });
    }
    Ok(Sample { index, frame, ground_truth, meta, crf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{gen_synthetic_scene, simulate_from_scene, CfaPhase, CrfSpec};

    #[test]
    fn write_then_load_roundtrips_a_sample() {
        let dir = tempfile::tempdir().unwrap();
        let scene = gen_synthetic_scene(5, 16, 8, 6.0).unwrap();
        let (frame, gt) =
            simulate_from_scene(&scene, &Crf::Linear, 0.9, 14.4, 8, CfaPhase::Rggb).unwrap();
        let meta = SampleMeta {
            bits: 8,
            tau_short: 0.9,
            tau_long: 14.4,
            cfa: CfaPhase::Rggb,
            crf: CrfSpec::Linear,
        };
        write_sample(dir.path(), 3, &frame, &gt, &meta).unwrap();
        let samples = load_split(dir.path()).unwrap();
        assert_eq!(samples.len(), 1);
        let s = &samples[0];
        assert_eq!(s.index, 3);
        assert_eq!(s.frame, frame);
        assert_eq!(s.meta, meta);
        // ground truth went through f32, so compare at f32 precision
        for (a, b) in s.ground_truth.data().iter().zip(gt.data()) {
            assert_eq!(*a, *b as f32 as f64);
        }
    }
}
