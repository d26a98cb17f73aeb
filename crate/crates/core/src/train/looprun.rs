//! The training loop: aligned patch batches, taped forward, loss, backward,
//! Adam at the cosine-annealed rate, periodic checkpoints and a loss log.
//!
//! Fully deterministic given (seed, config): the data stream is one seeded
//! rng whose state travels in the checkpoint, so a resumed run reproduces an
//! uninterrupted one bit for bit.

use super::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use super::config::TrainConfig;
use super::dataprep::{load_samples, LoadedSample};
use super::patch::{sample_patch, stack_batch};
use crate::error::{Error, Result};
use crate::loss::total_loss;
use crate::network::build_model;
use crate::optim::{AdamState, LrSchedule};
use crate::scalar::Scalar;
use crate::tape::Tape;
use crate::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::{Path, PathBuf};

/// One line of the loss log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossLogRow {
    pub iteration: u64,
    pub lr: f64,
    pub l1: f64,
    pub color: f64,
    pub total: f64,
}

impl std::fmt::Display for LossLogRow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // default float formatting is shortest-roundtrip, so logs are
        // bit-faithful records of the values
        write!(
            f,
            "{} {} {} {} {}",
            self.iteration, self.lr, self.l1, self.color, self.total
        )
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub final_checkpoint: PathBuf,
    pub log: Vec<LossLogRow>,
    pub first_total: Option<f64>,
    pub last_total: Option<f64>,
}

/// Stream id of the patch-sampling rng (weight init uses the default
/// stream of its own seeded rng inside `build_model`).
const DATA_STREAM: u64 = 1;

pub fn train<T: Scalar>(config: &TrainConfig, resume: Option<&Path>) -> Result<TrainOutcome> {
    config.validate()?;
    let samples: Vec<LoadedSample<T>> = load_samples(
        &config.data_dir.join("train"),
        config.mask_alpha,
        config.mask_weighting,
    )?;
    let schedule = LrSchedule::new(config.lr_initial, config.lr_final, config.iterations.max(1))?;

    let (mut model, mut opt, mut rng, start_iter) = match resume {
        Some(path) => {
            let ckpt: Checkpoint<T> = load_checkpoint(path)?;
            if ckpt.config != config.model {
                return Err(Error::CheckpointMismatch {
                    detail: "checkpoint model config differs from the requested one".into(),
                });
            }
            let opt = match ckpt.optimizer {
                Some(o) => o,
                None => {
                    let params: Vec<&Tensor<T>> =
                        ckpt.model.named_params().iter().map(|(_, t)| *t).collect();
                    AdamState::new(&params)
                }
            };
            (ckpt.model, opt, ckpt.rng, ckpt.iteration)
        }
        None => {
            let model = build_model::<T>(&config.model, config.seed)?;
            let params: Vec<&Tensor<T>> = model.named_params().iter().map(|(_, t)| *t).collect();
            let opt = AdamState::new(&params);
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(DATA_STREAM);
            (model, opt, rng, 0)
        }
    };

    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let log_path = config.out_dir.join("loss_log.txt");
    let mut log_file = std::fs::OpenOptions::new()
        .create(true)
        .append(resume.is_some())
        .write(true)
        .truncate(resume.is_none())
        .open(&log_path)
        .map_err(|e| Error::io(&log_path, e))?;

    let mut log = Vec::new();
    let mut first_total = None;
    let mut last_total = None;

    for it in start_iter..config.iterations {
        // batch assembly: fixed draw order (sample, row, column) per element
        let mut e_crops = Vec::with_capacity(config.batch);
        let mut m_crops = Vec::with_capacity(config.batch);
        let mut g_crops = Vec::with_capacity(config.batch);
        for _ in 0..config.batch {
            let idx = rng.random_range(0..samples.len());
            let p = sample_patch(&samples[idx], config.patch, &mut rng)?;
            e_crops.push(p.e_norm);
            m_crops.push(p.mask);
            g_crops.push(p.gt_norm);
        }
        let e = stack_batch(&e_crops.iter().collect::<Vec<_>>());
        let m = stack_batch(&m_crops.iter().collect::<Vec<_>>());
        let g = stack_batch(&g_crops.iter().collect::<Vec<_>>());

        let mut tape = Tape::new();
        let fwd = model.forward_taped(&mut tape, &e, Some(&m), true)?;
        let gt = tape.leaf(g, false);
        let (vars, value) = total_loss(&mut tape, fwd.output, gt, config.lambda)?;
        if !value.total.is_finite() {
            return Err(Error::NonFiniteLoss { iteration: it + 1, value: value.total });
        }
        tape.backward(vars.total)?;

        let mut grads = Vec::with_capacity(fwd.params.len());
        for (name, var) in &fwd.params {
            let g = tape.take_grad(*var).ok_or_else(|| Error::Numeric(format!(
                "no gradient for parameter '{name}'"
            )))?;
            grads.push(g);
        }
        let mut params = model.named_params_mut();
        let mut param_refs: Vec<(&str, &mut Tensor<T>)> =
            params.iter_mut().map(|(n, t)| (n.as_str(), &mut **t)).collect();
        let lr = opt.step_params(&schedule, &mut param_refs, &grads)?;
        drop(params);

        let row = LossLogRow {
            iteration: it + 1,
            lr,
            l1: value.l1,
            color: value.color,
            total: value.total,
        };
        writeln!(log_file, "{row}").map_err(|e| Error::io(&log_path, e))?;
        if first_total.is_none() {
            first_total = Some(value.total);
        }
        last_total = Some(value.total);
        log.push(row);

        if (it + 1) % config.ckpt_interval == 0 && it + 1 < config.iterations {
            let path = config.out_dir.join(format!("ckpt_{:08}.svehdr", it + 1));
            save_checkpoint(&path, &Checkpoint {
                config: config.model.clone(),
                iteration: it + 1,
                model: model.clone(),
                optimizer: Some(opt.clone()),
                rng: rng.clone(),
            })?;
        }
    }

    let final_path = config.out_dir.join("final.svehdr");
    save_checkpoint(&final_path, &Checkpoint {
        config: config.model.clone(),
        iteration: config.iterations,
        model,
        optimizer: Some(opt),
        rng,
    })?;
    Ok(TrainOutcome { final_checkpoint: final_path, log, first_total, last_total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{CfaPhase, CrfSpec};
    use crate::network::{Fusion, ModelConfig};
    use crate::svc::FirstLayerKind;
    use crate::train::dataprep::{generate_dataset, GenDataSpec};

    fn tiny_setup(dir: &Path, iterations: u64, out: &str) -> TrainConfig {
        generate_dataset(&GenDataSpec {
            out: dir.to_path_buf(),
            count: 2,
            seed: 11,
            height: 16,
            width: 16,
            ratio: 16.0,
            crf: CrfSpec::Linear,
            bits: 8,
            stops: 6.0,
            cfa: CfaPhase::Rggb,
        })
        .unwrap();
        TrainConfig {
            data_dir: dir.to_path_buf(),
            out_dir: dir.join(out),
            model: ModelConfig {
                rb_blocks: 1,
                egb_blocks: 1,
                channels: 4,
                egb_c: 2,
                rb_head: FirstLayerKind::Svc(3),
                egb_head: FirstLayerKind::OptBase,
                fusion: Fusion::EgbBeta,
                beta_init: 1.0,
            },
            batch: 1,
            patch: 8,
            iterations,
            lr_initial: 1e-3,
            lr_final: 1e-5,
            lambda: 0.1,
            seed: 3,
            ckpt_interval: 2,
            dtype: crate::scalar::Dtype::F64,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_iterations_checkpoint_equals_initialization() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_setup(dir.path(), 0, "run0");
        let outcome = train::<f64>(&config, None).unwrap();
        let ckpt = load_checkpoint::<f64>(&outcome.final_checkpoint).unwrap();
        let fresh = build_model::<f64>(&config.model, config.seed).unwrap();
        for ((n1, a), (n2, b)) in ckpt.model.named_params().iter().zip(fresh.named_params()) {
            assert_eq!(*n1, n2);
            assert_eq!(*a, b);
        }
        assert_eq!(ckpt.iteration, 0);
    }

    #[test]
    fn identical_runs_produce_identical_logs_and_checkpoints() {
        let dir = tempfile::tempdir().unwrap();
        let c1 = tiny_setup(dir.path(), 4, "runa");
        let o1 = train::<f64>(&c1, None).unwrap();
        let mut c2 = c1.clone();
        c2.out_dir = dir.path().join("runb");
        let o2 = train::<f64>(&c2, None).unwrap();
        assert_eq!(o1.log, o2.log);
        assert_eq!(
            std::fs::read(&o1.final_checkpoint).unwrap(),
            std::fs::read(&o2.final_checkpoint).unwrap()
        );
    }

    #[test]
    fn resume_matches_an_uninterrupted_run_bit_for_bit() {
        let dir = tempfile::tempdir().unwrap();
        // uninterrupted run to 6 with interval 2 leaves ckpt_00000004
        let c_full = tiny_setup(dir.path(), 6, "full");
        let full = train::<f64>(&c_full, None).unwrap();
        // resume from the interval checkpoint under the same config
        let mut c_tail = c_full.clone();
        c_tail.out_dir = dir.path().join("tail");
        let mid = c_full.out_dir.join("ckpt_00000004.svehdr");
        let tail = train::<f64>(&c_tail, Some(&mid)).unwrap();

        assert_eq!(tail.log.as_slice(), &full.log[4..]);
        assert_eq!(
            std::fs::read(&tail.final_checkpoint).unwrap(),
            std::fs::read(&full.final_checkpoint).unwrap()
        );
    }

    #[test]
    fn resume_rejects_a_different_architecture() {
        let dir = tempfile::tempdir().unwrap();
        let c = tiny_setup(dir.path(), 1, "base");
        let out = train::<f64>(&c, None).unwrap();
        let mut other = c.clone();
        other.model.channels = 8;
        other.out_dir = dir.path().join("other");
        assert!(matches!(
            train::<f64>(&other, Some(&out.final_checkpoint)),
            Err(Error::CheckpointMismatch { .. })
        ));
    }
}
