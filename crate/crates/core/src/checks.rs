//! Self-contained verification suites runnable from the command line.
//!
//! Each suite cross-checks an optimized implementation against the literal
//! reference implementations in [`crate::oracle`] or against central finite
//! differences, on seeded random cases. The test suite asserts these same
//! results; the `check` subcommand prints them.

use crate::conv::{conv2d, pack_rggb, pixel_shuffle, pixel_unshuffle, unpack_rggb};
use crate::dataio::{CfaPhase, ExposureMap, ExposurePair, IntImage};
use crate::error::Result;
use crate::gradcheck::grad_check;
use crate::loss::total_loss;
use crate::network::{build_model, Fusion, Model, ModelConfig};
use crate::oracle;
use crate::radiometry::{exposure_mask, Crf, MaskWeighting, ALPHA_DEFAULT};
use crate::svc::{svc_forward, FirstLayerKind, SvcWeights};
use crate::tape::{Tape, Var};
use crate::tensor::{max_rel_diff, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn measured(name: &str, value: f64, bound: f64) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            passed: value <= bound,
            detail: format!("max err {value:.3e} (bound {bound:.0e})"),
        }
    }

    fn boolean(name: &str, passed: bool, detail: impl Into<String>) -> CheckResult {
        CheckResult { name: name.to_string(), passed, detail: detail.into() }
    }
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}

pub fn run_suite(name: &str) -> Result<Vec<CheckResult>> {
    match name {
        "grad" => suite_grad(),
        "equiv" => suite_equiv(),
        "mask" => Ok(suite_mask()),
        "merge" => suite_merge(),
        other => Err(crate::error::Error::InvalidArgument(format!(
            "unknown suite '{other}' (expected grad, equiv, mask or merge)"
        ))),
    }
}

// ── equivalence suite ───────────────────────────────────────────────

/// Brute-force equivalences: conv2d and pixel_shuffle against loop oracles
/// on 50 random shapes each, SVC against the literal eight-equation oracle,
/// the packing equivalence, and the tied-weights identities.
pub fn suite_equiv() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);

    // conv2d on 50 random shapes, strides 1/2/4, kernels 1..5
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (n, ci, co) = (rng.random_range(1..3), rng.random_range(1..4), rng.random_range(1..5));
        let k = rng.random_range(1..6);
        let stride = [(1, 1), (1, 1), (2, 2), (4, 4)][rng.random_range(0..4)];
        let pad = (rng.random_range(0..3), rng.random_range(0..3));
        let h = rng.random_range(k + 3..14);
        let w = rng.random_range(k + 3..14);
        let x = Tensor::<f64>::rand_uniform([n, ci, h, w], 1.0, &mut rng);
        let wt = Tensor::<f64>::rand_uniform([co, ci, k, k], 1.0, &mut rng);
        let bias: Vec<f64> = (0..co).map(|_| rng.random::<f64>() - 0.5).collect();
        let fast = conv2d(&x, &wt, Some(&bias), stride, pad)?;
        let slow = oracle::conv2d_naive(&x, &wt, Some(&bias), stride, pad)?;
        worst = worst.max(max_rel_diff(&fast, &slow)?);
    }
    out.push(CheckResult::measured("conv2d vs loop oracle (50 shapes)", worst, 1e-12));

    // pixel shuffle law + inverse roundtrip on 50 random shapes
    let mut worst = 0.0f64;
    let mut roundtrip_exact = true;
    for _ in 0..50 {
        let f = rng.random_range(1..5);
        let c = f * f * rng.random_range(1..4);
        let x = Tensor::<f64>::rand_uniform(
            [rng.random_range(1..3), c, rng.random_range(1..5), rng.random_range(1..5)],
            1.0,
            &mut rng,
        );
        let y = pixel_shuffle(&x, f)?;
        worst = worst.max(max_rel_diff(&y, &oracle::pixel_shuffle_naive(&x, f))?);
        roundtrip_exact &= pixel_unshuffle(&y, f)? == x;
    }
    out.push(CheckResult::measured("pixel_shuffle vs index oracle (50 shapes)", worst, 1e-12));
    out.push(CheckResult::boolean(
        "pixel_unshuffle . pixel_shuffle = identity",
        roundtrip_exact,
        "bit-exact roundtrip",
    ));

    // SVC vs the literal eight-equation oracle, kernels 3/5/7
    let mut worst = 0.0f64;
    for case in 0..50 {
        let k = [3usize, 5, 7][case % 3];
        let (ci, co) = (rng.random_range(1..3), rng.random_range(1..4));
        let h = 4 * rng.random_range(1..4);
        let w = 2 * rng.random_range(2..6);
        let x = Tensor::<f64>::rand_uniform([1, ci, h, w], 1.0, &mut rng);
        let banks: Vec<_> =
            (0..8).map(|_| Tensor::<f64>::rand_uniform([co, ci, k, k], 1.0, &mut rng)).collect();
        let biases: Vec<Vec<f64>> =
            (0..8).map(|_| (0..co).map(|_| rng.random::<f64>() - 0.5).collect()).collect();
        let weights = SvcWeights::new(banks.clone(), biases.clone())?;
        let fast = svc_forward(&x, &weights)?;
        let slow = oracle::svc_forward_naive(&x, &banks, &biases);
        worst = worst.max(max_rel_diff(&fast, &slow)?);
    }
    out.push(CheckResult::measured("svc vs eight-equation oracle (50 cases)", worst, 1e-12));

    // packing equivalence: conv(bayer, 2x2, stride 2) equals conv of the
    // packed planes with the rearranged 1x1 kernel
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let co = rng.random_range(1..5);
        let h = 2 * rng.random_range(2..7);
        let w = 2 * rng.random_range(2..7);
        let x = Tensor::<f64>::rand_uniform([1, 1, h, w], 1.0, &mut rng);
        let k22 = Tensor::<f64>::rand_uniform([co, 1, 2, 2], 1.0, &mut rng);
        let direct = conv2d(&x, &k22, None, (2, 2), (0, 0))?;
        // packed channel 2a + b holds pixel (2r + a, 2c + b)
        let mut k11 = Tensor::<f64>::zeros([co, 4, 1, 1]);
        for c in 0..co {
            for a in 0..2 {
                for b in 0..2 {
                    *k11.at_mut(c, 2 * a + b, 0, 0) = k22.at(c, 0, a, b);
                }
            }
        }
        let packed = conv2d(&pack_rggb(&x)?, &k11, None, (1, 1), (0, 0))?;
        worst = worst.max(max_rel_diff(&direct, &packed)?);
    }
    out.push(CheckResult::measured("packing equivalence (2x2/s2 vs packed 1x1)", worst, 1e-12));

    // pack/unpack roundtrip
    let x = Tensor::<f64>::rand_uniform([2, 1, 8, 6], 1.0, &mut rng);
    out.push(CheckResult::boolean(
        "unpack_rggb . pack_rggb = identity",
        unpack_rggb(&pack_rggb(&x)?)? == x,
        "bit-exact roundtrip",
    ));

    // tied SVC equals the four-bank variant exactly
    let k = 5;
    let x = Tensor::<f64>::rand_uniform([1, 2, 8, 6], 1.0, &mut rng);
    let banks: Vec<_> =
        (0..8).map(|_| Tensor::<f64>::rand_uniform([3, 2, k, k], 1.0, &mut rng)).collect();
    let biases: Vec<Vec<f64>> =
        (0..8).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
    let tied = SvcWeights::new(banks.clone(), biases.clone())?.tie_svc_d();
    let full = svc_forward(&x, &tied)?;
    let bank_refs: Vec<&Tensor<f64>> = banks[..4].iter().collect();
    let bias_refs: Vec<&[f64]> = biases[..4].iter().map(|b| b.as_slice()).collect();
    let four = crate::svc::svc_forward_kernel(&x, &bank_refs, &bias_refs)?;
    out.push(CheckResult::boolean(
        "svc_d = tied svc",
        full == four,
        "bit-exact agreement of the 4-bank and tied 8-bank paths",
    ));

    // equal banks collapse to an ordinary convolution
    let same_bank = Tensor::<f64>::rand_uniform([3, 2, k, k], 1.0, &mut rng);
    let same_bias: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
    let all_equal = SvcWeights::new(vec![same_bank.clone(); 8], vec![same_bias.clone(); 8])?;
    let svc_out = svc_forward(&x, &all_equal)?;
    let conv_out = conv2d(&x, &same_bank, Some(&same_bias), (1, 1), (2, 2))?;
    out.push(CheckResult::boolean(
        "svc with equal banks = conv2d",
        svc_out == conv_out,
        "bit-exact collapse to the shared-weight convolution",
    ));

    // phase disjointness: perturbing bank p moves only its lattice positions
    let mut disjoint = true;
    let base = svc_forward(&x, &SvcWeights::new(banks.clone(), biases.clone())?)?;
    for p in 0..8 {
        let mut pert = banks.clone();
        pert[p] = pert[p].map(|v| v + 0.5);
        let moved = svc_forward(&x, &SvcWeights::new(pert, biases.clone())?)?;
        let [_, co_n, h, w] = base.shape();
        for c in 0..co_n {
            for row in 0..h {
                for col in 0..w {
                    let changed = base.at(0, c, row, col) != moved.at(0, c, row, col);
                    let owns = crate::svc::pattern_index(row, col) == p + 1;
                    if changed && !owns {
                        disjoint = false;
                    }
                }
            }
        }
    }
    out.push(CheckResult::boolean(
        "bank perturbation stays on its pattern lattice",
        disjoint,
        "phase disjointness over all 8 banks",
    ));

    Ok(out)
}

// ── gradient suite ──────────────────────────────────────────────────

/// Finite-difference check for a loss built on a fresh tape from parameter
/// leaves. The builder receives leaf vars in parameter order.
fn fd_on_tape<F>(
    name: &str,
    params: Vec<Tensor<f64>>,
    names: Vec<&str>,
    tol: f64,
    build: F,
) -> Result<CheckResult>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    let report = grad_check(
        |ps, want| {
            let mut tape = Tape::new();
            let vars: Vec<Var> = ps.iter().map(|p| tape.leaf(p.clone(), true)).collect();
            let loss = build(&mut tape, &vars)?;
            let val = tape.value(loss).data()[0];
            if want {
                tape.backward(loss)?;
                let grads = vars
                    .iter()
                    .zip(ps)
                    .map(|(v, p)| tape.grad(*v).cloned().unwrap_or_else(|| Tensor::zeros(p.shape())))
                    .collect();
                Ok((val, Some(grads)))
            } else {
                Ok((val, None))
            }
        },
        &params,
        &names,
        tol,
        1e-6,
    )?;
    Ok(CheckResult::measured(name, report.max_rel_error, tol))
}

/// The two-block miniature used by the model-level gradient checks.
pub fn miniature_config() -> ModelConfig {
    ModelConfig {
        rb_blocks: 2,
        egb_blocks: 2,
        channels: 6,
        egb_c: 3,
        rb_head: FirstLayerKind::Svc(3),
        egb_head: FirstLayerKind::OptRggb,
        fusion: Fusion::EgbBeta,
        beta_init: 0.9,
    }
}

/// Finite-difference check over a subset of a model's parameters under the
/// training loss.
fn fd_model_subset(
    name: &str,
    model: &Model<f64>,
    input: &Tensor<f64>,
    mask: &Tensor<f64>,
    gt: &Tensor<f64>,
    select: impl Fn(&str) -> bool,
    tol: f64,
) -> Result<CheckResult> {
    let all = model.named_params();
    let idx: Vec<usize> = all
        .iter()
        .enumerate()
        .filter(|(_, (n, _))| select(n))
        .map(|(i, _)| i)
        .collect();
    let params: Vec<Tensor<f64>> = idx.iter().map(|&i| all[i].1.clone()).collect();
    let names: Vec<String> = idx.iter().map(|&i| all[i].0.clone()).collect();
    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    drop(all);

    let report = grad_check(
        |ps, want| {
            let mut m = model.clone();
            {
                let mut slots = m.named_params_mut();
                for (p, &i) in ps.iter().zip(&idx) {
                    *slots[i].1 = p.clone();
                }
            }
            let mut tape = Tape::new();
            let fwd = m.forward_taped(&mut tape, input, Some(mask), true)?;
            let gt_var = tape.leaf(gt.clone(), false);
            let (vars, value) = total_loss(&mut tape, fwd.output, gt_var, 0.1)?;
            if want {
                tape.backward(vars.total)?;
                let grads = idx
                    .iter()
                    .map(|&i| {
                        let (_, v) = fwd.params[i];
                        tape.grad(v).cloned().unwrap_or_else(|| {
                            Tensor::zeros(model.named_params()[i].1.shape())
                        })
                    })
                    .collect();
                Ok((value.total, Some(grads)))
            } else {
                Ok((value.total, None))
            }
        },
        &params,
        &name_refs,
        tol,
        1e-6,
    )?;
    Ok(CheckResult::measured(name, report.max_rel_error, tol))
}

/// Finite-difference verification of every backward rule and of the
/// two-block miniature of the complete model.
pub fn suite_grad() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6ead);

    // conv2d 3x3 stride 1 (x, w, b), loss = sum(y^2)/2
    let x = Tensor::<f64>::rand_uniform([2, 2, 6, 6], 1.0, &mut rng);
    let w = Tensor::<f64>::rand_uniform([3, 2, 3, 3], 0.6, &mut rng);
    let b = Tensor::<f64>::rand_uniform([1, 3, 1, 1], 0.3, &mut rng);
    out.push(fd_on_tape(
        "conv2d 3x3/s1 gradients",
        vec![x, w, b],
        vec!["x", "w", "b"],
        1e-6,
        |tape, vs| {
            let y = tape.conv2d(vs[0], vs[1], Some(vs[2]), (1, 1), (1, 1))?;
            let sq = tape.mul(y, y)?;
            let n = tape.value(sq).numel() as f64;
            let s = tape.sum_all(sq);
            Ok(tape.scale(s, 0.5 / n))
        },
    )?);

    // strided even-kernel conv + pixel shuffle (the sub-pixel head shape)
    let x = Tensor::<f64>::rand_uniform([1, 1, 8, 8], 1.0, &mut rng);
    let w = Tensor::<f64>::rand_uniform([8, 1, 4, 4], 0.5, &mut rng);
    let b = Tensor::<f64>::rand_uniform([1, 8, 1, 1], 0.2, &mut rng);
    out.push(fd_on_tape(
        "conv2d 4x4/s2 + pixel_shuffle gradients",
        vec![x, w, b],
        vec!["x", "w", "b"],
        1e-6,
        |tape, vs| {
            let y = tape.conv2d(vs[0], vs[1], Some(vs[2]), (2, 2), (1, 1))?;
            let up = tape.pixel_shuffle(y, 2)?;
            let sq = tape.mul(up, up)?;
            let n = tape.value(sq).numel() as f64;
            let s = tape.sum_all(sq);
            Ok(tape.scale(s, 0.5 / n))
        },
    )?);

    // packed path (pack_rggb then 3x3 conv)
    let x = Tensor::<f64>::rand_uniform([1, 1, 8, 8], 1.0, &mut rng);
    let w = Tensor::<f64>::rand_uniform([4, 4, 3, 3], 0.4, &mut rng);
    out.push(fd_on_tape(
        "pack_rggb + conv2d gradients",
        vec![x, w],
        vec!["x", "w"],
        1e-6,
        |tape, vs| {
            let packed = tape.pack_rggb(vs[0])?;
            let y = tape.conv2d(packed, vs[1], None, (1, 1), (1, 1))?;
            let sq = tape.mul(y, y)?;
            let n = tape.value(sq).numel() as f64;
            let s = tape.sum_all(sq);
            Ok(tape.scale(s, 0.5 / n))
        },
    )?);

    // SVC layer, eight banks of 5x5
    let x = Tensor::<f64>::rand_uniform([1, 1, 8, 6], 1.0, &mut rng);
    let mut params = vec![x];
    let mut names = vec!["x".to_string()];
    for p in 0..8 {
        params.push(Tensor::<f64>::rand_uniform([2, 1, 5, 5], 0.4, &mut rng));
        names.push(format!("bank{}", p + 1));
    }
    for p in 0..8 {
        params.push(Tensor::<f64>::rand_uniform([1, 2, 1, 1], 0.2, &mut rng));
        names.push(format!("bias{}", p + 1));
    }
    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    out.push(fd_on_tape(
        "svc (8 banks, 5x5) gradients",
        params,
        name_refs,
        1e-5,
        |tape, vs| {
            let banks = &vs[1..9];
            let biases = &vs[9..17];
            let y = tape.svc(vs[0], banks, biases)?;
            let sq = tape.mul(y, y)?;
            let n = tape.value(sq).numel() as f64;
            let s = tape.sum_all(sq);
            Ok(tape.scale(s, 0.5 / n))
        },
    )?);

    // the tie relation: gradient of a tied bank equals the sum of the two
    // untied bank gradients evaluated at the same (mirrored) weights
    {
        let mut rng2 = ChaCha8Rng::seed_from_u64(0x71e);
        let x = Tensor::<f64>::rand_uniform([1, 1, 8, 6], 1.0, &mut rng2);
        let four: Vec<_> =
            (0..4).map(|_| Tensor::<f64>::rand_uniform([2, 1, 3, 3], 0.5, &mut rng2)).collect();
        let biases: Vec<_> =
            (0..4).map(|_| Tensor::<f64>::rand_uniform([1, 2, 1, 1], 0.2, &mut rng2)).collect();

        let run = |bank_tensors: Vec<Tensor<f64>>, bias_tensors: Vec<Tensor<f64>>| -> Result<Vec<Tensor<f64>>> {
            let mut tape = Tape::new();
            let xv = tape.leaf(x.clone(), false);
            let bank_vars: Vec<Var> =
                bank_tensors.into_iter().map(|t| tape.leaf(t, true)).collect();
            let bias_vars: Vec<Var> =
                bias_tensors.into_iter().map(|t| tape.leaf(t, true)).collect();
            let y = tape.svc(xv, &bank_vars, &bias_vars)?;
            let sq = tape.mul(y, y)?;
            let s = tape.sum_all(sq);
            let loss = tape.scale(s, 0.5);
            tape.backward(loss)?;
            Ok(bank_vars.iter().map(|v| tape.take_grad(*v).unwrap()).collect())
        };

        let tied_grads = run(four.clone(), biases.clone())?;
        let mut eight = four.clone();
        eight.extend(four.clone());
        let mut eight_biases = biases.clone();
        eight_biases.extend(biases.clone());
        let untied_grads = run(eight, eight_biases)?;
        let mut worst = 0.0f64;
        for p in 0..4 {
            let mut summed = untied_grads[p].clone();
            for (s, &u) in summed.data_mut().iter_mut().zip(untied_grads[p + 4].data()) {
                *s += u;
            }
            worst = worst.max(max_rel_diff(&tied_grads[p], &summed)?);
        }
        out.push(CheckResult::measured(
            "tied bank gradient = sum of untied pair",
            worst,
            1e-12,
        ));
    }

    // conv-ReLU-conv chain
    let x = Tensor::<f64>::rand_uniform([1, 2, 6, 6], 1.0, &mut rng);
    let w1 = Tensor::<f64>::rand_uniform([3, 2, 3, 3], 0.5, &mut rng);
    let w2 = Tensor::<f64>::rand_uniform([2, 3, 3, 3], 0.5, &mut rng);
    out.push(fd_on_tape(
        "conv-relu-conv gradients",
        vec![x, w1, w2],
        vec!["x", "w1", "w2"],
        1e-5,
        |tape, vs| {
            let y1 = tape.conv2d(vs[0], vs[1], None, (1, 1), (1, 1))?;
            let r = tape.relu(y1);
            let y2 = tape.conv2d(r, vs[2], None, (1, 1), (1, 1))?;
            let sq = tape.mul(y2, y2)?;
            let n = tape.value(sq).numel() as f64;
            let s = tape.sum_all(sq);
            Ok(tape.scale(s, 0.5 / n))
        },
    )?);

    // losses on a direct prediction leaf
    let pred = Tensor::<f64>::rand_uniform([1, 3, 5, 4], 0.4, &mut rng).map(|v| v + 0.6);
    let gt = Tensor::<f64>::rand_uniform([1, 3, 5, 4], 0.4, &mut rng).map(|v| v + 0.6);
    out.push(fd_on_tape(
        "l1 + lambda color loss gradients",
        vec![pred],
        vec!["pred"],
        1e-6,
        move |tape, vs| {
            let gt_var = tape.leaf(gt.clone(), false);
            let (vars, _) = total_loss(tape, vs[0], gt_var, 0.1)?;
            Ok(vars.total)
        },
    )?);

    // model-level checks on the miniature
    let model: Model<f64> = build_model(&miniature_config(), 21)?;
    let mut rng3 = ChaCha8Rng::seed_from_u64(0xda7a);
    let e = Tensor::<f64>::rand_uniform([1, 1, 8, 8], 0.4, &mut rng3).map(|v| v + 0.5);
    let mask = Tensor::<f64>::rand_uniform([1, 1, 8, 8], 0.5, &mut rng3)
        .map(|v| if v > 0.0 { 1.0 } else { 0.6 });
    let gt = Tensor::<f64>::rand_uniform([1, 3, 8, 8], 0.4, &mut rng3).map(|v| v + 0.5);

    out.push(fd_model_subset(
        "fusion scalar (beta) gradients",
        &model,
        &e,
        &mask,
        &gt,
        |n| n.starts_with("beta_"),
        1e-6,
    )?);

    out.push(fd_model_subset(
        "two-block miniature model, all parameters",
        &model,
        &e,
        &mask,
        &gt,
        |_| true,
        1e-5,
    )?);

    Ok(out)
}

// ── mask suite ──────────────────────────────────────────────────────

fn frame_rows(short_val: u16, long_val: u16) -> crate::dataio::BayerFrame {
    let mut values = vec![0u16; 8];
    for row in 0..4usize {
        for col in 0..2 {
            values[row * 2 + col] = if row < 2 { short_val } else { long_val };
        }
    }
    crate::dataio::BayerFrame::new(
        values,
        2,
        4,
        8,
        CfaPhase::Rggb,
        ExposureMap::new(4, 0.01, 0.16).unwrap(),
    )
    .unwrap()
}

/// The derived mask boundary cases at alpha = 3.92%, N = 8, plus the
/// class-isolation and soft-weighting properties.
pub fn suite_mask() -> Vec<CheckResult> {
    let mut out = Vec::new();
    let b = |f: &crate::dataio::BayerFrame| {
        exposure_mask(f, ALPHA_DEFAULT, MaskWeighting::Binary).unwrap()
    };
    let m0 = b(&frame_rows(9, 246));
    let m1 = b(&frame_rows(10, 245));
    out.push(CheckResult::boolean(
        "binary boundaries: short 9->0, 10->1; long 246->0, 245->1",
        m0.at(0, 0) == 0.0 && m1.at(0, 0) == 1.0 && m0.at(2, 0) == 0.0 && m1.at(2, 0) == 1.0,
        format!(
            "alpha*255 = {:.3}, (1-alpha)*255 = {:.3}",
            ALPHA_DEFAULT * 255.0,
            (1.0 - ALPHA_DEFAULT) * 255.0
        ),
    ));

    let crossed = b(&frame_rows(246, 9));
    out.push(CheckResult::boolean(
        "no cross-class masking (bright short / dark long kept)",
        crossed.data().iter().all(|&v| v == 1.0),
        "ill-exposure is class-specific",
    ));

    let tiny = exposure_mask(&frame_rows(1, 254), 1e-9, MaskWeighting::Binary).unwrap();
    out.push(CheckResult::boolean(
        "alpha -> 0 keeps everything off the rails",
        tiny.data().iter().all(|&v| v == 1.0),
        "limit case",
    ));

    let tri = exposure_mask(&frame_rows(0, 255), 0.1, MaskWeighting::DebevecTriangle).unwrap();
    out.push(CheckResult::boolean(
        "triangle weighting vanishes at both rails",
        tri.at(0, 0) == 0.0 && tri.at(2, 0) == 0.0,
        "min(z, zmax - z) at z in {0, zmax}",
    ));

    let gauss = exposure_mask(&frame_rows(0, 255), 0.1, MaskWeighting::RobertsonGaussian).unwrap();
    let rail = (-4.0f64).exp();
    out.push(CheckResult::boolean(
        "gaussian weighting is exp(-4) at the rails",
        (gauss.at(0, 0) - rail).abs() < 1e-15 && (gauss.at(2, 0) - rail).abs() < 1e-15,
        "exp(-4 (z - mid)^2 / mid^2)",
    ));
    out
}

// ── merge suite ─────────────────────────────────────────────────────

fn const_image(v: u16, w: usize, h: usize) -> IntImage {
    IntImage::new(vec![v; w * h * 3], w, h, 3, 8).unwrap()
}

/// The merged-radiance identities plus the scalar-oracle comparison.
pub fn suite_merge() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();

    // exactly consistent observations recover the radiance to 1e-10
    let pair = ExposurePair::new(const_image(41, 4, 4), const_image(164, 4, 4), 10.0, 40.0)?;
    let merged = crate::dataio::merge_ground_truth(&pair, &Crf::Linear)?;
    let expected = 41.0 / 255.0 / 10.0;
    out.push(CheckResult::measured(
        "consistent mid-range pair recovers radiance",
        (merged.at(0, 0, 0) - expected).abs() / expected,
        1e-10,
    ));

    // saturated long exposure defers to the short one
    let pair = ExposurePair::new(const_image(120, 4, 4), const_image(255, 4, 4), 4.0, 64.0)?;
    let merged = crate::dataio::merge_ground_truth(&pair, &Crf::Linear)?;
    let expected = 120.0 / 255.0 / 4.0;
    out.push(CheckResult::measured(
        "saturated long exposure -> short-only estimate",
        (merged.at(1, 1, 1) - expected).abs() / expected,
        1e-12,
    ));

    // random field under a gamma-2.2 response vs the scalar oracle
    let mut rng = ChaCha8Rng::seed_from_u64(0x3e6e);
    let crf = Crf::gamma(2.2)?;
    let (tau_s, tau_l) = (0.05, 0.8);
    let random_image = |rng: &mut ChaCha8Rng| {
        IntImage::new(
            (0..6 * 6 * 3).map(|_| rng.random_range(0..=255)).collect(),
            6,
            6,
            3,
            8,
        )
        .unwrap()
    };
    let short = random_image(&mut rng);
    let long = random_image(&mut rng);
    let pair = ExposurePair::new(short.clone(), long.clone(), tau_s, tau_l)?;
    let merged = crate::dataio::merge_ground_truth(&pair, &crf)?;
    let mut worst = 0.0f64;
    for row in 0..6 {
        for col in 0..6 {
            for ch in 0..3 {
                let inv = |z: f64| crf.inverse(ch, z);
                let expected = oracle::merge_scalar(
                    short.at(row, col, ch),
                    long.at(row, col, ch),
                    tau_s,
                    tau_l,
                    &inv,
                    8,
                );
                let got = merged.at(row, col, ch);
                worst = worst.max((got - expected).abs() / expected.abs().max(1.0));
            }
        }
    }
    out.push(CheckResult::measured("merge vs scalar oracle (gamma 2.2)", worst, 1e-9));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_green(results: &[CheckResult]) {
        for r in results {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn equivalence_suite_is_green() {
        let results = suite_equiv().unwrap();
        assert_green(&results);
        assert!(results.len() >= 8);
    }

    #[test]
    fn mask_suite_is_green() {
        assert_green(&suite_mask());
    }

    #[test]
    fn merge_suite_is_green() {
        assert_green(&suite_merge().unwrap());
    }
}
