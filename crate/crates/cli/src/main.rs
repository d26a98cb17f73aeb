//! Command-line surface for dataset generation, training, evaluation,
//! inference and introspection.
//!
//! Exit codes: 0 on success, 1 on validation errors (bad arguments, bad
//! configs, mismatched shapes), 2 on runtime or numeric failures.

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use svehdr_core::dataio::{self, CfaPhase, CrfSpec, PfmImage, SampleMeta};
use svehdr_core::error::{Error, ErrorClass};
use svehdr_core::metrics::PuTable;
use svehdr_core::network::{count_params, estimate_flops, ModelConfig};
use svehdr_core::radiometry::{Crf, MaskWeighting, ALPHA_DEFAULT};
use svehdr_core::svc::FirstLayerKind;
use svehdr_core::train::{
    checkpoint_dtype, evaluate, generate_dataset, infer_frame, inspect_checkpoint,
    load_checkpoint, parse_kv_file, prepare_from_pairs, train, GenDataSpec, TrainConfig,
};
use svehdr_core::{Dtype, Result};

#[derive(Parser)]
#[command(name = "svehdr", version, about = "Single-shot dual-exposure Bayer HDR reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic train/val/test splits of simulated captures.
    GenData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Image extent as HxW (height divisible by 4, width by 2).
        #[arg(long, default_value = "480x480")]
        size: String,
        /// Long/short exposure-time ratio.
        #[arg(long, default_value_t = 16.0)]
        ratio: f64,
        /// Response curve: linear, gamma:G or file:PATH.
        #[arg(long, default_value = "linear")]
        crf: String,
        #[arg(long, default_value_t = 8)]
        bits: u32,
        /// Dynamic range of the scenes in stops.
        #[arg(long, default_value_t = 8.0)]
        stops: f64,
        #[arg(long, default_value = "rggb")]
        cfa: String,
    },
    /// Turn directories of registered short/long PNG pairs into a dataset.
    Prep {
        #[arg(long)]
        short: PathBuf,
        #[arg(long)]
        long: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "tau-s", default_value_t = 0.0625)]
        tau_s: f64,
        #[arg(long, default_value_t = 16.0)]
        ratio: f64,
        #[arg(long, default_value_t = 8)]
        bits: u32,
        #[arg(long, default_value = "linear")]
        crf: String,
        #[arg(long, default_value = "rggb")]
        cfa: String,
    },
    /// Train a model from a key=value config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Score a checkpoint on a dataset split.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_parser = ["val", "test"])]
        split: String,
        #[arg(long)]
        ckpt: PathBuf,
        /// PU table file ("PU v1" format).
        #[arg(long)]
        pu: PathBuf,
        #[arg(long, default_value_t = ALPHA_DEFAULT)]
        alpha: f64,
        #[arg(long, default_value = "binary")]
        weighting: String,
        /// Write the report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct one capture to a radiance PFM (and optional display PNG).
    Infer {
        /// A {index}.bayer.png with its .meta.cfg sidecar.
        #[arg(long)]
        input: PathBuf,
        /// Response curve: linear, gamma:G, file:PATH or a bare table path.
        #[arg(long)]
        crf: String,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        png: Option<PathBuf>,
        #[arg(long, default_value_t = ALPHA_DEFAULT)]
        alpha: f64,
        #[arg(long, default_value = "binary")]
        weighting: String,
    },
    /// Parameter and FLOP accounting for a model config.
    Count {
        #[arg(long)]
        config: PathBuf,
        /// Resolution for the FLOP estimate, HxW.
        #[arg(long, default_value = "480x480")]
        res: String,
    },
    /// Run a verification suite.
    Check {
        #[arg(long, value_parser = ["grad", "equiv", "mask", "merge"])]
        suite: String,
    },
    /// Print the fusion scalars and write the guidance-feature heat map.
    Inspect {
        #[arg(long)]
        ckpt: PathBuf,
        /// A {index}.bayer.png with its .meta.cfg sidecar.
        #[arg(long)]
        sample: PathBuf,
        /// Heat-map output path (defaults to the sample name + .egb.png).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err}");
        std::process::exit(match err.class() {
            ErrorClass::Validation => 1,
            ErrorClass::Runtime => 2,
        });
    }
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let (h, w) = s
        .split_once('x')
        .ok_or_else(|| Error::InvalidArgument(format!("size must be HxW, got '{s}'")))?;
    let parse = |v: &str| {
        v.parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("bad extent '{v}' in '{s}'")))
    };
    Ok((parse(h)?, parse(w)?))
}

/// Accept "linear", "gamma:G", "file:PATH" or a bare path to a table file.
fn parse_crf_spec(s: &str) -> Result<CrfSpec> {
    match s.parse::<CrfSpec>() {
        Ok(spec) => Ok(spec),
        Err(e) => {
            if Path::new(s).exists() {
                Ok(CrfSpec::File(PathBuf::from(s)))
            } else {
                Err(e)
            }
        }
    }
}

/// Resolve the {index}.bayer.png -> {index}.meta.cfg sidecar path.
fn sidecar_for(input: &Path) -> Result<PathBuf> {
    let name = input
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::InvalidArgument(format!("bad input path {}", input.display())))?;
    let stem = name
        .strip_suffix(".bayer.png")
        .or_else(|| name.strip_suffix(".png"))
        .ok_or_else(|| {
            Error::InvalidArgument(format!("input must be a .bayer.png capture, got '{name}'"))
        })?;
    Ok(input.with_file_name(format!("{stem}.meta.cfg")))
}

fn load_frame(input: &Path) -> Result<(dataio::BayerFrame, SampleMeta)> {
    let meta = SampleMeta::load(&sidecar_for(input)?)?;
    let png = dataio::read_png(input, meta.bits)?;
    let exposure = dataio::ExposureMap::new(png.height(), meta.tau_short, meta.tau_long)?;
    let frame = dataio::BayerFrame::new(
        png.data().to_vec(),
        png.width(),
        png.height(),
        meta.bits,
        meta.cfa,
        exposure,
    )?;
    Ok((frame, meta))
}

fn jet(v: f64) -> [u8; 3] {
    let c = |x: f64| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
    [
        c(1.5 - (4.0 * v - 3.0).abs()),
        c(1.5 - (4.0 * v - 2.0).abs()),
        c(1.5 - (4.0 * v - 1.0).abs()),
    ]
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenData { out, count, seed, size, ratio, crf, bits, stops, cfa } => {
            let (height, width) = parse_size(&size)?;
            let spec = GenDataSpec {
                out,
                count,
                seed,
                height,
                width,
                ratio,
                crf: parse_crf_spec(&crf)?,
                bits,
                stops,
                cfa: cfa.parse::<CfaPhase>()?,
            };
            for (split, n) in generate_dataset(&spec)? {
                println!("{split}: {n} samples");
            }
            Ok(())
        }
        Command::Prep { short, long, out, tau_s, ratio, bits, crf, cfa } => {
            let n = prepare_from_pairs(
                &short,
                &long,
                &out,
                tau_s,
                ratio,
                bits,
                &parse_crf_spec(&crf)?,
                cfa.parse::<CfaPhase>()?,
            )?;
            println!("train: {n} samples");
            Ok(())
        }
        Command::Train { config, resume } => {
            let cfg = TrainConfig::load(&config)?;
            let outcome = match cfg.dtype {
                Dtype::F32 => train::<f32>(&cfg, resume.as_deref())?,
                Dtype::F64 => train::<f64>(&cfg, resume.as_deref())?,
            };
            println!(
                "trained {} iterations, loss {} -> {}, checkpoint {}",
                cfg.iterations,
                outcome.first_total.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
                outcome.last_total.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
                outcome.final_checkpoint.display()
            );
            Ok(())
        }
        Command::Eval { data, split, ckpt, pu, alpha, weighting, out } => {
            let table = PuTable::load(&pu)?;
            let weighting = weighting.parse::<MaskWeighting>()?;
            let provenance = vec![
                ("checkpoint".to_string(), ckpt.display().to_string()),
                ("split".to_string(), split.clone()),
                ("pu".to_string(), table.version().to_string()),
            ];
            let report = match checkpoint_dtype(&ckpt)? {
                Dtype::F32 => {
                    let c = load_checkpoint::<f32>(&ckpt)?;
                    evaluate(&data, &split, &c.model, &table, alpha, weighting, provenance)?
                }
                Dtype::F64 => {
                    let c = load_checkpoint::<f64>(&ckpt)?;
                    evaluate(&data, &split, &c.model, &table, alpha, weighting, provenance)?
                }
            };
            print!("{}", report.to_text());
            if let Some(path) = out {
                report.save(&path)?;
            }
            Ok(())
        }
        Command::Infer { input, crf, ckpt, out, png, alpha, weighting } => {
            let (frame, _meta) = load_frame(&input)?;
            let base = input.parent().unwrap_or_else(|| Path::new("."));
            let crf: Crf = parse_crf_spec(&crf)?.resolve(base)?;
            let weighting = weighting.parse::<MaskWeighting>()?;
            let radiance = match checkpoint_dtype(&ckpt)? {
                Dtype::F32 => {
                    let c = load_checkpoint::<f32>(&ckpt)?;
                    infer_frame(&frame, &crf, &c.model, alpha, weighting)?.radiance
                }
                Dtype::F64 => {
                    let c = load_checkpoint::<f64>(&ckpt)?;
                    infer_frame(&frame, &crf, &c.model, alpha, weighting)?.radiance
                }
            };
            dataio::write_pfm(
                &out,
                &PfmImage {
                    data: radiance.data().iter().map(|&v| v as f32).collect(),
                    width: radiance.width(),
                    height: radiance.height(),
                    channels: radiance.channels(),
                },
            )?;
            println!("wrote {}", out.display());
            if let Some(png_path) = png {
                let display = svehdr_core::radiometry::tonemap_display(&radiance)?;
                dataio::write_png(&png_path, &display)?;
                println!("wrote {}", png_path.display());
            }
            Ok(())
        }
        Command::Count { config, res } => {
            let kv = parse_kv_file(&config)?;
            let model = ModelConfig::from_kv(&kv)?;
            let (h, w) = parse_size(&res)?;
            let params = count_params(&model)?;
            let flops = estimate_flops(&model, h, w)?;
            println!("params: {params} ({:.3} x 10^6)", params as f64 / 1e6);
            println!("flops @ {h}x{w}: {flops} ({:.3} x 10^11)", flops as f64 / 1e11);
            for (anchor, label, value) in anchor_rows() {
                if anchor == model {
                    println!("anchor: {label} reference {value:.3} x 10^6 parameters");
                }
            }
            Ok(())
        }
        Command::Check { suite } => {
            let results = svehdr_core::checks::run_suite(&suite)?;
            let mut ok = true;
            for r in &results {
                println!("{} {} - {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                ok &= r.passed;
            }
            if !ok {
                return Err(Error::Numeric(format!("suite '{suite}' has failures")));
            }
            println!("suite '{suite}': all {} checks passed", results.len());
            Ok(())
        }
        Command::Inspect { ckpt, sample, out } => {
            let (frame, meta) = load_frame(&sample)?;
            let base = sample.parent().unwrap_or_else(|| Path::new("."));
            let crf = meta.crf.resolve(base)?;
            let report = match checkpoint_dtype(&ckpt)? {
                Dtype::F32 => inspect_loaded::<f32>(&ckpt, &frame, &crf)?,
                Dtype::F64 => inspect_loaded::<f64>(&ckpt, &frame, &crf)?,
            };
            for (i, beta) in report.betas.iter().enumerate() {
                println!("beta_{} = {beta}", i + 1);
            }
            println!("power iterations: {}", report.power_iterations);
            let out = out.unwrap_or_else(|| sample.with_extension("egb.png"));
            let mut rgb = Vec::with_capacity(report.heatmap.len() * 3);
            for &v in &report.heatmap {
                rgb.extend(jet(v).map(u16::from));
            }
            let img = dataio::IntImage::new(rgb, report.width, report.height, 3, 8)?;
            dataio::write_png(&out, &img)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn inspect_loaded<T: svehdr_core::Scalar>(
    ckpt: &Path,
    frame: &dataio::BayerFrame,
    crf: &Crf,
) -> Result<svehdr_core::train::InspectReport> {
    use svehdr_core::radiometry::{exposure_mask, normalize_for_network, to_radiance, NormParams};
    let c = load_checkpoint::<T>(ckpt)?;
    let rad = to_radiance(frame, crf)?;
    let norm = NormParams::linear_for(frame.exposure().tau_short());
    let e_norm = normalize_for_network::<T>(&rad, &norm)?;
    let mask = exposure_mask(frame, ALPHA_DEFAULT, MaskWeighting::Binary)?.to_tensor::<T>();
    inspect_checkpoint(&c.model, &e_norm, &mask)
}

/// The named reference configurations behind the parameter anchors.
fn anchor_rows() -> Vec<(ModelConfig, &'static str, f64)> {
    let rb = |head| ModelConfig::rb_only(head, 16);
    vec![
        (rb(FirstLayerKind::OptBase), "rb/opt_base", 1.221),
        (rb(FirstLayerKind::Opt22), "rb/opt_2_2", 1.222),
        (rb(FirstLayerKind::Opt42), "rb/opt_4_2", 1.225),
        (rb(FirstLayerKind::Opt44), "rb/opt_4_4", 1.238),
        (rb(FirstLayerKind::OptRggb), "rb/opt_rggb", 1.230),
        (rb(FirstLayerKind::SvcD), "rb/svc_d", 1.227),
        (rb(FirstLayerKind::Svc(3)), "rb/svc3", 1.225),
        (rb(FirstLayerKind::Svc(5)), "rb/svc5", 1.234),
        (rb(FirstLayerKind::Svc(7)), "rb/svc7", 1.246),
        (
            ModelConfig {
                rb_head: FirstLayerKind::OptBase,
                egb_head: FirstLayerKind::OptBase,
                ..ModelConfig::default()
            },
            "rb+egb",
            1.850,
        ),
        (ModelConfig::default(), "complete (rb+2xsvc+egb)", 1.875),
    ]
}
