//! End-to-end exercises of the command-line surface through the built
//! binary: dataset generation, training, counting, checking, evaluation,
//! inference and inspection, plus the exit-code contract.

use std::path::Path;
use std::process::{Command, Output};

fn svehdr(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svehdr"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        stdout(out),
        String::from_utf8_lossy(&out.stderr)
    );
}

const TRAIN_CONFIG: &str = "\
model.rb_blocks = 1
model.egb_blocks = 1
model.channels = 4
model.egb_c = 2
model.rb_head = svc3
model.egb_head = opt_base
model.fusion = egb_beta
model.beta_init = 1.0
train.data = data
train.out = run
train.batch = 1
train.patch = 8
train.iterations = 6
train.ckpt_interval = 3
train.seed = 4
train.dtype = f64
";

#[test]
fn full_pipeline_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    // gen-data
    let out = svehdr(
        &[
            "gen-data", "--out", "data", "--count", "3", "--seed", "9", "--size", "16x16",
            "--ratio", "16", "--crf", "gamma:2.2", "--bits", "8", "--stops", "6",
        ],
        root,
    );
    assert_success(&out);
    assert!(stdout(&out).contains("train: 3"));
    assert!(root.join("data/train/00002.bayer.png").exists());
    assert!(root.join("data/val/00000.gt.pfm").exists());
    assert!(root.join("data/test/00000.meta.cfg").exists());

    // train
    std::fs::write(root.join("train.cfg"), TRAIN_CONFIG).unwrap();
    let out = svehdr(&["train", "--config", "train.cfg"], root);
    assert_success(&out);
    assert!(root.join("run/final.svehdr").exists());
    assert!(root.join("run/loss_log.txt").exists());

    // resume from the interval checkpoint reproduces the final file
    let final_bytes = std::fs::read(root.join("run/final.svehdr")).unwrap();
    let resumed_cfg = TRAIN_CONFIG.replace("train.out = run", "train.out = run2");
    std::fs::write(root.join("resume.cfg"), resumed_cfg).unwrap();
    let out = svehdr(
        &["train", "--config", "resume.cfg", "--resume", "run/ckpt_00000003.svehdr"],
        root,
    );
    assert_success(&out);
    assert_eq!(std::fs::read(root.join("run2/final.svehdr")).unwrap(), final_bytes);

    // eval with an identity PU table
    svehdr_core::metrics::PuTable::identity(1e-6, 4.0, 512)
        .save(&root.join("pu.txt"))
        .unwrap();
    let out = svehdr(
        &[
            "eval", "--data", "data", "--split", "val", "--ckpt", "run/final.svehdr", "--pu",
            "pu.txt", "--out", "report.txt",
        ],
        root,
    );
    assert_success(&out);
    let report = stdout(&out);
    assert!(report.contains("aggregate"), "report:\n{report}");
    assert_eq!(std::fs::read_to_string(root.join("report.txt")).unwrap(), report);

    // infer writes a PFM that re-reads bit-exactly plus an 8-bit PNG
    let out = svehdr(
        &[
            "infer", "--input", "data/val/00000.bayer.png", "--crf", "gamma:2.2", "--ckpt",
            "run/final.svehdr", "--out", "pred.pfm", "--png", "pred.png",
        ],
        root,
    );
    assert_success(&out);
    let first = std::fs::read(root.join("pred.pfm")).unwrap();
    let reread = svehdr_core::dataio::read_pfm(&root.join("pred.pfm")).unwrap();
    assert_eq!(reread.width, 16);
    assert_eq!(reread.height, 16);
    assert_eq!(reread.channels, 3);
    svehdr_core::dataio::write_pfm(&root.join("pred2.pfm"), &reread).unwrap();
    assert_eq!(std::fs::read(root.join("pred2.pfm")).unwrap(), first);
    let png = svehdr_core::dataio::read_png(&root.join("pred.png"), 8).unwrap();
    assert_eq!((png.width(), png.height(), png.channels()), (16, 16, 3));

    // inspect prints one beta and writes the heat map
    let out = svehdr(
        &[
            "inspect", "--ckpt", "run/final.svehdr", "--sample", "data/val/00000.bayer.png",
            "--out", "heat.png",
        ],
        root,
    );
    assert_success(&out);
    assert!(stdout(&out).contains("beta_1 = "));
    let heat = svehdr_core::dataio::read_png(&root.join("heat.png"), 8).unwrap();
    assert_eq!((heat.width(), heat.height()), (16, 16));
}

#[test]
fn count_reports_the_anchor() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("model.cfg"),
        "model.rb_blocks = 16\nmodel.egb_blocks = 0\nmodel.fusion = none\nmodel.rb_head = opt_base\n",
    )
    .unwrap();
    let out = svehdr(&["count", "--config", "model.cfg", "--res", "480x480"], dir.path());
    assert_success(&out);
    let text = stdout(&out);
    assert!(text.contains("params: 1220995 (1.221 x 10^6)"), "{text}");
    assert!(text.contains("(2.813 x 10^11)"), "{text}");
    assert!(text.contains("anchor: rb/opt_base"), "{text}");
}

#[test]
fn check_suites_pass() {
    let dir = tempfile::tempdir().unwrap();
    for suite in ["equiv", "mask", "merge", "grad"] {
        let out = svehdr(&["check", "--suite", suite], dir.path());
        assert_success(&out);
        assert!(stdout(&out).contains("all"), "suite {suite}: {}", stdout(&out));
    }
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    // validation error: malformed size
    let out = svehdr(
        &["gen-data", "--out", "d", "--count", "1", "--size", "banana"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    // validation error: config violates the patch alignment invariant
    std::fs::write(dir.path().join("bad.cfg"), "train.patch = 30\n").unwrap();
    let out = svehdr(&["train", "--config", "bad.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    // runtime error: checkpoint file does not exist
    let out = svehdr(
        &["eval", "--data", "d", "--split", "val", "--ckpt", "none.svehdr", "--pu", "none.txt"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    // usage error from the argument parser
    let out = svehdr(&["check", "--suite", "bogus"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}
