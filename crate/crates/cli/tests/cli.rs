use std::fs;
use std::path::{Path, PathBuf};

use stemcast::checkpoint::Checkpoint;
use stemcast::csvio::{load_csv, read_frame, write_frame};
use stemcast_core::datasets::{clean_sdv, DEFAULT_START_HOUR};
use tempfile::TempDir;

const TINY: &str = r#"
[data.synthetic]
n_hours = 600
noise_sigma = 0.1
seed = 4

[pipeline.train]
epochs = 4
pretrain_epochs = 4
learning_rate = 0.05
batch_size = 16

[pipeline.model]
kind = "wt-ed-lstm-am"

[pipeline.model.dims]
encoder = [8, 4]
predictor = 8
head = 8
lstm = 8
gru = [8, 8]
mlp = [32, 16]
"#;

fn run(args: &[&str]) -> i32 {
    stemcast::run(std::iter::once("stemcast").chain(args.iter().copied()))
}

fn tiny_config(dir: &Path) -> String {
    let path = dir.join("tiny.toml");
    fs::write(&path, TINY).unwrap();
    path.to_str().unwrap().to_string()
}

fn runs_of(out: &Path) -> Vec<PathBuf> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    dirs.sort();
    dirs
}

fn only_run(out: &Path) -> PathBuf {
    let dirs = runs_of(out);
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs[0].clone()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `epoch,train_loss,val_loss` columns, i.e. everything but wall-clock time.
fn loss_columns(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect()
}

fn kv(path: &Path, key: &str) -> f64 {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(|v| v.parse().unwrap()))
        .unwrap()
}

#[test]
fn generate_defaults_and_determinism() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a.csv"), tmp.path().join("b.csv"));
    assert_eq!(run(&["generate", "--out", s(&a)]), 0);
    assert_eq!(run(&["generate", "--out", s(&b), "--seed", "0"]), 0);
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    assert_eq!(load_csv(&a).unwrap().len(), 2160);
    // existing file needs --force
    assert_eq!(run(&["generate", "--out", s(&a)]), 1);
    assert_eq!(run(&["generate", "--out", s(&a), "--seed", "1", "--force"]), 0);
    assert_ne!(fs::read(&a).unwrap(), text);
}

#[test]
fn noiseless_file_matches_closed_form() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("clean.csv");
    assert_eq!(
        run(&[
            "generate",
            "--out",
            s(&path),
            "--synthetic",
            "n_hours=200,noise_sigma=0"
        ]),
        0
    );
    let frame = load_csv(&path).unwrap();
    assert_eq!(frame.timestamps()[0], DEFAULT_START_HOUR);
    for (i, v) in frame.target().iter().enumerate() {
        assert!((v - clean_sdv(DEFAULT_START_HOUR, i)).abs() < 1e-12);
    }
}

#[test]
fn generated_file_round_trips_bytewise() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("d.csv");
    assert_eq!(run(&["generate", "--out", s(&path), "--hours", "300"]), 0);
    let original = fs::read(&path).unwrap();
    let mut rewritten = Vec::new();
    write_frame(&read_frame(original.as_slice()).unwrap(), &mut rewritten).unwrap();
    assert_eq!(rewritten, original);
}

#[test]
fn persistence_trains_in_zero_epochs_and_reports() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_config(tmp.path());
    let out = tmp.path().join("runs");
    let args = [
        "train",
        "--config",
        &cfg,
        "--model",
        "persistence",
        "--out",
        s(&out),
        "--quiet",
    ];
    assert_eq!(run(&args), 0);
    let dir = only_run(&out);
    assert!(dir.file_name().unwrap().to_str().unwrap().starts_with("persistence-"));
    assert_eq!(
        fs::read_to_string(dir.join("train_record.csv"))
            .unwrap()
            .lines()
            .count(),
        1
    );
    let report = fs::read_to_string(dir.join("report.txt")).unwrap();
    assert!(report.contains("reference baseline"));
    assert!(kv(&dir.join("report.kv"), "rmse_abs") > 0.0);
    assert!(!dir.join("best.bin").exists());

    // same config hash: refuse, then overwrite with --force
    assert_eq!(run(&args), 1);
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(run(&forced), 0);
    assert_eq!(runs_of(&out).len(), 1);
}

#[test]
fn train_is_reproducible_and_learns() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_config(tmp.path());
    let (out1, out2) = (tmp.path().join("r1"), tmp.path().join("r2"));
    assert_eq!(run(&["train", "--config", &cfg, "--out", s(&out1), "--quiet"]), 0);
    assert_eq!(run(&["train", "--config", &cfg, "--out", s(&out2), "--quiet"]), 0);
    let (d1, d2) = (only_run(&out1), only_run(&out2));
    assert_eq!(d1.file_name(), d2.file_name());
    for file in ["checkpoint.bin", "best.bin", "config.toml", "report.kv"] {
        assert_eq!(
            fs::read(d1.join(file)).unwrap(),
            fs::read(d2.join(file)).unwrap(),
            "{file}"
        );
    }
    for file in ["train_record.csv", "pretrain_record.csv"] {
        assert_eq!(loss_columns(&d1.join(file)), loss_columns(&d2.join(file)), "{file}");
    }

    let rows = loss_columns(&d1.join("train_record.csv"));
    assert_eq!(rows.len(), 5);
    let val = |row: &str| row.split(',').nth(2).unwrap().parse::<f64>().unwrap();
    assert!(val(&rows[4]) < val(&rows[1]), "{rows:?}");

    let ckpt = Checkpoint::load(&d1.join("checkpoint.bin")).unwrap();
    assert_eq!(ckpt.meta.peephole, "post_update");
    assert_eq!(ckpt.meta.architecture, "wt-ed-lstm-am");
    assert!(ckpt.meta.denoised);

    // replaying the persisted config lands in the same run directory
    let replay = tmp.path().join("r3");
    let persisted = d1.join("config.toml");
    assert_eq!(
        run(&["train", "--config", s(&persisted), "--out", s(&replay), "--quiet"]),
        0
    );
    let d3 = only_run(&replay);
    assert_eq!(d3.file_name(), d1.file_name());
    assert_eq!(
        fs::read(d3.join("checkpoint.bin")).unwrap(),
        fs::read(d1.join("checkpoint.bin")).unwrap()
    );
}

#[test]
fn eval_outputs_and_generalization_gap() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_config(tmp.path());
    let out = tmp.path().join("runs");
    // enough capacity and epochs to fit part of the noise
    let train = [
        "train",
        "--config",
        &cfg,
        "--model",
        "mlp",
        "--epochs",
        "300",
        "--lr",
        "0.2",
        "--out",
        s(&out),
        "--quiet",
    ];
    assert_eq!(run(&train), 0);
    let dir = only_run(&out);

    assert_eq!(run(&["eval", "--checkpoint", s(&dir)]), 0);
    let test_dir = dir.join("eval-test");
    let trace = fs::read_to_string(test_dir.join("trace.csv")).unwrap();
    let n_samples = kv(&test_dir.join("report.kv"), "n_samples") as usize;
    assert!(trace.starts_with("t,actual,predicted\n"));
    assert_eq!(trace.lines().count() - 1, n_samples);
    // same metrics as the report written by train
    assert_eq!(
        kv(&test_dir.join("report.kv"), "rmse_abs"),
        kv(&dir.join("report.kv"), "rmse_abs")
    );
    let hist = fs::read_to_string(test_dir.join("histogram.csv")).unwrap();
    let counted: usize = hist
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(counted, n_samples);

    // re-evaluation is bit-identical
    let again = tmp.path().join("again");
    assert_eq!(
        run(&[
            "eval",
            "--checkpoint",
            s(&dir.join("checkpoint.bin")),
            "--out",
            s(&again)
        ]),
        0
    );
    for file in ["trace.csv", "histogram.csv", "report.kv", "report.txt"] {
        assert_eq!(
            fs::read(test_dir.join(file)).unwrap(),
            fs::read(again.join(file)).unwrap(),
            "{file}"
        );
    }

    assert_eq!(run(&["eval", "--checkpoint", s(&dir), "--split", "train"]), 0);
    let train_mse = kv(&dir.join("eval-train/report.kv"), "mse_abs");
    let test_mse = kv(&test_dir.join("report.kv"), "mse_abs");
    assert!(train_mse < test_mse, "train {train_mse} vs test {test_mse}");

    assert_eq!(run(&["eval", "--checkpoint", s(&dir), "--best"]), 0);
    assert!(dir.join("eval-test-best/report.kv").exists());
}

#[test]
fn eval_rejects_incompatible_data() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_config(tmp.path());
    let out = tmp.path().join("runs");
    assert_eq!(
        run(&["train", "--config", &cfg, "--model", "mlp", "--out", s(&out), "--quiet"]),
        0
    );
    let dir = only_run(&out);

    let full = tmp.path().join("full.csv");
    assert_eq!(run(&["generate", "--out", s(&full), "--hours", "600"]), 0);
    let text = fs::read_to_string(&full).unwrap();
    let dropped: String = text
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(1);
            f.join(",") + "\n"
        })
        .collect();
    let narrow = tmp.path().join("narrow.csv");
    fs::write(&narrow, dropped).unwrap();
    assert_eq!(
        run(&[
            "eval",
            "--checkpoint",
            s(&dir),
            "--data",
            s(&narrow),
            "--out",
            s(&tmp.path().join("e"))
        ]),
        2
    );
    // a compatible file evaluates fine
    assert_eq!(
        run(&[
            "eval",
            "--checkpoint",
            s(&dir),
            "--data",
            s(&full),
            "--out",
            s(&tmp.path().join("f"))
        ]),
        0
    );

    let junk = tmp.path().join("junk.bin");
    fs::write(&junk, b"not a checkpoint").unwrap();
    assert_eq!(run(&["eval", "--checkpoint", s(&junk), "--data", s(&full)]), 2);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("runs");
    assert_eq!(run(&["train", "--bogus-flag"]), 1);
    assert_eq!(run(&["frobnicate"]), 1);
    assert_eq!(run(&["train", "--task", "9step", "--out", s(&out)]), 1);
    assert_eq!(run(&["train", "--epochs", "0", "--out", s(&out)]), 1);
    assert_eq!(run(&["train", "--no-wavelet", "--no-attention", "--out", s(&out)]), 1);
    assert_eq!(run(&["--help"]), 0);

    let missing = tmp.path().join("missing.csv");
    assert_eq!(run(&["train", "--data", s(&missing), "--out", s(&out)]), 2);
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "timestamp,sdv\n2023-05-01T00:00:00Z,1\n2023-05-01T00:00:00Z,2\n").unwrap();
    assert_eq!(run(&["train", "--data", s(&bad), "--out", s(&out)]), 2);

    // a wildly large step blows the weights up
    let cfg = tiny_config(tmp.path());
    let code = run(&[
        "train",
        "--config",
        &cfg,
        "--model",
        "mlp",
        "--lr",
        "1e200",
        "--clip-norm",
        "0",
        "--out",
        s(&out),
        "--quiet",
    ]);
    assert_eq!(code, 3);
}

#[test]
fn degenerate_sweep_equals_train() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_config(tmp.path());
    let (train_out, sweep_out) = (tmp.path().join("t"), tmp.path().join("s"));
    assert_eq!(
        run(&[
            "train",
            "--config",
            &cfg,
            "--model",
            "gru",
            "--out",
            s(&train_out),
            "--quiet"
        ]),
        0
    );
    let args = [
        "sweep",
        "--config",
        &cfg,
        "--horizons",
        "1",
        "--models",
        "gru",
        "--out",
        s(&sweep_out),
        "--quiet",
    ];
    assert_eq!(run(&args), 0);
    let trained = only_run(&train_out);
    let sweep = only_run(&sweep_out);
    let swept = sweep.join("runs/h01-gru");
    for file in ["checkpoint.bin", "config.toml", "report.kv"] {
        assert_eq!(
            fs::read(trained.join(file)).unwrap(),
            fs::read(swept.join(file)).unwrap(),
            "{file}"
        );
    }
    let table = fs::read_to_string(sweep.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].starts_with("horizon,model,rmse_abs,mae_abs,"));
    assert_eq!(lines.len(), 2);
    let rmse: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(rmse, kv(&trained.join("report.kv"), "rmse_abs"));
    assert_eq!(run(&args), 1);
}

#[test]
fn sweep_table_shape() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_config(tmp.path());
    let out = tmp.path().join("s");
    let args = [
        "sweep",
        "--config",
        &cfg,
        "--horizons",
        "1-3",
        "--models",
        "persistence,mlp",
        "--epochs",
        "1",
        "--out",
        s(&out),
        "--quiet",
    ];
    assert_eq!(run(&args), 0);
    let table = fs::read_to_string(only_run(&out).join("sweep.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().filter(|r| r.contains(",persistence,")).count() == 3);
}

#[test]
fn ablate_emits_three_rows_with_seed() {
    let tmp = TempDir::new().unwrap();
    let cfg = tiny_config(tmp.path());
    let out = tmp.path().join("a");
    let args = [
        "ablate",
        "--config",
        &cfg,
        "--epochs",
        "2",
        "--seed",
        "5",
        "--out",
        s(&out),
        "--quiet",
    ];
    assert_eq!(run(&args), 0);
    let dir = only_run(&out);
    let table = fs::read_to_string(dir.join("ablation.csv")).unwrap();
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let variants: Vec<&str> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(variants, ["full", "no_wavelet", "no_attention"]);
    let models: Vec<&str> = rows.iter().map(|r| r[1]).collect();
    assert_eq!(models, ["wt-ed-lstm-am", "ed-lstm-am", "wt-ed-lstm"]);
    assert!(rows.iter().all(|r| r[2] == "5"));
    // noisy data: the variants train different models from the same seed
    let ck = |v: &str| fs::read(dir.join(format!("runs/{v}-s5/checkpoint.bin"))).unwrap();
    assert_ne!(ck("full"), ck("no_wavelet"));
    assert_ne!(ck("full"), ck("no_attention"));
}
