use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use stemcast_core::datasets::{generate_synthetic, SplitTag, TimeSeriesFrame};
use stemcast_core::metrics::{EvalReport, Histogram};
use stemcast_core::models::ModelKind;
use stemcast_core::ndmath::ParamStore;
use stemcast_core::training::{
    evaluate_split, prepare_with_scales, records_to_csv, run_ablation, run_pipeline, AblationReport, AblationVariant,
    EpochRecord, Phase, RunOutcome, SplitEvaluation, Telemetry,
};

use crate::args::{
    parse_horizons, parse_kind, parse_list, parse_seed, parse_variant, AblateArgs, EvalArgs, GenerateArgs, SweepArgs,
    TrainArgs,
};
use crate::checkpoint::{Checkpoint, CheckpointMeta, PEEPHOLE};
use crate::config::{parse_synthetic_spec, sha256_hex, DataSource, RunConfig, CONFIG_FILE};
use crate::csvio::{format_hour, write_csv};
use crate::error::{CliError, Result};

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const BEST_CHECKPOINT_FILE: &str = "best.bin";
pub const TRAIN_RECORD_FILE: &str = "train_record.csv";
pub const PRETRAIN_RECORD_FILE: &str = "pretrain_record.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const REPORT_KV_FILE: &str = "report.kv";
pub const TRACE_FILE: &str = "trace.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const ABLATION_FILE: &str = "ablation.csv";

/// Wall-clock epoch timing and optional progress lines on stderr.
pub struct Progress {
    start: Instant,
    label: String,
    quiet: bool,
}

impl Progress {
    pub fn new(label: impl Into<String>, quiet: bool) -> Self {
        Progress {
            start: Instant::now(),
            label: label.into(),
            quiet,
        }
    }
}

impl Telemetry for Progress {
    fn now(&mut self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn on_epoch(&mut self, phase: Phase, r: &EpochRecord) {
        if !self.quiet {
            eprintln!(
                "[{}] {} epoch {:>3}: train {:.6e} val {:.6e} ({:.2} s)",
                self.label,
                phase.name(),
                r.epoch,
                r.train_loss,
                r.val_loss,
                r.seconds
            );
        }
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Creates `dir` fresh. An existing directory is replaced only with `force`.
fn fresh_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        if !force {
            return Err(CliError::usage(format!(
                "{} already exists for this configuration; pass --force to overwrite",
                dir.display()
            )));
        }
        fs::remove_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    create_dir(dir)
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<PathBuf> {
    let mut cfg = match (&args.config, &args.synthetic) {
        (Some(_), Some(_)) => return Err(CliError::usage("give either --config or --synthetic, not both")),
        (Some(path), None) => match RunConfig::load(path)?.data {
            DataSource::Synthetic(cfg) => cfg,
            DataSource::Csv(_) => return Err(CliError::usage("config file names a CSV source, not a synthetic one")),
        },
        (None, Some(spec)) => parse_synthetic_spec(spec)?,
        (None, None) => Default::default(),
    };
    if let Some(v) = args.hours {
        cfg.n_hours = v;
    }
    if let Some(v) = args.noise_sigma {
        cfg.noise_sigma = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    if args.out.exists() && !args.force {
        return Err(CliError::usage(format!(
            "{} exists; pass --force to overwrite",
            args.out.display()
        )));
    }
    let frame = generate_synthetic(&cfg)?;
    write_csv(&frame, &args.out)?;
    print!("{}", summary(&frame));
    println!("wrote {} rows to {}", frame.len(), args.out.display());
    Ok(args.out.clone())
}

/// Per-column count, mean, standard deviation and range.
pub fn summary(frame: &TimeSeriesFrame) -> String {
    let mut out = format!(
        "{} hours from {} to {}\n{:<14} {:>12} {:>12} {:>12} {:>12}\n",
        frame.len(),
        format_hour(frame.timestamps()[0]),
        format_hour(*frame.timestamps().last().expect("non-empty frame")),
        "column",
        "mean",
        "std",
        "min",
        "max"
    );
    let columns = frame
        .channel_names()
        .iter()
        .zip(frame.channels())
        .map(|(n, c)| (n.as_str(), c.as_slice()))
        .chain(std::iter::once((frame.target_name(), frame.target())));
    for (name, values) in columns {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(out, "{name:<14} {mean:>12.5} {std:>12.5} {min:>12.5} {max:>12.5}");
    }
    out
}

fn checkpoint(cfg: &RunConfig, outcome: &RunOutcome, params: &ParamStore, snapshot: &str) -> Checkpoint {
    let data = &outcome.data;
    Checkpoint {
        meta: CheckpointMeta {
            architecture: cfg.pipeline.model.kind.name().to_string(),
            peephole: PEEPHOLE.to_string(),
            seed: cfg.pipeline.train.seed,
            n_inputs: outcome.model.n_inputs(),
            window: outcome.model.window(),
            snapshot: snapshot.to_string(),
            input_names: data.input_names.clone(),
            input_scales: data.input_scales.clone(),
            target_scale: data.target_scale.clone(),
            denoised: data.denoised,
            pipeline: cfg.pipeline.clone(),
        },
        params: params.clone(),
    }
}

fn report_text(kind: ModelKind, split: SplitTag, report: &EvalReport) -> String {
    let note = if kind.is_trainable() {
        ""
    } else {
        " (reference baseline, not a learned model)"
    };
    format!("model: {kind}{note}\nsplit: {}\n{report}\n", split.name())
}

fn write_report(dir: &Path, kind: ModelKind, split: SplitTag, report: &EvalReport) -> Result<()> {
    write_file(&dir.join(REPORT_FILE), report_text(kind, split, report))?;
    let kv = format!("model={kind}\nsplit={}\n{}", split.name(), report.to_key_value());
    write_file(&dir.join(REPORT_KV_FILE), kv)
}

/// Resolved config, checkpoints, loss records and the test report.
fn write_run(dir: &Path, cfg: &RunConfig, outcome: &RunOutcome) -> Result<()> {
    write_file(&dir.join(CONFIG_FILE), cfg.to_toml()?)?;
    checkpoint(cfg, outcome, outcome.model.params(), "final").save(&dir.join(CHECKPOINT_FILE))?;
    if let Some(best) = &outcome.best_params {
        checkpoint(cfg, outcome, best, "best_val").save(&dir.join(BEST_CHECKPOINT_FILE))?;
    }
    write_file(&dir.join(TRAIN_RECORD_FILE), records_to_csv(&outcome.record.predictor))?;
    if !outcome.record.pretrain.is_empty() {
        write_file(
            &dir.join(PRETRAIN_RECORD_FILE),
            records_to_csv(&outcome.record.pretrain),
        )?;
    }
    let report = outcome.record.test.as_ref().expect("pipeline evaluates the test split");
    write_report(dir, cfg.pipeline.model.kind, SplitTag::Test, report)
}

fn train_into(dir: &Path, cfg: &RunConfig, frame: &TimeSeriesFrame, quiet: bool) -> Result<RunOutcome> {
    let label = cfg.pipeline.model.kind.name();
    let outcome = run_pipeline(frame, &cfg.pipeline, &mut Progress::new(label, quiet))?;
    write_run(dir, cfg, &outcome)?;
    Ok(outcome)
}

pub fn cmd_train(args: &TrainArgs) -> Result<PathBuf> {
    let mut cfg = args.pipeline.resolve()?;
    args.model.apply(&mut cfg)?;
    cfg.validate()?;
    let frame = cfg.data.load()?;
    let dir = args.pipeline.out.join(cfg.run_name()?);
    fresh_dir(&dir, args.pipeline.force)?;
    let outcome = train_into(&dir, &cfg, &frame, args.pipeline.quiet)?;
    let report = outcome.record.test.as_ref().expect("pipeline evaluates the test split");
    print!("{}", report_text(cfg.pipeline.model.kind, SplitTag::Test, report));
    if let Some(best) = outcome.record.best_epoch {
        println!("best validation epoch: {best}");
    }
    println!("run directory: {}", dir.display());
    Ok(dir)
}

pub fn parse_split(name: &str) -> Result<SplitTag> {
    match name.trim() {
        "train" => Ok(SplitTag::Train),
        "val" => Ok(SplitTag::Val),
        "test" => Ok(SplitTag::Test),
        other => Err(CliError::usage(format!("unknown split {other:?} (train, val, test)"))),
    }
}

/// Writes `t,actual,predicted` rows, one per window.
pub fn trace_csv(eval: &SplitEvaluation) -> String {
    let mut out = String::from("t,actual,predicted\n");
    for ((&t, a), p) in eval.target_hours.iter().zip(&eval.actuals).zip(&eval.predictions) {
        let _ = writeln!(out, "{},{a:?},{p:?}", format_hour(t));
    }
    out
}

/// `bin_lo,bin_hi,count` rows of the error histogram.
pub fn histogram_csv(h: &Histogram) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for (edge, count) in h.edges.windows(2).zip(&h.counts) {
        let _ = writeln!(out, "{:?},{:?},{count}", edge[0], edge[1]);
    }
    out
}

pub fn cmd_eval(args: &EvalArgs) -> Result<PathBuf> {
    let split = parse_split(&args.split)?;
    let (ckpt_path, run_dir) = if args.checkpoint.is_dir() {
        let file = if args.best {
            BEST_CHECKPOINT_FILE
        } else {
            CHECKPOINT_FILE
        };
        (args.checkpoint.join(file), args.checkpoint.clone())
    } else {
        if args.best {
            return Err(CliError::usage("--best needs a run directory, not a checkpoint file"));
        }
        let parent = args.checkpoint.parent().unwrap_or(Path::new(".")).to_path_buf();
        (args.checkpoint.clone(), parent)
    };
    let ckpt = Checkpoint::load(&ckpt_path)?;
    let source = match (&args.data, &args.synthetic) {
        (Some(path), _) => DataSource::Csv(path.clone()),
        (None, Some(spec)) => DataSource::Synthetic(parse_synthetic_spec(spec)?),
        (None, None) => {
            let path = run_dir.join(CONFIG_FILE);
            if !path.exists() {
                return Err(CliError::usage(format!(
                    "no --data or --synthetic given and {} is missing",
                    path.display()
                )));
            }
            RunConfig::load(&path)?.data
        }
    };
    let frame = source.load()?;
    let model = ckpt.model()?;
    let cfg = &ckpt.meta.pipeline;
    let data = prepare_with_scales(
        &frame,
        cfg,
        ckpt.meta.denoised,
        &ckpt.meta.input_scales,
        &ckpt.meta.target_scale,
    )
    .map_err(|e| match e {
        e if e.is_numeric() => CliError::Core(e),
        e => CliError::data(format!("data incompatible with checkpoint: {e}")),
    })?;
    let eval = evaluate_split(&model, &data, split, cfg)?;
    let out = match &args.out {
        Some(dir) => dir.clone(),
        None => {
            let suffix = if args.best { "-best" } else { "" };
            run_dir.join(format!("eval-{}{suffix}", split.name()))
        }
    };
    create_dir(&out)?;
    write_report(&out, cfg.model.kind, split, &eval.report)?;
    write_file(&out.join(TRACE_FILE), trace_csv(&eval))?;
    write_file(&out.join(HISTOGRAM_FILE), histogram_csv(&eval.report.histogram))?;
    print!("{}", report_text(cfg.model.kind, split, &eval.report));
    println!("outputs: {}", out.display());
    Ok(out)
}

const METRIC_HEADER: &str = "rmse_abs,mae_abs,mse_abs,rmse_rel,mae_rel,mse_rel,n_samples,n_skipped";

fn metric_fields(r: &EvalReport) -> String {
    format!(
        "{:?},{:?},{:?},{:?},{:?},{:?},{},{}",
        r.rmse_abs, r.mae_abs, r.mse_abs, r.rmse_rel, r.mae_rel, r.mse_rel, r.n_samples, r.n_skipped
    )
}

#[derive(Serialize)]
struct SweepPlan<'a> {
    horizons: &'a [usize],
    models: &'a [ModelKind],
    base: &'a RunConfig,
}

#[derive(Serialize)]
struct AblationPlan<'a> {
    seeds: &'a [u64],
    variants: &'a [AblationVariant],
    base: &'a RunConfig,
}

fn plan_toml(plan: &impl Serialize) -> Result<String> {
    toml::to_string(plan).map_err(|e| CliError::usage(format!("config: {e}")))
}

/// Direct strategy: one model per (horizon, family). Each run gets its own
/// directory under `<out>/sweep-<hash>/runs`.
pub fn cmd_sweep(args: &SweepArgs) -> Result<PathBuf> {
    let mut base = args.pipeline.resolve()?;
    args.model.apply(&mut base)?;
    let horizons = parse_horizons(&args.horizons)?;
    let models = match &args.models {
        Some(list) => parse_list(list, parse_kind)?,
        None => ModelKind::ALL.to_vec(),
    };
    let mut runs = Vec::new();
    for &h in &horizons {
        for &kind in &models {
            let mut cfg = base.clone();
            cfg.pipeline.task.horizon = h;
            cfg.pipeline.model.kind = kind
                .with_ablation(args.model.no_wavelet, args.model.no_attention)
                .map_err(|e| CliError::usage(e.to_string()))?;
            cfg.validate()?;
            runs.push((h, cfg));
        }
    }
    let plan = plan_toml(&SweepPlan {
        horizons: &horizons,
        models: &models,
        base: &base,
    })?;
    let dir = args
        .pipeline
        .out
        .join(format!("sweep-{}", &sha256_hex(plan.as_bytes())[..12]));
    fresh_dir(&dir, args.pipeline.force)?;
    write_file(&dir.join("sweep.toml"), &plan)?;
    let frame = base.data.load()?;
    let mut table = format!("horizon,model,{METRIC_HEADER}\n");
    for (h, cfg) in &runs {
        let kind = cfg.pipeline.model.kind;
        let run_dir = dir.join("runs").join(format!("h{h:02}-{kind}"));
        create_dir(&run_dir)?;
        let outcome = train_into(&run_dir, cfg, &frame, args.pipeline.quiet)?;
        let report = outcome.record.test.as_ref().expect("pipeline evaluates the test split");
        let _ = writeln!(table, "{h},{kind},{}", metric_fields(report));
        println!(
            "horizon {h:>2} {kind:<14} rmse_abs {:.6e} mae_abs {:.6e}",
            report.rmse_abs, report.mae_abs
        );
    }
    write_file(&dir.join(SWEEP_FILE), &table)?;
    println!("sweep table: {}", dir.join(SWEEP_FILE).display());
    Ok(dir)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Test RMSE medians per variant, in `variants` order.
pub fn ablation_medians(rows: &[AblationReport], variants: &[AblationVariant]) -> Vec<(AblationVariant, f64)> {
    variants
        .iter()
        .map(|&v| {
            let mut values: Vec<f64> = rows
                .iter()
                .filter(|r| r.variant == v)
                .map(|r| r.report.rmse_abs)
                .collect();
            (v, median(&mut values))
        })
        .collect()
}

pub fn cmd_ablate(args: &AblateArgs) -> Result<PathBuf> {
    let base = args.pipeline.resolve()?;
    base.validate()?;
    let seeds = match &args.seeds {
        Some(list) => parse_list(list, parse_seed)?,
        None => vec![base.pipeline.train.seed],
    };
    let variants = match &args.variants {
        Some(list) => parse_list(list, parse_variant)?,
        None => AblationVariant::ALL.to_vec(),
    };
    let plan = plan_toml(&AblationPlan {
        seeds: &seeds,
        variants: &variants,
        base: &base,
    })?;
    let dir = args
        .pipeline
        .out
        .join(format!("ablate-{}", &sha256_hex(plan.as_bytes())[..12]));
    fresh_dir(&dir, args.pipeline.force)?;
    write_file(&dir.join("ablate.toml"), &plan)?;
    let frame = base.data.load()?;
    let mut rows = Vec::new();
    let mut table = format!("variant,model,seed,{METRIC_HEADER}\n");
    for &seed in &seeds {
        for &variant in &variants {
            let mut cfg = base.clone();
            cfg.pipeline.train.seed = seed;
            cfg.pipeline.model.kind = variant.kind();
            let label = format!("{variant}/{seed}");
            let (row, outcome) = run_ablation(
                variant,
                &frame,
                &cfg.pipeline,
                &mut Progress::new(label, args.pipeline.quiet),
            )?;
            let run_dir = dir.join("runs").join(format!("{variant}-s{seed}"));
            create_dir(&run_dir)?;
            write_run(&run_dir, &cfg, &outcome)?;
            let _ = writeln!(
                table,
                "{},{},{},{}",
                row.variant,
                row.model,
                row.seed,
                metric_fields(&row.report)
            );
            println!(
                "{:<13} {:<12} seed {:<4} rmse_abs {:.6e} mae_abs {:.6e}",
                row.variant, row.model, row.seed, row.report.rmse_abs, row.report.mae_abs
            );
            rows.push(row);
        }
    }
    write_file(&dir.join(ABLATION_FILE), &table)?;
    let medians = ablation_medians(&rows, &variants);
    for (v, m) in &medians {
        println!("median rmse_abs {v:<13} {m:.6e} over {} seed(s)", seeds.len());
    }
    let get = |v| medians.iter().find(|(x, _)| *x == v).map(|(_, m)| *m);
    if let (Some(full), Some(plain)) = (get(AblationVariant::Full), get(AblationVariant::NoWavelet)) {
        let verdict = if full <= plain { "holds" } else { "does not hold" };
        println!("median full <= median no_wavelet: {verdict}");
    }
    println!("ablation table: {}", dir.join(ABLATION_FILE).display());
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use stemcast_core::metrics::evaluate;

    #[test]
    fn histogram_rows() {
        let h = Histogram {
            edges: vec![0.0, 0.5, 1.0],
            counts: vec![2, 1],
        };
        assert_eq!(histogram_csv(&h), "bin_lo,bin_hi,count\n0.0,0.5,2\n0.5,1.0,1\n");
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        let report = |v: f64| evaluate(&[1.0], &[1.0 - v], 1e-8).unwrap();
        let rows: Vec<AblationReport> = [
            (AblationVariant::Full, 0.1),
            (AblationVariant::Full, 0.3),
            (AblationVariant::NoWavelet, 0.2),
        ]
        .into_iter()
        .map(|(variant, e)| AblationReport {
            variant,
            model: variant.kind(),
            seed: 0,
            report: report(e),
        })
        .collect();
        let m = ablation_medians(&rows, &[AblationVariant::Full, AblationVariant::NoWavelet]);
        assert!((m[0].1 - 0.2).abs() < 1e-12 && (m[1].1 - 0.2).abs() < 1e-12);
    }

    #[test]
    fn split_names() {
        assert_eq!(parse_split("val").unwrap(), SplitTag::Val);
        assert!(matches!(parse_split("dev"), Err(CliError::Usage(_))));
    }
}
