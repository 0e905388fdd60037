use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use stemcast_core::datasets::TaskSpec;
use stemcast_core::models::ModelKind;
use stemcast_core::training::AblationVariant;
use stemcast_core::wavelet::DenoiseRule;

use crate::config::{parse_synthetic_spec, DataSource, RunConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "stemcast",
    version,
    about = "Wavelet + LSTM encoder-decoder forecasting of stem diameter variation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic hourly CSV.
    Generate(GenerateArgs),
    /// Train one model and write a run directory.
    Train(TrainArgs),
    /// Evaluate a checkpoint on one split of a data set.
    Eval(EvalArgs),
    /// Train and evaluate one model per horizon and family.
    Sweep(SweepArgs),
    /// Compare the full model with its no-wavelet and no-attention variants.
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Generator settings, e.g. `n_hours=2160,noise_sigma=0.1,seed=0`.
    #[arg(long)]
    pub synthetic: Option<String>,
    /// Config file whose `[data.synthetic]` table sets the generator.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub hours: Option<usize>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overwrite an existing file.
    #[arg(long)]
    pub force: bool,
}

/// Data, task, training and wavelet settings shared by the training verbs.
#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Hourly CSV input.
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// Synthetic data spec, e.g. `n_hours=2160,noise_sigma=0.1,seed=0`.
    #[arg(long)]
    pub synthetic: Option<String>,
    /// Task preset: 1step, 2step or 3step.
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// Epochs of both pretraining and predictor training.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Pretraining epochs (overrides --epochs for that phase).
    #[arg(long)]
    pub pretrain_epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Global gradient-norm clip, 0 disables.
    #[arg(long)]
    pub clip_norm: Option<f64>,
    /// Keep the pretrained encoder fixed during predictor training.
    #[arg(long)]
    pub freeze_encoder: bool,
    #[arg(long)]
    pub wavelet: Option<String>,
    #[arg(long)]
    pub wavelet_levels: Option<usize>,
    /// soft-universal or zero-finest.
    #[arg(long)]
    pub denoise_rule: Option<String>,
    /// Base output directory.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// Replace an existing run directory.
    #[arg(long)]
    pub force: bool,
    /// No per-epoch progress on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// wt-ed-lstm-am, ed-lstm-am, wt-ed-lstm, lstm, gru, mlp or persistence.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub no_wavelet: bool,
    #[arg(long)]
    pub no_attention: bool,
    /// Extra attention over the encoder's top layer.
    #[arg(long)]
    pub layerwise_attention: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint file or run directory.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Hourly CSV input (defaults to the run's own data).
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub synthetic: Option<String>,
    /// train, val or test.
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Use the best-validation parameters of a run directory.
    #[arg(long)]
    pub best: bool,
    /// Output directory (defaults to `<run>/eval-<split>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Horizons in hours: `1-12`, `1,3,6` or a mix.
    #[arg(long, default_value = "1-12")]
    pub horizons: String,
    /// Comma-separated model families (defaults to all).
    #[arg(long)]
    pub models: Option<String>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Training seeds, comma-separated (defaults to --seed).
    #[arg(long)]
    pub seeds: Option<String>,
    /// Subset of variants: full, no_wavelet, no_attention.
    #[arg(long)]
    pub variants: Option<String>,
}

impl PipelineArgs {
    /// Config file (or defaults) with every given flag applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(path) = &self.data {
            cfg.data = DataSource::Csv(path.clone());
        }
        if let Some(spec) = &self.synthetic {
            cfg.data = DataSource::Synthetic(parse_synthetic_spec(spec)?);
        }
        let p = &mut cfg.pipeline;
        if let Some(name) = &self.task {
            p.task = TaskSpec::preset(name)
                .ok_or_else(|| CliError::usage(format!("unknown task {name:?} (1step, 2step, 3step)")))?;
        }
        set(&mut p.task.window, self.window);
        set(&mut p.task.horizon, self.horizon);
        set(&mut p.task.stride, self.stride);
        set(&mut p.train.epochs, self.epochs);
        set(&mut p.train.pretrain_epochs, self.epochs);
        set(&mut p.train.pretrain_epochs, self.pretrain_epochs);
        set(&mut p.train.learning_rate, self.lr);
        set(&mut p.train.batch_size, self.batch);
        set(&mut p.train.seed, self.seed);
        set(&mut p.train.clip_norm, self.clip_norm);
        if self.freeze_encoder {
            p.train.fine_tune_encoder = false;
        }
        set(&mut p.wavelet.family, self.wavelet.clone());
        set(&mut p.wavelet.levels, self.wavelet_levels);
        if let Some(rule) = &self.denoise_rule {
            p.wavelet.rule = parse_rule(rule)?;
        }
        Ok(cfg)
    }
}

impl ModelArgs {
    /// Applies the family and ablation flags to `cfg`.
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        let model = &mut cfg.pipeline.model;
        if let Some(name) = &self.model {
            model.kind = parse_kind(name)?;
        }
        model.kind = model
            .kind
            .with_ablation(self.no_wavelet, self.no_attention)
            .map_err(|e| CliError::usage(e.to_string()))?;
        if self.layerwise_attention {
            model.layerwise_attention = true;
        }
        Ok(())
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

pub fn parse_kind(name: &str) -> Result<ModelKind> {
    name.trim()
        .parse()
        .map_err(|e: stemcast_core::Error| CliError::usage(e.to_string()))
}

pub fn parse_rule(name: &str) -> Result<DenoiseRule> {
    [DenoiseRule::SoftUniversal, DenoiseRule::ZeroFinest]
        .into_iter()
        .find(|r| r.name() == name.trim())
        .ok_or_else(|| CliError::usage(format!("unknown denoise rule {name:?} (soft-universal, zero-finest)")))
}

/// `1-3,6` → `[1, 2, 3, 6]`, sorted and deduplicated.
pub fn parse_horizons(spec: &str) -> Result<Vec<usize>> {
    let bad = || CliError::usage(format!("bad horizon list {spec:?}"));
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (
                    a.trim().parse().map_err(|_| bad())?,
                    b.trim().parse().map_err(|_| bad())?,
                );
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() || out[0] == 0 {
        return Err(bad());
    }
    Ok(out)
}

pub fn parse_list<T>(spec: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let items = spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse)
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(CliError::usage(format!("empty list {spec:?}")));
    }
    Ok(items)
}

pub fn parse_seed(s: &str) -> Result<u64> {
    s.parse().map_err(|_| CliError::usage(format!("bad seed {s:?}")))
}

pub fn parse_variant(s: &str) -> Result<AblationVariant> {
    s.parse()
        .map_err(|e: stemcast_core::Error| CliError::usage(e.to_string()))
}
