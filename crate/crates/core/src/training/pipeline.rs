use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::loops::{predict_dataset, pretrain_autoencoder, train_predictor, Telemetry};
use super::record::TrainRecord;
use crate::datasets::{
    apply_minmax, fit_minmax, make_windows_from, split, ChannelScale, NormalizationParams, SplitFractions, SplitTag,
    TaskSpec, TimeSeriesFrame, WindowedDataset,
};
use crate::metrics::{evaluate_with_bins, EvalReport, DEFAULT_BINS, DEFAULT_EPSILON};
use crate::models::{Model, ModelConfig, ModelKind};
use crate::ndmath::ParamStore;
use crate::wavelet::WaveletConfig;
use crate::{Error, Result};

/// Everything that determines one training run besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub task: TaskSpec,
    pub fractions: SplitFractions,
    pub model: ModelConfig,
    pub wavelet: WaveletConfig,
    pub train: TrainConfig,
    /// Relative-metric guard on `|actual|`.
    pub epsilon: f64,
    pub bins: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            task: TaskSpec::ONE_STEP,
            fractions: SplitFractions::default(),
            model: ModelConfig::default(),
            wavelet: WaveletConfig::default(),
            train: TrainConfig::default(),
            epsilon: DEFAULT_EPSILON,
            bins: DEFAULT_BINS,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.task.validate()?;
        self.fractions.validate()?;
        self.model.dims.validate()?;
        self.train.validate()?;
        self.wavelet.bank()?;
        if !(self.epsilon >= 0.0) || self.bins == 0 {
            return Err(Error::config("epsilon must be >= 0 and bins >= 1"));
        }
        Ok(())
    }
}

/// Windows of one split with normalized targets, plus the raw targets.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitData {
    pub windows: WindowedDataset,
    /// Target values in data units, aligned with `windows`.
    pub actuals: Vec<f64>,
}

/// Denoised (optionally), scaled and windowed data for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub input_names: Vec<String>,
    pub input_scales: NormalizationParams,
    /// Scale of the raw target series.
    pub target_scale: ChannelScale,
    pub denoised: bool,
    pub train: SplitData,
    pub val: SplitData,
    pub test: SplitData,
}

impl PreparedData {
    pub fn split(&self, tag: SplitTag) -> &SplitData {
        match tag {
            SplitTag::Train => &self.train,
            SplitTag::Val => &self.val,
            SplitTag::Test => &self.test,
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.input_names.len()
    }
}

/// Denoises every input column of the whole series when `denoise` is set,
/// splits chronologically, fits scales on the training rows and windows
/// each split. Targets always come from the raw target series.
pub fn prepare(frame: &TimeSeriesFrame, config: &PipelineConfig, denoise: bool) -> Result<PreparedData> {
    config.validate()?;
    let inputs = denoised_inputs(frame, config, denoise)?;
    let b1 = config.fractions.boundaries(frame.len()).0;
    let input_scales = fit_minmax(&inputs, config.fractions.train)?;
    let target_scale = ChannelScale::fit(frame.target_name(), &frame.target()[..b1])?;
    assemble(frame, &inputs, config, denoise, input_scales, target_scale)
}

/// Like [`prepare`] but with scales fixed in advance (e.g. restored from a
/// checkpoint). Input columns must match the scales by name and order.
pub fn prepare_with_scales(
    frame: &TimeSeriesFrame,
    config: &PipelineConfig,
    denoise: bool,
    input_scales: &NormalizationParams,
    target_scale: &ChannelScale,
) -> Result<PreparedData> {
    config.validate()?;
    let names: Vec<&str> = frame.input_names().collect();
    let expected: Vec<&str> = input_scales.channels.iter().map(|c| c.name.as_str()).collect();
    if names != expected {
        return Err(Error::data(format!("input columns {names:?} differ from {expected:?}")));
    }
    let inputs = denoised_inputs(frame, config, denoise)?;
    assemble(
        frame,
        &inputs,
        config,
        denoise,
        input_scales.clone(),
        target_scale.clone(),
    )
}

fn denoised_inputs(frame: &TimeSeriesFrame, config: &PipelineConfig, denoise: bool) -> Result<TimeSeriesFrame> {
    if denoise {
        frame.try_map_columns(|_, column| config.wavelet.denoise(column))
    } else {
        Ok(frame.clone())
    }
}

fn assemble(
    frame: &TimeSeriesFrame,
    inputs: &TimeSeriesFrame,
    config: &PipelineConfig,
    denoise: bool,
    input_scales: NormalizationParams,
    target_scale: ChannelScale,
) -> Result<PreparedData> {
    let parts = split(inputs, config.fractions, config.task.span())?;
    let (b1, b2) = config.fractions.boundaries(frame.len());
    let raw = frame.target();
    let ranges = [0..b1, b1..b2, b2..frame.len()];
    let tags = [SplitTag::Train, SplitTag::Val, SplitTag::Test];
    let mut out = Vec::with_capacity(3);
    for ((part, range), tag) in parts.iter().zip(ranges).zip(tags) {
        let scaled = apply_minmax(part, &input_scales)?;
        let windows = make_windows_from(&scaled, &raw[range], config.task, tag)?;
        let actuals = windows.targets().to_vec();
        let windows = windows.map_targets(|v| target_scale.apply(v));
        out.push(SplitData { windows, actuals });
    }
    let test = out.pop().expect("three splits");
    let val = out.pop().expect("three splits");
    let train = out.pop().expect("three splits");
    Ok(PreparedData {
        input_names: frame.input_names().map(ToString::to_string).collect(),
        input_scales,
        target_scale,
        denoised: denoise,
        train,
        val,
        test,
    })
}

/// Denormalized predictions on one split and their metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitEvaluation {
    pub report: EvalReport,
    pub predictions: Vec<f64>,
    pub actuals: Vec<f64>,
    /// Hour index of each target.
    pub target_hours: Vec<i64>,
}

pub fn evaluate_split(
    model: &Model,
    data: &PreparedData,
    tag: SplitTag,
    config: &PipelineConfig,
) -> Result<SplitEvaluation> {
    let part = data.split(tag);
    let predictions: Vec<f64> = predict_dataset(model, &part.windows)?
        .into_iter()
        .map(|y| data.target_scale.invert(y))
        .collect();
    let report =
        evaluate_with_bins(&part.actuals, &predictions, config.epsilon, config.bins)?.with_horizon(config.task.horizon);
    Ok(SplitEvaluation {
        report,
        predictions,
        actuals: part.actuals.clone(),
        target_hours: part.windows.target_hours().to_vec(),
    })
}

/// A trained model with the data it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub model: Model,
    pub record: TrainRecord,
    /// Parameters at the best validation epoch.
    pub best_params: Option<ParamStore>,
    pub data: PreparedData,
}

/// Full pipeline: prepare, pretrain (encoder models), train, evaluate on
/// the test split.
pub fn run_pipeline(
    frame: &TimeSeriesFrame,
    config: &PipelineConfig,
    telemetry: &mut dyn Telemetry,
) -> Result<RunOutcome> {
    let kind = config.model.kind;
    let data = prepare(frame, config, kind.uses_wavelet())?;
    let mut model = Model::new(config.model, data.n_inputs(), config.task.window, config.train.seed)?;
    let mut record = TrainRecord::default();
    let (train, val) = (&data.train.windows, Some(&data.val.windows));
    if kind.has_encoder() {
        record.pretrain = pretrain_autoencoder(&mut model, train, val, &config.train, telemetry)?;
    }
    let outcome = train_predictor(&mut model, train, val, &config.train, telemetry)?;
    record.predictor = outcome.records;
    record.best_epoch = outcome.best_epoch;
    record.test = Some(evaluate_split(&model, &data, SplitTag::Test, config)?.report);
    Ok(RunOutcome {
        model,
        record,
        best_params: outcome.best_params,
        data,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationVariant {
    Full,
    NoWavelet,
    NoAttention,
}

impl AblationVariant {
    pub const ALL: [AblationVariant; 3] = [
        AblationVariant::Full,
        AblationVariant::NoWavelet,
        AblationVariant::NoAttention,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationVariant::Full => "full",
            AblationVariant::NoWavelet => "no_wavelet",
            AblationVariant::NoAttention => "no_attention",
        }
    }

    pub fn kind(self) -> ModelKind {
        match self {
            AblationVariant::Full => ModelKind::WtEdLstmAm,
            AblationVariant::NoWavelet => ModelKind::EdLstmAm,
            AblationVariant::NoAttention => ModelKind::WtEdLstm,
        }
    }
}

impl fmt::Display for AblationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AblationVariant::ALL
            .into_iter()
            .find(|v| v.name() == s.replace('-', "_"))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown ablation variant {s:?}")))
    }
}

/// Test metrics of one ablation variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub variant: AblationVariant,
    pub model: ModelKind,
    pub seed: u64,
    pub report: EvalReport,
}

/// Runs the pipeline with the model family of `variant`; all other settings
/// come from `config`.
pub fn run_ablation(
    variant: AblationVariant,
    frame: &TimeSeriesFrame,
    config: &PipelineConfig,
    telemetry: &mut dyn Telemetry,
) -> Result<(AblationReport, RunOutcome)> {
    let mut config = config.clone();
    config.model.kind = variant.kind();
    let outcome = run_pipeline(frame, &config, telemetry)?;
    let report = AblationReport {
        variant,
        model: config.model.kind,
        seed: config.train.seed,
        report: outcome.record.test.clone().expect("pipeline evaluates the test split"),
    };
    Ok((report, outcome))
}
