use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::record::{EpochRecord, Phase};
use super::sgd::sgd_step;
use crate::datasets::WindowedDataset;
use crate::models::{Batch, Model};
use crate::ndmath::{Binding, ParamId, ParamStore, Tape, Var};
use crate::{Error, Result};

/// Wall-clock source and progress sink for training loops.
///
/// The core crate has no clock; the default reports zero seconds.
pub trait Telemetry {
    /// Seconds since an arbitrary fixed origin.
    fn now(&mut self) -> f64 {
        0.0
    }

    fn on_epoch(&mut self, _phase: Phase, _record: &EpochRecord) {}
}

/// Telemetry that records nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct Silent;

impl Telemetry for Silent {}

/// Rows evaluated per forward pass when no update is needed.
const EVAL_CHUNK: usize = 256;

/// Shuffle streams keep the two phases independent of each other.
const PRETRAIN_STREAM: u64 = 1;
const PREDICTOR_STREAM: u64 = 2;

fn shuffle_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy)]
enum Objective {
    Reconstruction,
    Prediction,
}

fn batch_loss(model: &Model, tape: &mut Tape, p: &Binding, batch: &Batch, obj: Objective) -> Result<Var> {
    match obj {
        Objective::Prediction => model.prediction_loss(tape, p, batch),
        Objective::Reconstruction => model
            .reconstruction_loss(tape, p, batch)?
            .ok_or_else(|| Error::config("model has no encoder-decoder to pretrain")),
    }
}

/// Sample-weighted mean loss over `ds` without updating anything.
fn mean_loss(model: &Model, ds: &WindowedDataset, obj: Objective) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Empty("loss evaluation"));
    }
    let indices: Vec<usize> = (0..ds.len()).collect();
    let mut total = 0.0;
    let mut tape = Tape::new();
    for chunk in indices.chunks(EVAL_CHUNK) {
        let batch = Batch::from_dataset(ds, chunk);
        tape.reset();
        let p = model.params().bind_frozen(&mut tape);
        let loss = batch_loss(model, &mut tape, &p, &batch, obj)?;
        total += tape.value(loss).data()[0] * chunk.len() as f64;
    }
    Ok(total / ds.len() as f64)
}

/// Mean squared error of normalized predictions over `ds`.
pub fn prediction_loss(model: &Model, ds: &WindowedDataset) -> Result<f64> {
    mean_loss(model, ds, Objective::Prediction)
}

/// Mean squared reconstruction error over `ds`.
pub fn reconstruction_loss(model: &Model, ds: &WindowedDataset) -> Result<f64> {
    mean_loss(model, ds, Objective::Reconstruction)
}

/// Normalized predictions for every window of `ds`, in window order.
pub fn predict_dataset(model: &Model, ds: &WindowedDataset) -> Result<Vec<f64>> {
    let indices: Vec<usize> = (0..ds.len()).collect();
    let mut out = Vec::with_capacity(ds.len());
    for chunk in indices.chunks(EVAL_CHUNK) {
        out.extend(model.predict_values(&Batch::from_dataset(ds, chunk))?);
    }
    Ok(out)
}

struct EpochPlan<'a> {
    phase: Phase,
    obj: Objective,
    epochs: usize,
    stream: u64,
    trainable: &'a [ParamId],
}

/// Runs `plan.epochs` epochs of shuffled mini-batch SGD. `after_epoch`
/// sees the model once each epoch is recorded.
fn run_epochs(
    model: &mut Model,
    train: &WindowedDataset,
    val: Option<&WindowedDataset>,
    config: &TrainConfig,
    plan: EpochPlan<'_>,
    telemetry: &mut dyn Telemetry,
    mut after_epoch: impl FnMut(&Model, &EpochRecord),
) -> Result<Vec<EpochRecord>> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training windows"));
    }
    let mut rng = shuffle_rng(config.seed, plan.stream);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rows = Vec::with_capacity(plan.epochs);
    let mut tape = Tape::new();
    for epoch in 1..=plan.epochs {
        let start = telemetry.now();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch = Batch::from_dataset(train, chunk);
            tape.reset();
            let p = model.params().bind(&mut tape);
            let loss = batch_loss(model, &mut tape, &p, &batch, plan.obj)?;
            total += tape.value(loss).data()[0] * chunk.len() as f64;
            tape.backward(loss)?;
            let store: &mut ParamStore = model.params_mut();
            store.absorb(&tape, &p);
            sgd_step(store, plan.trainable, config.learning_rate, config.clip_norm)?;
        }
        let val_loss = match val {
            Some(v) => mean_loss(model, v, plan.obj)?,
            None => f64::NAN,
        };
        let record = EpochRecord {
            epoch,
            train_loss: total / train.len() as f64,
            val_loss,
            seconds: telemetry.now() - start,
        };
        telemetry.on_epoch(plan.phase, &record);
        after_epoch(model, &record);
        rows.push(record);
    }
    Ok(rows)
}

/// Fits the encoder-decoder to reconstruct its (reversed) input windows.
pub fn pretrain_autoencoder(
    model: &mut Model,
    train: &WindowedDataset,
    val: Option<&WindowedDataset>,
    config: &TrainConfig,
    telemetry: &mut dyn Telemetry,
) -> Result<Vec<EpochRecord>> {
    if model.autoencoder().is_none() {
        return Err(Error::config(alloc::format!(
            "{} has no encoder-decoder to pretrain",
            model.kind()
        )));
    }
    let mut trainable = model.encoder_params();
    trainable.extend(model.decoder_params());
    let plan = EpochPlan {
        phase: Phase::Pretrain,
        obj: Objective::Reconstruction,
        epochs: config.pretrain_epochs,
        stream: PRETRAIN_STREAM,
        trainable: &trainable,
    };
    run_epochs(model, train, val, config, plan, telemetry, |_, _| {})
}

/// Result of [`train_predictor`]. The model itself keeps the final-epoch
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorOutcome {
    pub records: Vec<EpochRecord>,
    /// Epoch (1-based) with the lowest validation loss, if validated.
    pub best_epoch: Option<usize>,
    /// Parameters at `best_epoch`.
    pub best_params: Option<ParamStore>,
}

/// Minimizes the squared error of normalized predictions. Models without
/// parameters return an empty record immediately.
pub fn train_predictor(
    model: &mut Model,
    train: &WindowedDataset,
    val: Option<&WindowedDataset>,
    config: &TrainConfig,
    telemetry: &mut dyn Telemetry,
) -> Result<PredictorOutcome> {
    config.validate()?;
    if model.params().is_empty() {
        return Ok(PredictorOutcome {
            records: Vec::new(),
            best_epoch: None,
            best_params: None,
        });
    }
    let mut excluded = model.decoder_params();
    if !config.fine_tune_encoder {
        excluded.extend(model.encoder_params());
    }
    let trainable: Vec<ParamId> = model.params().ids().filter(|id| !excluded.contains(id)).collect();
    let plan = EpochPlan {
        phase: Phase::Predictor,
        obj: Objective::Prediction,
        epochs: config.epochs,
        stream: PREDICTOR_STREAM,
        trainable: &trainable,
    };
    let mut best: Option<(f64, usize, ParamStore)> = None;
    let records = run_epochs(model, train, val, config, plan, telemetry, |m, r| {
        if r.val_loss.is_finite() && best.as_ref().map_or(true, |(l, _, _)| r.val_loss < *l) {
            best = Some((r.val_loss, r.epoch, m.params().clone()));
        }
    })?;
    let (best_epoch, best_params) = match best {
        Some((_, e, p)) => (Some(e), Some(p)),
        None => (None, None),
    };
    Ok(PredictorOutcome {
        records,
        best_epoch,
        best_params,
    })
}
