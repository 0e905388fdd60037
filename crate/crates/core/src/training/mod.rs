//! SGD, autoencoder pretraining, predictor training and the experiment
//! driver that chains denoising, scaling, windowing, training and
//! evaluation.

mod config;
mod loops;
mod pipeline;
mod record;
mod sgd;

pub use config::TrainConfig;
pub use loops::{
    predict_dataset, prediction_loss, pretrain_autoencoder, reconstruction_loss, train_predictor, PredictorOutcome,
    Silent, Telemetry,
};
pub use pipeline::{
    evaluate_split, prepare, prepare_with_scales, run_ablation, run_pipeline, AblationReport, AblationVariant,
    PipelineConfig, PreparedData, RunOutcome, SplitData, SplitEvaluation,
};
pub use record::{records_to_csv, smoothed_loss, EpochRecord, Phase, TrainRecord, RECORD_HEADER};
pub use sgd::{sgd_step, StepStats};
