//! Hourly frames, synthetic data, min-max scaling, chronological splits and
//! sliding windows.
//!
//! CSV IO lives in the `stemcast` crate; this module only validates and
//! transforms in-memory frames.

mod frame;
mod normalize;
mod synthetic;
mod windows;

pub use frame::TimeSeriesFrame;
pub use normalize::{apply_minmax, fit_minmax, invert_minmax, train_rows, ChannelScale, NormalizationParams};
pub use synthetic::{
    clean_sdv, generate_synthetic, SyntheticConfig, DEFAULT_START_HOUR, SDV_AMPLITUDE, SDV_GROWTH_PER_HOUR, SDV_OFFSET,
};
pub use windows::{make_windows, make_windows_from, split, SplitFractions, SplitTag, TaskSpec, WindowedDataset};
