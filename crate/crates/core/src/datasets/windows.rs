use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::frame::TimeSeriesFrame;
use super::normalize::floor_index;
use crate::ndmath::Tensor;
use crate::{Error, Result};

/// Input window length, forecast horizon and stride, all in hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub window: usize,
    pub horizon: usize,
    pub stride: usize,
}

impl TaskSpec {
    /// 15 hours in, 1 hour ahead.
    pub const ONE_STEP: TaskSpec = TaskSpec {
        window: 15,
        horizon: 1,
        stride: 1,
    };
    /// 6 hours in, 6 hours ahead, 6-hour stride.
    pub const TWO_STEP: TaskSpec = TaskSpec {
        window: 6,
        horizon: 6,
        stride: 6,
    };
    /// 12 hours in, 12 hours ahead, 12-hour stride.
    pub const THREE_STEP: TaskSpec = TaskSpec {
        window: 12,
        horizon: 12,
        stride: 12,
    };

    pub fn preset(name: &str) -> Option<TaskSpec> {
        match name {
            "1step" => Some(TaskSpec::ONE_STEP),
            "2step" => Some(TaskSpec::TWO_STEP),
            "3step" => Some(TaskSpec::THREE_STEP),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.horizon == 0 || self.stride == 0 {
            return Err(Error::config("window, horizon and stride must all be at least 1"));
        }
        Ok(())
    }

    /// Rows one window/target pair spans.
    pub fn span(&self) -> usize {
        self.window + self.horizon
    }

    /// Number of windows a frame of `n` rows yields.
    pub fn count(&self, n: usize) -> usize {
        if n < self.span() {
            0
        } else {
            (n - self.span()) / self.stride + 1
        }
    }
}

impl Default for TaskSpec {
    fn default() -> Self {
        TaskSpec::ONE_STEP
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Val,
    Test,
}

impl SplitTag {
    pub fn name(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Val => "val",
            SplitTag::Test => "test",
        }
    }
}

/// Train/validation/test proportions of a chronological split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.7,
            val: 0.1,
            test: 0.2,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|f| !(*f > 0.0)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "split fractions {parts:?} must be positive and sum to 1"
            )));
        }
        Ok(())
    }

    /// `[0, b1)`, `[b1, b2)`, `[b2, n)` with floor boundaries.
    pub fn boundaries(&self, n: usize) -> (usize, usize) {
        let b1 = floor_index(self.train * n as f64);
        let b2 = floor_index((self.train + self.val) * n as f64).max(b1);
        (b1, b2.min(n))
    }
}

/// Splits a frame into contiguous train/validation/test segments. Each must
/// hold at least `min_len` rows.
pub fn split(frame: &TimeSeriesFrame, fractions: SplitFractions, min_len: usize) -> Result<[TimeSeriesFrame; 3]> {
    fractions.validate()?;
    let n = frame.len();
    let (b1, b2) = fractions.boundaries(n);
    let parts = [frame.slice(0..b1), frame.slice(b1..b2), frame.slice(b2..n)];
    for (part, tag) in parts.iter().zip([SplitTag::Train, SplitTag::Val, SplitTag::Test]) {
        if part.len() < min_len.max(1) {
            return Err(Error::data(format!(
                "{} split has {} rows, needs at least {}",
                tag.name(),
                part.len(),
                min_len.max(1)
            )));
        }
    }
    Ok(parts)
}

/// Sliding windows over one split.
///
/// Window `i` covers rows `[i*s, i*s + T)` of the inputs; its target is the
/// target series at row `i*s + T + k - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    /// `N * T * M` values, window-major then time then channel.
    inputs: Vec<f64>,
    targets: Vec<f64>,
    /// Target series at the last input row of each window.
    last_observed: Vec<f64>,
    last_input_hours: Vec<i64>,
    target_hours: Vec<i64>,
    pub task: TaskSpec,
    pub channels: usize,
    pub split: SplitTag,
}

/// Windows of `frame` whose inputs are all of its columns and whose targets
/// come from its target column.
pub fn make_windows(frame: &TimeSeriesFrame, task: TaskSpec, split: SplitTag) -> Result<WindowedDataset> {
    make_windows_from(frame, frame.target(), task, split)
}

/// Like [`make_windows`] with targets taken from a separate, row-aligned
/// series (e.g. the raw target when the inputs were denoised).
pub fn make_windows_from(
    inputs: &TimeSeriesFrame,
    targets: &[f64],
    task: TaskSpec,
    split: SplitTag,
) -> Result<WindowedDataset> {
    task.validate()?;
    let n = inputs.len();
    if targets.len() != n {
        return Err(Error::data("target series is not aligned with the input frame"));
    }
    if n < task.span() {
        return Err(Error::data(format!(
            "{} split has {n} rows, fewer than window + horizon = {}",
            split.name(),
            task.span()
        )));
    }
    let count = task.count(n);
    let m = inputs.n_inputs();
    let columns: Vec<&[f64]> = inputs.input_columns().collect();
    let mut data = Vec::with_capacity(count * task.window * m);
    let mut out = WindowedDataset {
        inputs: Vec::new(),
        targets: Vec::with_capacity(count),
        last_observed: Vec::with_capacity(count),
        last_input_hours: Vec::with_capacity(count),
        target_hours: Vec::with_capacity(count),
        task,
        channels: m,
        split,
    };
    for w in 0..count {
        let start = w * task.stride;
        for t in start..start + task.window {
            data.extend(columns.iter().map(|c| c[t]));
        }
        let last = start + task.window - 1;
        let target = last + task.horizon;
        out.targets.push(targets[target]);
        out.last_observed.push(targets[last]);
        out.last_input_hours.push(inputs.timestamps()[last]);
        out.target_hours.push(inputs.timestamps()[target]);
    }
    out.inputs = data;
    Ok(out)
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn window_len(&self) -> usize {
        self.task.window
    }

    /// `T x M` values of window `i`, row-major by time.
    pub fn window(&self, i: usize) -> &[f64] {
        let size = self.task.window * self.channels;
        &self.inputs[i * size..(i + 1) * size]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn last_observed(&self) -> &[f64] {
        &self.last_observed
    }

    pub fn last_input_hours(&self) -> &[i64] {
        &self.last_input_hours
    }

    pub fn target_hours(&self) -> &[i64] {
        &self.target_hours
    }

    /// One `B x M` tensor per time step for the windows in `indices`.
    pub fn time_major(&self, indices: &[usize]) -> Vec<Tensor> {
        let (t_len, m) = (self.task.window, self.channels);
        (0..t_len)
            .map(|t| {
                let mut data = Vec::with_capacity(indices.len() * m);
                for &i in indices {
                    data.extend_from_slice(&self.window(i)[t * m..(t + 1) * m]);
                }
                Tensor::matrix(indices.len(), m, data).expect("window values are finite")
            })
            .collect()
    }

    /// `B x (T*M)` flattened windows.
    pub fn flattened(&self, indices: &[usize]) -> Tensor {
        let size = self.task.window * self.channels;
        let mut data = Vec::with_capacity(indices.len() * size);
        for &i in indices {
            data.extend_from_slice(self.window(i));
        }
        Tensor::matrix(indices.len(), size, data).expect("window values are finite")
    }

    /// `B x 1` targets.
    pub fn target_column(&self, indices: &[usize]) -> Tensor {
        let data = indices.iter().map(|&i| self.targets[i]).collect();
        Tensor::matrix(indices.len(), 1, data).expect("targets are finite")
    }

    /// Rescales targets and last observations with `f` (inputs untouched).
    pub fn map_targets(mut self, f: impl Fn(f64) -> f64) -> Self {
        self.targets.iter_mut().for_each(|v| *v = f(*v));
        self.last_observed.iter_mut().for_each(|v| *v = f(*v));
        self
    }
}
