use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::frame::TimeSeriesFrame;
use crate::{Error, Result};

/// Min-max range of one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelScale {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

impl ChannelScale {
    pub fn fit(name: &str, values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("fit_minmax"));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(ChannelScale {
            name: name.to_string(),
            min,
            max,
        })
    }

    /// A constant column maps to 0.5 everywhere.
    pub fn is_constant(&self) -> bool {
        self.max <= self.min
    }

    /// `(x - min) / (max - min)`, unclamped.
    pub fn apply(&self, x: f64) -> f64 {
        if self.is_constant() {
            0.5
        } else {
            (x - self.min) / (self.max - self.min)
        }
    }

    pub fn invert(&self, y: f64) -> f64 {
        if self.is_constant() {
            self.min
        } else {
            y * (self.max - self.min) + self.min
        }
    }
}

/// Per-column ranges, fit on the training portion only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub channels: Vec<ChannelScale>,
}

impl NormalizationParams {
    pub fn get(&self, name: &str) -> Result<&ChannelScale> {
        self.channels
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownChannel(name.to_string()))
    }
}

/// Training-region row count for `train_fraction` of `n` rows.
pub fn train_rows(n: usize, train_fraction: f64) -> usize {
    floor_index(train_fraction * n as f64)
}

/// `floor` that tolerates representation error just below an integer
/// (e.g. `0.7 * 10`).
pub(crate) fn floor_index(x: f64) -> usize {
    libm::floor(x + 1e-9) as usize
}

/// Fits a scale for every input column over the first
/// `floor(train_fraction * n)` rows.
pub fn fit_minmax(frame: &TimeSeriesFrame, train_fraction: f64) -> Result<NormalizationParams> {
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::config(format!("train_fraction {train_fraction} outside (0, 1]")));
    }
    let rows = train_rows(frame.len(), train_fraction);
    if rows == 0 {
        return Err(Error::Empty("fit_minmax"));
    }
    let channels = frame
        .input_names()
        .zip(frame.input_columns())
        .map(|(name, values)| ChannelScale::fit(name, &values[..rows]))
        .collect::<Result<_>>()?;
    Ok(NormalizationParams { channels })
}

pub fn apply_minmax(frame: &TimeSeriesFrame, params: &NormalizationParams) -> Result<TimeSeriesFrame> {
    frame.try_map_columns(|name, values| {
        let scale = params.get(name)?;
        Ok(values.iter().map(|&v| scale.apply(v)).collect())
    })
}

pub fn invert_minmax(values: &[f64], params: &NormalizationParams, channel: &str) -> Result<Vec<f64>> {
    let scale = params.get(channel)?;
    Ok(values.iter().map(|&v| scale.invert(v)).collect())
}
