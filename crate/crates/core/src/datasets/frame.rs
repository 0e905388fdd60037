use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use crate::{Error, Result};

/// Hourly multichannel series with one target channel.
///
/// Timestamps are whole hours since 1970-01-01T00:00Z and advance by exactly
/// one hour per row.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesFrame {
    timestamps: Vec<i64>,
    channel_names: Vec<String>,
    channels: Vec<Vec<f64>>,
    target_name: String,
    target: Vec<f64>,
}

impl TimeSeriesFrame {
    pub fn new(
        timestamps: Vec<i64>,
        channel_names: Vec<String>,
        channels: Vec<Vec<f64>>,
        target_name: String,
        target: Vec<f64>,
    ) -> Result<Self> {
        let n = timestamps.len();
        if channel_names.len() != channels.len() {
            return Err(Error::data(format!(
                "{} channel names for {} channels",
                channel_names.len(),
                channels.len()
            )));
        }
        if let Some((name, _)) = channel_names.iter().zip(&channels).find(|(_, c)| c.len() != n) {
            return Err(Error::data(format!(
                "channel `{name}` length differs from {n} timestamps"
            )));
        }
        if target.len() != n {
            return Err(Error::data(format!(
                "target length {} differs from {n} timestamps",
                target.len()
            )));
        }
        let mut names: Vec<&String> = channel_names.iter().chain(core::iter::once(&target_name)).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::data("duplicate channel names"));
        }
        if let Some(row) = timestamps.windows(2).position(|w| w[1] != w[0] + 1) {
            return Err(Error::data(format!(
                "row {}: timestamp is not exactly one hour after the previous row",
                row + 1
            )));
        }
        for (name, values) in channel_names
            .iter()
            .zip(&channels)
            .chain(core::iter::once((&target_name, &target)))
        {
            if let Some(row) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::data(format!("row {row}: non-finite value in `{name}`")));
            }
        }
        Ok(TimeSeriesFrame {
            timestamps,
            channel_names,
            channels,
            target_name,
            target,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Feature channels followed by the target: the columns models see.
    pub fn input_names(&self) -> impl Iterator<Item = &str> {
        self.channel_names
            .iter()
            .map(String::as_str)
            .chain(core::iter::once(self.target_name.as_str()))
    }

    pub fn input_columns(&self) -> impl Iterator<Item = &[f64]> {
        self.channels
            .iter()
            .map(Vec::as_slice)
            .chain(core::iter::once(self.target.as_slice()))
    }

    pub fn n_inputs(&self) -> usize {
        self.channels.len() + 1
    }

    /// Looks up a feature channel or the target by name.
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        if name == self.target_name {
            return Some(&self.target);
        }
        self.channel_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.channels[i].as_slice())
    }

    /// Rows in `range`.
    pub fn slice(&self, range: Range<usize>) -> TimeSeriesFrame {
        TimeSeriesFrame {
            timestamps: self.timestamps[range.clone()].to_vec(),
            channel_names: self.channel_names.clone(),
            channels: self.channels.iter().map(|c| c[range.clone()].to_vec()).collect(),
            target_name: self.target_name.clone(),
            target: self.target[range].to_vec(),
        }
    }

    /// Applies `f` to every input column (features and target).
    pub fn try_map_columns(&self, mut f: impl FnMut(&str, &[f64]) -> Result<Vec<f64>>) -> Result<TimeSeriesFrame> {
        let mut channels = Vec::with_capacity(self.channels.len());
        for (name, values) in self.channel_names.iter().zip(&self.channels) {
            channels.push(f(name, values)?);
        }
        let target = f(&self.target_name, &self.target)?;
        TimeSeriesFrame::new(
            self.timestamps.clone(),
            self.channel_names.clone(),
            channels,
            self.target_name.clone(),
            target,
        )
    }

    /// Appends `other`, which must continue this frame's hourly sequence.
    pub fn concat(&self, other: &TimeSeriesFrame) -> Result<TimeSeriesFrame> {
        if self.channel_names != other.channel_names || self.target_name != other.target_name {
            return Err(Error::data("cannot concatenate frames with different channels"));
        }
        let join = |a: &[f64], b: &[f64]| a.iter().chain(b).copied().collect::<Vec<f64>>();
        TimeSeriesFrame::new(
            self.timestamps.iter().chain(&other.timestamps).copied().collect(),
            self.channel_names.clone(),
            self.channels
                .iter()
                .zip(&other.channels)
                .map(|(a, b)| join(a, b))
                .collect(),
            self.target_name.clone(),
            join(&self.target, &other.target),
        )
    }
}
