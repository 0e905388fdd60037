//! Orthogonal discrete wavelet transform (Mallat pyramid) and denoising.

mod denoise;
mod filters;
mod transform;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use denoise::{
    denoise, denoise_with_threshold, estimate_noise_sigma, shrink_details, soft_threshold, universal_threshold,
    DenoiseRule,
};
pub use filters::{FilterBank, FilterIdentities};
pub use transform::{
    coeff_len, decompose, dwt_level, idwt_level, min_signal_len, reconstruct, DecompositionResult, Extension,
};

use crate::Result;

/// Denoising settings applied to each input channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveletConfig {
    pub family: String,
    pub levels: usize,
    pub rule: DenoiseRule,
    pub extension: Extension,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        WaveletConfig {
            family: "db2".into(),
            levels: 2,
            rule: DenoiseRule::SoftUniversal,
            extension: Extension::Symmetric,
        }
    }
}

impl WaveletConfig {
    pub fn bank(&self) -> Result<FilterBank> {
        FilterBank::by_name(&self.family)
    }

    pub fn denoise(&self, signal: &[f64]) -> Result<Vec<f64>> {
        denoise(signal, &self.bank()?, self.levels, self.rule, self.extension)
    }
}
