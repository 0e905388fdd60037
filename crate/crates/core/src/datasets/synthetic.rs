use alloc::vec::Vec;
use alloc::{format, vec};
use core::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::frame::TimeSeriesFrame;
use crate::{Error, Result};

/// 2023-05-01T00:00Z in hours since the Unix epoch.
pub const DEFAULT_START_HOUR: i64 = 467_472;

/// Mean SDV level (mm/day).
pub const SDV_OFFSET: f64 = 0.2;
/// Amplitude of the daily shrink/swell cycle (mm/day).
pub const SDV_AMPLITUDE: f64 = 0.5;
/// Slow growth trend (mm/day per hour).
pub const SDV_GROWTH_PER_HOUR: f64 = 1e-4;

/// Parameters of the synthetic stem-diameter-variation generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_hours: usize,
    /// Innovation standard deviation of the AR(1) target noise. Covariate
    /// noise is scaled from it, so zero gives a noiseless frame.
    pub noise_sigma: f64,
    pub ar_coefficient: f64,
    pub seed: u64,
    pub start_hour: i64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_hours: 2160,
            noise_sigma: 0.1,
            ar_coefficient: 0.6,
            seed: 0,
            start_hour: DEFAULT_START_HOUR,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_hours < 48 {
            return Err(Error::config(format!(
                "synthetic series needs at least 48 hours, got {}",
                self.n_hours
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::config("noise_sigma must be finite and non-negative"));
        }
        if !(self.ar_coefficient.abs() < 1.0) {
            return Err(Error::config("ar_coefficient must lie in (-1, 1)"));
        }
        Ok(())
    }
}

/// Daily phase in radians for an absolute hour, peaking at local noon.
fn daily(hour: i64, lag: f64) -> f64 {
    libm::sin(2.0 * PI * ((hour.rem_euclid(24)) as f64 - lag) / 24.0)
}

/// Noise-free SDV at row `i` of a series starting at `start_hour`.
pub fn clean_sdv(start_hour: i64, i: usize) -> f64 {
    SDV_OFFSET - SDV_AMPLITUDE * daily(start_hour + i as i64, 6.0) + SDV_GROWTH_PER_HOUR * i as f64
}

/// Generates a frame with channels `par`, `co2`, `temperature`, `rh` and
/// target `sdv`. A pure function of `config`.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<TimeSeriesFrame> {
    config.validate()?;
    let n = config.n_hours;
    let sigma = config.noise_sigma;
    let phi = config.ar_coefficient;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut z = || -> f64 { StandardNormal.sample(&mut rng) };

    let mut par = vec![0.0; n];
    let mut co2 = vec![0.0; n];
    let mut temperature = vec![0.0; n];
    let mut rh = vec![0.0; n];
    let mut sdv = vec![0.0; n];
    let mut ar = sigma / libm::sqrt(1.0 - phi * phi) * z();
    for i in 0..n {
        if i > 0 {
            ar = phi * ar + sigma * z();
        }
        let hour = config.start_hour + i as i64;
        sdv[i] = clean_sdv(config.start_hour, i) + ar;
        let light = daily(hour, 6.0);
        let warm = daily(hour, 9.0);
        par[i] = 600.0 * light.max(0.0) + 100.0 * sigma * z();
        co2[i] = 450.0 - 60.0 * light + 50.0 * sigma * z();
        temperature[i] = 24.0 + 4.0 * warm + 5.0 * sigma * z();
        rh[i] = 70.0 - 12.0 * warm + 30.0 * sigma * z();
    }
    let timestamps = (0..n as i64).map(|i| config.start_hour + i).collect();
    TimeSeriesFrame::new(
        timestamps,
        ["par", "co2", "temperature", "rh"]
            .iter()
            .map(|s| (*s).into())
            .collect(),
        Vec::from([par, co2, temperature, rh]),
        "sdv".into(),
        sdv,
    )
}
