use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::filters::FilterBank;
use super::transform::{decompose, reconstruct, DecompositionResult, Extension};
use crate::{Error, Result};

/// Detail-coefficient rule applied between analysis and synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DenoiseRule {
    /// Soft threshold at `sigma * sqrt(2 ln n)` on every detail level, with
    /// `sigma = median(|d_1|) / 0.6745`.
    #[default]
    SoftUniversal,
    /// Drop the finest detail level entirely.
    ZeroFinest,
}

impl DenoiseRule {
    pub fn name(self) -> &'static str {
        match self {
            DenoiseRule::SoftUniversal => "soft-universal",
            DenoiseRule::ZeroFinest => "zero-finest",
        }
    }
}

pub fn soft_threshold(x: f64, t: f64) -> f64 {
    let mag = x.abs() - t;
    if mag > 0.0 {
        mag.copysign(x)
    } else {
        0.0
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    match n {
        0 => 0.0,
        _ if n % 2 == 1 => values[n / 2],
        _ => 0.5 * (values[n / 2 - 1] + values[n / 2]),
    }
}

/// Robust noise level from the finest detail band (MAD / 0.6745).
pub fn estimate_noise_sigma(finest_details: &[f64]) -> f64 {
    let mut abs: Vec<f64> = finest_details.iter().map(|v| v.abs()).collect();
    median(&mut abs) / 0.6745
}

/// `sigma * sqrt(2 ln n)` for an `n`-sample signal.
pub fn universal_threshold(sigma: f64, n: usize) -> f64 {
    sigma * libm::sqrt(2.0 * libm::log(n as f64))
}

/// Soft-thresholds every detail level of `dec` at `threshold`.
pub fn shrink_details(dec: &mut DecompositionResult, threshold: f64) {
    for level in dec.details.iter_mut() {
        level.iter_mut().for_each(|v| *v = soft_threshold(*v, threshold));
    }
}

/// Wavelet denoising of one channel; the output has the input's length.
///
/// A signal whose samples are all equal is returned unchanged.
pub fn denoise(
    signal: &[f64],
    bank: &FilterBank,
    levels: usize,
    rule: DenoiseRule,
    ext: Extension,
) -> Result<Vec<f64>> {
    check_len(signal, bank)?;
    if is_constant(signal) {
        return Ok(signal.to_vec());
    }
    let mut dec = decompose(signal, bank, levels, ext)?;
    match rule {
        DenoiseRule::SoftUniversal => {
            let sigma = estimate_noise_sigma(&dec.details[0]);
            shrink_details(&mut dec, universal_threshold(sigma, signal.len()));
        }
        DenoiseRule::ZeroFinest => dec.details[0].iter_mut().for_each(|v| *v = 0.0),
    }
    reconstruct(&dec, bank)
}

/// Soft-threshold denoising with an explicit threshold.
pub fn denoise_with_threshold(
    signal: &[f64],
    bank: &FilterBank,
    levels: usize,
    ext: Extension,
    threshold: f64,
) -> Result<Vec<f64>> {
    check_len(signal, bank)?;
    let mut dec = decompose(signal, bank, levels, ext)?;
    shrink_details(&mut dec, threshold);
    reconstruct(&dec, bank)
}

fn check_len(signal: &[f64], bank: &FilterBank) -> Result<()> {
    if signal.len() < 2 * bank.len() {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            needed: 2 * bank.len(),
        });
    }
    Ok(())
}

fn is_constant(signal: &[f64]) -> bool {
    signal.windows(2).all(|w| w[0] == w[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn noisy_sine(seed: u64, n: usize, sigma: f64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        let clean: Vec<f64> = (0..n)
            .map(|i| libm::sin(2.0 * core::f64::consts::PI * i as f64 / 64.0))
            .collect();
        let noisy = clean.iter().map(|c| c + noise.sample(&mut rng)).collect();
        (clean, noisy)
    }

    fn rmse(a: &[f64], b: &[f64]) -> f64 {
        libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64)
    }

    #[test]
    fn soft_threshold_shape() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-0.5, 0.0), -0.5);
    }

    #[test]
    fn constant_signal_unchanged() {
        let bank = FilterBank::db2();
        let x = [4.2; 20];
        for rule in [DenoiseRule::SoftUniversal, DenoiseRule::ZeroFinest] {
            assert_eq!(denoise(&x, &bank, 2, rule, Extension::Symmetric).unwrap(), x.to_vec());
        }
    }

    #[test]
    fn zero_threshold_is_identity() {
        let bank = FilterBank::db2();
        let (_, noisy) = noisy_sine(1, 100, 0.3);
        let y = denoise_with_threshold(&noisy, &bank, 2, Extension::Symmetric, 0.0).unwrap();
        assert!(noisy.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-10));
        // a signal whose finest details have zero median gets a zero threshold
        let mut spikes = [0.0; 32];
        spikes[16] = 1.0;
        let dec = decompose(&spikes, &bank, 2, Extension::Symmetric).unwrap();
        assert_eq!(estimate_noise_sigma(&dec.details[0]), 0.0);
        let y = denoise(&spikes, &bank, 2, DenoiseRule::SoftUniversal, Extension::Symmetric).unwrap();
        assert!(spikes.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn denoising_reduces_error() {
        let bank = FilterBank::db2();
        let (clean, noisy) = noisy_sine(7, 512, 0.1);
        for rule in [DenoiseRule::SoftUniversal, DenoiseRule::ZeroFinest] {
            let y = denoise(&noisy, &bank, 2, rule, Extension::Symmetric).unwrap();
            assert_eq!(y.len(), 512);
            assert!(rmse(&y, &clean) < rmse(&noisy, &clean), "{rule:?}");
        }
    }

    #[test]
    fn approximation_only_is_closer_to_clean_sine() {
        let bank = FilterBank::db2();
        let (clean, noisy) = noisy_sine(2, 256, 0.2);
        let mut dec = decompose(&noisy, &bank, 2, Extension::Symmetric).unwrap();
        dec.details.iter_mut().flatten().for_each(|v| *v = 0.0);
        let smooth = reconstruct(&dec, &bank).unwrap();
        assert!(rmse(&smooth, &clean) < rmse(&noisy, &clean));
    }

    #[test]
    fn zero_finest_is_idempotent_when_orthogonal() {
        let bank = FilterBank::db2();
        let (_, noisy) = noisy_sine(4, 128, 0.2);
        let once = denoise(&noisy, &bank, 2, DenoiseRule::ZeroFinest, Extension::Periodic).unwrap();
        let twice = denoise(&once, &bank, 2, DenoiseRule::ZeroFinest, Extension::Periodic).unwrap();
        assert!(once.iter().zip(&twice).all(|(a, b)| (a - b).abs() < 1e-10));
        let dec = decompose(&once, &bank, 2, Extension::Periodic).unwrap();
        assert!(dec.details[0].iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn short_signal_rejected() {
        let bank = FilterBank::db2();
        assert_eq!(
            denoise(
                &[1.0, 2.0, 3.0, 4.0, 5.0],
                &bank,
                1,
                DenoiseRule::ZeroFinest,
                Extension::Symmetric
            ),
            Err(Error::SignalTooShort { len: 5, needed: 8 })
        );
    }
}
