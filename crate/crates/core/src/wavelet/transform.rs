use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::filters::FilterBank;
use crate::{Error, Result};

/// How the signal is continued past its ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extension {
    /// Half-sample symmetric: `x[-1] = x[0]`, `x[n] = x[n-1]`. Redundant
    /// (`floor((n + L - 1) / 2)` coefficients per band).
    #[default]
    Symmetric,
    /// Circular wrap of the signal, padded to even length by repeating the
    /// last sample. `ceil(n / 2)` coefficients per band; exactly orthogonal for
    /// even lengths.
    Periodic,
}

impl Extension {
    pub fn name(self) -> &'static str {
        match self {
            Extension::Symmetric => "symmetric",
            Extension::Periodic => "periodic",
        }
    }
}

/// Coefficients per band after one analysis step of an `n`-sample signal.
pub fn coeff_len(n: usize, filter_len: usize, ext: Extension) -> usize {
    match ext {
        Extension::Symmetric => (n + filter_len - 1) / 2,
        Extension::Periodic => n.div_ceil(2),
    }
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut i = i.rem_euclid(period);
    if i >= n {
        i = period - 1 - i;
    }
    i as usize
}

/// One analysis step: lowpass and highpass filtering followed by downsampling.
///
/// Coefficient `k` of each band is `sum_j filter[j] * x[2k + 1 - j]` over the
/// extended signal.
pub fn dwt_level(signal: &[f64], bank: &FilterBank, ext: Extension) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = signal.len();
    let flen = bank.len();
    if n < flen {
        return Err(Error::SignalTooShort { len: n, needed: flen });
    }
    let (lo, hi) = (bank.analysis_lowpass(), bank.analysis_highpass());
    let out_len = coeff_len(n, flen, ext);
    let mut approx = vec![0.0; out_len];
    let mut detail = vec![0.0; out_len];
    let padded = n + n % 2;
    for k in 0..out_len {
        let (mut a, mut d) = (0.0, 0.0);
        for j in 0..flen {
            let pos = 2 * k as isize + 1 - j as isize;
            let x = match ext {
                Extension::Symmetric => signal[reflect(pos, n)],
                Extension::Periodic => signal[pos.rem_euclid(padded as isize).min(n as isize - 1) as usize],
            };
            a += lo[j] * x;
            d += hi[j] * x;
        }
        approx[k] = a;
        detail[k] = d;
    }
    Ok((approx, detail))
}

/// One synthesis step: upsample both bands, filter with the synthesis pair,
/// sum and crop to `target_len` samples.
pub fn idwt_level(
    approx: &[f64],
    detail: &[f64],
    bank: &FilterBank,
    target_len: usize,
    ext: Extension,
) -> Result<Vec<f64>> {
    let flen = bank.len();
    let expected = coeff_len(target_len, flen, ext);
    if approx.len() != detail.len() || approx.len() != expected {
        return Err(Error::InconsistentLengths(format!(
            "approximation {} and detail {} for a {target_len}-sample {} reconstruction (expected {expected})",
            approx.len(),
            detail.len(),
            ext.name(),
        )));
    }
    let (lo, hi) = (bank.analysis_lowpass(), bank.analysis_highpass());
    // Synthesis is the transpose of the analysis map; for an orthogonal bank
    // the filters involved are the analysis ones read back to front, which is
    // exactly the synthesis pair.
    match ext {
        Extension::Symmetric => {
            let mut out = vec![0.0; target_len];
            for k in 0..approx.len() {
                for j in 0..flen {
                    let pos = 2 * k as isize + 1 - j as isize;
                    if pos >= 0 && (pos as usize) < target_len {
                        out[pos as usize] += lo[j] * approx[k] + hi[j] * detail[k];
                    }
                }
            }
            Ok(out)
        }
        Extension::Periodic => {
            let padded = target_len + target_len % 2;
            let mut out = vec![0.0; padded];
            for k in 0..approx.len() {
                for j in 0..flen {
                    let pos = (2 * k as isize + 1 - j as isize).rem_euclid(padded as isize) as usize;
                    out[pos] += lo[j] * approx[k] + hi[j] * detail[k];
                }
            }
            out.truncate(target_len);
            Ok(out)
        }
    }
}

/// Multilevel pyramid `S_J, D_J, ..., D_1` of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    /// Coarsest approximation coefficients.
    pub approximation: Vec<f64>,
    /// Detail coefficients, finest level (1) first.
    pub details: Vec<Vec<f64>>,
    pub original_length: usize,
    pub extension: Extension,
}

impl DecompositionResult {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Input length at each level, `[original_length, ...]`, with `levels + 1` entries.
    pub fn level_lengths(&self, filter_len: usize) -> Vec<usize> {
        level_lengths(self.original_length, filter_len, self.levels(), self.extension)
    }

    /// All coefficients in pyramid order (approximation, then coarsest to finest details).
    pub fn coefficients(&self) -> impl Iterator<Item = f64> + '_ {
        self.approximation
            .iter()
            .chain(self.details.iter().rev().flatten())
            .copied()
    }
}

fn level_lengths(n: usize, flen: usize, levels: usize, ext: Extension) -> Vec<usize> {
    let mut lengths = Vec::with_capacity(levels + 1);
    lengths.push(n);
    for _ in 0..levels {
        let last = *lengths.last().unwrap();
        lengths.push(coeff_len(last, flen, ext));
    }
    lengths
}

/// Shortest signal that supports `levels` analysis steps.
pub fn min_signal_len(filter_len: usize, levels: usize, ext: Extension) -> usize {
    (filter_len..)
        .find(|&n| {
            level_lengths(n, filter_len, levels, ext)[..levels]
                .iter()
                .all(|&l| l >= filter_len)
        })
        .unwrap_or(usize::MAX)
}

/// Iterates [`dwt_level`] on successive approximations.
pub fn decompose(signal: &[f64], bank: &FilterBank, levels: usize, ext: Extension) -> Result<DecompositionResult> {
    if levels == 0 {
        return Err(Error::config("wavelet levels must be at least 1"));
    }
    let lengths = level_lengths(signal.len(), bank.len(), levels, ext);
    if lengths[..levels].iter().any(|&l| l < bank.len()) {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            needed: min_signal_len(bank.len(), levels, ext),
        });
    }
    let mut approximation = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = dwt_level(&approximation, bank, ext)?;
        approximation = a;
        details.push(d);
    }
    Ok(DecompositionResult {
        approximation,
        details,
        original_length: signal.len(),
        extension: ext,
    })
}

/// Inverse of [`decompose`]; the output has `dec.original_length` samples.
pub fn reconstruct(dec: &DecompositionResult, bank: &FilterBank) -> Result<Vec<f64>> {
    let levels = dec.levels();
    if levels == 0 {
        return Err(Error::InconsistentLengths("pyramid has no detail levels".into()));
    }
    let lengths = dec.level_lengths(bank.len());
    if dec.approximation.len() != lengths[levels] {
        return Err(Error::InconsistentLengths(format!(
            "approximation has {} coefficients, expected {}",
            dec.approximation.len(),
            lengths[levels]
        )));
    }
    for (j, d) in dec.details.iter().enumerate() {
        if d.len() != lengths[j + 1] {
            return Err(Error::InconsistentLengths(format!(
                "level {} has {} detail coefficients, expected {}",
                j + 1,
                d.len(),
                lengths[j + 1]
            )));
        }
    }
    let mut approx = dec.approximation.clone();
    for level in (0..levels).rev() {
        approx = idwt_level(&approx, &dec.details[level], bank, lengths[level], dec.extension)?;
    }
    Ok(approx)
}
