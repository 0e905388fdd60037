use alloc::string::ToString;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Analysis and synthesis filters of an orthogonal wavelet.
///
/// Filters follow the usual convention where the synthesis lowpass is the
/// time reverse of the analysis lowpass and each highpass is the quadrature
/// mirror of its lowpass.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    name: &'static str,
    dec_lo: Vec<f64>,
    dec_hi: Vec<f64>,
    rec_lo: Vec<f64>,
    rec_hi: Vec<f64>,
}

/// Deviations of a filter bank from the orthogonal-wavelet identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterIdentities {
    /// `sum(lowpass) - sqrt(2)`
    pub lowpass_sum_error: f64,
    /// `sum(highpass)`
    pub highpass_sum: f64,
    /// `|<lowpass, lowpass>| - 1`
    pub lowpass_norm_error: f64,
    /// Largest `|<lowpass, lowpass shifted by 2m>|` for `m != 0`.
    pub shift_orthogonality: f64,
    /// Largest `|<lowpass, highpass shifted by 2m>|` over all `m`.
    pub cross_orthogonality: f64,
    /// Largest `|highpass[j] - (-1)^(j+1) lowpass[L-1-j]|`.
    pub qmf_error: f64,
}

impl FilterIdentities {
    pub fn max_error(&self) -> f64 {
        [
            self.lowpass_sum_error,
            self.highpass_sum,
            self.lowpass_norm_error,
            self.shift_orthogonality,
            self.cross_orthogonality,
            self.qmf_error,
        ]
        .iter()
        .fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn shifted_dot(a: &[f64], b: &[f64], shift: isize) -> f64 {
    (0..a.len() as isize)
        .filter_map(|i| {
            let j = i + shift;
            (j >= 0 && (j as usize) < b.len()).then(|| a[i as usize] * b[j as usize])
        })
        .sum()
}

impl FilterBank {
    /// Builds a bank from the synthesis lowpass (scaling) filter.
    fn from_scaling(name: &'static str, rec_lo: Vec<f64>) -> Self {
        let len = rec_lo.len();
        let dec_lo: Vec<f64> = rec_lo.iter().rev().copied().collect();
        let dec_hi: Vec<f64> = (0..len)
            .map(|j| {
                let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
                sign * dec_lo[len - 1 - j]
            })
            .collect();
        let rec_hi = dec_hi.iter().rev().copied().collect();
        FilterBank {
            name,
            dec_lo,
            dec_hi,
            rec_lo,
            rec_hi,
        }
    }

    /// Daubechies wavelet with two vanishing moments (4 taps).
    ///
    /// Closed form of the scaling filter:
    /// `[1+√3, 3+√3, 3-√3, 1-√3] / (4√2)`.
    pub fn db2() -> Self {
        let s3 = libm::sqrt(3.0);
        let denom = 4.0 * libm::sqrt(2.0);
        FilterBank::from_scaling(
            "db2",
            alloc::vec![
                (1.0 + s3) / denom,
                (3.0 + s3) / denom,
                (3.0 - s3) / denom,
                (1.0 - s3) / denom,
            ],
        )
    }

    /// Haar (db1).
    pub fn haar() -> Self {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        FilterBank::from_scaling("db1", alloc::vec![h, h])
    }

    /// Looks a wavelet up by name. Only the Daubechies filters used by the
    /// pipeline are registered.
    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "db2" => Ok(FilterBank::db2()),
            "db1" | "haar" => Ok(FilterBank::haar()),
            _ => Err(Error::UnknownWavelet(name.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn len(&self) -> usize {
        self.dec_lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dec_lo.is_empty()
    }

    pub fn analysis_lowpass(&self) -> &[f64] {
        &self.dec_lo
    }

    pub fn analysis_highpass(&self) -> &[f64] {
        &self.dec_hi
    }

    pub fn synthesis_lowpass(&self) -> &[f64] {
        &self.rec_lo
    }

    pub fn synthesis_highpass(&self) -> &[f64] {
        &self.rec_hi
    }

    pub fn identities(&self) -> FilterIdentities {
        let (lo, hi) = (&self.dec_lo, &self.dec_hi);
        let len = lo.len() as isize;
        let mut shift_orthogonality = 0.0f64;
        let mut cross_orthogonality = 0.0f64;
        let mut m = -len;
        while m <= len {
            if m != 0 {
                shift_orthogonality = shift_orthogonality.max(shifted_dot(lo, lo, m).abs());
            }
            cross_orthogonality = cross_orthogonality.max(shifted_dot(lo, hi, m).abs());
            m += 2;
        }
        let n = lo.len();
        let qmf_error = (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
                (hi[j] - sign * lo[n - 1 - j]).abs()
            })
            .fold(0.0, f64::max);
        FilterIdentities {
            lowpass_sum_error: lo.iter().sum::<f64>() - core::f64::consts::SQRT_2,
            highpass_sum: hi.iter().sum(),
            lowpass_norm_error: shifted_dot(lo, lo, 0) - 1.0,
            shift_orthogonality,
            cross_orthogonality,
            qmf_error,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db2_identities() {
        let id = FilterBank::db2().identities();
        assert!(id.lowpass_sum_error.abs() < 1e-12, "{id:?}");
        assert!(id.highpass_sum.abs() < 1e-12);
        assert!(id.shift_orthogonality < 1e-12);
        assert!(id.cross_orthogonality < 1e-12);
        assert!(id.lowpass_norm_error.abs() < 1e-12);
        assert!(id.qmf_error == 0.0);
    }

    #[test]
    fn db2_matches_published_values() {
        let bank = FilterBank::db2();
        let expected = [
            -0.12940952255092145,
            0.22414386804185735,
            0.836516303737469,
            0.48296291314469025,
        ];
        for (a, b) in bank.analysis_lowpass().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn db2_two_vanishing_moments() {
        let bank = FilterBank::db2();
        let hi = bank.analysis_highpass();
        let m0: f64 = hi.iter().sum();
        let m1: f64 = hi.iter().enumerate().map(|(k, h)| k as f64 * h).sum();
        assert!(m0.abs() < 1e-12 && m1.abs() < 1e-12);
    }

    #[test]
    fn haar_identities_and_registry() {
        assert!(FilterBank::haar().identities().max_error() < 1e-12);
        assert_eq!(FilterBank::by_name("DB2").unwrap().name(), "db2");
        assert!(matches!(FilterBank::by_name("sym4"), Err(Error::UnknownWavelet(_))));
    }
}
