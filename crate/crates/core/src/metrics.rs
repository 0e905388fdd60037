//! Forecast error measures.
//!
//! The "relative" family divides each error by the actual value,
//! `MSE = mean(((A - F) / A)^2)`, `MAE = mean(|A - F| / |A|)`,
//! `RMSE = sqrt(MSE)`, and skips samples with `|A| < epsilon`. The
//! "absolute" family is the conventional unnormalized one over all samples.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-8;
pub const DEFAULT_BINS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Uniform histogram over `[min, max]`.
///
/// Bins are half-open `[lo, hi)` except the last, which also takes the
/// maximum. When every value is equal the range is widened to `v ± 0.5`.
pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::Empty("histogram"));
    }
    if bins == 0 {
        return Err(Error::config("histogram needs at least one bin"));
    }
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * width).collect();
    edges.push(hi);
    let mut counts = vec![0; bins];
    for &v in values {
        let mut idx = (((v - lo) / width) as usize).min(bins - 1);
        // settle rounding at the edges against the stored edge values
        while idx > 0 && v < edges[idx] {
            idx -= 1;
        }
        while idx + 1 < bins && v >= edges[idx + 1] {
            idx += 1;
        }
        counts[idx] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub horizon: Option<usize>,
    pub mse_rel: f64,
    pub mae_rel: f64,
    pub rmse_rel: f64,
    pub mse_abs: f64,
    pub mae_abs: f64,
    pub rmse_abs: f64,
    pub n_samples: usize,
    /// Samples left out of the relative measures because `|A| < epsilon`.
    pub n_skipped: usize,
    /// Raw errors `A - F`.
    pub histogram: Histogram,
}

pub fn evaluate(actual: &[f64], predicted: &[f64], epsilon: f64) -> Result<EvalReport> {
    evaluate_with_bins(actual, predicted, epsilon, DEFAULT_BINS)
}

pub fn evaluate_with_bins(actual: &[f64], predicted: &[f64], epsilon: f64, bins: usize) -> Result<EvalReport> {
    if actual.is_empty() {
        return Err(Error::Empty("evaluate"));
    }
    if actual.len() != predicted.len() {
        return Err(Error::ShapeMismatch {
            op: "evaluate",
            left: vec![actual.len()],
            right: vec![predicted.len()],
        });
    }
    let n = actual.len();
    let errors: Vec<f64> = actual.iter().zip(predicted).map(|(a, f)| a - f).collect();
    let (mut sq_rel, mut abs_rel, mut kept) = (0.0, 0.0, 0usize);
    for (&a, &e) in actual.iter().zip(&errors) {
        if a.abs() < epsilon {
            continue;
        }
        let r = e / a;
        sq_rel += r * r;
        abs_rel += r.abs();
        kept += 1;
    }
    let (mse_rel, mae_rel) = if kept == 0 {
        (f64::NAN, f64::NAN)
    } else {
        (sq_rel / kept as f64, abs_rel / kept as f64)
    };
    let mse_abs = errors.iter().map(|e| e * e).sum::<f64>() / n as f64;
    let mae_abs = errors.iter().map(|e| e.abs()).sum::<f64>() / n as f64;
    Ok(EvalReport {
        horizon: None,
        mse_rel,
        mae_rel,
        rmse_rel: libm::sqrt(mse_rel),
        mse_abs,
        mae_abs,
        rmse_abs: libm::sqrt(mse_abs),
        n_samples: n,
        n_skipped: n - kept,
        histogram: histogram(&errors, bins)?,
    })
}

impl EvalReport {
    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = Some(horizon);
        self
    }

    /// `(name, value)` pairs of the six error measures.
    pub fn measures(&self) -> [(&'static str, f64); 6] {
        [
            ("mse_rel", self.mse_rel),
            ("mae_rel", self.mae_rel),
            ("rmse_rel", self.rmse_rel),
            ("mse_abs", self.mse_abs),
            ("mae_abs", self.mae_abs),
            ("rmse_abs", self.rmse_abs),
        ]
    }

    /// One `key=value` per line, values in shortest round-trip form.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        if let Some(h) = self.horizon {
            out += &format!("horizon={h}\n");
        }
        for (k, v) in self.measures() {
            out += &format!("{k}={v:?}\n");
        }
        out += &format!("n_samples={}\nn_skipped={}\n", self.n_samples, self.n_skipped);
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(h) = self.horizon {
            writeln!(f, "horizon: {h} h")?;
        }
        writeln!(f, "{:<8} {:>14} {:>14}", "metric", "relative", "absolute")?;
        let rows = [
            ("MSE", self.mse_rel, self.mse_abs),
            ("MAE", self.mae_rel, self.mae_abs),
            ("RMSE", self.rmse_rel, self.rmse_abs),
        ];
        for (name, rel, abs) in rows {
            writeln!(f, "{name:<8} {rel:>14.6e} {abs:>14.6e}")?;
        }
        write!(
            f,
            "samples: {} (skipped for relative: {})",
            self.n_samples, self.n_skipped
        )
    }
}
