use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::metrics::EvalReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Pretrain,
    Predictor,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Pretrain => "pretrain",
            Phase::Predictor => "predictor",
        }
    }
}

/// Losses of one completed epoch. `val_loss` is NaN without a validation set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub seconds: f64,
}

/// Loss trajectory of a run plus its final test metrics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainRecord {
    pub pretrain: Vec<EpochRecord>,
    pub predictor: Vec<EpochRecord>,
    /// Predictor epoch with the lowest validation loss.
    pub best_epoch: Option<usize>,
    pub test: Option<EvalReport>,
}

pub const RECORD_HEADER: &str = "epoch,train_loss,val_loss,seconds";

/// `epoch,train_loss,val_loss,seconds` rows, floats in shortest round-trip form.
pub fn records_to_csv(rows: &[EpochRecord]) -> String {
    let mut out = String::from(RECORD_HEADER);
    out.push('\n');
    for r in rows {
        out += &format!("{},{:?},{:?},{:?}\n", r.epoch, r.train_loss, r.val_loss, r.seconds);
    }
    out
}

/// Trailing moving average of the training loss ending at `epoch` (1-based)
/// over up to `window` epochs.
pub fn smoothed_loss(rows: &[EpochRecord], epoch: usize, window: usize) -> Option<f64> {
    if epoch == 0 || epoch > rows.len() || window == 0 {
        return None;
    }
    let start = epoch.saturating_sub(window);
    let slice = &rows[start..epoch];
    Some(slice.iter().map(|r| r.train_loss).sum::<f64>() / slice.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(losses: &[f64]) -> Vec<EpochRecord> {
        losses
            .iter()
            .enumerate()
            .map(|(i, &l)| EpochRecord {
                epoch: i + 1,
                train_loss: l,
                val_loss: f64::NAN,
                seconds: 0.5,
            })
            .collect()
    }

    #[test]
    fn csv_layout() {
        let csv = records_to_csv(&rows(&[0.25, 0.1]));
        assert_eq!(
            csv,
            "epoch,train_loss,val_loss,seconds\n1,0.25,NaN,0.5\n2,0.1,NaN,0.5\n"
        );
    }

    #[test]
    fn moving_average() {
        let r = rows(&[5.0, 4.0, 3.0, 2.0, 1.0, 0.0]);
        assert_eq!(smoothed_loss(&r, 5, 5), Some(3.0));
        assert_eq!(smoothed_loss(&r, 6, 5), Some(2.0));
        assert_eq!(smoothed_loss(&r, 2, 5), Some(4.5));
        assert_eq!(smoothed_loss(&r, 7, 5), None);
        assert_eq!(smoothed_loss(&r, 0, 5), None);
    }
}
