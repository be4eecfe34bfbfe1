use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// PSNR reported for a perfect reconstruction.
pub const PSNR_CAP_DB: f64 = 99.0;

/// `10 log10(peak^2 / MSE)` in dB, capped at [`PSNR_CAP_DB`].
pub fn psnr(pred: &[f64], target: &[f64], peak: f64) -> Result<f64> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::shape(format!("psnr over {} and {} values", pred.len(), target.len())));
    }
    let mse = pred.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / pred.len() as f64;
    Ok(psnr_from_mse(mse, peak))
}

pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP_DB)
}

/// One row of the training history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub iteration: usize,
    pub loss: f64,
    /// PSNR in dB or chamfer distance, depending on the task.
    pub metric: f64,
    pub wall_ms: f64,
}

/// Renders the history as `iteration,loss,metric,wall_ms` CSV.
///
/// Reals are written with 17 significant digits so equal runs produce equal bytes.
pub fn history_csv(history: &[MetricRecord]) -> String {
    let mut out = String::from("iteration,loss,metric,wall_ms\n");
    for r in history {
        let _ = writeln!(out, "{},{:.16e},{:.16e},{:.3}", r.iteration, r.loss, r.metric, r.wall_ms);
    }
    out
}
