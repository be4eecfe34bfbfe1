//! Grid search over backbone width and split number.

use serde::Serialize;

use super::optimal_split;
use crate::error::Result;
use crate::network::NetworkSpec;
use crate::training::{train, TaskBinding, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub width: usize,
    pub splits: usize,
    pub params: usize,
    pub metric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepBest {
    pub width: usize,
    pub best_splits: usize,
    pub best_metric: f64,
    pub n_star: f64,
    /// `best_splits − n_star`.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub metric: String,
    pub higher_is_better: bool,
    pub rows: Vec<SweepRow>,
    pub best: Vec<SweepBest>,
}

/// Trains `template` at every `(width, splits)` pair with the same budget and
/// seed, in order; `splits = 1` is the dense baseline.
pub fn split_sweep(
    task: &dyn TaskBinding,
    template: &NetworkSpec,
    train_cfg: &TrainConfig,
    widths: &[usize],
    splits: &[usize],
    higher_is_better: bool,
) -> Result<SweepReport> {
    let mut specs = Vec::new();
    for &c in widths {
        for &n in splits {
            let spec = NetworkSpec { backbone_width: c, num_splits: n, ..template.clone() };
            spec.validate()?;
            specs.push(spec);
        }
    }
    let mut rows = Vec::with_capacity(specs.len());
    for spec in &specs {
        let outcome = train(task, spec, train_cfg)?;
        let metric = match outcome.history.last() {
            Some(r) => r.metric,
            None => task.evaluate(spec, &outcome.params)?,
        };
        rows.push(SweepRow { width: spec.backbone_width, splits: spec.num_splits.max(1), params: spec.param_count(), metric });
    }
    let better = |a: f64, b: f64| if higher_is_better { a > b } else { a < b };
    let mut best = Vec::new();
    for &c in widths {
        let mut pick: Option<&SweepRow> = None;
        for r in rows.iter().filter(|r| r.width == c) {
            if pick.is_none_or(|p| better(r.metric, p.metric)) {
                pick = Some(r);
            }
        }
        if let Some(p) = pick {
            let n_star = optimal_split(c)?.n_star;
            best.push(SweepBest {
                width: c,
                best_splits: p.splits,
                best_metric: p.metric,
                n_star,
                offset: p.splits as f64 - n_star,
            });
        }
    }
    Ok(SweepReport { metric: task.metric_name().to_string(), higher_is_better, rows, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::ActivationSpec;
    use crate::tasks::{ImageFitTask, ImageGrid};

    #[test]
    fn single_split_value_is_the_argmax() {
        let task = ImageFitTask::new(ImageGrid::new(4, 4, 1, (0..16).map(|k| k as f64 / 15.0).collect()).unwrap());
        let template = NetworkSpec::baseline(2, 1, 8, 1, ActivationSpec::relu());
        let cfg = TrainConfig { iterations: 5, log_every: 5, record_wall_time: false, ..Default::default() };
        let r = split_sweep(&task, &template, &cfg, &[8], &[2], true).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.best[0].best_splits, 2);
        assert!(split_sweep(&task, &template, &cfg, &[2], &[5], true).is_err());
    }
}
