use std::borrow::Cow;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{AdamState, MetricRecord};
use crate::error::{Error, Result};
use crate::math::{DenseMatrix, Prng};
use crate::network::{backward, forward, init_network, NetworkParams, NetworkSpec};

/// Binds a task's data and loss to the generic training loop.
pub trait TaskBinding {
    /// Number of supervised samples.
    fn num_samples(&self) -> usize;

    /// Network inputs for the selected samples, or all samples for `None`.
    fn inputs(&self, indices: Option<&[usize]>) -> Cow<'_, DenseMatrix>;

    /// Loss value and its gradient with respect to the network outputs.
    fn loss(&self, outputs: &DenseMatrix, indices: Option<&[usize]>) -> Result<(f64, DenseMatrix)>;

    /// Whether the loss decomposes over samples, so mini-batches are meaningful.
    fn supports_minibatch(&self) -> bool {
        true
    }

    /// Task quality metric for the current parameters.
    fn evaluate(&self, spec: &NetworkSpec, params: &NetworkParams) -> Result<f64>;

    fn metric_name(&self) -> &'static str;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LrSchedule {
    Constant,
    /// Geometric decay reaching `final_ratio * lr` at the last iteration.
    Exponential { final_ratio: f64 },
}

impl LrSchedule {
    pub fn rate(&self, base: f64, iteration: usize, iterations: usize) -> f64 {
        match *self {
            LrSchedule::Constant => base,
            LrSchedule::Exponential { final_ratio } => {
                let span = iterations.saturating_sub(1).max(1) as f64;
                base * final_ratio.powf(iteration as f64 / span)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    /// 0 means full batch.
    pub batch_size: usize,
    pub seed: u64,
    pub lr_schedule: LrSchedule,
    pub log_every: usize,
    /// When false, `wall_ms` is recorded as 0 so histories are byte-reproducible.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 1000,
            learning_rate: 1e-3,
            batch_size: 0,
            seed: 0,
            lr_schedule: LrSchedule::Exponential { final_ratio: 0.1 },
            log_every: 100,
            record_wall_time: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iterations must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if let LrSchedule::Exponential { final_ratio } = self.lr_schedule {
            if !(final_ratio > 0.0 && final_ratio.is_finite()) {
                return Err(Error::config("lr final ratio must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    pub history: Vec<MetricRecord>,
    /// Loss at every iteration, before that iteration's update.
    pub losses: Vec<f64>,
}

/// Trains from the initialization `init_network(spec, cfg.seed)`.
///
/// Mini-batches (when enabled) are drawn by reshuffling the sample indices
/// each epoch with a generator seeded by `cfg.seed + 1`.
pub fn train(task: &dyn TaskBinding, spec: &NetworkSpec, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let params = init_network(spec, cfg.seed)?;
    train_from(task, spec, cfg, params)
}

pub fn train_from(
    task: &dyn TaskBinding,
    spec: &NetworkSpec,
    cfg: &TrainConfig,
    mut params: NetworkParams,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    spec.validate()?;
    let n = task.num_samples();
    if n == 0 {
        return Err(Error::config("task has no samples"));
    }
    let minibatch = task.supports_minibatch() && cfg.batch_size > 0 && cfg.batch_size < n;
    let mut shuffler = Prng::new(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..n).collect();
    let mut cursor = n;

    let mut adam = AdamState::new(params.len(), cfg.learning_rate);
    let mut history = Vec::new();
    let mut losses = Vec::with_capacity(cfg.iterations);
    let log_every = cfg.log_every.max(1);
    let start = Instant::now();
    let mut last_finite = 0;

    for it in 0..cfg.iterations {
        let indices: Option<Vec<usize>> = if minibatch {
            if cursor + cfg.batch_size > n {
                shuffler.shuffle(&mut order);
                cursor = 0;
            }
            let batch = order[cursor..cursor + cfg.batch_size].to_vec();
            cursor += cfg.batch_size;
            Some(batch)
        } else {
            None
        };
        let inputs = task.inputs(indices.as_deref());
        let lf = last_finite;
        let diverged = |e: Error| match e {
            Error::NonFinite { .. } => Error::Divergence { iteration: it, last_finite: lf },
            other => other,
        };
        let (outputs, cache) = forward(spec, &params, &inputs).map_err(diverged)?;
        let (loss, d_out) = task.loss(&outputs, indices.as_deref())?;
        if !loss.is_finite() {
            return Err(Error::Divergence { iteration: it, last_finite });
        }
        losses.push(loss);
        let (grads, _) = backward(spec, &params, &cache, &d_out).map_err(diverged)?;
        last_finite = it;
        adam.learning_rate = cfg.lr_schedule.rate(cfg.learning_rate, it, cfg.iterations);
        adam.step(&mut params.values, &grads.values).map_err(diverged)?;

        let done = it + 1;
        if done % log_every == 0 || done == cfg.iterations {
            let metric = task.evaluate(spec, &params)?;
            let wall_ms = if cfg.record_wall_time { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
            log::debug!("iteration {done}: loss {loss:.6e}, {} {metric:.4}", task.metric_name());
            history.push(MetricRecord { iteration: done, loss, metric, wall_ms });
        }
    }
    Ok(TrainOutcome { params, history, losses })
}
