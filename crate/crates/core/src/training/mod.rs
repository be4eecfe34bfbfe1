//! Losses, the Adam optimizer, quality metrics and the training loop.

mod adam;
mod loss;
mod metrics;
mod train;

pub use adam::{adam_step, AdamState};
pub use loss::{bce_loss, mse_loss, BCE_CLAMP};
pub use metrics::{history_csv, psnr, psnr_from_mse, MetricRecord, PSNR_CAP_DB};
pub use train::{train, train_from, LrSchedule, TaskBinding, TrainConfig, TrainOutcome};
