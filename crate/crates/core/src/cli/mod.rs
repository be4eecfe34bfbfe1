//! Command-line entry points: `split-inr <command> [--config path] [--key value ...]`.

mod commands;
mod config;
mod json;

pub use commands::{cmd_analyze, cmd_fit_image, cmd_fit_occupancy, cmd_recon_ct, feature_pair, AnalyzeKind, RunReport};
pub use config::{load, parse_overrides, AnalyzeConfig, RunConfig, ScheduleKind, TaskKind};
pub use json::to_canonical_string;
