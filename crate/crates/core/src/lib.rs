//! Implicit neural representations built from fully connected layers and
//! split layers, where several affine branches are fused by an elementwise
//! (Hadamard) product before the activation.
//!
//! The crate is organised bottom-up:
//!
//! - [`math`]: dense matrices, a portable splitmix64 generator, weight
//!   initializers, exact binomials and a Jacobi eigen-solver.
//! - [`network`]: architecture description, batched forward pass and
//!   hand-derived reverse-mode gradients.
//! - [`training`]: losses, Adam, PSNR and the generic training loop.
//! - [`tasks`]: image fitting, parallel-beam CT and occupancy fields.
//! - [`analysis`]: monomial enumeration, symbolic expansion of split layers,
//!   optimal split rule, empirical NTK spectra, feature mosaics and sweeps.
//! - [`cli`]: configuration handling and the `split-inr` commands.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod math;
pub mod network;
pub mod tasks;
pub mod training;

pub use error::{Error, Result};

/// Library version echoed in run reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
