//! Numerical building blocks shared by every other module.

mod binomial;
mod eigen;
mod init;
mod matrix;
pub mod par;
mod rng;

pub use binomial::{binomial, BigCount};
pub use eigen::symmetric_eigenvalues;
pub use init::{init_weights, InitScheme};
pub use matrix::{hadamard, matmul, DenseMatrix, DenseVector};
pub use rng::Prng;

/// `y += alpha * x`, element by element in index order.
#[inline]
pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Dot product accumulated strictly left to right.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}
