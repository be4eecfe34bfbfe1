//! Empirical neural tangent kernel at fixed parameters.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::math::{par, symmetric_eigenvalues, DenseMatrix};
use crate::network::{backward, forward, NetworkParams, NetworkSpec};

/// Largest sample count accepted by [`empirical_ntk`].
pub const MAX_NTK_SAMPLES: usize = 512;
/// Decade buckets run from `10^LOWEST_DECADE` up to `10^(HIGHEST_DECADE + 1)`.
pub const LOWEST_DECADE: i32 = -6;
pub const HIGHEST_DECADE: i32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecadeBucket {
    /// Bucket covers `[10^exponent, 10^(exponent+1))`.
    pub exponent: i32,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NtkSummary {
    pub max: f64,
    pub min_positive: Option<f64>,
    /// Eigenvalues below `10^LOWEST_DECADE`, including zero and negative ones.
    pub below: usize,
    pub above: usize,
    pub buckets: Vec<DecadeBucket>,
    /// `log10(max / min_positive)`.
    pub decade_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NtkReport {
    pub coords: DenseMatrix,
    pub kernel: DenseMatrix,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub summary: NtkSummary,
}

impl NtkReport {
    /// `index,eigenvalue` lines with a header.
    pub fn spectrum_csv(&self) -> String {
        let mut out = String::from("index,eigenvalue\n");
        for (i, v) in self.eigenvalues.iter().enumerate() {
            out.push_str(&format!("{i},{v:.16e}\n"));
        }
        out
    }
}

pub fn summarize_spectrum(eigenvalues: &[f64]) -> NtkSummary {
    let max = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_positive = eigenvalues.iter().copied().filter(|&v| v > 0.0).reduce(f64::min);
    let mut buckets: Vec<DecadeBucket> =
        (LOWEST_DECADE..=HIGHEST_DECADE).map(|exponent| DecadeBucket { exponent, count: 0 }).collect();
    let (mut below, mut above) = (0, 0);
    for &v in eigenvalues {
        if !(v >= 10f64.powi(LOWEST_DECADE)) {
            below += 1;
            continue;
        }
        let e = v.log10().floor() as i32;
        if e > HIGHEST_DECADE {
            above += 1;
        } else {
            buckets[(e - LOWEST_DECADE) as usize].count += 1;
        }
    }
    let decade_spread = min_positive.map_or(0.0, |m| (max / m).log10());
    NtkSummary { max, min_positive, below, above, buckets, decade_spread }
}

/// Parameter Jacobian of the scalar output at each row of `coords`.
pub fn output_jacobian(spec: &NetworkSpec, params: &NetworkParams, coords: &DenseMatrix) -> Result<DenseMatrix> {
    if spec.d_out != 1 {
        return Err(Error::arg(format!("the kernel needs a scalar-output network, got d_out = {}", spec.d_out)));
    }
    if coords.cols() != spec.d_in {
        return Err(Error::shape(format!("coordinates have {} columns, network expects {}", coords.cols(), spec.d_in)));
    }
    let p = spec.param_count();
    let rows: Vec<Result<Vec<f64>>> = par::map_indexed(coords.rows(), |i| {
        let x = coords.select_rows(&[i]);
        let (_, cache) = forward(spec, params, &x)?;
        let unit = DenseMatrix::from_vec(1, 1, vec![1.0])?;
        Ok(backward(spec, params, &cache, &unit)?.0.values)
    });
    let mut data = Vec::with_capacity(coords.rows() * p);
    for r in rows {
        data.extend(r?);
    }
    DenseMatrix::from_vec(coords.rows(), p, data)
}

/// `K = J Jᵀ` over the sample points and its spectrum.
pub fn empirical_ntk(spec: &NetworkSpec, params: &NetworkParams, coords: &DenseMatrix) -> Result<NtkReport> {
    let m = coords.rows();
    if m == 0 || m > MAX_NTK_SAMPLES {
        return Err(Error::arg(format!("kernel needs 1..={MAX_NTK_SAMPLES} samples, got {m}")));
    }
    let j = output_jacobian(spec, params, coords)?;
    let mut kernel = DenseMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let v: f64 = j.row(a).iter().zip(j.row(b)).map(|(x, y)| x * y).sum();
            kernel.as_mut_slice()[a * m + b] = v;
            kernel.as_mut_slice()[b * m + a] = v;
        }
    }
    if !kernel.is_finite() {
        return Err(Error::NonFinite { layer: 0, detail: "kernel entries are not finite".into() });
    }
    let eigenvalues = symmetric_eigenvalues(&kernel)?.into_vec();
    let summary = summarize_spectrum(&eigenvalues);
    Ok(NtkReport { coords: coords.clone(), kernel, eigenvalues, summary })
}
