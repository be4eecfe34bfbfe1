use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::DenseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncodingKind {
    None,
    Positional,
}

/// Input encoding applied before the first layer.
///
/// The positional layout is `[x_0 .. x_{d-1}]` (when `include_raw`) followed,
/// for each input dimension, by `sin(2^k pi x), cos(2^k pi x)` for
/// `k = 0..num_frequencies`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingSpec {
    pub kind: EncodingKind,
    pub num_frequencies: usize,
    pub include_raw: bool,
}

impl Default for EncodingSpec {
    fn default() -> Self {
        Self::none()
    }
}

impl EncodingSpec {
    pub fn none() -> Self {
        EncodingSpec { kind: EncodingKind::None, num_frequencies: 10, include_raw: true }
    }

    pub fn positional(num_frequencies: usize) -> Self {
        EncodingSpec { kind: EncodingKind::Positional, num_frequencies, include_raw: true }
    }

    pub fn output_dim(&self, d_in: usize) -> usize {
        match self.kind {
            EncodingKind::None => d_in,
            EncodingKind::Positional => {
                d_in * (2 * self.num_frequencies + usize::from(self.include_raw))
            }
        }
    }

    /// Appends the encoding of `x` to `out`.
    pub fn encode_into(&self, x: &[f64], out: &mut Vec<f64>) {
        match self.kind {
            EncodingKind::None => out.extend_from_slice(x),
            EncodingKind::Positional => {
                if self.include_raw {
                    out.extend_from_slice(x);
                }
                for &xi in x {
                    for k in 0..self.num_frequencies {
                        let arg = frequency(k) * xi;
                        out.push(arg.sin());
                        out.push(arg.cos());
                    }
                }
            }
        }
    }

    /// Chains a gradient with respect to the encoded features back to the
    /// raw coordinates.
    pub fn backprop(&self, x: &[f64], d_encoded: &[f64], d_x: &mut [f64]) {
        match self.kind {
            EncodingKind::None => d_x.copy_from_slice(d_encoded),
            EncodingKind::Positional => {
                let mut idx = 0;
                if self.include_raw {
                    d_x.copy_from_slice(&d_encoded[..x.len()]);
                    idx = x.len();
                } else {
                    d_x.fill(0.0);
                }
                for (d, &xi) in x.iter().enumerate() {
                    for k in 0..self.num_frequencies {
                        let a = frequency(k);
                        let arg = a * xi;
                        d_x[d] += d_encoded[idx] * a * arg.cos() - d_encoded[idx + 1] * a * arg.sin();
                        idx += 2;
                    }
                }
            }
        }
    }
}

#[inline]
fn frequency(k: usize) -> f64 {
    (1u64 << k) as f64 * PI
}

/// Positional encoding of a single coordinate vector.
pub fn positional_encode(x: &DenseVector, spec: &EncodingSpec) -> Result<DenseVector> {
    if spec.kind != EncodingKind::Positional {
        return Err(Error::arg("positional_encode needs a positional encoding spec"));
    }
    let mut out = Vec::with_capacity(spec.output_dim(x.len()));
    spec.encode_into(x.as_slice(), &mut out);
    Ok(DenseVector::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_input() {
        let spec = EncodingSpec::positional(1);
        let y = positional_encode(&DenseVector::new(vec![0.0]), &spec).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn quarter_period() {
        let spec = EncodingSpec { include_raw: false, ..EncodingSpec::positional(1) };
        let y = positional_encode(&DenseVector::new(vec![0.5]), &spec).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15);
        assert!(y[1].abs() < 1e-15);
    }

    #[test]
    fn output_length() {
        let spec = EncodingSpec::positional(10);
        assert_eq!(spec.output_dim(2), 42);
        let y = positional_encode(&DenseVector::new(vec![0.1, -0.3]), &spec).unwrap();
        assert_eq!(y.len(), 42);
    }

    #[test]
    fn backprop_matches_difference_quotient() {
        let spec = EncodingSpec::positional(3);
        let x = [0.17, -0.42];
        let weights: Vec<f64> = (0..spec.output_dim(2)).map(|i| (i as f64 * 0.37).sin()).collect();
        let f = |x: &[f64]| {
            let mut e = Vec::new();
            spec.encode_into(x, &mut e);
            e.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut d = [0.0; 2];
        spec.backprop(&x, &weights, &mut d);
        for i in 0..2 {
            let h = 1e-6;
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (f(&xp) - f(&xm)) / (2.0 * h);
            assert!((fd - d[i]).abs() < 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn rejects_plain_spec() {
        assert!(positional_encode(&DenseVector::new(vec![0.0]), &EncodingSpec::none()).is_err());
    }
}
