use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DenseMatrix, Prng};
use crate::error::{Error, Result};

/// Uniform weight initialization schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    /// `U(-sqrt(3/fan_in), sqrt(3/fan_in))`, i.e. unit-variance-preserving LeCun.
    Lecun,
    /// `U(-1/fan_in, 1/fan_in)` for the first layer of a sine network.
    SirenFirst,
    /// `U(-sqrt(6/fan_in)/omega, sqrt(6/fan_in)/omega)` for later sine layers.
    SirenHidden,
}

impl InitScheme {
    pub fn bound(self, fan_in: usize, omega: f64) -> Result<f64> {
        if fan_in == 0 {
            return Err(Error::arg("fan_in must be at least 1"));
        }
        let fan = fan_in as f64;
        match self {
            InitScheme::Lecun => Ok((3.0 / fan).sqrt()),
            InitScheme::SirenFirst => Ok(1.0 / fan),
            InitScheme::SirenHidden => {
                if !(omega > 0.0) {
                    return Err(Error::arg(format!("omega must be positive, got {omega}")));
                }
                Ok((6.0 / fan).sqrt() / omega)
            }
        }
    }
}

impl FromStr for InitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lecun" => Ok(InitScheme::Lecun),
            "siren_first" | "siren-first" => Ok(InitScheme::SirenFirst),
            "siren_hidden" | "siren-hidden" => Ok(InitScheme::SirenHidden),
            other => Err(Error::arg(format!("unknown initialization scheme {other:?}"))),
        }
    }
}

/// Draws a `rows x cols` matrix from the scheme's uniform distribution.
pub fn init_weights(
    scheme: InitScheme,
    rows: usize,
    cols: usize,
    fan_in: usize,
    omega: f64,
    prng: &mut Prng,
) -> Result<DenseMatrix> {
    let bound = scheme.bound(fan_in, omega)?;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(prng.uniform(-bound, bound)?);
    }
    DenseMatrix::from_vec(rows, cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lecun_fan_in_three_is_unit_bound() {
        let mut g = Prng::new(5);
        let w = init_weights(InitScheme::Lecun, 20, 3, 3, 30.0, &mut g).unwrap();
        assert!(w.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn siren_hidden_bound() {
        let b = InitScheme::SirenHidden.bound(6, 30.0).unwrap();
        assert!((b - 1.0 / 30.0).abs() < 1e-15);
        let b = InitScheme::SirenHidden.bound(181, 30.0).unwrap();
        assert!((b - 6.07e-3).abs() < 5e-6);
    }

    #[test]
    fn deterministic() {
        let a = init_weights(InitScheme::SirenFirst, 4, 4, 4, 30.0, &mut Prng::new(9)).unwrap();
        let b = init_weights(InitScheme::SirenFirst, 4, 4, 4, 30.0, &mut Prng::new(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn every_scheme_within_bound() {
        for scheme in [InitScheme::Lecun, InitScheme::SirenFirst, InitScheme::SirenHidden] {
            for fan in [1, 2, 7, 64] {
                let bound = scheme.bound(fan, 30.0).unwrap();
                let w = init_weights(scheme, 16, fan, fan, 30.0, &mut Prng::new(fan as u64)).unwrap();
                assert!(w.as_slice().iter().all(|v| v.abs() <= bound));
            }
        }
    }

    #[test]
    fn argument_errors() {
        assert!("xavier".parse::<InitScheme>().is_err());
        assert_eq!("siren_first".parse::<InitScheme>().unwrap(), InitScheme::SirenFirst);
        assert!(InitScheme::Lecun.bound(0, 1.0).is_err());
        assert!(InitScheme::SirenHidden.bound(4, 0.0).is_err());
    }
}
