use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Exact non-negative integer together with its base-10 logarithm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BigCount {
    #[serde(serialize_with = "serialize_decimal")]
    pub exact: BigUint,
    pub log10: f64,
}

fn serialize_decimal<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

impl BigCount {
    pub fn new(exact: BigUint) -> Self {
        let log10 = log10_big(&exact);
        BigCount { exact, log10 }
    }

    pub fn from_u64(v: u64) -> Self {
        Self::new(BigUint::from(v))
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.exact.to_u64()
    }
}

impl std::fmt::Display for BigCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.exact)
    }
}

fn log10_big(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().map_or(f64::INFINITY, f64::log10);
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.log10() + shift as f64 * std::f64::consts::LOG10_2
}

/// Exact `C(n, k)` by multiplicative accumulation; every intermediate
/// `C(n-k+i, i)` is an integer so the division is exact.
pub fn binomial(n: u64, k: u64) -> Result<BigCount> {
    if k > n {
        return Err(Error::arg(format!("binomial({n}, {k}) needs k <= n")));
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc *= BigUint::from(n - k + i);
        acc /= BigUint::from(i);
    }
    Ok(BigCount::new(acc))
}
