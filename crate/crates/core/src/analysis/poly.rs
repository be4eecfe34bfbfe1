//! Symbolic expansion of split-layer pre-activations.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::math::{binomial, BigCount};
use crate::network::{branch_width, LayerKind, NetworkParams, NetworkSpec};

/// Largest `w^N` accepted by [`expand_split_layer`].
pub const EXPANSION_LIMIT: u128 = 1_000_000;

/// Product of variables stored as a sorted list of zero-based indices,
/// so `z0·z0·z2` is `[0, 0, 2]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    indices: Vec<usize>,
}

impl Monomial {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        Monomial { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn degree(&self) -> usize {
        self.indices.len()
    }

    /// `(variable, exponent)` pairs in increasing variable order.
    pub fn exponents(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &i in &self.indices {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += 1,
                _ => out.push((i, 1)),
            }
        }
        out
    }

    pub fn evaluate(&self, z: &[f64]) -> f64 {
        self.indices.iter().map(|&i| z[i]).product()
    }
}

impl fmt::Display for Monomial {
    /// One-based variable names, e.g. `z1^2*z3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.indices.is_empty() {
            return write!(f, "1");
        }
        for (k, (v, e)) in self.exponents().into_iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            write!(f, "z{}", v + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

impl Serialize for Monomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// All degree-`n` monomials in `w` variables, in lexicographic order.
pub fn enumerate_monomials(w: usize, n: usize) -> Result<Vec<Monomial>> {
    if w == 0 || n == 0 {
        return Err(Error::arg(format!("monomials need w >= 1 and n >= 1, got w={w}, n={n}")));
    }
    let count = binomial((w + n - 1) as u64, n as u64)?;
    if count.to_u64().is_none_or(|c| c as u128 > EXPANSION_LIMIT) {
        return Err(Error::SizeLimit(format!("{count} monomials of degree {n} in {w} variables")));
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        out.push(Monomial { indices: idx.clone() });
        // advance the non-decreasing index tuple
        let Some(pos) = (0..n).rev().find(|&p| idx[p] + 1 < w) else { break };
        let v = idx[pos] + 1;
        for slot in &mut idx[pos..] {
            *slot = v;
        }
    }
    Ok(out)
}

/// Sparse polynomial keyed by canonical monomials.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PolynomialMap {
    terms: BTreeMap<Monomial, f64>,
}

impl PolynomialMap {
    pub fn constant(c: f64) -> Self {
        let mut p = PolynomialMap::default();
        p.add(Monomial::new(Vec::new()), c);
        p.normalize();
        p
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn add(&mut self, m: Monomial, c: f64) {
        *self.terms.entry(m).or_insert(0.0) += c;
    }

    /// Drops zero coefficients.
    pub fn normalize(&mut self) {
        self.terms.retain(|_, c| *c != 0.0);
    }

    /// Product with the linear form `Σ_j a_j z_j`.
    pub fn times_linear(&self, a: &[f64]) -> PolynomialMap {
        let mut out = PolynomialMap::default();
        for (m, c) in &self.terms {
            for (j, &aj) in a.iter().enumerate() {
                if aj == 0.0 {
                    continue;
                }
                let mut idx = m.indices.clone();
                let at = idx.partition_point(|&v| v <= j);
                idx.insert(at, j);
                out.add(Monomial { indices: idx }, c * aj);
            }
        }
        out.normalize();
        out
    }

    pub fn evaluate(&self, z: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.evaluate(z)).sum()
    }
}

/// Expands `Π_n (Σ_j w[n][j] z_j)` for one output unit of a bias-free split
/// layer, where `weights` holds one row per branch.
pub fn expand_split_layer(weights: &[Vec<f64>]) -> Result<PolynomialMap> {
    let n = weights.len();
    let w = weights.first().map_or(0, Vec::len);
    if n == 0 || w == 0 {
        return Err(Error::arg("expansion needs at least one branch of positive width"));
    }
    if weights.iter().any(|r| r.len() != w) {
        return Err(Error::shape("all branch weight rows must have the same length"));
    }
    let size = (w as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > EXPANSION_LIMIT {
        return Err(Error::SizeLimit(format!("w^N = {w}^{n} exceeds {EXPANSION_LIMIT}")));
    }
    let mut p = PolynomialMap::constant(1.0);
    for row in weights {
        p = p.times_linear(row);
    }
    Ok(p)
}

/// Expansions of every output unit of split layer `layer`.
pub fn split_layer_polynomials(spec: &NetworkSpec, params: &NetworkParams, layer: usize) -> Result<Vec<PolynomialMap>> {
    let layout = spec.layout();
    let l = layout
        .layers
        .get(layer)
        .ok_or_else(|| Error::arg(format!("layer {layer} out of range")))?;
    if l.spec.kind != LayerKind::Split {
        return Err(Error::arg(format!("layer {layer} is not a split layer")));
    }
    if l.spec.bias {
        return Err(Error::arg("symbolic expansion needs a bias-free split layer"));
    }
    if params.values.len() != layout.total {
        return Err(Error::shape("parameter vector does not match the network"));
    }
    let (fan_in, out) = (l.spec.in_width, l.spec.out_width);
    (0..out)
        .map(|i| {
            let rows: Vec<Vec<f64>> = l
                .branches
                .iter()
                .map(|b| params.values[b.weight + i * fan_in..b.weight + (i + 1) * fan_in].to_vec())
                .collect();
            expand_split_layer(&rows)
        })
        .collect()
}

/// Dimension of the space spanned by a layer's pre-activation terms:
/// `c` for a dense layer, `C(w + n − 1, n)` with `w = branch_width(c, n)` otherwise.
pub fn feature_space_dim(c: usize, n: usize) -> Result<BigCount> {
    if c == 0 || n == 0 {
        return Err(Error::arg(format!("feature space needs c >= 1 and n >= 1, got c={c}, n={n}")));
    }
    if n == 1 {
        return Ok(BigCount::from_u64(c as u64));
    }
    let w = branch_width(c, n) as u64;
    binomial(w + n as u64 - 1, n as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalSplit {
    pub n_star: f64,
    pub recommended: usize,
}

/// `n* = (0.17·c)^(2/3)`, with the recommendation rounded and clamped to `[2, max(c², 2)]`.
pub fn optimal_split(c: usize) -> Result<OptimalSplit> {
    if c == 0 {
        return Err(Error::arg("width must be positive"));
    }
    let n_star = (0.17 * c as f64).powf(2.0 / 3.0);
    let upper = (c as u128).pow(2).max(2);
    let recommended = (n_star.round() as u128).clamp(2, upper) as usize;
    Ok(OptimalSplit { n_star, recommended })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Prng;

    #[test]
    fn hand_enumerations() {
        let m = enumerate_monomials(2, 2).unwrap();
        let names: Vec<String> = m.iter().map(|m| m.to_string()).collect();
        assert_eq!(names, ["z1^2", "z1*z2", "z2^2"]);
        assert_eq!(enumerate_monomials(3, 2).unwrap().len(), 6);
        assert!(enumerate_monomials(0, 2).is_err());
    }

    #[test]
    fn monomial_count_is_binomial() {
        for w in 1..=6 {
            for n in 1..=4 {
                let m = enumerate_monomials(w, n).unwrap();
                let expect = binomial((w + n - 1) as u64, n as u64).unwrap().to_u64().unwrap();
                assert_eq!(m.len() as u64, expect, "w={w} n={n}");
                assert!(m.windows(2).all(|p| p[0] < p[1]));
                assert!(m.iter().all(|x| x.degree() == n));
            }
        }
    }

    #[test]
    fn monomials_are_order_independent() {
        assert_eq!(Monomial::new(vec![2, 0, 1]), Monomial::new(vec![1, 2, 0]));
    }

    #[test]
    fn scalar_and_cross_term_expansions() {
        let p = expand_split_layer(&[vec![1.5], vec![-2.0]]).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.get(&Monomial::new(vec![0, 0])), -3.0);
        let q = expand_split_layer(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q.get(&Monomial::new(vec![0, 1])), 1.0);
    }

    #[test]
    fn expansion_matches_numeric_product() {
        let mut rng = Prng::new(4);
        for (w, n) in [(3, 2), (4, 3), (2, 4)] {
            let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..w).map(|_| rng.uniform(-1.0, 1.0).unwrap()).collect()).collect();
            let p = expand_split_layer(&rows).unwrap();
            for _ in 0..100 {
                let z: Vec<f64> = (0..w).map(|_| rng.uniform(-2.0, 2.0).unwrap()).collect();
                let direct: f64 = rows.iter().map(|r| r.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()).product();
                assert!((p.evaluate(&z) - direct).abs() <= 1e-10 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn expansion_size_limit() {
        let rows = vec![vec![1.0; 32]; 4];
        assert!(matches!(expand_split_layer(&rows), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn feature_dims() {
        assert_eq!(feature_space_dim(256, 2).unwrap().to_u64(), Some(16471));
        assert_eq!(feature_space_dim(37, 1).unwrap().to_u64(), Some(37));
        // c = 5, n = 2 has branch width 3
        assert_eq!(feature_space_dim(5, 2).unwrap().to_u64(), Some(6));
    }

    #[test]
    fn optimal_split_values() {
        let a = optimal_split(256).unwrap();
        assert!((a.n_star - 12.372).abs() < 0.01 && a.recommended == 12);
        let b = optimal_split(64).unwrap();
        assert!((b.n_star - 4.910).abs() < 0.01 && b.recommended == 5);
        for c in 1..=5 {
            assert_eq!(optimal_split(c).unwrap().recommended, 2);
        }
        let mut prev = 0.0;
        for c in 1..2000 {
            let s = optimal_split(c).unwrap();
            assert!(s.n_star >= prev);
            prev = s.n_star;
        }
    }
}
