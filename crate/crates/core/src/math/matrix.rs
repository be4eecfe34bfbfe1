use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use super::par;
use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("ragged rows"));
        }
        Ok(DenseMatrix { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// Gathers the listed rows into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix { rows: indices.len(), cols: self.cols, data }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.frobenius_norm().max(f64::MIN_POSITIVE);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        matmul(self, other)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Matrix product. Each output element is accumulated as
/// `((a_i0*b_0j + a_i1*b_1j) + ...)`, so row-parallel execution matches the
/// serial triple loop bit for bit.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(Error::shape(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let (n, k, m) = (a.rows, a.cols, b.cols);
    const BLOCK: usize = 32;
    let blocks = n.div_ceil(BLOCK);
    let parts = par::map_indexed(blocks, |blk| {
        let lo = blk * BLOCK;
        let hi = (lo + BLOCK).min(n);
        let mut out = vec![0.0; (hi - lo) * m];
        for i in lo..hi {
            let row = &mut out[(i - lo) * m..(i - lo + 1) * m];
            for p in 0..k {
                super::axpy(row, a.data[i * k + p], &b.data[p * m..(p + 1) * m]);
            }
        }
        out
    });
    let data = parts.concat();
    let c = DenseMatrix { rows: n, cols: m, data };
    if !c.is_finite() {
        return Err(Error::NonFinite { layer: 0, detail: "matmul produced a non-finite entry".into() });
    }
    Ok(c)
}

/// Dense real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseVector {
    data: Vec<f64>,
}

impl DenseVector {
    pub fn new(data: Vec<f64>) -> Self {
        DenseVector { data }
    }

    pub fn zeros(len: usize) -> Self {
        DenseVector { data: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(data: Vec<f64>) -> Self {
        DenseVector { data }
    }
}

impl Index<usize> for DenseVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

/// Elementwise product.
pub fn hadamard(u: &DenseVector, v: &DenseVector) -> Result<DenseVector> {
    if u.len() != v.len() {
        return Err(Error::shape(format!("hadamard of lengths {} and {}", u.len(), v.len())));
    }
    Ok(DenseVector { data: u.data.iter().zip(&v.data).map(|(a, b)| a * b).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Prng;
    use proptest::prelude::*;

    fn random(rows: usize, cols: usize, g: &mut Prng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| g.uniform(-1.0, 1.0).unwrap())
    }

    fn triple_loop(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        let mut c = DenseMatrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for p in 0..a.cols() {
                    s += a[(i, p)] * b[(p, j)];
                }
                c[(i, j)] = s;
            }
        }
        c
    }

    #[test]
    fn identity_and_scalar() {
        let i2 = DenseMatrix::identity(2);
        let v = DenseMatrix::from_rows(&[vec![3.0], vec![5.0]]).unwrap();
        assert_eq!(matmul(&i2, &v).unwrap(), v);
        let a = DenseMatrix::from_rows(&[vec![2.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![3.0]]).unwrap();
        assert_eq!(matmul(&a, &b).unwrap()[(0, 0)], 6.0);
    }

    #[test]
    fn matches_triple_loop() {
        let mut g = Prng::new(42);
        let a = random(3, 4, &mut g);
        let b = random(4, 2, &mut g);
        let c = matmul(&a, &b).unwrap();
        let r = triple_loop(&a, &b);
        for (x, y) in c.as_slice().iter().zip(r.as_slice()) {
            assert!((x - y).abs() <= 1e-12);
        }
        // larger than one row block: still the same accumulation order
        let a = random(77, 13, &mut g);
        let b = random(13, 9, &mut g);
        assert_eq!(matmul(&a, &b).unwrap(), triple_loop(&a, &b));
    }

    #[test]
    fn shape_error() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(matches!(matmul(&a, &a), Err(Error::Shape(_))));
        assert!(DenseMatrix::from_vec(2, 2, vec![1.0]).is_err());
    }

    #[test]
    fn hadamard_cases() {
        let u = DenseVector::new(vec![1.0, 2.0]);
        let v = DenseVector::new(vec![3.0, 4.0]);
        assert_eq!(hadamard(&u, &v).unwrap().as_slice(), &[3.0, 8.0]);
        assert_eq!(hadamard(&u, &DenseVector::zeros(2)).unwrap().as_slice(), &[0.0, 0.0]);
        assert!(hadamard(&u, &DenseVector::zeros(3)).is_err());
    }

    proptest! {
        #[test]
        fn matmul_is_associative(seed in any::<u64>(), n in 1usize..6, k in 1usize..6, l in 1usize..6, m in 1usize..6) {
            let mut g = Prng::new(seed);
            let a = random(n, k, &mut g);
            let b = random(k, l, &mut g);
            let c = random(l, m, &mut g);
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            let scale = left.frobenius_norm().max(1.0);
            for (x, y) in left.as_slice().iter().zip(right.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn hadamard_commutes_and_distributes(seed in any::<u64>(), n in 1usize..32) {
            let mut g = Prng::new(seed);
            let mut draw = || DenseVector::new((0..n).map(|_| g.uniform(-10.0, 10.0).unwrap()).collect());
            let (u, v, w) = (draw(), draw(), draw());
            prop_assert_eq!(hadamard(&u, &v).unwrap(), hadamard(&v, &u).unwrap());
            let vw = DenseVector::new(v.as_slice().iter().zip(w.as_slice()).map(|(a, b)| a + b).collect());
            let lhs = hadamard(&u, &vw).unwrap();
            let uv = hadamard(&u, &v).unwrap();
            let uw = hadamard(&u, &w).unwrap();
            for i in 0..n {
                let rhs = uv[i] + uw[i];
                prop_assert!((lhs[i] - rhs).abs() <= 1e-12 * (uv[i].abs() + uw[i].abs()).max(1e-300));
            }
        }
    }
}
