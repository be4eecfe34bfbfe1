use super::{DenseMatrix, DenseVector};
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-9;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a real symmetric matrix in descending order.
///
/// Cyclic Jacobi: sweep over every `(p, q)` pair above the diagonal and
/// annihilate `a[p][q]` with a plane rotation, until the off-diagonal
/// Frobenius norm falls below `1e-12 * ||K||_F`.
pub fn symmetric_eigenvalues(k: &DenseMatrix) -> Result<DenseVector> {
    let (n, m) = k.shape();
    if n != m {
        return Err(Error::arg(format!("eigenvalues need a square matrix, got {n}x{m}")));
    }
    if !k.is_finite() {
        return Err(Error::arg("matrix has non-finite entries"));
    }
    if !k.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::arg("matrix is not symmetric within tolerance"));
    }
    let norm = k.frobenius_norm();
    if n == 0 {
        return Ok(DenseVector::zeros(0));
    }

    // work on the symmetrised copy
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (k[(i, j)] + k[(j, i)]);
        }
    }

    let off_norm = |a: &[f64]| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let threshold = OFF_DIAGONAL_TOL * norm;
    let mut sweeps = 0;
    while off_norm(&a) >= threshold && threshold > 0.0 {
        if sweeps == MAX_SWEEPS {
            return Err(Error::arg("Jacobi iteration did not converge"));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    a[r * n + p] = c * arp - s * arq;
                    a[r * n + q] = s * arp + c * arq;
                }
                for r in 0..n {
                    let apr = a[p * n + r];
                    let aqr = a[q * n + r];
                    a[p * n + r] = c * apr - s * aqr;
                    a[q * n + r] = s * apr + c * aqr;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }

    let mut values: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(DenseVector::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{matmul, Prng};

    #[test]
    fn diagonal() {
        let mut d = DenseMatrix::zeros(3, 3);
        d[(0, 0)] = 3.0;
        d[(1, 1)] = 1.0;
        d[(2, 2)] = 2.0;
        assert_eq!(symmetric_eigenvalues(&d).unwrap().as_slice(), &[3.0, 2.0, 1.0]);
    }

    #[test]
    fn two_by_two() {
        let k = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let ev = symmetric_eigenvalues(&k).unwrap();
        assert!((ev[0] - 3.0).abs() < 1e-12);
        assert!((ev[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_identity() {
        let mut g = Prng::new(17);
        let mut k = DenseMatrix::zeros(5, 5);
        for i in 0..5 {
            for j in i..5 {
                let v = g.uniform(-2.0, 2.0).unwrap();
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        let ev = symmetric_eigenvalues(&k).unwrap();
        let sum: f64 = ev.as_slice().iter().sum();
        assert!((sum - k.trace()).abs() <= 1e-8 * k.trace().abs().max(1.0));
        assert!(ev.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn gram_matrix_is_psd() {
        let mut g = Prng::new(3);
        let j = DenseMatrix::from_fn(12, 5, |_, _| g.uniform(-1.0, 1.0).unwrap());
        let k = matmul(&j, &j.transpose()).unwrap();
        let ev = symmetric_eigenvalues(&k).unwrap();
        let norm = k.frobenius_norm();
        assert!(ev.as_slice().iter().all(|&v| v >= -1e-9 * norm));
        // rank 5: seven eigenvalues at numerical zero
        assert_eq!(ev.as_slice().iter().filter(|v| v.abs() < 1e-9 * norm).count(), 7);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(symmetric_eigenvalues(&DenseMatrix::zeros(2, 3)).is_err());
        let k = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(symmetric_eigenvalues(&k).is_err());
    }
}
