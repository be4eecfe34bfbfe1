use crate::error::{Error, Result};
use crate::math::DenseMatrix;

/// Probabilities are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]` before the log.
pub const BCE_CLAMP: f64 = 1e-7;

fn same_shape(pred: &DenseMatrix, target: &DenseMatrix) -> Result<()> {
    if pred.shape() != target.shape() {
        return Err(Error::shape(format!(
            "prediction is {}x{}, target is {}x{}",
            pred.rows(),
            pred.cols(),
            target.rows(),
            target.cols()
        )));
    }
    Ok(())
}

/// Mean squared error and its gradient `2 (pred - target) / count`.
pub fn mse_loss(pred: &DenseMatrix, target: &DenseMatrix) -> Result<(f64, DenseMatrix)> {
    same_shape(pred, target)?;
    let count = pred.as_slice().len().max(1) as f64;
    let mut loss = 0.0;
    let grad: Vec<f64> = pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / count
        })
        .collect();
    Ok((loss / count, DenseMatrix::from_vec(pred.rows(), pred.cols(), grad)?))
}

/// Mean binary cross-entropy for probabilities `pred` and labels in {0, 1}.
/// The gradient is exact for the clamped expression (zero where clamping is active).
pub fn bce_loss(pred: &DenseMatrix, target: &DenseMatrix) -> Result<(f64, DenseMatrix)> {
    same_shape(pred, target)?;
    if let Some(t) = target.as_slice().iter().find(|&&t| t != 0.0 && t != 1.0) {
        return Err(Error::arg(format!("cross-entropy target {t} is not 0 or 1")));
    }
    let count = pred.as_slice().len().max(1) as f64;
    let mut loss = 0.0;
    let grad: Vec<f64> = pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(&p, &t)| {
            let clamped = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
            let active = clamped == p;
            if t == 1.0 {
                loss -= clamped.ln();
                if active {
                    -1.0 / (clamped * count)
                } else {
                    0.0
                }
            } else {
                loss -= (1.0 - clamped).ln();
                if active {
                    1.0 / ((1.0 - clamped) * count)
                } else {
                    0.0
                }
            }
        })
        .collect();
    Ok((loss / count, DenseMatrix::from_vec(pred.rows(), pred.cols(), grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Prng;

    fn fd_check(f: impl Fn(&DenseMatrix) -> f64, at: &DenseMatrix, grad: &DenseMatrix, tol: f64) {
        let h = 1e-6;
        for i in 0..at.as_slice().len() {
            let mut p = at.clone();
            let mut m = at.clone();
            p.as_mut_slice()[i] += h;
            m.as_mut_slice()[i] -= h;
            let fd = (f(&p) - f(&m)) / (2.0 * h);
            assert!((fd - grad.as_slice()[i]).abs() < tol, "index {i}: fd {fd} vs {}", grad.as_slice()[i]);
        }
    }

    #[test]
    fn mse_cases() {
        let a = DenseMatrix::from_rows(&[vec![0.3, 0.4]]).unwrap();
        let (l, g) = mse_loss(&a, &a).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
        let (l, g) = mse_loss(&DenseMatrix::from_vec(1, 1, vec![1.0]).unwrap(), &DenseMatrix::zeros(1, 1)).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(g[(0, 0)], 2.0);
        assert!(mse_loss(&a, &DenseMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn mse_gradient_fd() {
        let mut g = Prng::new(1);
        let p = DenseMatrix::from_fn(6, 3, |_, _| g.uniform(-1.0, 1.0).unwrap());
        let t = DenseMatrix::from_fn(6, 3, |_, _| g.uniform(-1.0, 1.0).unwrap());
        let (_, grad) = mse_loss(&p, &t).unwrap();
        fd_check(|x| mse_loss(x, &t).unwrap().0, &p, &grad, 1e-7);
    }

    #[test]
    fn bce_cases() {
        let half = DenseMatrix::from_vec(2, 1, vec![0.5, 0.5]).unwrap();
        let t = DenseMatrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        let (l, _) = bce_loss(&half, &t).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        let (l, _) = bce_loss(&t, &t).unwrap();
        assert!(l <= 1e-6);
        let bad = DenseMatrix::from_vec(2, 1, vec![0.5, 1.0]).unwrap();
        assert!(bce_loss(&half, &bad).is_err());
    }

    #[test]
    fn bce_gradient_fd() {
        let mut g = Prng::new(2);
        let p = DenseMatrix::from_fn(8, 1, |_, _| g.uniform(0.05, 0.95).unwrap());
        let t = DenseMatrix::from_fn(8, 1, |i, _| (i % 2) as f64);
        let (_, grad) = bce_loss(&p, &t).unwrap();
        fd_check(|x| bce_loss(x, &t).unwrap().0, &p, &grad, 1e-6);
    }
}
