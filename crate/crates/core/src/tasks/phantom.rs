//! Ten-ellipse head phantom with the higher-contrast intensities commonly
//! used for reconstruction tests.

use super::ImageGrid;
use crate::error::{Error, Result};

/// `(intensity, semi-axis a, semi-axis b, center x, center y, rotation in degrees)`.
const ELLIPSES: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

/// Sub-samples per pixel along each axis.
const SUPERSAMPLE: usize = 4;

/// Phantom density at a point, with `y` pointing up.
pub fn shepp_logan_density(x: f64, y: f64) -> f64 {
    let mut v = 0.0;
    for &(intensity, a, b, x0, y0, deg) in &ELLIPSES {
        let (s, c) = deg.to_radians().sin_cos();
        let (dx, dy) = (x - x0, y - y0);
        let u = dx * c + dy * s;
        let w = -dx * s + dy * c;
        if (u / a).powi(2) + (w / b).powi(2) <= 1.0 {
            v += intensity;
        }
    }
    v
}

/// Area-averaged rasterization on an `n × n` grid, normalized to [0, 1].
/// Row 0 is the top of the head.
pub fn shepp_logan(n: usize) -> Result<ImageGrid> {
    if n < 16 {
        return Err(Error::arg(format!("phantom size must be at least 16, got {n}")));
    }
    let mut img = ImageGrid::zeros(n, n, 1);
    let sub = 1.0 / (n * SUPERSAMPLE) as f64;
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for si in 0..SUPERSAMPLE {
                for sj in 0..SUPERSAMPLE {
                    let x = -1.0 + (2 * (j * SUPERSAMPLE + sj) + 1) as f64 * sub;
                    let y = -1.0 + (2 * (i * SUPERSAMPLE + si) + 1) as f64 * sub;
                    acc += shepp_logan_density(x, -y);
                }
            }
            img.set(i, j, 0, acc / (SUPERSAMPLE * SUPERSAMPLE) as f64);
        }
    }
    let lo = img.pixels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = img.pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        for v in &mut img.pixels {
            *v = (*v - lo) / (hi - lo);
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_in_unit_range() {
        let img = shepp_logan(64).unwrap();
        assert!(img.pixels.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(img.pixels.iter().copied().fold(0.0, f64::max), 1.0);
        assert!(shepp_logan(8).is_err());
    }

    #[test]
    fn mirror_symmetric_away_from_inner_features() {
        let n = 64;
        let img = shepp_logan(n).unwrap();
        let diff = img.abs_diff(&img.mirrored()).unwrap();
        for i in 0..n {
            for j in 0..n {
                let x = -1.0 + (2 * j + 1) as f64 / n as f64;
                let y = -(-1.0 + (2 * i + 1) as f64 / n as f64);
                // asymmetric features: tilted ellipses and the small bottom cluster
                let inner = x.abs() < 0.45 && y.abs() < 0.5 || y < -0.5 && y > -0.7 && x.abs() < 0.2;
                if !inner {
                    assert!(diff.get(i, j, 0) < 1e-12, "pixel ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn resolution_consistency() {
        let a = shepp_logan(64).unwrap();
        let b = shepp_logan(128).unwrap().downsample(2).unwrap();
        let mad = a.abs_diff(&b).unwrap().pixels.iter().sum::<f64>() / (64.0 * 64.0);
        assert!(mad < 0.03, "mean abs diff {mad}");
    }
}
