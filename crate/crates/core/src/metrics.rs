//! Image quality (PSNR, SSIM) and calibration-distribution statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::register::RigidTransform2D;
use crate::scan_geometry::BevImage;

/// Reported when the images are identical.
pub const PSNR_CAP_DB: f64 = 100.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

fn check_shapes(a: &BevImage, b: &BevImage) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::Input(format!("image sizes differ: {} vs {}", a.size, b.size)));
    }
    Ok(())
}

pub fn mse(reference: &BevImage, test: &BevImage) -> Result<f64> {
    check_shapes(reference, test)?;
    let sum: f64 = reference
        .pixels
        .iter()
        .zip(&test.pixels)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok(sum / reference.pixels.len() as f64)
}

pub fn psnr(reference: &BevImage, test: &BevImage) -> Result<f64> {
    let mse = mse(reference, test)?;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (255.0 * 255.0 / mse).log10()).min(PSNR_CAP_DB))
}

fn gaussian_window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as f64;
    let taps: Vec<f64> =
        (0..SSIM_WINDOW).map(|i| (-(i as f64 - r).powi(2) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()).collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|v| v / sum).collect()
}

/// Separable "valid" filtering: output is `(n - w + 1)^2`.
fn filter_valid(data: &[f64], n: usize, taps: &[f64]) -> Vec<f64> {
    let w = taps.len();
    let m = n - w + 1;
    let mut rows = vec![0.0; n * m];
    for r in 0..n {
        for c in 0..m {
            rows[r * m + c] = taps.iter().enumerate().map(|(k, t)| t * data[r * n + c + k]).sum();
        }
    }
    let mut out = vec![0.0; m * m];
    for r in 0..m {
        for c in 0..m {
            out[r * m + c] = taps.iter().enumerate().map(|(k, t)| t * rows[(r + k) * m + c]).sum();
        }
    }
    out
}

/// Mean SSIM over all full 11x11 Gaussian windows (sigma 1.5).
pub fn ssim(reference: &BevImage, test: &BevImage) -> Result<f64> {
    check_shapes(reference, test)?;
    let n = reference.size;
    if n < SSIM_WINDOW {
        return Err(Error::Input(format!("SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {n}x{n}")));
    }
    let taps = gaussian_window();
    let x: Vec<f64> = reference.pixels.iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = test.pixels.iter().map(|&v| v as f64).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * b).collect();
    let mu_x = filter_valid(&x, n, &taps);
    let mu_y = filter_valid(&y, n, &taps);
    let e_xx = filter_valid(&xx, n, &taps);
    let e_yy = filter_valid(&yy, n, &taps);
    let e_xy = filter_valid(&xy, n, &taps);
    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = e_xx[i] - mx * mx;
        let var_y = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        let num = (2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2);
        let den = (mx * mx + my * my + SSIM_C1) * (var_x + var_y + SSIM_C2);
        total += num / den;
    }
    Ok(total / mu_x.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationStats {
    pub count: usize,
    pub x: ComponentStats,
    pub y: ComponentStats,
    pub theta: ComponentStats,
    pub median: RigidTransform2D,
    /// Fraction of estimates within the tolerances of the component-wise median.
    pub convergence_rate: f64,
}

fn component(values: &[f64]) -> ComponentStats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    ComponentStats { mean, std: var.sqrt() }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Mean, sample standard deviation and convergence rate of per-frame estimates.
pub fn calibration_stats(estimates: &[RigidTransform2D], tau_xy: f64, tau_theta: f64) -> Result<CalibrationStats> {
    if estimates.len() < 2 {
        return Err(Error::Input(format!("need at least 2 estimates, got {}", estimates.len())));
    }
    // sorted copies make the sums independent of input order
    let sorted = |f: fn(&RigidTransform2D) -> f64| {
        let mut v: Vec<f64> = estimates.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let (xs, ys, ts) = (sorted(|e| e.x), sorted(|e| e.y), sorted(|e| e.theta));
    let center = RigidTransform2D { x: median(&xs), y: median(&ys), theta: median(&ts) };
    let within = estimates
        .iter()
        .filter(|e| {
            (e.x - center.x).abs() <= tau_xy
                && (e.y - center.y).abs() <= tau_xy
                && (e.theta - center.theta).abs() <= tau_theta
        })
        .count();
    Ok(CalibrationStats {
        count: estimates.len(),
        x: component(&xs),
        y: component(&ys),
        theta: component(&ts),
        median: center,
        convergence_rate: within as f64 / estimates.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan_geometry::BevConfig;

    fn img(n: usize, f: impl Fn(usize) -> u8) -> BevImage {
        BevImage::from_pixels(&BevConfig::new(n, 1.0).unwrap(), (0..n * n).map(f).collect(), 0.0).unwrap()
    }

    #[test]
    fn psnr_examples() {
        let a = img(16, |_| 0);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP_DB);
        let b = img(16, |_| 10);
        assert!((psnr(&a, &b).unwrap() - 10.0 * (65025.0f64 / 100.0).log10()).abs() < 1e-12);
        assert!((psnr(&a, &b).unwrap() - 28.1308).abs() < 1e-4);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }

    #[test]
    fn ssim_identity_and_inversion() {
        let a = img(24, |i| if (i / 24 + i % 24) % 4 < 2 { 250 } else { 5 });
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        let inv = img(24, |i| 255 - a.pixels[i]);
        assert!(ssim(&a, &inv).unwrap() < 0.0);
        assert!((ssim(&a, &inv).unwrap() - ssim(&inv, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ssim_rejects_small_images() {
        let a = img(10, |_| 1);
        assert!(matches!(ssim(&a, &a), Err(Error::Input(_))));
    }

    #[test]
    fn stats_hand_example() {
        let s =
            calibration_stats(&[RigidTransform2D::new(1.0, 2.0, 0.1), RigidTransform2D::new(3.0, 4.0, 0.3)], 0.5, 0.02)
                .unwrap();
        assert!((s.x.mean - 2.0).abs() < 1e-12 && (s.y.mean - 3.0).abs() < 1e-12);
        assert!((s.theta.mean - 0.2).abs() < 1e-12);
        assert!((s.x.std - 2f64.sqrt()).abs() < 1e-12 && (s.y.std - 2f64.sqrt()).abs() < 1e-12);
        assert!((s.theta.std - 0.02f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn stats_identical_and_outlier() {
        let e = RigidTransform2D::new(1.0, 0.5, 0.02);
        let s = calibration_stats(&[e; 5], 0.5, 0.02).unwrap();
        assert_eq!((s.x.std, s.y.std, s.theta.std, s.convergence_rate), (0.0, 0.0, 0.0, 1.0));

        let mut v: Vec<_> = (0..9).map(|k| RigidTransform2D::new(1.0 + 0.01 * k as f64, 0.5, 0.02)).collect();
        assert_eq!(calibration_stats(&v, 0.5, 0.02).unwrap().convergence_rate, 1.0);
        v.push(RigidTransform2D::new(40.0, -30.0, 1.0));
        assert!((calibration_stats(&v, 0.5, 0.02).unwrap().convergence_rate - 0.9).abs() < 1e-15);
        assert!(calibration_stats(&v[..1], 0.5, 0.02).is_err());
    }
}
