//! Radar-to-registration-ready image translators: filter baselines and the
//! loader for externally generated LiDAR-style images.

use std::path::{Path, PathBuf};

use crate::dataset_io::read_gray_png;
use crate::error::{Error, Result};
use crate::scan_geometry::BevImage;

#[derive(Debug, Clone, PartialEq)]
pub enum TranslatorSpec {
    Identity,
    Median {
        kernel_size: usize,
    },
    Gaussian {
        kernel_size: usize,
        sigma: f64,
    },
    /// Directory of `<frame_id>.png` images produced by an external model.
    External {
        directory: PathBuf,
    },
}

impl TranslatorSpec {
    pub fn median() -> Self {
        TranslatorSpec::Median { kernel_size: 3 }
    }

    pub fn gaussian() -> Self {
        TranslatorSpec::Gaussian { kernel_size: 5, sigma: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TranslatorSpec::Identity => Ok(()),
            TranslatorSpec::Median { kernel_size } => check_kernel(*kernel_size),
            TranslatorSpec::Gaussian { kernel_size, sigma } => {
                check_kernel(*kernel_size)?;
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::Config(format!("gaussian sigma must be positive, got {sigma}")));
                }
                Ok(())
            }
            TranslatorSpec::External { directory } => {
                if directory.is_dir() {
                    Ok(())
                } else {
                    Err(Error::Input(format!("translated-image directory {} does not exist", directory.display())))
                }
            }
        }
    }
}

fn check_kernel(k: usize) -> Result<()> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::Config(format!("kernel size must be odd and at least 1, got {k}")));
    }
    Ok(())
}

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// `k x k` median with edge replication.
pub fn median_filter(img: &BevImage, k: usize) -> Result<BevImage> {
    check_kernel(k)?;
    if k > img.size {
        return Err(Error::Config(format!("kernel size {k} exceeds image size {}", img.size)));
    }
    let n = img.size;
    let r = (k / 2) as isize;
    let mut out = img.clone();
    let mut window = Vec::with_capacity(k * k);
    for row in 0..n {
        for col in 0..n {
            window.clear();
            for dr in -r..=r {
                let rr = clamp_index(row as isize + dr, n);
                for dc in -r..=r {
                    window.push(img.get(rr, clamp_index(col as isize + dc, n)));
                }
            }
            let mid = window.len() / 2;
            let (_, median, _) = window.select_nth_unstable(mid);
            out.set(row, col, *median);
        }
    }
    Ok(out)
}

/// Normalized 1-D Gaussian taps of odd length `k`.
pub fn gaussian_kernel(k: usize, sigma: f64) -> Vec<f64> {
    let r = (k / 2) as isize;
    let taps: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|v| v / sum).collect()
}

/// Separable Gaussian blur with edge replication, rounded back to 8 bits.
pub fn gaussian_filter(img: &BevImage, k: usize, sigma: f64) -> Result<BevImage> {
    TranslatorSpec::Gaussian { kernel_size: k, sigma }.validate()?;
    let n = img.size;
    let taps = gaussian_kernel(k, sigma);
    let r = (k / 2) as isize;
    let mut horizontal = vec![0.0f64; n * n];
    for row in 0..n {
        for col in 0..n {
            horizontal[row * n + col] = taps
                .iter()
                .enumerate()
                .map(|(j, w)| w * img.get(row, clamp_index(col as isize + j as isize - r, n)) as f64)
                .sum();
        }
    }
    let mut out = img.clone();
    for row in 0..n {
        for col in 0..n {
            let v: f64 = taps
                .iter()
                .enumerate()
                .map(|(j, w)| w * horizontal[clamp_index(row as isize + j as isize - r, n) * n + col])
                .sum();
            out.set(row, col, v.round().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(out)
}

pub fn external_image_path(directory: &Path, frame_id: &str) -> PathBuf {
    directory.join(format!("{frame_id}.png"))
}

/// Applies `spec` to a radar BEV image of frame `frame_id`.
pub fn translate_image(img: &BevImage, spec: &TranslatorSpec, frame_id: &str) -> Result<BevImage> {
    match spec {
        TranslatorSpec::Identity => Ok(img.clone()),
        TranslatorSpec::Median { kernel_size } => median_filter(img, *kernel_size),
        TranslatorSpec::Gaussian { kernel_size, sigma } => gaussian_filter(img, *kernel_size, *sigma),
        TranslatorSpec::External { directory } => {
            let path = external_image_path(directory, frame_id);
            if !path.is_file() {
                return Err(Error::Lookup { frame_id: frame_id.to_string(), path });
            }
            let (width, height, pixels) = read_gray_png(&path)?;
            if width != img.size || height != img.size {
                return Err(Error::Format {
                    path,
                    msg: format!("translated image is {width}x{height}, pipeline uses {0}x{0}", img.size),
                });
            }
            let mut out = img.clone();
            out.pixels = pixels;
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan_geometry::BevConfig;

    fn image(size: usize, pixels: Vec<u8>) -> BevImage {
        BevImage::from_pixels(&BevConfig::new(size, 1.0).unwrap(), pixels, 0.0).unwrap()
    }

    #[test]
    fn median_removes_isolated_impulse() {
        let img = image(3, vec![0, 0, 0, 0, 255, 0, 0, 0, 0]);
        assert_eq!(median_filter(&img, 3).unwrap().get(1, 1), 0);
        assert_eq!(median_filter(&img, 1).unwrap(), img);
    }

    #[test]
    fn constant_images_pass_through() {
        let img = image(9, vec![77; 81]);
        assert_eq!(median_filter(&img, 3).unwrap(), img);
        assert_eq!(gaussian_filter(&img, 5, 1.0).unwrap(), img);
    }

    #[test]
    fn even_kernel_is_config_error() {
        let img = image(4, vec![0; 16]);
        assert!(matches!(median_filter(&img, 2), Err(Error::Config(_))));
        assert!(matches!(gaussian_filter(&img, 4, 1.0), Err(Error::Config(_))));
        assert!(matches!(gaussian_filter(&img, 3, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn gaussian_impulse_reproduces_kernel() {
        let mut px = vec![0u8; 49];
        px[24] = 255;
        let out = gaussian_filter(&image(7, px), 3, 0.8).unwrap();
        // direct 2-D evaluation of the normalized kernel
        let g = |d: f64| (-d * d / (2.0 * 0.8 * 0.8)).exp();
        let total: f64 = (-1..=1).flat_map(|i| (-1..=1).map(move |j| g(i as f64) * g(j as f64))).sum();
        for dr in -1i32..=1 {
            for dc in -1i32..=1 {
                let expected = (255.0 * g(dr as f64) * g(dc as f64) / total).round() as u8;
                assert_eq!(out.get((3 + dr) as usize, (3 + dc) as usize), expected);
            }
        }
        assert_eq!(out.nonzero_count(), 9);
    }

    #[test]
    fn missing_external_frame_is_lookup_error() {
        let dir = tempfile::tempdir().unwrap();
        let img = image(4, vec![0; 16]);
        let spec = TranslatorSpec::External { directory: dir.path().to_path_buf() };
        assert!(matches!(translate_image(&img, &spec, "123"), Err(Error::Lookup { .. })));
    }
}
