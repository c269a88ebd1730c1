//! Polar radar scans, bird-eye-view rasters and the conversions between them.
//!
//! Pixel convention for an `N x N` image with `c = (N - 1) / 2`:
//! the center of column `j` sits at `x = (j - c) * mpp` and the center of row
//! `i` at `y = (c - i) * mpp` (x right, y up). A metric point falls into
//! column `floor(N/2 + x/mpp)` and row `N - 1 - floor(N/2 + y/mpp)`, which for
//! odd `N` is `c + round_half_up(x/mpp)` / `c - round_half_up(y/mpp)`.
//! Points outside `[-half_range, half_range)` on either axis are dropped.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Wraps an angle into `[0, 2pi)`.
pub(crate) fn wrap_two_pi(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Raster geometry shared by every BEV image in a pipeline run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BevConfig {
    pub size: usize,
    pub meters_per_pixel: f64,
}

impl BevConfig {
    pub fn new(size: usize, meters_per_pixel: f64) -> Result<Self> {
        let cfg = Self { size, meters_per_pixel };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::Config("BEV size must be at least 1 pixel".into()));
        }
        if !(self.meters_per_pixel.is_finite() && self.meters_per_pixel > 0.0) {
            return Err(Error::Config(format!("meters per pixel must be positive, got {}", self.meters_per_pixel)));
        }
        Ok(())
    }

    /// Half the side length of the covered square, in meters.
    pub fn half_range(&self) -> f64 {
        self.size as f64 * self.meters_per_pixel / 2.0
    }

    pub fn blank(&self, frame_time: f64) -> BevImage {
        BevImage {
            size: self.size,
            meters_per_pixel: self.meters_per_pixel,
            half_range: self.half_range(),
            frame_time,
            pixels: vec![0; self.size * self.size],
        }
    }
}

impl Default for BevConfig {
    fn default() -> Self {
        Self { size: 300, meters_per_pixel: 0.5 }
    }
}

/// Square bird-eye-view raster, row-major, sensor origin at the image center.
#[derive(Debug, Clone, PartialEq)]
pub struct BevImage {
    pub size: usize,
    pub meters_per_pixel: f64,
    pub half_range: f64,
    pub frame_time: f64,
    pub pixels: Vec<u8>,
}

impl BevImage {
    pub fn from_pixels(cfg: &BevConfig, pixels: Vec<u8>, frame_time: f64) -> Result<Self> {
        cfg.validate()?;
        if pixels.len() != cfg.size * cfg.size {
            return Err(Error::Input(format!(
                "expected {} pixels for a {}x{} image, got {}",
                cfg.size * cfg.size,
                cfg.size,
                cfg.size,
                pixels.len()
            )));
        }
        let mut img = cfg.blank(frame_time);
        img.pixels = pixels;
        Ok(img)
    }

    pub fn config(&self) -> BevConfig {
        BevConfig { size: self.size, meters_per_pixel: self.meters_per_pixel }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.size + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.pixels[row * self.size + col] = value;
    }

    /// Keeps the brighter of the stored and the new value.
    #[inline]
    pub fn splat_max(&mut self, row: usize, col: usize, value: u8) {
        let p = &mut self.pixels[row * self.size + col];
        if value > *p {
            *p = value;
        }
    }

    /// Continuous coordinate of the metric origin (same on both axes).
    #[inline]
    pub fn center(&self) -> f64 {
        (self.size as f64 - 1.0) / 2.0
    }

    fn axis_index(&self, v: f64) -> Option<usize> {
        let k = (self.size as f64 / 2.0 + v / self.meters_per_pixel).floor();
        if k >= 0.0 && k < self.size as f64 {
            Some(k as usize)
        } else {
            None
        }
    }

    /// `(row, col)` of the pixel containing metric point `(x, y)`.
    pub fn pixel_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let col = self.axis_index(x)?;
        let k = self.axis_index(y)?;
        Some((self.size - 1 - k, col))
    }

    /// Metric coordinates of a pixel center.
    pub fn pixel_center(&self, row: usize, col: usize) -> (f64, f64) {
        let c = self.center();
        ((col as f64 - c) * self.meters_per_pixel, (c - row as f64) * self.meters_per_pixel)
    }

    pub fn nonzero_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p > 0).count()
    }

    pub fn same_shape(&self, other: &BevImage) -> bool {
        self.size == other.size
    }
}

/// Acquisition timing of one spinning sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTiming {
    pub sweep_start: f64,
    pub sweep_period: f64,
    /// Bearing of azimuth row 0 in the sensor frame.
    pub azimuth_zero: f64,
    /// Per-azimuth timestamps, one per row, when known.
    pub azimuth_times: Option<Vec<f64>>,
}

impl ScanTiming {
    pub fn linear(sweep_start: f64, sweep_period: f64) -> Self {
        Self { sweep_start, sweep_period, azimuth_zero: 0.0, azimuth_times: None }
    }

    /// Timestamp at which the beam pointed along `bearing` (sensor frame).
    pub fn time_at_bearing(&self, bearing: f64) -> f64 {
        let fraction = wrap_two_pi(bearing - self.azimuth_zero) / TAU;
        match &self.azimuth_times {
            Some(times) if !times.is_empty() => {
                let a = times.len();
                let s = fraction * a as f64;
                let i = (s.floor() as usize).min(a - 1);
                let frac = s - i as f64;
                let next = if i + 1 < a { times[i + 1] } else { self.sweep_start + self.sweep_period };
                times[i] + frac * (next - times[i])
            }
            _ => self.sweep_start + fraction * self.sweep_period,
        }
    }
}

/// Raw spinning-radar output: azimuth rows by range-bin columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarScan {
    pub azimuths: usize,
    pub range_bins: usize,
    /// Row-major `azimuths x range_bins`.
    pub intensities: Vec<u8>,
    pub range_resolution: f64,
    pub azimuth_zero: f64,
    pub sweep_start: f64,
    pub sweep_period: f64,
    pub azimuth_times: Option<Vec<f64>>,
}

impl PolarScan {
    pub fn new(
        azimuths: usize,
        range_bins: usize,
        intensities: Vec<u8>,
        range_resolution: f64,
        sweep_start: f64,
        sweep_period: f64,
    ) -> Result<Self> {
        let scan = Self {
            azimuths,
            range_bins,
            intensities,
            range_resolution,
            azimuth_zero: 0.0,
            sweep_start,
            sweep_period,
            azimuth_times: None,
        };
        scan.validate()?;
        Ok(scan)
    }

    pub fn with_azimuth_times(mut self, times: Vec<f64>) -> Result<Self> {
        self.azimuth_times = Some(times);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.azimuths == 0 || self.range_bins == 0 {
            return Err(Error::Input("polar scan needs at least one azimuth and one range bin".into()));
        }
        if self.intensities.len() != self.azimuths * self.range_bins {
            return Err(Error::Input(format!(
                "polar scan has {} cells, expected {}",
                self.intensities.len(),
                self.azimuths * self.range_bins
            )));
        }
        if !(self.range_resolution.is_finite() && self.range_resolution > 0.0) {
            return Err(Error::Config("range resolution must be positive".into()));
        }
        if !(self.sweep_period.is_finite() && self.sweep_period > 0.0) {
            return Err(Error::Config("sweep period must be positive".into()));
        }
        if let Some(times) = &self.azimuth_times {
            if times.len() != self.azimuths {
                return Err(Error::Input(format!("{} azimuth times for {} azimuths", times.len(), self.azimuths)));
            }
            let end = self.sweep_start + self.sweep_period;
            if times.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::Input("azimuth times decrease".into()));
            }
            if times.iter().any(|&t| !(t >= self.sweep_start && t <= end)) {
                return Err(Error::Input("azimuth time outside the sweep interval".into()));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, azimuth: usize, bin: usize) -> u8 {
        self.intensities[azimuth * self.range_bins + bin]
    }

    /// Bearing of azimuth row `a` in the sensor frame.
    pub fn bearing(&self, a: usize) -> f64 {
        self.azimuth_zero + TAU * a as f64 / self.azimuths as f64
    }

    /// Range of the center of bin `b`.
    pub fn bin_range(&self, b: usize) -> f64 {
        (b as f64 + 0.5) * self.range_resolution
    }

    pub fn max_range(&self) -> f64 {
        self.range_bins as f64 * self.range_resolution
    }

    pub fn timing(&self) -> ScanTiming {
        ScanTiming {
            sweep_start: self.sweep_start,
            sweep_period: self.sweep_period,
            azimuth_zero: self.azimuth_zero,
            azimuth_times: self.azimuth_times.clone(),
        }
    }

    pub fn nonzero_count(&self) -> usize {
        self.intensities.iter().filter(|&&v| v > 0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity: f64,
    pub t: f64,
}

/// A sweep's worth of points with per-point acquisition times.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimedPointCloud {
    pub points: Vec<TimedPoint>,
    /// Reference (sweep start) time of the cloud.
    pub frame_time: f64,
}

impl TimedPointCloud {
    pub fn new(points: Vec<TimedPoint>, frame_time: f64) -> Self {
        Self { points, frame_time }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// One-to-one polar cell to pixel mapping. Sparse with range.
pub fn polar_to_cartesian_forward(scan: &PolarScan, cfg: &BevConfig) -> Result<BevImage> {
    cfg.validate()?;
    scan.validate()?;
    let mut img = cfg.blank(scan.sweep_start);
    for a in 0..scan.azimuths {
        let (sin, cos) = scan.bearing(a).sin_cos();
        let row = &scan.intensities[a * scan.range_bins..(a + 1) * scan.range_bins];
        for (b, &v) in row.iter().enumerate() {
            if v == 0 {
                continue;
            }
            let rho = scan.bin_range(b);
            if let Some((r, c)) = img.pixel_of(rho * cos, rho * sin) {
                img.splat_max(r, c, v);
            }
        }
    }
    Ok(img)
}

/// Pixel-driven resampling: linear in range, nearest in azimuth.
pub fn polar_to_cartesian_backward(scan: &PolarScan, cfg: &BevConfig) -> Result<BevImage> {
    cfg.validate()?;
    scan.validate()?;
    let mut img = cfg.blank(scan.sweep_start);
    let max_range = scan.max_range();
    let a_count = scan.azimuths as f64;
    let last_bin = scan.range_bins - 1;
    for row in 0..cfg.size {
        for col in 0..cfg.size {
            let (x, y) = img.pixel_center(row, col);
            let rho = x.hypot(y);
            if rho > max_range {
                continue;
            }
            let phi = wrap_two_pi(y.atan2(x) - scan.azimuth_zero);
            let a = ((phi / TAU * a_count).round() as usize) % scan.azimuths;
            let s = rho / scan.range_resolution - 0.5;
            let value = if s <= 0.0 {
                scan.get(a, 0) as f64
            } else {
                let b0 = s.floor() as usize;
                if b0 >= last_bin {
                    scan.get(a, last_bin) as f64
                } else {
                    let w = s - b0 as f64;
                    (1.0 - w) * scan.get(a, b0) as f64 + w * scan.get(a, b0 + 1) as f64
                }
            };
            img.set(row, col, value.round().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(img)
}

/// Pseudo-pointcloud from a Cartesian radar image: one `z = 0` point per
/// pixel brighter than `threshold`, timed by the bearing of its center.
pub fn cartesian_image_to_points(img: &BevImage, timing: &ScanTiming, threshold: u8) -> TimedPointCloud {
    let mut points = Vec::new();
    for row in 0..img.size {
        for col in 0..img.size {
            let v = img.get(row, col);
            if v <= threshold {
                continue;
            }
            let (x, y) = img.pixel_center(row, col);
            points.push(TimedPoint { x, y, z: 0.0, intensity: v as f64, t: timing.time_at_bearing(y.atan2(x)) });
        }
    }
    TimedPointCloud::new(points, timing.sweep_start)
}

/// Top-down rasterization, brightest point wins, `z` ignored.
pub fn rasterize_bev(cloud: &TimedPointCloud, cfg: &BevConfig) -> Result<BevImage> {
    cfg.validate()?;
    let mut img = cfg.blank(cloud.frame_time);
    for p in &cloud.points {
        if let Some((r, c)) = img.pixel_of(p.x, p.y) {
            img.splat_max(r, c, p.intensity.round().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_scan(seed: u64, density: f64) -> PolarScan {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, r) = (64, 40);
        let cells =
            (0..a * r).map(|_| if rng.random::<f64>() < density { rng.random_range(1..=255) } else { 0 }).collect();
        PolarScan::new(a, r, cells, 0.5, 0.0, 0.25).unwrap()
    }

    #[test]
    fn forward_single_cell_lands_on_hand_computed_pixel() {
        let mut cells = vec![0u8; 8];
        cells[1] = 255; // a = 0, bin = 1
        let scan = PolarScan::new(4, 2, cells, 1.0, 0.0, 0.1).unwrap();
        let cfg = BevConfig::new(5, 1.0).unwrap();
        let img = polar_to_cartesian_forward(&scan, &cfg).unwrap();
        // rho = 1.5 m at bearing 0 -> x = 1.5, y = 0 -> col 2 + round_half_up(1.5) = 4, row 2
        assert_eq!(img.get(2, 4), 255);
        assert_eq!(img.nonzero_count(), 1);
    }

    #[test]
    fn zero_scan_gives_zero_image_both_ways() {
        let scan = PolarScan::new(16, 10, vec![0; 160], 1.0, 0.0, 0.25).unwrap();
        let cfg = BevConfig::new(21, 1.0).unwrap();
        assert_eq!(polar_to_cartesian_forward(&scan, &cfg).unwrap().nonzero_count(), 0);
        assert_eq!(polar_to_cartesian_backward(&scan, &cfg).unwrap().nonzero_count(), 0);
    }

    #[test]
    fn backward_uniform_scan_fills_disc() {
        let scan = PolarScan::new(90, 10, vec![200; 900], 1.0, 0.0, 0.25).unwrap();
        let cfg = BevConfig::new(31, 1.0).unwrap();
        let img = polar_to_cartesian_backward(&scan, &cfg).unwrap();
        for row in 0..31 {
            for col in 0..31 {
                let (x, y) = img.pixel_center(row, col);
                let expected = if x.hypot(y) <= 10.0 { 200 } else { 0 };
                assert_eq!(img.get(row, col), expected, "pixel ({row},{col})");
            }
        }
    }

    #[test]
    fn density_ordering_on_random_scans() {
        let cfg = BevConfig::new(41, 1.0).unwrap();
        for seed in 0..20 {
            let scan = random_scan(seed, 0.3);
            let fwd = polar_to_cartesian_forward(&scan, &cfg).unwrap();
            let bwd = polar_to_cartesian_backward(&scan, &cfg).unwrap();
            assert!(fwd.nonzero_count() <= scan.nonzero_count());
            assert!(bwd.nonzero_count() >= fwd.nonzero_count());
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let scan = random_scan(1, 0.1);
        assert!(matches!(
            polar_to_cartesian_forward(&scan, &BevConfig { size: 0, meters_per_pixel: 1.0 }),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            polar_to_cartesian_backward(&scan, &BevConfig { size: 10, meters_per_pixel: 0.0 }),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn single_pixel_becomes_timed_point() {
        let cfg = BevConfig::new(21, 1.0).unwrap();
        let mut img = cfg.blank(0.0);
        let (r, c) = img.pixel_of(3.0, -4.0).unwrap();
        img.set(r, c, 90);
        assert_eq!(img.pixel_center(r, c), (3.0, -4.0));
        let timing = ScanTiming::linear(10.0, 0.25);
        let cloud = cartesian_image_to_points(&img, &timing, 0);
        assert_eq!(cloud.len(), 1);
        let p = cloud.points[0];
        assert_eq!((p.x, p.y, p.z), (3.0, -4.0, 0.0));
        let bearing = (-4.0f64).atan2(3.0) + TAU;
        let expected = 10.0 + bearing / TAU * 0.25;
        assert!((p.t - expected).abs() < 1e-12);
        assert!(cartesian_image_to_points(&img, &timing, 255).is_empty());
    }

    #[test]
    fn azimuth_times_interpolate_like_linear_layout() {
        let linear = ScanTiming::linear(2.0, 0.4);
        let mut explicit = linear.clone();
        explicit.azimuth_times = Some((0..8).map(|a| 2.0 + 0.05 * a as f64).collect());
        for k in 0..50 {
            let bearing = -3.0 + k as f64 * 0.13;
            let d = linear.time_at_bearing(bearing) - explicit.time_at_bearing(bearing);
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn origin_maps_to_center_pixel() {
        let cfg = BevConfig::new(11, 0.5).unwrap();
        let cloud = TimedPointCloud::new(vec![TimedPoint { x: 0.0, y: 0.0, z: 3.0, intensity: 17.0, t: 0.0 }], 0.0);
        let img = rasterize_bev(&cloud, &cfg).unwrap();
        assert_eq!(img.get(5, 5), 17);
        assert_eq!(img.nonzero_count(), 1);
        assert_eq!(rasterize_bev(&TimedPointCloud::default(), &cfg).unwrap().nonzero_count(), 0);
    }

    #[test]
    fn out_of_range_points_are_dropped() {
        let cfg = BevConfig::new(5, 1.0).unwrap();
        let img = cfg.blank(0.0);
        assert!(img.pixel_of(2.49, 0.0).is_some());
        assert!(img.pixel_of(2.5, 0.0).is_none());
        assert!(img.pixel_of(-2.5, 0.0).is_some());
        assert!(img.pixel_of(-2.51, 0.0).is_none());
    }
}
