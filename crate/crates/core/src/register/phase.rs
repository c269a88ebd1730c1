use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::warp::{warp_rigid, Plane};
use super::{Method, RegistrationResult, RigidTransform2D};
use crate::error::{Error, Result};
use crate::scan_geometry::BevImage;

/// Cached forward/inverse plans for square `n x n` transforms.
#[derive(Clone)]
pub struct Fft2d {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2d").field("n", &self.n).finish()
    }
}

impl Fft2d {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        plan.process(data);
        let mut column = vec![Complex64::default(); n];
        for c in 0..n {
            for r in 0..n {
                column[r] = data[r * n + c];
            }
            plan.process(&mut column);
            for r in 0..n {
                data[r * n + c] = column[r];
            }
        }
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.run(&mut data, &self.forward);
        data
    }

    /// Unnormalized inverse transform.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }
}

/// All circular correlations `c[dy][dx] = (1/n) sum f(r + dy, c + dx) * t(r, c)`
/// computed in the transform domain. `c[0][0]` is the plain cross-correlation score.
pub fn circular_cross_correlation(f: &BevImage, t: &BevImage) -> Result<Vec<f64>> {
    if !f.same_shape(t) {
        return Err(Error::Input(format!("image sizes differ: {} vs {}", f.size, t.size)));
    }
    let n = f.size;
    let fft = Fft2d::new(n);
    let ff = fft.forward_real(&Plane::from_image(f).data);
    let tf = fft.forward_real(&Plane::from_image(t).data);
    let mut prod: Vec<Complex64> = ff.iter().zip(&tf).map(|(a, b)| a * b.conj()).collect();
    fft.inverse(&mut prod);
    let scale = 1.0 / ((n * n) as f64 * (n * n) as f64);
    Ok(prod.iter().map(|v| v.re * scale).collect())
}

/// Shift estimate: `t(p) ~ f(p - (dx, dy))`, with `dx` along columns (right)
/// and `dy` along rows (down), in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseShift {
    pub dx: f64,
    pub dy: f64,
    /// Height of the normalized correlation peak, in `[0, 1]`.
    pub peak: f64,
}

fn parabolic_offset(left: f64, center: f64, right: f64) -> f64 {
    let denom = left - 2.0 * center + right;
    if denom >= 0.0 || center < left || center < right {
        return 0.0;
    }
    ((left - right) / (2.0 * denom)).clamp(-0.5, 0.5)
}

fn signed_index(i: usize, n: usize) -> f64 {
    if i > n / 2 {
        i as f64 - n as f64
    } else {
        i as f64
    }
}

/// Phase correlation of two spectra already in the transform domain.
fn correlate_spectra(fft: &Fft2d, f_spec: &[Complex64], t_spec: &[Complex64]) -> PhaseShift {
    let n = fft.n;
    let mut cross: Vec<Complex64> = f_spec.iter().zip(t_spec).map(|(a, b)| b * a.conj()).collect();
    let max_mag = cross.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let floor = max_mag * 1e-12;
    for c in cross.iter_mut() {
        let m = c.norm();
        *c = if m > floor { *c / m } else { Complex64::default() };
    }
    fft.inverse(&mut cross);
    let scale = 1.0 / (n * n) as f64;
    let surface: Vec<f64> = cross.iter().map(|c| c.re * scale).collect();
    let (best, &peak) = surface.iter().enumerate().fold((0, &f64::MIN), |acc, x| if *x.1 > *acc.1 { x } else { acc });
    let (row, col) = (best / n, best % n);
    let at = |r: usize, c: usize| surface[r * n + c];
    let (dx_frac, dy_frac) = if n >= 3 {
        (
            parabolic_offset(at(row, (col + n - 1) % n), peak, at(row, (col + 1) % n)),
            parabolic_offset(at((row + n - 1) % n, col), peak, at((row + 1) % n, col)),
        )
    } else {
        (0.0, 0.0)
    };
    PhaseShift { dx: signed_index(col, n) + dx_frac, dy: signed_index(row, n) + dy_frac, peak: peak.clamp(0.0, 1.0) }
}

/// Translation between two equal-size images by phase correlation with a
/// parabolic subpixel fit on each axis.
pub fn phase_correlate_translation(f: &BevImage, t: &BevImage) -> Result<PhaseShift> {
    if !f.same_shape(t) {
        return Err(Error::Input(format!("image sizes differ: {} vs {}", f.size, t.size)));
    }
    let (fp, tp) = (Plane::from_image(f), Plane::from_image(t));
    if fp.is_constant() || tp.is_constant() {
        return Err(Error::Degenerate("phase correlation needs non-constant images".into()));
    }
    let fft = Fft2d::new(f.size);
    Ok(correlate_spectra(&fft, &fft.forward_real(&fp.data), &fft.forward_real(&tp.data)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaSweepConfig {
    /// Half-width of the rotation search, radians.
    pub theta_max: f64,
    pub theta_step: f64,
    /// Golden-section refinement within one step around the best candidate.
    pub refine: bool,
    pub peak_threshold: f64,
}

impl Default for ThetaSweepConfig {
    fn default() -> Self {
        Self { theta_max: 10f64.to_radians(), theta_step: 1f64.to_radians(), refine: true, peak_threshold: 0.05 }
    }
}

impl ThetaSweepConfig {
    pub fn candidates(&self) -> Result<Vec<f64>> {
        if !(self.theta_step.is_finite() && self.theta_step > 0.0)
            || !(self.theta_max.is_finite() && self.theta_max >= 0.0)
        {
            return Err(Error::Config(format!(
                "rotation sweep needs theta_step > 0 and theta_max >= 0, got {} / {}",
                self.theta_step, self.theta_max
            )));
        }
        let k = (self.theta_max / self.theta_step + 1e-9).floor() as i64;
        Ok((-k..=k).map(|i| i as f64 * self.theta_step).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCandidate {
    pub theta: f64,
    pub shift: PhaseShift,
}

/// Reusable phase-correlation state with the LiDAR spectrum cached.
struct PhaseContext {
    fft: Fft2d,
    lidar_spec: Vec<Complex64>,
    radar: Plane,
}

impl PhaseContext {
    fn new(lidar: &BevImage, radar: &BevImage) -> Result<Self> {
        if !lidar.same_shape(radar) {
            return Err(Error::Input(format!("image sizes differ: {} vs {}", lidar.size, radar.size)));
        }
        let (lp, rp) = (Plane::from_image(lidar), Plane::from_image(radar));
        if lp.is_constant() || rp.is_constant() {
            return Err(Error::Degenerate("registration needs non-constant images".into()));
        }
        let fft = Fft2d::new(lidar.size);
        let lidar_spec = fft.forward_real(&lp.data);
        Ok(Self { fft, lidar_spec, radar: rp })
    }

    fn evaluate(&self, theta: f64) -> SweepCandidate {
        let (rotated, _) = warp_rigid(&self.radar, &RigidTransform2D::new(0.0, 0.0, theta));
        let spec = self.fft.forward_real(&rotated);
        SweepCandidate { theta, shift: correlate_spectra(&self.fft, &spec, &self.lidar_spec) }
    }
}

fn better(a: &SweepCandidate, b: &SweepCandidate) -> bool {
    a.shift.peak > b.shift.peak || (a.shift.peak == b.shift.peak && a.theta.abs() < b.theta.abs())
}

/// Phase-correlation peak for every rotation candidate of the sweep.
pub fn sweep_rotations(lidar: &BevImage, radar: &BevImage, sweep: &ThetaSweepConfig) -> Result<Vec<SweepCandidate>> {
    let candidates = sweep.candidates()?;
    let ctx = PhaseContext::new(lidar, radar)?;
    Ok(candidates.par_iter().map(|&theta| ctx.evaluate(theta)).collect())
}

/// Rotation sweep plus per-candidate phase correlation. The radar image is
/// rotated about its center, the best-peaked rotation is optionally refined
/// by golden-section search, and the pixel shift is converted to meters.
pub fn register_phase(lidar: &BevImage, radar: &BevImage, sweep: &ThetaSweepConfig) -> Result<RegistrationResult> {
    let candidates = sweep.candidates()?;
    let ctx = PhaseContext::new(lidar, radar)?;
    let scored: Vec<SweepCandidate> = candidates.par_iter().map(|&theta| ctx.evaluate(theta)).collect();
    let mut best = scored
        .iter()
        .copied()
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .expect("sweep has at least one candidate");

    if sweep.refine && sweep.theta_step > 0.0 {
        let refined = golden_section(&ctx, best.theta - sweep.theta_step, best.theta + sweep.theta_step, 14);
        if refined.shift.peak > best.shift.peak {
            best = refined;
        }
    }

    let mpp = lidar.meters_per_pixel;
    Ok(RegistrationResult {
        transform: RigidTransform2D::new(best.shift.dx * mpp, -best.shift.dy * mpp, best.theta),
        score: best.shift.peak,
        method: Method::Phase,
        converged: best.shift.peak >= sweep.peak_threshold,
    })
}

fn golden_section(ctx: &PhaseContext, mut lo: f64, mut hi: f64, iterations: usize) -> SweepCandidate {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = ctx.evaluate(hi - ratio * (hi - lo));
    let mut b = ctx.evaluate(lo + ratio * (hi - lo));
    for _ in 0..iterations {
        if a.shift.peak >= b.shift.peak {
            hi = b.theta;
            b = a;
            a = ctx.evaluate(hi - ratio * (hi - lo));
        } else {
            lo = a.theta;
            a = b;
            b = ctx.evaluate(lo + ratio * (hi - lo));
        }
    }
    if better(&b, &a) {
        b
    } else {
        a
    }
}
