//! Rigid 3-DOF registration of a radar BEV image onto a LiDAR BEV image.
//!
//! A registration result maps radar image coordinates into LiDAR image
//! coordinates: `q_lidar = R(theta) * q_radar + (x, y)`. For a sensor pair
//! imaging the same scene this is the pose of the radar in the LiDAR frame.

mod mi;
mod phase;
mod warp;

pub use mi::{mutual_information, mutual_information_masked, register_mi, transformed_mi, MiOptConfig};
pub use phase::{
    circular_cross_correlation, phase_correlate_translation, register_phase, sweep_rotations, Fft2d, PhaseShift,
    SweepCandidate, ThetaSweepConfig,
};
pub use warp::{warp_rigid, Plane};

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scan_geometry::BevImage;

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RigidTransform2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl RigidTransform2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: normalize_angle(theta) }
    }

    pub fn apply(&self, px: f64, py: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (c * px - s * py + self.x, s * px + c * py + self.y)
    }

    pub fn inverse(&self) -> Self {
        let (s, c) = self.theta.sin_cos();
        Self::new(-(c * self.x + s * self.y), s * self.x - c * self.y, -self.theta)
    }

    pub fn compose(&self, other: &RigidTransform2D) -> Self {
        let (x, y) = self.apply(other.x, other.y);
        Self::new(x, y, self.theta + other.theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Phase,
    Mi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegistrationResult {
    pub transform: RigidTransform2D,
    /// Phase-correlation peak, or MI in nats.
    pub score: f64,
    pub method: Method,
    pub converged: bool,
}

/// Mean product of intensities: `(1/n) * sum f(x, y) t(x, y)`.
pub fn cross_correlation_score(f: &BevImage, t: &BevImage) -> Result<f64> {
    if !f.same_shape(t) {
        return Err(Error::Input(format!("image sizes differ: {} vs {}", f.size, t.size)));
    }
    let sum: f64 = f.pixels.iter().zip(&t.pixels).map(|(&a, &b)| a as f64 * b as f64).sum();
    Ok(sum / f.pixels.len() as f64)
}
