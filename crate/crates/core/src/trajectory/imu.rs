use nalgebra::{Matrix3, Vector3};

use super::se3::{so3_exp, so3_log, Pose};
use super::{TimedPose, Trajectory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub t: f64,
    /// Body-frame angular rate, rad/s.
    pub gyro: Vector3<f64>,
    /// Body-frame specific force, m/s^2 (gravity included).
    pub accel: Vector3<f64>,
}

impl ImuSample {
    pub fn new(t: f64, gyro: [f64; 3], accel: [f64; 3]) -> Self {
        Self { t, gyro: Vector3::from(gyro), accel: Vector3::from(accel) }
    }

    fn lerp(&self, other: &ImuSample, t: f64) -> ImuSample {
        let w = if other.t > self.t { (t - self.t) / (other.t - self.t) } else { 0.0 };
        ImuSample {
            t,
            gyro: self.gyro + (other.gyro - self.gyro) * w,
            accel: self.accel + (other.accel - self.accel) * w,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuDensifyConfig {
    /// World-frame gravity vector.
    pub gravity: Vector3<f64>,
    /// Largest tolerated spacing between consecutive IMU samples, seconds.
    pub max_gap: f64,
}

impl Default for ImuDensifyConfig {
    fn default() -> Self {
        Self { gravity: Vector3::new(0.0, 0.0, -9.81), max_gap: 0.1 }
    }
}

/// Densifies `traj` with one pose per IMU sample. Samples within a
/// microsecond of an anchor time merge into that anchor.
///
/// Each anchor interval is dead-reckoned by midpoint integration starting
/// from the left anchor with the chord velocity. The residual against the
/// right anchor is removed linearly in time (translation additively, rotation
/// through a right-multiplied fraction of the residual rotation vector), so
/// every anchor is reproduced exactly. A constant initial-velocity error is a
/// linear drift and is cancelled entirely by this correction.
pub fn imu_densify(traj: &Trajectory, imu: &[ImuSample], cfg: &ImuDensifyConfig) -> Result<Trajectory> {
    let anchors = traj.samples();
    if anchors.len() < 2 {
        return Err(Error::Input("IMU densification needs at least two anchor poses".into()));
    }
    if imu.is_empty() {
        return Err(Error::Coverage("no IMU samples".into()));
    }
    if let Some(i) = imu.windows(2).position(|w| !(w[1].t > w[0].t)) {
        return Err(Error::Input(format!("IMU timestamps not strictly increasing at sample {}", i + 1)));
    }
    if imu.iter().any(|s| !(s.t.is_finite() && s.gyro.iter().chain(s.accel.iter()).all(|v| v.is_finite()))) {
        return Err(Error::Input("non-finite IMU sample".into()));
    }
    let (first, last) = (anchors[0].t, anchors[anchors.len() - 1].t);
    if imu[0].t > first + cfg.max_gap || imu[imu.len() - 1].t < last - cfg.max_gap {
        return Err(Error::Coverage(format!(
            "IMU covers [{:.6}, {:.6}] but trajectory spans [{first:.6}, {last:.6}]",
            imu[0].t,
            imu[imu.len() - 1].t
        )));
    }
    if let Some(w) = imu.windows(2).find(|w| w[1].t - w[0].t > cfg.max_gap && w[1].t > first && w[0].t < last) {
        return Err(Error::Coverage(format!(
            "IMU gap of {:.6} s at t = {:.6} exceeds {:.6} s",
            w[1].t - w[0].t,
            w[0].t,
            cfg.max_gap
        )));
    }

    let mut out = Vec::with_capacity(imu.len() + anchors.len());
    for pair in anchors.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        out.push(*a);
        out.extend(integrate_interval(a, b, imu, cfg));
    }
    out.push(anchors[anchors.len() - 1]);
    Trajectory::new(out)
}

/// IMU reading at `t`, interpolated linearly and held constant outside the data.
fn sample_at(imu: &[ImuSample], t: f64) -> ImuSample {
    let k = imu.partition_point(|s| s.t <= t);
    if k == 0 {
        return ImuSample { t, ..imu[0] };
    }
    if k == imu.len() {
        return ImuSample { t, ..imu[imu.len() - 1] };
    }
    imu[k - 1].lerp(&imu[k], t)
}

/// IMU samples this close to an anchor time are taken to coincide with it.
const ANCHOR_MERGE: f64 = 1e-6;

/// Corrected poses at the IMU times strictly inside `(a.t, b.t)`.
fn integrate_interval(a: &TimedPose, b: &TimedPose, imu: &[ImuSample], cfg: &ImuDensifyConfig) -> Vec<TimedPose> {
    let duration = b.t - a.t;
    let lo = imu.partition_point(|s| s.t <= a.t + ANCHOR_MERGE);
    let hi = imu.partition_point(|s| s.t < b.t - ANCHOR_MERGE).max(lo);
    let mut knots = Vec::with_capacity(hi - lo + 2);
    knots.push(sample_at(imu, a.t));
    knots.extend_from_slice(&imu[lo..hi]);
    knots.push(sample_at(imu, b.t));

    let mut rotation: Matrix3<f64> = a.pose.rotation;
    let mut position = a.pose.translation;
    let mut velocity = (b.pose.translation - a.pose.translation) / duration;
    let mut states = Vec::with_capacity(knots.len());
    for w in knots.windows(2) {
        let dt = w[1].t - w[0].t;
        let omega = (w[0].gyro + w[1].gyro) * 0.5;
        let next_rotation = rotation * so3_exp(&(omega * dt));
        let acc = (rotation * w[0].accel + next_rotation * w[1].accel) * 0.5 + cfg.gravity;
        position += velocity * dt + acc * (0.5 * dt * dt);
        velocity += acc * dt;
        rotation = next_rotation;
        states.push((w[1].t, rotation, position));
    }

    let (_, end_rotation, end_position) = states[states.len() - 1];
    let translation_residual = b.pose.translation - end_position;
    let rotation_residual = so3_log(&(end_rotation.transpose() * b.pose.rotation));
    states.pop();
    states
        .into_iter()
        .map(|(t, r, p)| {
            let s = (t - a.t) / duration;
            let pose = Pose::new(r * so3_exp(&(rotation_residual * s)), p + translation_residual * s);
            TimedPose { t, pose: pose.renormalized() }
        })
        .collect()
}
