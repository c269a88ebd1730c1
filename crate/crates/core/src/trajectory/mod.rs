//! Time-stamped SE(3) trajectories: cumulative cubic B-spline interpolation
//! and IMU densification between anchor poses.

mod imu;
mod se3;

pub use imu::{imu_densify, ImuDensifyConfig, ImuSample};
pub use se3::{hat, orthonormality_error, orthonormalize, so3_exp, so3_log, Pose, Twist};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedPose {
    pub t: f64,
    pub pose: Pose,
}

/// Strictly time-ordered pose samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<TimedPose>,
}

impl Trajectory {
    pub fn new(samples: Vec<TimedPose>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Input("trajectory needs at least one sample".into()));
        }
        if let Some(i) = samples.windows(2).position(|w| !(w[1].t > w[0].t)) {
            return Err(Error::Input(format!("trajectory timestamps not strictly increasing at sample {}", i + 1)));
        }
        if samples.iter().any(|s| !s.t.is_finite()) {
            return Err(Error::Input("non-finite trajectory timestamp".into()));
        }
        Ok(Self { samples })
    }

    pub fn from_poses(times: &[f64], poses: &[Pose]) -> Result<Self> {
        if times.len() != poses.len() {
            return Err(Error::Input("times and poses differ in length".into()));
        }
        Self::new(times.iter().zip(poses).map(|(&t, &pose)| TimedPose { t, pose }).collect())
    }

    pub fn samples(&self) -> &[TimedPose] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    /// Time range over which [`Trajectory::pose_at`] is defined:
    /// one control pose of margin on each side.
    pub fn interpolable_range(&self) -> Option<(f64, f64)> {
        let n = self.samples.len();
        (n >= 4).then(|| (self.samples[1].t, self.samples[n - 2].t))
    }

    /// Same trajectory expressed in another world frame: `world * T(t)`.
    pub fn left_multiplied(&self, world: &Pose) -> Self {
        Self { samples: self.samples.iter().map(|s| TimedPose { t: s.t, pose: world.compose(&s.pose) }).collect() }
    }

    /// Sensor trajectory for a sensor mounted at `mount` on this body: `T(t) * mount`.
    pub fn right_multiplied(&self, mount: &Pose) -> Self {
        Self { samples: self.samples.iter().map(|s| TimedPose { t: s.t, pose: s.pose.compose(mount) }).collect() }
    }

    /// Cumulative cubic B-spline pose at `t`.
    ///
    /// For `t` in `[t_i, t_{i+1}]` the segment blends control poses
    /// `T_{i-1} .. T_{i+2}` with the uniform cumulative basis evaluated at the
    /// local parameter `u = (t - t_i) / (t_{i+1} - t_i)`.
    pub fn pose_at(&self, t: f64) -> Result<Pose> {
        let n = self.samples.len();
        if n < 4 {
            return Err(Error::Input(format!("spline interpolation needs at least 4 poses, trajectory has {n}")));
        }
        let (start, end) = (self.samples[1].t, self.samples[n - 2].t);
        if !(t >= start && t <= end) {
            return Err(Error::Domain { time: t, start, end });
        }
        // first i with t_{i+1} >= t, restricted to 1..=n-3
        let i = self.samples[2..n - 1].partition_point(|s| s.t < t) + 1;
        let i = i.min(n - 3);
        let (t0, t1) = (self.samples[i].t, self.samples[i + 1].t);
        let u = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        Ok(spline_segment(
            [&self.samples[i - 1].pose, &self.samples[i].pose, &self.samples[i + 1].pose, &self.samples[i + 2].pose],
            u,
        ))
    }
}

/// Cumulative basis `(B1, B2, B3)` of the uniform cubic B-spline.
pub fn cumulative_basis(u: f64) -> [f64; 3] {
    let u2 = u * u;
    let u3 = u2 * u;
    [(5.0 + 3.0 * u - 3.0 * u2 + u3) / 6.0, (1.0 + 3.0 * u + 3.0 * u2 - 2.0 * u3) / 6.0, u3 / 6.0]
}

fn spline_segment(control: [&Pose; 4], u: f64) -> Pose {
    let basis = cumulative_basis(u);
    let mut pose = *control[0];
    for j in 1..4 {
        let omega = control[j - 1].inverse().compose(control[j]).log();
        pose = pose.compose(&Pose::exp(&(omega * basis[j - 1])));
    }
    pose.renormalized()
}

/// Free-function form of [`Trajectory::pose_at`].
pub fn spline_pose_at(traj: &Trajectory, t: f64) -> Result<Pose> {
    traj.pose_at(t)
}
