//! Motion compensation of spinning-sensor sweeps.
//!
//! Every point `p_j` captured at `t_j` is moved into the sensor frame at the
//! reference time: `p' = T(t_ref)^-1 * T(t_j) * p_j`, with `T` the spline
//! pose of the sensor trajectory.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::scan_geometry::{
    cartesian_image_to_points, polar_to_cartesian_forward, rasterize_bev, BevConfig, BevImage, PolarScan,
    TimedPointCloud,
};
use crate::trajectory::{Pose, Trajectory};

/// Point times this far outside the interpolable range are clamped, not rejected.
pub const EDGE_JITTER: f64 = 1e-3;

fn clamp_time(t: f64, start: f64, end: f64) -> Option<f64> {
    if t >= start && t <= end {
        Some(t)
    } else if t >= start - EDGE_JITTER && t < start {
        Some(start)
    } else if t > end && t <= end + EDGE_JITTER {
        Some(end)
    } else {
        None
    }
}

pub fn deskew_points(cloud: &TimedPointCloud, traj: &Trajectory, t_ref: f64) -> Result<TimedPointCloud> {
    let (start, end) = traj
        .interpolable_range()
        .ok_or_else(|| Error::Input(format!("deskewing needs at least 4 trajectory poses, got {}", traj.len())))?;
    let t_ref_clamped = clamp_time(t_ref, start, end).ok_or(Error::Domain { time: t_ref, start, end })?;

    let mut offending = Vec::new();
    let mut times = Vec::with_capacity(cloud.len());
    for p in &cloud.points {
        match clamp_time(p.t, start, end) {
            Some(t) => times.push(t),
            None => offending.push(p.t),
        }
    }
    if !offending.is_empty() {
        return Err(Error::PointTimes { times: offending, start, end });
    }

    let reference_inv = traj.pose_at(t_ref_clamped)?.inverse();
    let mut points = cloud.points.clone();
    // Sweeps hold many points per timestamp; reuse the last relative pose.
    let mut cached: Option<(f64, Pose)> = None;
    for (p, &t) in points.iter_mut().zip(&times) {
        let relative = match cached {
            Some((ct, pose)) if ct == t => pose,
            _ => {
                let pose = reference_inv.compose(&traj.pose_at(t)?);
                cached = Some((t, pose));
                pose
            }
        };
        let q = relative.transform_point(&Vector3::new(p.x, p.y, p.z));
        p.x = q.x;
        p.y = q.y;
        p.z = q.z;
    }
    Ok(TimedPointCloud::new(points, t_ref))
}

/// Input to [`deskew_scan`].
#[derive(Debug, Clone, Copy)]
pub enum SweepInput<'a> {
    Radar(&'a PolarScan),
    Lidar(&'a TimedPointCloud),
}

/// Deskews a whole sweep into a BEV image stamped with the sweep start.
///
/// Radar goes polar -> forward Cartesian -> pseudo-points -> deskew -> raster;
/// LiDAR goes deskew -> raster.
pub fn deskew_scan(input: SweepInput<'_>, traj: &Trajectory, cfg: &BevConfig) -> Result<BevImage> {
    let (cloud, t_ref) = match input {
        SweepInput::Radar(scan) => {
            let cart = polar_to_cartesian_forward(scan, cfg)?;
            (cartesian_image_to_points(&cart, &scan.timing(), 0), scan.sweep_start)
        }
        SweepInput::Lidar(cloud) => (cloud.clone(), cloud.frame_time),
    };
    let deskewed = deskew_points(&cloud, traj, t_ref)?;
    let mut img = rasterize_bev(&deskewed, cfg)?;
    img.frame_time = t_ref;
    Ok(img)
}
