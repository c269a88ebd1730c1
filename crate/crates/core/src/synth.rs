//! Planar synthetic worlds and spinning LiDAR/radar sweep simulation.
//!
//! Worlds are line segments (walls) and small circular point reflectors.
//! Sensors cast one ray per azimuth at the azimuth's own acquisition time,
//! so platform motion during the sweep produces the usual skew.

use std::f64::consts::TAU;
use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset_io::{self, BevMeta, DatasetMeta, LidarMeta, RadarMeta};
use crate::deskew::{deskew_scan, SweepInput};
use crate::error::{Error, Result};
use crate::register::RigidTransform2D;
use crate::scan_geometry::{BevConfig, BevImage, PolarScan, TimedPoint, TimedPointCloud};
use crate::trajectory::{ImuSample, Pose, TimedPose, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Landmark {
    Segment {
        a: [f64; 2],
        b: [f64; 2],
        reflectivity: f64,
    },
    /// Reported at the center distance when a ray passes within `radius`.
    Reflector {
        center: [f64; 2],
        radius: f64,
        reflectivity: f64,
    },
}

impl Landmark {
    pub fn reflectivity(&self) -> f64 {
        match *self {
            Landmark::Segment { reflectivity, .. } | Landmark::Reflector { reflectivity, .. } => reflectivity,
        }
    }

    /// Range along the unit ray `origin + s * dir`, if hit.
    fn intersect(&self, origin: [f64; 2], dir: [f64; 2]) -> Option<f64> {
        match *self {
            Landmark::Segment { a, b, .. } => {
                let e = [b[0] - a[0], b[1] - a[1]];
                let denom = dir[0] * (-e[1]) - dir[1] * (-e[0]);
                if denom.abs() < 1e-12 {
                    return None;
                }
                let w = [a[0] - origin[0], a[1] - origin[1]];
                let s = (w[0] * (-e[1]) - w[1] * (-e[0])) / denom;
                let u = (dir[0] * w[1] - dir[1] * w[0]) / denom;
                (s > 0.0 && (0.0..=1.0).contains(&u)).then_some(s)
            }
            Landmark::Reflector { center, radius, .. } => {
                let w = [center[0] - origin[0], center[1] - origin[1]];
                let along = w[0] * dir[0] + w[1] * dir[1];
                if along <= 0.0 {
                    return None;
                }
                let perp = (w[0] * dir[1] - w[1] * dir[0]).abs();
                (perp <= radius).then(|| w[0].hypot(w[1]))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub seed: u64,
    pub extent: f64,
    pub landmarks: Vec<Landmark>,
}

impl World {
    /// Hits along a ray sorted by range, closer than `max_range`.
    pub fn cast(&self, origin: [f64; 2], dir: [f64; 2], max_range: f64) -> Vec<(f64, f64)> {
        let mut hits: Vec<(f64, f64)> = self
            .landmarks
            .iter()
            .filter_map(|l| l.intersect(origin, dir).map(|r| (r, l.reflectivity())))
            .filter(|&(r, _)| r <= max_range)
            .collect();
        hits.sort_by(|a, b| a.0.total_cmp(&b.0));
        hits
    }
}

/// Deterministic random layout of walls and reflectors inside `[-extent, extent]^2`.
pub fn generate_world(seed: u64, n_landmarks: usize, extent: f64) -> Result<World> {
    if n_landmarks == 0 {
        return Err(Error::Config("world needs at least one landmark".into()));
    }
    if !(extent.is_finite() && extent > 0.0) {
        return Err(Error::Config("world extent must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clamp = |v: f64| v.clamp(-extent, extent);
    let landmarks = (0..n_landmarks)
        .map(|_| {
            let cx = rng.random_range(-extent..extent);
            let cy = rng.random_range(-extent..extent);
            let reflectivity = rng.random_range(0.4..1.0);
            if rng.random::<f64>() < 0.6 {
                let len = rng.random_range(3.0..15.0);
                let ang = rng.random_range(0.0..TAU);
                let (dx, dy) = (ang.cos() * len / 2.0, ang.sin() * len / 2.0);
                Landmark::Segment {
                    a: [clamp(cx - dx), clamp(cy - dy)],
                    b: [clamp(cx + dx), clamp(cy + dy)],
                    reflectivity,
                }
            } else {
                Landmark::Reflector { center: [cx, cy], radius: rng.random_range(0.2..0.6), reflectivity }
            }
        })
        .collect();
    Ok(World { seed, extent, landmarks })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    Lidar,
    Radar,
}

/// Stylized radar artifacts. All values in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Probability that a polar cell holds a random speckle return.
    pub speckle_density: f64,
    /// Intensity (fraction of full scale) of the fixed-range rings.
    pub ring_gain: f64,
    /// Intensity of the bright azimuth rays.
    pub radial_gain: f64,
    /// Probability that a ray also returns from the next landmark behind the first.
    pub penetration_prob: f64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn moderate() -> Self {
        Self { speckle_density: 0.003, ring_gain: 0.25, radial_gain: 0.25, penetration_prob: 0.2 }
    }

    pub fn heavy() -> Self {
        Self { speckle_density: 0.01, ring_gain: 0.5, radial_gain: 0.5, penetration_prob: 0.5 }
    }

    pub fn from_profile(name: &str) -> Result<Self> {
        match name {
            "none" => Ok(Self::none()),
            "moderate" => Ok(Self::moderate()),
            "heavy" => Ok(Self::heavy()),
            other => Err(Error::Config(format!("unknown noise profile {other:?} (none, moderate, heavy)"))),
        }
    }

    fn validate(&self) -> Result<()> {
        let values = [self.speckle_density, self.ring_gain, self.radial_gain, self.penetration_prob];
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config("noise rates must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

const RING_COUNT: usize = 3;
const RADIAL_COUNT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub kind: SensorKind,
    pub sweep_period: f64,
    pub azimuth_count: usize,
    pub max_range: f64,
    /// Radar range bin size; unused for LiDAR.
    pub range_resolution: f64,
    pub noise: NoiseModel,
}

impl SensorModel {
    pub fn lidar() -> Self {
        Self {
            kind: SensorKind::Lidar,
            sweep_period: 0.1,
            azimuth_count: 1024,
            max_range: 80.0,
            range_resolution: 0.0,
            noise: NoiseModel::none(),
        }
    }

    pub fn radar(noise: NoiseModel) -> Self {
        Self {
            kind: SensorKind::Radar,
            sweep_period: 0.25,
            azimuth_count: 400,
            max_range: 80.0,
            range_resolution: 0.1,
            noise,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sweep_period.is_finite() && self.sweep_period > 0.0) {
            return Err(Error::Config("sweep period must be positive".into()));
        }
        if self.azimuth_count == 0 || !(self.max_range > 0.0) {
            return Err(Error::Config("sensor needs azimuths and a positive max range".into()));
        }
        if self.kind == SensorKind::Radar && !(self.range_resolution > 0.0) {
            return Err(Error::Config("radar range resolution must be positive".into()));
        }
        self.noise.validate()
    }

    pub fn range_bins(&self) -> usize {
        (self.max_range / self.range_resolution).ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimulatedScan {
    Radar(PolarScan),
    Lidar(TimedPointCloud),
}

impl SimulatedScan {
    pub fn into_radar(self) -> Option<PolarScan> {
        match self {
            SimulatedScan::Radar(s) => Some(s),
            SimulatedScan::Lidar(_) => None,
        }
    }

    pub fn into_lidar(self) -> Option<TimedPointCloud> {
        match self {
            SimulatedScan::Lidar(c) => Some(c),
            SimulatedScan::Radar(_) => None,
        }
    }
}

fn planar_pose(t: &RigidTransform2D) -> Pose {
    Pose::planar(t.x, t.y, t.theta)
}

/// Simulates one sweep starting at `t0`. The sensor sits at `extrinsic` on
/// the body whose trajectory is `traj`; `seed` drives the radar noise.
pub fn simulate_scan(
    world: &World,
    traj: &Trajectory,
    model: &SensorModel,
    extrinsic: &RigidTransform2D,
    t0: f64,
    seed: u64,
) -> Result<SimulatedScan> {
    model.validate()?;
    let mount = planar_pose(extrinsic);
    let a_count = model.azimuth_count;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let penetration = model.noise.penetration_prob;

    let mut points = Vec::new();
    let bins = if model.kind == SensorKind::Radar { model.range_bins() } else { 0 };
    let mut cells = vec![0u8; a_count * bins];
    let mut times = Vec::with_capacity(a_count);

    for a in 0..a_count {
        let t = t0 + a as f64 * model.sweep_period / a_count as f64;
        times.push(t);
        let sensor = traj.pose_at(t)?.compose(&mount);
        let bearing = TAU * a as f64 / a_count as f64;
        let (s, c) = bearing.sin_cos();
        let dir3 = sensor.rotation * Vector3::new(c, s, 0.0);
        let norm = dir3.x.hypot(dir3.y);
        let dir = [dir3.x / norm, dir3.y / norm];
        let origin = [sensor.translation.x, sensor.translation.y];
        let hits = world.cast(origin, dir, model.max_range);
        match model.kind {
            SensorKind::Lidar => {
                if let Some(&(range, refl)) = hits.first() {
                    points.push(TimedPoint {
                        x: range * c,
                        y: range * s,
                        z: 0.0,
                        intensity: (255.0 * refl).round().max(1.0),
                        t,
                    });
                }
            }
            SensorKind::Radar => {
                let mut record = |range: f64, value: f64| {
                    let bin = (range / model.range_resolution).floor() as usize;
                    if bin < bins {
                        let v = value.round().clamp(1.0, 255.0) as u8;
                        let cell = &mut cells[a * bins + bin];
                        *cell = (*cell).max(v);
                    }
                };
                if let Some(&(range, refl)) = hits.first() {
                    record(range, 255.0 * refl);
                    if penetration > 0.0 && hits.len() > 1 && rng.random::<f64>() < penetration {
                        record(hits[1].0, 0.6 * 255.0 * hits[1].1);
                    }
                }
            }
        }
    }

    match model.kind {
        SensorKind::Lidar => Ok(SimulatedScan::Lidar(TimedPointCloud::new(points, t0))),
        SensorKind::Radar => {
            add_radar_noise(&mut cells, a_count, bins, &model.noise, &mut rng);
            let scan = PolarScan::new(a_count, bins, cells, model.range_resolution, t0, model.sweep_period)?
                .with_azimuth_times(times)?;
            Ok(SimulatedScan::Radar(scan))
        }
    }
}

fn add_radar_noise(cells: &mut [u8], azimuths: usize, bins: usize, noise: &NoiseModel, rng: &mut ChaCha8Rng) {
    let bump = |cell: &mut u8, value: f64| {
        let v = value.round().clamp(0.0, 255.0) as u8;
        *cell = (*cell).max(v);
    };
    if noise.ring_gain > 0.0 {
        let rings: Vec<usize> = (0..RING_COUNT).map(|_| rng.random_range(bins / 10..bins)).collect();
        for a in 0..azimuths {
            for &b in &rings {
                let v = noise.ring_gain * 255.0 * rng.random_range(0.6..1.0);
                bump(&mut cells[a * bins + b], v);
            }
        }
    }
    if noise.radial_gain > 0.0 {
        for _ in 0..RADIAL_COUNT {
            let a = rng.random_range(0..azimuths);
            for b in 0..bins {
                if rng.random::<f64>() < 0.5 {
                    let v = noise.radial_gain * 255.0 * rng.random_range(0.6..1.0);
                    bump(&mut cells[a * bins + b], v);
                }
            }
        }
    }
    if noise.speckle_density > 0.0 {
        for cell in cells.iter_mut() {
            if rng.random::<f64>() < noise.speckle_density {
                let v = rng.random_range(60.0..255.0);
                bump(cell, v);
            }
        }
    }
}

/// Planar constant-speed, constant-yaw-rate body motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Motion {
    pub start: RigidTransform2D,
    /// Forward speed, m/s.
    pub velocity: f64,
    /// Yaw rate, rad/s.
    pub yaw_rate: f64,
}

impl Motion {
    pub fn pose_at(&self, t: f64) -> Pose {
        let yaw = self.start.theta + self.yaw_rate * t;
        let (dx, dy) = if self.yaw_rate.abs() < 1e-12 {
            let (s, c) = self.start.theta.sin_cos();
            (self.velocity * t * c, self.velocity * t * s)
        } else {
            let r = self.velocity / self.yaw_rate;
            (r * (yaw.sin() - self.start.theta.sin()), -r * (yaw.cos() - self.start.theta.cos()))
        };
        Pose::planar(self.start.x + dx, self.start.y + dy, yaw)
    }

    /// Body-frame IMU reading (gravity along world -z).
    pub fn imu_at(&self, t: f64, gravity: f64) -> ImuSample {
        ImuSample::new(t, [0.0, 0.0, self.yaw_rate], [0.0, self.velocity * self.yaw_rate, gravity])
    }

    pub fn trajectory(&self, times: &[f64]) -> Result<Trajectory> {
        Trajectory::new(times.iter().map(|&t| TimedPose { t, pose: self.pose_at(t) }).collect())
    }
}

/// Settings for a complete synthetic radar/LiDAR log.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDatasetConfig {
    pub seed: u64,
    pub frames: usize,
    pub extrinsic: RigidTransform2D,
    pub velocity: f64,
    pub yaw_rate: f64,
    pub noise: NoiseModel,
    pub bev: BevConfig,
    pub n_landmarks: usize,
    pub extent: f64,
    pub radar: SensorModel,
    pub lidar: SensorModel,
    /// LiDAR sweep start relative to the radar sweep start, seconds.
    pub lidar_offset: f64,
}

impl Default for SynthDatasetConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            frames: 10,
            extrinsic: RigidTransform2D::new(1.0, 0.5, 0.02),
            velocity: 2.0,
            yaw_rate: 0.05,
            noise: NoiseModel::moderate(),
            bev: BevConfig::default(),
            n_landmarks: 120,
            extent: 100.0,
            radar: SensorModel::radar(NoiseModel::moderate()),
            lidar: SensorModel::lidar(),
            lidar_offset: 0.0,
        }
    }
}

/// Time base of synthetic logs; dataset times are relative to it.
pub const SYNTH_EPOCH_NS: i64 = 1_600_000_000_000_000_000;
const LEAD_IN_NS: i64 = 500_000_000;
const POSE_STEP_NS: i64 = 50_000_000;
const IMU_STEP_NS: i64 = 5_000_000;

pub fn ns_to_seconds(ns: i64) -> f64 {
    ns as f64 / 1e9
}

fn seconds_to_ns(s: f64) -> i64 {
    (s * 1e9).round() as i64
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthFrame {
    /// Radar sweep start, ns relative to [`SYNTH_EPOCH_NS`].
    pub radar_ns: i64,
    pub lidar_ns: i64,
    pub radar: PolarScan,
    pub lidar: TimedPointCloud,
    /// Deskewed BEV images, stamped with each sweep start.
    pub radar_bev: BevImage,
    pub lidar_bev: BevImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub config: SynthDatasetConfig,
    pub world: World,
    pub motion: Motion,
    pub body_trajectory: Trajectory,
    pub radar_trajectory: Trajectory,
    pub pose_times_ns: Vec<i64>,
    pub imu: Vec<ImuSample>,
    pub imu_times_ns: Vec<i64>,
    pub frames: Vec<SynthFrame>,
}

/// Rounds a cloud to what its float32 record and time-offset files can hold.
pub fn quantize_cloud(cloud: &TimedPointCloud) -> TimedPointCloud {
    let q = |v: f64| v as f32 as f64;
    TimedPointCloud::new(
        cloud
            .points
            .iter()
            .map(|p| TimedPoint {
                x: q(p.x),
                y: q(p.y),
                z: q(p.z),
                intensity: q(p.intensity).clamp(0.0, 255.0),
                t: cloud.frame_time + q(p.t - cloud.frame_time),
            })
            .collect(),
        cloud.frame_time,
    )
}

/// Generates a full log: world, body motion through the world center,
/// per-frame radar and LiDAR sweeps, IMU samples and deskewed BEV images.
pub fn generate_dataset(cfg: &SynthDatasetConfig) -> Result<SyntheticDataset> {
    if cfg.frames == 0 {
        return Err(Error::Config("synthetic dataset needs at least one frame".into()));
    }
    cfg.bev.validate()?;
    let world = generate_world(cfg.seed, cfg.n_landmarks, cfg.extent)?;
    let radar_period_ns = seconds_to_ns(cfg.radar.sweep_period);
    let lidar_offset_ns = seconds_to_ns(cfg.lidar_offset);
    let lidar_period_ns = seconds_to_ns(cfg.lidar.sweep_period);
    let last_end_ns =
        LEAD_IN_NS + (cfg.frames as i64 - 1) * radar_period_ns + radar_period_ns.max(lidar_offset_ns + lidar_period_ns);
    let end_ns = last_end_ns + LEAD_IN_NS;
    let duration = ns_to_seconds(end_ns);

    // pass through the world center at mid-log
    let half = duration / 2.0;
    let mid_heading = 0.0f64;
    let start_heading = mid_heading - cfg.yaw_rate * half;
    let probe = Motion {
        start: RigidTransform2D::new(0.0, 0.0, start_heading),
        velocity: cfg.velocity,
        yaw_rate: cfg.yaw_rate,
    };
    let mid = probe.pose_at(half);
    let motion =
        Motion { start: RigidTransform2D::new(-mid.translation.x, -mid.translation.y, start_heading), ..probe };

    let pose_times_ns: Vec<i64> = (0..=end_ns / POSE_STEP_NS).map(|k| k * POSE_STEP_NS).collect();
    let pose_times: Vec<f64> = pose_times_ns.iter().map(|&ns| ns_to_seconds(ns)).collect();
    let body_trajectory = motion.trajectory(&pose_times)?;
    let radar_mount = Pose::planar(cfg.extrinsic.x, cfg.extrinsic.y, cfg.extrinsic.theta);
    let radar_trajectory = body_trajectory.right_multiplied(&radar_mount);

    let imu_times_ns: Vec<i64> = (0..=end_ns / IMU_STEP_NS).map(|k| k * IMU_STEP_NS).collect();
    let imu = imu_times_ns.iter().map(|&ns| motion.imu_at(ns_to_seconds(ns), 9.81)).collect();

    let radar_model = SensorModel { noise: cfg.noise, ..cfg.radar };
    let lidar_model = SensorModel { kind: SensorKind::Lidar, ..cfg.lidar };
    let frames = (0..cfg.frames)
        .map(|k| {
            let radar_ns = LEAD_IN_NS + k as i64 * radar_period_ns;
            let lidar_ns = radar_ns + lidar_offset_ns;
            let noise_seed = cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64);
            let radar = simulate_scan(
                &world,
                &body_trajectory,
                &radar_model,
                &cfg.extrinsic,
                ns_to_seconds(radar_ns),
                noise_seed,
            )?
            .into_radar()
            .expect("radar model yields a polar scan");
            let lidar = simulate_scan(
                &world,
                &body_trajectory,
                &lidar_model,
                &RigidTransform2D::default(),
                ns_to_seconds(lidar_ns),
                noise_seed,
            )?
            .into_lidar()
            .expect("lidar model yields a cloud");
            let lidar = quantize_cloud(&lidar);
            let radar_bev = deskew_scan(SweepInput::Radar(&radar), &radar_trajectory, &cfg.bev)?;
            let lidar_bev = deskew_scan(SweepInput::Lidar(&lidar), &body_trajectory, &cfg.bev)?;
            Ok(SynthFrame { radar_ns, lidar_ns, radar, lidar, radar_bev, lidar_bev })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SyntheticDataset {
        config: cfg.clone(),
        world,
        motion,
        body_trajectory,
        radar_trajectory,
        pose_times_ns,
        imu,
        imu_times_ns,
        frames,
    })
}

/// Contents of `ground_truth.json` written next to a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub schema_version: u32,
    pub seed: u64,
    /// Radar pose in the LiDAR (body) frame.
    pub extrinsic: RigidTransform2D,
    pub motion: Motion,
    pub noise: NoiseModel,
    pub epoch_ns: i64,
    pub frame_ids: Vec<String>,
    pub body_trajectory_file: String,
    pub world: World,
}

pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const BEV_RADAR_DIR: &str = "bev/radar";
pub const BEV_LIDAR_DIR: &str = "bev/lidar";

impl SyntheticDataset {
    pub fn frame_id(frame: &SynthFrame) -> String {
        (SYNTH_EPOCH_NS + frame.radar_ns).to_string()
    }

    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            schema_version: 1,
            seed: self.config.seed,
            extrinsic: self.config.extrinsic,
            motion: self.motion,
            noise: self.config.noise,
            epoch_ns: SYNTH_EPOCH_NS,
            frame_ids: self.frames.iter().map(Self::frame_id).collect(),
            body_trajectory_file: dataset_io::LIDAR_POSES.to_string(),
            world: self.world.clone(),
        }
    }

    /// Writes the log in the layout [`dataset_io::Dataset`] reads, plus
    /// deskewed BEV images, an identity-translated copy of the radar BEV
    /// images and `ground_truth.json`.
    pub fn write(&self, root: &Path) -> Result<()> {
        let abs = |ns: &[i64]| ns.iter().map(|&n| SYNTH_EPOCH_NS + n).collect::<Vec<_>>();
        let meta = DatasetMeta {
            schema_version: 1,
            radar: RadarMeta {
                range_resolution: self.config.radar.range_resolution,
                sweep_period: self.config.radar.sweep_period,
                azimuth_zero: 0.0,
                epoch_ns: SYNTH_EPOCH_NS,
            },
            lidar: LidarMeta { sweep_period: self.config.lidar.sweep_period, epoch_ns: SYNTH_EPOCH_NS },
            bev: Some(BevMeta { size: self.config.bev.size, meters_per_pixel: self.config.bev.meters_per_pixel }),
        };
        dataset_io::write_meta(root, &meta)?;
        let pose_ns = abs(&self.pose_times_ns);
        dataset_io::write_trajectory(&root.join(dataset_io::LIDAR_POSES), &pose_ns, &self.body_trajectory)?;
        dataset_io::write_trajectory(&root.join(dataset_io::RADAR_POSES), &pose_ns, &self.radar_trajectory)?;
        dataset_io::write_imu(&root.join(dataset_io::IMU_FILE), &abs(&self.imu_times_ns), &self.imu)?;
        for frame in &self.frames {
            let id = Self::frame_id(frame);
            dataset_io::write_polar_radar(
                &root.join(dataset_io::RADAR_DIR),
                SYNTH_EPOCH_NS + frame.radar_ns,
                &frame.radar,
            )?;
            dataset_io::write_lidar_bin(
                &root.join(dataset_io::LIDAR_DIR),
                SYNTH_EPOCH_NS + frame.lidar_ns,
                &frame.lidar,
            )?;
            dataset_io::write_bev_png(&root.join(BEV_RADAR_DIR).join(format!("{id}.png")), &frame.radar_bev)?;
            dataset_io::write_bev_png(&root.join(BEV_LIDAR_DIR).join(format!("{id}.png")), &frame.lidar_bev)?;
            dataset_io::write_bev_png(
                &root.join(dataset_io::TRANSLATED_DIR).join(format!("{id}.png")),
                &frame.radar_bev,
            )?;
        }
        let text = serde_json::to_string_pretty(&self.ground_truth()).map_err(|e| Error::Input(e.to_string()))?;
        let path = root.join(GROUND_TRUTH_FILE);
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}
