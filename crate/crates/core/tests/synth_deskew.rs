use bevcalib::deskew::{deskew_points, deskew_scan, SweepInput};
use bevcalib::scan_geometry::{polar_to_cartesian_forward, rasterize_bev};
use bevcalib::synth::{generate_dataset, generate_world, simulate_scan, NoiseModel, SensorModel, SynthDatasetConfig};
use bevcalib::{BevConfig, BevImage, Error, Pose, RigidTransform2D, TimedPoint, TimedPointCloud, Trajectory};

fn static_traj() -> Trajectory {
    Trajectory::from_poses(&[-1.0, 0.0, 1.0, 2.0, 3.0], &[Pose::identity(); 5]).unwrap()
}

fn dilated_hit(img: &BevImage, row: usize, col: usize) -> bool {
    let n = img.size as isize;
    (-1..=1).any(|dr: isize| {
        (-1..=1).any(|dc: isize| {
            let (r, c) = (row as isize + dr, col as isize + dc);
            r >= 0 && c >= 0 && r < n && c < n && img.get(r as usize, c as usize) > 0
        })
    })
}

#[test]
fn radar_and_lidar_see_the_same_world() {
    let world = generate_world(5, 80, 60.0).unwrap();
    let cfg = BevConfig::new(300, 0.5).unwrap();
    let radar = SensorModel { azimuth_count: 1024, range_resolution: 0.05, ..SensorModel::radar(NoiseModel::none()) };
    let lidar = SensorModel::lidar();
    let origin = RigidTransform2D::default();
    let scan = simulate_scan(&world, &static_traj(), &radar, &origin, 0.0, 1).unwrap().into_radar().unwrap();
    let cloud = simulate_scan(&world, &static_traj(), &lidar, &origin, 0.0, 1).unwrap().into_lidar().unwrap();
    let r = polar_to_cartesian_forward(&scan, &cfg).unwrap();
    let l = rasterize_bev(&cloud, &cfg).unwrap();
    assert!(l.nonzero_count() > 100);
    for row in 0..cfg.size {
        for col in 0..cfg.size {
            if r.get(row, col) > 0 {
                assert!(dilated_hit(&l, row, col), "radar-only pixel ({row}, {col})");
            }
            if l.get(row, col) > 0 {
                assert!(dilated_hit(&r, row, col), "lidar-only pixel ({row}, {col})");
            }
        }
    }
}

#[test]
fn generation_is_deterministic() {
    let cfg = SynthDatasetConfig { seed: 13, frames: 2, ..SynthDatasetConfig::default() };
    assert_eq!(generate_dataset(&cfg).unwrap(), generate_dataset(&cfg).unwrap());
    let other = SynthDatasetConfig { seed: 14, ..cfg.clone() };
    assert_ne!(generate_dataset(&cfg).unwrap().frames, generate_dataset(&other).unwrap().frames);
}

#[test]
fn frames_are_paired_in_time() {
    let cfg = SynthDatasetConfig { seed: 3, frames: 4, lidar_offset: 0.02, ..SynthDatasetConfig::default() };
    let data = generate_dataset(&cfg).unwrap();
    for f in &data.frames {
        assert_eq!(f.lidar_ns - f.radar_ns, 20_000_000);
        assert_eq!(f.radar_bev.size, cfg.bev.size);
    }
}

fn moving_traj(vx: f64) -> Trajectory {
    let times: Vec<f64> = (0..10).map(|k| -0.3 + 0.1 * k as f64).collect();
    let poses: Vec<Pose> = times.iter().map(|&t| Pose::from_translation(vx * t, 0.0, 0.0)).collect();
    Trajectory::from_poses(&times, &poses).unwrap()
}

#[test]
fn wall_seen_while_moving_is_straightened() {
    let vx = 5.0;
    let period = 0.1;
    let mut points = Vec::new();
    for k in 0..360 {
        let t = period * k as f64 / 360.0;
        let bearing = std::f64::consts::TAU * k as f64 / 360.0;
        let (s, c) = bearing.sin_cos();
        // wall at world x = 20 seen from (vx * t, 0)
        if c > 0.3 {
            let range = (20.0 - vx * t) / c;
            points.push(TimedPoint { x: range * c, y: range * s, z: 0.0, intensity: 200.0, t });
        }
    }
    let cloud = TimedPointCloud::new(points, 0.0);
    let raw_spread = cloud.points.iter().map(|p| (p.x - 20.0).abs()).fold(0.0, f64::max);
    assert!(raw_spread > 0.4);
    let fixed = deskew_points(&cloud, &moving_traj(vx), 0.0).unwrap();
    for p in &fixed.points {
        assert!((p.x - 20.0).abs() < 1e-9, "{p:?}");
    }
}

#[test]
fn sweep_outside_trajectory_is_reported() {
    let cloud = TimedPointCloud::new(vec![TimedPoint { x: 1.0, y: 0.0, z: 0.0, intensity: 1.0, t: 5.0 }], 5.0);
    let err = deskew_scan(SweepInput::Lidar(&cloud), &moving_traj(1.0), &BevConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Domain { .. } | Error::PointTimes { .. }), "{err}");
}
