//! Radar/LiDAR extrinsic calibration by registering bird's-eye-view images.
//!
//! Polar radar scans and LiDAR sweeps are motion-compensated against a pose
//! trajectory, rasterized into BEV images, optionally translated into a
//! LiDAR-like appearance, and registered with a 3-DOF rigid transform.

pub mod dataset_io;
pub mod deskew;
pub mod error;
pub mod metrics;
pub mod register;
pub mod scan_geometry;
pub mod synth;
pub mod trajectory;
pub mod translate;

pub use error::{Error, ErrorKind, Result};
pub use register::{Method, RegistrationResult, RigidTransform2D};
pub use scan_geometry::{BevConfig, BevImage, PolarScan, TimedPoint, TimedPointCloud};
pub use trajectory::{Pose, Trajectory};
