//! Log readers and writers, and radar/LiDAR frame pairing.
//!
//! Dataset layout:
//!
//! ```text
//! meta.json                 sensor metadata (optional, defaults otherwise)
//! radar/polar/<ns>.png      8-bit polar scans, rows = azimuths
//! radar/polar/<ns>.times.csv  optional per-azimuth times (seconds, one per line)
//! lidar/<ns>.bin            float32 LE records (x, y, z, intensity)
//! lidar/<ns>.times.bin      optional float32 per-point offsets from the sweep start
//! poses_radar.csv, poses_lidar.csv   t_ns,r11,r12,r13,tx,r21,r22,r23,ty,r31,r32,r33,tz
//! imu.csv                   t_ns,gx,gy,gz,ax,ay,az
//! translated/<frame_id>.png externally translated radar BEV images
//! ```
//!
//! Times inside a dataset are seconds relative to its earliest timestamp.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scan_geometry::{BevImage, PolarScan, ScanTiming, TimedPoint, TimedPointCloud};
use crate::trajectory::{orthonormality_error, orthonormalize, ImuSample, Pose, TimedPose, Trajectory};

pub const META_FILE: &str = "meta.json";
pub const RADAR_DIR: &str = "radar/polar";
pub const LIDAR_DIR: &str = "lidar";
pub const RADAR_POSES: &str = "poses_radar.csv";
pub const LIDAR_POSES: &str = "poses_lidar.csv";
pub const IMU_FILE: &str = "imu.csv";
pub const TRANSLATED_DIR: &str = "translated";

const ORTHO_EXACT: f64 = 1e-9;
const ORTHO_REPAIRABLE: f64 = 1e-3;

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn format_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), msg: msg.into() }
}

/// Decodes an 8-bit single-channel PNG into `(width, height, pixels)`.
pub fn read_gray_png(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = read(path)?;
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| format_err(path, e.to_string()))?;
    match img {
        image::DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            Ok((w as usize, h as usize, buf.into_raw()))
        }
        other => Err(format_err(path, format!("expected 8-bit grayscale, found {:?}", other.color()))),
    }
}

pub fn write_gray_png(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    image::save_buffer_with_format(
        path,
        pixels,
        width as u32,
        height as u32,
        image::ExtendedColorType::L8,
        image::ImageFormat::Png,
    )
    .map_err(|e| format_err(path, e.to_string()))
}

pub fn write_bev_png(path: &Path, img: &BevImage) -> Result<()> {
    write_gray_png(path, img.size, img.size, &img.pixels)
}

/// Nanosecond timestamp encoded in a filename stem.
pub fn stem_ns(path: &Path) -> Result<i64> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let stem = name.split('.').next().unwrap_or_default();
    if stem.is_empty() || !stem.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Naming { path: path.to_path_buf() });
    }
    stem.parse::<i64>().map_err(|_| Error::Naming { path: path.to_path_buf() })
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let stem = name.split('.').next().unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn ns_relative(ns: i64, epoch_ns: i64) -> f64 {
    (ns - epoch_ns) as f64 / 1e9
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarMeta {
    pub range_resolution: f64,
    pub sweep_period: f64,
    #[serde(default)]
    pub azimuth_zero: f64,
    #[serde(default)]
    pub epoch_ns: i64,
}

impl Default for RadarMeta {
    /// Navtech CIR204-H as used in MulRan: 4 Hz, 4.32 cm bins.
    fn default() -> Self {
        Self { range_resolution: 0.0432, sweep_period: 0.25, azimuth_zero: 0.0, epoch_ns: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarMeta {
    pub sweep_period: f64,
    #[serde(default)]
    pub epoch_ns: i64,
}

impl Default for LidarMeta {
    fn default() -> Self {
        Self { sweep_period: 0.1, epoch_ns: 0 }
    }
}

pub const RADAR_SIDECAR: &str = ".times.csv";
pub const LIDAR_SIDECAR: &str = ".times.bin";

pub fn load_polar_radar(path: &Path, meta: &RadarMeta) -> Result<PolarScan> {
    let ns = stem_ns(path)?;
    let (range_bins, azimuths, intensities) = read_gray_png(path)?;
    let sweep_start = ns_relative(ns, meta.epoch_ns);
    let mut scan =
        PolarScan::new(azimuths, range_bins, intensities, meta.range_resolution, sweep_start, meta.sweep_period)
            .map_err(|e| format_err(path, e.to_string()))?;
    scan.azimuth_zero = meta.azimuth_zero;
    let side = sidecar(path, RADAR_SIDECAR);
    let times = if side.is_file() {
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let mut times = Vec::with_capacity(azimuths);
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| Error::Parse {
                path: side.clone(),
                line: i + 1,
                column: 1,
                msg: format!("not a number: {line:?}"),
            })?;
            times.push(v);
        }
        if times.len() != azimuths {
            return Err(Error::Sidecar { path: side, expected: azimuths, found: times.len() });
        }
        times
    } else {
        (0..azimuths).map(|a| sweep_start + meta.sweep_period * a as f64 / azimuths as f64).collect()
    };
    scan.with_azimuth_times(times).map_err(|e| format_err(&side, e.to_string()))
}

pub fn write_polar_radar(dir: &Path, ns: i64, scan: &PolarScan) -> Result<PathBuf> {
    let path = dir.join(format!("{ns}.png"));
    write_gray_png(&path, scan.range_bins, scan.azimuths, &scan.intensities)?;
    if let Some(times) = &scan.azimuth_times {
        let side = sidecar(&path, RADAR_SIDECAR);
        let mut text = String::with_capacity(times.len() * 20);
        for t in times {
            text.push_str(&format!("{t}\n"));
        }
        fs::write(&side, text).map_err(|e| Error::io(&side, e))?;
    }
    Ok(path)
}

fn f32_at(bytes: &[u8], offset: usize) -> f32 {
    f32::from_le_bytes([bytes[offset], bytes[offset + 1], bytes[offset + 2], bytes[offset + 3]])
}

pub fn load_lidar_bin(path: &Path, meta: &LidarMeta) -> Result<TimedPointCloud> {
    let ns = stem_ns(path)?;
    let bytes = read(path)?;
    let whole = bytes.len() - bytes.len() % 16;
    if whole != bytes.len() {
        return Err(Error::Truncated { path: path.to_path_buf(), offset: whole });
    }
    let sweep_start = ns_relative(ns, meta.epoch_ns);
    let mut points = Vec::with_capacity(whole / 16);
    for offset in (0..whole).step_by(16) {
        let v = [0, 4, 8, 12].map(|k| f32_at(&bytes, offset + k) as f64);
        if v.iter().any(|x| !x.is_finite()) {
            return Err(format_err(path, format!("non-finite value in record at byte offset {offset}")));
        }
        points.push(TimedPoint { x: v[0], y: v[1], z: v[2], intensity: v[3].clamp(0.0, 255.0), t: sweep_start });
    }
    let side = sidecar(path, LIDAR_SIDECAR);
    if side.is_file() {
        let raw = read(&side)?;
        if raw.len() % 4 != 0 {
            return Err(Error::Truncated { path: side, offset: raw.len() - raw.len() % 4 });
        }
        if raw.len() / 4 != points.len() {
            return Err(Error::Sidecar { path: side, expected: points.len(), found: raw.len() / 4 });
        }
        for (i, p) in points.iter_mut().enumerate() {
            let dt = f32_at(&raw, 4 * i) as f64;
            if !dt.is_finite() {
                return Err(format_err(&side, format!("non-finite time at byte offset {}", 4 * i)));
            }
            p.t = sweep_start + dt;
        }
    } else {
        let timing = ScanTiming::linear(sweep_start, meta.sweep_period);
        for p in points.iter_mut() {
            p.t = timing.time_at_bearing(p.y.atan2(p.x));
        }
    }
    Ok(TimedPointCloud::new(points, sweep_start))
}

/// Writes float32 records and a per-point time-offset sidecar.
pub fn write_lidar_bin(dir: &Path, ns: i64, cloud: &TimedPointCloud) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!("{ns}.bin"));
    let mut records = Vec::with_capacity(cloud.len() * 16);
    let mut times = Vec::with_capacity(cloud.len() * 4);
    for p in &cloud.points {
        for v in [p.x, p.y, p.z, p.intensity] {
            records.extend_from_slice(&(v as f32).to_le_bytes());
        }
        times.extend_from_slice(&((p.t - cloud.frame_time) as f32).to_le_bytes());
    }
    fs::write(&path, records).map_err(|e| Error::io(&path, e))?;
    let side = sidecar(&path, LIDAR_SIDECAR);
    fs::write(&side, times).map_err(|e| Error::io(&side, e))?;
    Ok(path)
}

/// Splits a CSV data line into `expected` fields, reporting 1-based columns.
fn parse_fields(path: &Path, line_no: usize, line: &str, expected: usize) -> Result<(i64, Vec<f64>)> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != expected {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            column: fields.len().min(expected) + 1,
            msg: format!("expected {expected} fields, found {}", fields.len()),
        });
    }
    let t_ns = fields[0].parse::<i64>().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line: line_no,
        column: 1,
        msg: format!("timestamp {:?} is not an integer nanosecond count", fields[0]),
    })?;
    let mut values = Vec::with_capacity(expected - 1);
    for (k, f) in fields[1..].iter().enumerate() {
        let v = f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            column: k + 2,
            msg: format!("{f:?} is not a finite number"),
        })?;
        values.push(v);
    }
    Ok((t_ns, values))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = read(path)?;
    String::from_utf8(bytes)
        .map_err(|e| format_err(path, format!("not UTF-8 text (byte {})", e.utf8_error().valid_up_to())))
}

/// Reads `t_ns,r11,r12,r13,tx,r21,r22,r23,ty,r31,r32,r33,tz` lines.
pub fn load_trajectory(path: &Path, epoch_ns: i64) -> Result<Trajectory> {
    let text = read_text(path)?;
    let mut samples = Vec::new();
    let mut last_ns: Option<i64> = None;
    for (line_no, line) in data_lines(&text) {
        let (t_ns, v) = parse_fields(path, line_no, line, 13)?;
        if last_ns.is_some_and(|prev| t_ns <= prev) {
            return Err(Error::Order { path: path.to_path_buf(), line: line_no });
        }
        last_ns = Some(t_ns);
        let rotation = Matrix3::new(v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]);
        let translation = Vector3::new(v[3], v[7], v[11]);
        let deviation = orthonormality_error(&rotation);
        let geometry = || Error::Geometry { path: path.to_path_buf(), line: line_no, deviation };
        if deviation > ORTHO_REPAIRABLE || rotation.determinant() <= 0.0 {
            return Err(geometry());
        }
        let rotation = if deviation > ORTHO_EXACT { orthonormalize(&rotation) } else { rotation };
        samples.push(TimedPose { t: ns_relative(t_ns, epoch_ns), pose: Pose::new(rotation, translation) });
    }
    if samples.is_empty() {
        return Err(format_err(path, "trajectory file has no poses"));
    }
    Trajectory::new(samples).map_err(|e| format_err(path, e.to_string()))
}

pub fn write_trajectory(path: &Path, times_ns: &[i64], traj: &Trajectory) -> Result<()> {
    if times_ns.len() != traj.len() {
        return Err(Error::Input("timestamp count differs from trajectory length".into()));
    }
    let mut out = String::new();
    for (ns, s) in times_ns.iter().zip(traj.samples()) {
        let (r, t) = (&s.pose.rotation, &s.pose.translation);
        out.push_str(&format!(
            "{ns},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            t.x,
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            t.y,
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t.z
        ));
    }
    write_text(path, &out)
}

/// Reads `t_ns,gx,gy,gz,ax,ay,az` lines.
pub fn load_imu(path: &Path, epoch_ns: i64) -> Result<Vec<ImuSample>> {
    let text = read_text(path)?;
    let mut samples = Vec::new();
    let mut last_ns: Option<i64> = None;
    for (line_no, line) in data_lines(&text) {
        let (t_ns, v) = parse_fields(path, line_no, line, 7)?;
        if last_ns.is_some_and(|prev| t_ns <= prev) {
            return Err(Error::Order { path: path.to_path_buf(), line: line_no });
        }
        last_ns = Some(t_ns);
        samples.push(ImuSample::new(ns_relative(t_ns, epoch_ns), [v[0], v[1], v[2]], [v[3], v[4], v[5]]));
    }
    Ok(samples)
}

pub fn write_imu(path: &Path, times_ns: &[i64], imu: &[ImuSample]) -> Result<()> {
    if times_ns.len() != imu.len() {
        return Err(Error::Input("timestamp count differs from IMU sample count".into()));
    }
    let mut out = String::new();
    for (ns, s) in times_ns.iter().zip(imu) {
        out.push_str(&format!(
            "{ns},{},{},{},{},{},{}\n",
            s.gyro.x, s.gyro.y, s.gyro.z, s.accel.x, s.accel.y, s.accel.z
        ));
    }
    write_text(path, &out)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Greedy nearest-first matching of two sorted time lists.
///
/// Candidate pairs within `t_max` are accepted in order of increasing `|dt|`
/// (ties: earlier radar, then earlier LiDAR) while both frames are unused.
/// Output is sorted by radar index.
pub fn pair_frames(radar_times: &[f64], lidar_times: &[f64], t_max: f64) -> Vec<(usize, usize)> {
    let mut candidates = Vec::new();
    let mut lo = 0;
    for (i, &tr) in radar_times.iter().enumerate() {
        while lo < lidar_times.len() && lidar_times[lo] < tr - t_max {
            lo += 1;
        }
        for (j, &tl) in lidar_times.iter().enumerate().skip(lo) {
            if tl > tr + t_max {
                break;
            }
            let dt = (tl - tr).abs();
            if dt <= t_max {
                candidates.push((dt, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut radar_used = vec![false; radar_times.len()];
    let mut lidar_used = vec![false; lidar_times.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if !radar_used[i] && !lidar_used[j] {
            radar_used[i] = true;
            lidar_used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BevMeta {
    pub size: usize,
    pub meters_per_pixel: f64,
}

/// Contents of `meta.json`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub schema_version: u32,
    pub radar: RadarMeta,
    pub lidar: LidarMeta,
    #[serde(default)]
    pub bev: Option<BevMeta>,
}

impl Default for DatasetMeta {
    fn default() -> Self {
        Self { schema_version: 1, radar: RadarMeta::default(), lidar: LidarMeta::default(), bev: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameFile {
    pub ns: i64,
    pub path: PathBuf,
}

impl FrameFile {
    pub fn id(&self) -> String {
        self.ns.to_string()
    }
}

/// An opened dataset directory: indexed frame files and metadata with a
/// common epoch.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub meta: DatasetMeta,
    pub epoch_ns: i64,
    pub radar_frames: Vec<FrameFile>,
    pub lidar_frames: Vec<FrameFile>,
}

/// Timestamped files with extension `ext` in `dir`, sorted by time. Sidecars are skipped.
pub fn list_frames(dir: &Path, ext: &str) -> Result<Vec<FrameFile>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut frames = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        // sidecars are "<stem>.times.<ext>"
        if path.extension().and_then(|e| e.to_str()) != Some(ext) || name.matches('.').count() != 1 {
            continue;
        }
        frames.push(FrameFile { ns: stem_ns(&path)?, path });
    }
    frames.sort_by_key(|f| f.ns);
    Ok(frames)
}

/// Timestamp of the first data line of a CSV log, if the file exists.
pub fn first_timestamp(path: &Path) -> Result<Option<i64>> {
    if !path.is_file() {
        return Ok(None);
    }
    let text = read_text(path)?;
    let Some((line_no, line)) = data_lines(&text).next() else {
        return Ok(None);
    };
    let field = line.split(',').next().unwrap_or_default().trim();
    field.parse::<i64>().map(Some).map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line: line_no,
        column: 1,
        msg: format!("timestamp {field:?} is not an integer nanosecond count"),
    })
}

impl Dataset {
    pub fn open(root: &Path) -> Result<Self> {
        if !root.is_dir() {
            return Err(format_err(root, "dataset directory does not exist"));
        }
        let meta_path = root.join(META_FILE);
        let meta = if meta_path.is_file() {
            serde_json::from_str::<DatasetMeta>(&read_text(&meta_path)?)
                .map_err(|e| format_err(&meta_path, e.to_string()))?
        } else {
            DatasetMeta::default()
        };
        let radar_frames = list_frames(&root.join(RADAR_DIR), "png")?;
        let lidar_frames = list_frames(&root.join(LIDAR_DIR), "bin")?;
        let mut epoch: Option<i64> = None;
        let mut consider = |ns: Option<i64>| {
            if let Some(ns) = ns {
                epoch = Some(epoch.map_or(ns, |e: i64| e.min(ns)));
            }
        };
        consider(radar_frames.first().map(|f| f.ns));
        consider(lidar_frames.first().map(|f| f.ns));
        for name in [RADAR_POSES, LIDAR_POSES, IMU_FILE] {
            consider(first_timestamp(&root.join(name))?);
        }
        let epoch_ns = epoch.unwrap_or(0);
        let mut meta = meta;
        meta.radar.epoch_ns = epoch_ns;
        meta.lidar.epoch_ns = epoch_ns;
        Ok(Self { root: root.to_path_buf(), meta, epoch_ns, radar_frames, lidar_frames })
    }

    pub fn time_of(&self, frame: &FrameFile) -> f64 {
        ns_relative(frame.ns, self.epoch_ns)
    }

    pub fn load_radar(&self, frame: &FrameFile) -> Result<PolarScan> {
        load_polar_radar(&frame.path, &self.meta.radar)
    }

    pub fn load_lidar(&self, frame: &FrameFile) -> Result<TimedPointCloud> {
        load_lidar_bin(&frame.path, &self.meta.lidar)
    }

    fn optional_trajectory(&self, name: &str) -> Result<Option<Trajectory>> {
        let path = self.root.join(name);
        if path.is_file() {
            load_trajectory(&path, self.epoch_ns).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn radar_trajectory(&self) -> Result<Option<Trajectory>> {
        self.optional_trajectory(RADAR_POSES)
    }

    pub fn lidar_trajectory(&self) -> Result<Option<Trajectory>> {
        self.optional_trajectory(LIDAR_POSES)
    }

    pub fn imu(&self) -> Result<Option<Vec<ImuSample>>> {
        let path = self.root.join(IMU_FILE);
        if path.is_file() {
            load_imu(&path, self.epoch_ns).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn translated_dir(&self) -> PathBuf {
        self.root.join(TRANSLATED_DIR)
    }

    /// Radar/LiDAR frame pairs within `t_max` seconds.
    pub fn pairs(&self, t_max: f64) -> Vec<(&FrameFile, &FrameFile)> {
        let rt: Vec<f64> = self.radar_frames.iter().map(|f| self.time_of(f)).collect();
        let lt: Vec<f64> = self.lidar_frames.iter().map(|f| self.time_of(f)).collect();
        pair_frames(&rt, &lt, t_max).into_iter().map(|(i, j)| (&self.radar_frames[i], &self.lidar_frames[j])).collect()
    }
}

pub fn write_meta(root: &Path, meta: &DatasetMeta) -> Result<()> {
    let text = serde_json::to_string_pretty(meta).map_err(|e| Error::Input(e.to_string()))?;
    write_text(&root.join(META_FILE), &(text + "\n"))
}
