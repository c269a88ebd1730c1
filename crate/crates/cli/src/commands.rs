use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use bevcalib::dataset_io::{self, Dataset, FrameFile, LidarMeta, RadarMeta};
use bevcalib::deskew::{deskew_points, EDGE_JITTER};
use bevcalib::metrics::{calibration_stats, psnr, ssim};
use bevcalib::register::{
    register_mi, register_phase, transformed_mi, MiOptConfig, RegistrationResult, ThetaSweepConfig,
};
use bevcalib::scan_geometry::{
    cartesian_image_to_points, polar_to_cartesian_backward, polar_to_cartesian_forward, rasterize_bev,
};
use bevcalib::synth::{generate_dataset, NoiseModel, SynthDatasetConfig};
use bevcalib::trajectory::{imu_densify, ImuDensifyConfig};
use bevcalib::translate::{translate_image, TranslatorSpec};
use bevcalib::{deskew, BevConfig, BevImage, Error, RigidTransform2D};

use crate::{
    CalibArgs, CliError, ConvertArgs, DeskewArgs, EvalArgs, MethodArg, Mode, RadarArgs, RegisterArgs, RegistrationArgs,
    Sensor, SynthArgs, TranslatorArgs, TranslatorKind, SCHEMA_VERSION,
};

type CmdResult = Result<(), CliError>;

pub fn parse_extrinsic(s: &str) -> Result<RigidTransform2D, String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("{v:?} is not a number")))
        .collect::<Result<_, _>>()?;
    match values[..] {
        [x, y, theta] if values.iter().all(|v| v.is_finite()) => Ok(RigidTransform2D::new(x, y, theta)),
        _ => Err(format!("expected `x,y,theta` with three finite numbers, got {s:?}")),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Error> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Input(e.to_string()))?;
    write_file(path, text + "\n")
}

fn check_positive(name: &str, v: f64) -> Result<(), Error> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

fn radar_meta(args: &RadarArgs, epoch_ns: i64) -> Result<RadarMeta, Error> {
    check_positive("--range-resolution", args.range_resolution)?;
    check_positive("--radar-period", args.radar_period)?;
    Ok(RadarMeta {
        range_resolution: args.range_resolution,
        sweep_period: args.radar_period,
        azimuth_zero: 0.0,
        epoch_ns,
    })
}

fn missing(path: &Path) -> Error {
    Error::Format { path: path.to_path_buf(), msg: "no such file or directory".into() }
}

#[derive(Serialize)]
struct ConvertFrame {
    id: String,
    polar_nonzero: usize,
    forward_nonzero: usize,
    backward_nonzero: usize,
}

#[derive(Serialize)]
struct ConvertSummary {
    schema_version: u32,
    mode: &'static str,
    size: usize,
    meters_per_pixel: f64,
    half_range_m: f64,
    frames: Vec<ConvertFrame>,
}

pub fn convert(args: ConvertArgs) -> CmdResult {
    let cfg = BevConfig::new(args.grid.size, args.grid.mpp)?;
    let files = if args.input.is_dir() {
        dataset_io::list_frames(&args.input, "png")?
    } else if args.input.is_file() {
        vec![FrameFile { ns: dataset_io::stem_ns(&args.input)?, path: args.input.clone() }]
    } else {
        return Err(missing(&args.input).into());
    };
    if files.is_empty() {
        return Err(CliError::Empty(format!("no polar scans in {}", args.input.display())));
    }
    let meta = radar_meta(&args.radar, files[0].ns)?;
    let mut frames = Vec::with_capacity(files.len());
    for file in &files {
        let scan = dataset_io::load_polar_radar(&file.path, &meta)?;
        let forward = polar_to_cartesian_forward(&scan, &cfg)?;
        let backward = polar_to_cartesian_backward(&scan, &cfg)?;
        let img = if args.mode == Mode::Forward { &forward } else { &backward };
        dataset_io::write_bev_png(&args.out.join(format!("{}.png", file.id())), img)?;
        frames.push(ConvertFrame {
            id: file.id(),
            polar_nonzero: scan.nonzero_count(),
            forward_nonzero: forward.nonzero_count(),
            backward_nonzero: backward.nonzero_count(),
        });
    }
    let summary = ConvertSummary {
        schema_version: SCHEMA_VERSION,
        mode: if args.mode == Mode::Forward { "forward" } else { "backward" },
        size: cfg.size,
        meters_per_pixel: cfg.meters_per_pixel,
        half_range_m: cfg.half_range(),
        frames,
    };
    write_json(&args.out.join("summary.json"), &summary)?;
    println!(
        "converted {} scan(s) to {}x{} at {} m/px (half range {} m)",
        summary.frames.len(),
        cfg.size,
        cfg.size,
        cfg.meters_per_pixel,
        cfg.half_range()
    );
    Ok(())
}

#[derive(Serialize)]
struct DeskewSummary {
    schema_version: u32,
    sensor: &'static str,
    point_count: usize,
    reference_time_s: f64,
    sweep_span_s: f64,
    imu_densified: bool,
    mean_displacement_m: f64,
    max_displacement_m: f64,
    bev_nonzero: usize,
}

pub fn deskew(args: DeskewArgs) -> CmdResult {
    let cfg = BevConfig::new(args.grid.size, args.grid.mpp)?;
    check_positive("--lidar-period", args.lidar_period)?;
    for path in [Some(&args.scan), Some(&args.traj), args.imu.as_ref()].into_iter().flatten() {
        if !path.is_file() {
            return Err(missing(path).into());
        }
    }
    let scan_ns = dataset_io::stem_ns(&args.scan)?;
    let mut epoch_ns = scan_ns;
    for path in [Some(&args.traj), args.imu.as_ref()].into_iter().flatten() {
        if let Some(ns) = dataset_io::first_timestamp(path)? {
            epoch_ns = epoch_ns.min(ns);
        }
    }
    let mut traj = dataset_io::load_trajectory(&args.traj, epoch_ns)?;
    if let Some(imu_path) = &args.imu {
        let imu = dataset_io::load_imu(imu_path, epoch_ns)?;
        traj = imu_densify(&traj, &imu, &ImuDensifyConfig::default())?;
    }
    let (cloud, t_ref) = match args.sensor {
        Sensor::Radar => {
            let scan = dataset_io::load_polar_radar(&args.scan, &radar_meta(&args.radar, epoch_ns)?)?;
            let cart = polar_to_cartesian_forward(&scan, &cfg)?;
            (cartesian_image_to_points(&cart, &scan.timing(), 0), scan.sweep_start)
        }
        Sensor::Lidar => {
            let cloud =
                dataset_io::load_lidar_bin(&args.scan, &LidarMeta { sweep_period: args.lidar_period, epoch_ns })?;
            let t = cloud.frame_time;
            (cloud, t)
        }
    };
    let deskewed = deskew_points(&cloud, &traj, t_ref)?;
    let mut img = rasterize_bev(&deskewed, &cfg)?;
    img.frame_time = t_ref;
    dataset_io::write_bev_png(&args.out, &img)?;

    let shifts: Vec<f64> = cloud
        .points
        .iter()
        .zip(&deskewed.points)
        .map(|(a, b)| ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt())
        .collect();
    let (t_min, t_max) =
        cloud.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.t), hi.max(p.t)));
    let summary = DeskewSummary {
        schema_version: SCHEMA_VERSION,
        sensor: if args.sensor == Sensor::Radar { "radar" } else { "lidar" },
        point_count: cloud.len(),
        reference_time_s: t_ref,
        sweep_span_s: if cloud.is_empty() { 0.0 } else { t_max - t_min },
        imu_densified: args.imu.is_some(),
        mean_displacement_m: if shifts.is_empty() { 0.0 } else { shifts.iter().sum::<f64>() / shifts.len() as f64 },
        max_displacement_m: shifts.iter().copied().fold(0.0, f64::max),
        bev_nonzero: img.nonzero_count(),
    };
    write_json(&args.out.with_extension("json"), &summary)?;
    println!(
        "deskewed {} points, max displacement {:.4} m (edge tolerance {} s)",
        summary.point_count, summary.max_displacement_m, EDGE_JITTER
    );
    Ok(())
}

fn translator_spec(args: &TranslatorArgs, default_dir: Option<&Path>) -> Result<TranslatorSpec, Error> {
    let spec = match args.translator {
        TranslatorKind::Identity => TranslatorSpec::Identity,
        TranslatorKind::Median => TranslatorSpec::Median { kernel_size: args.kernel_size.unwrap_or(3) },
        TranslatorKind::Gaussian => {
            TranslatorSpec::Gaussian { kernel_size: args.kernel_size.unwrap_or(5), sigma: args.sigma }
        }
        TranslatorKind::External => {
            let directory = args
                .translated_dir
                .clone()
                .or_else(|| default_dir.map(Path::to_path_buf))
                .ok_or_else(|| Error::Config("--translator external needs --translated-dir".into()))?;
            TranslatorSpec::External { directory }
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn translator_name(args: &TranslatorArgs) -> &'static str {
    match args.translator {
        TranslatorKind::Identity => "identity",
        TranslatorKind::Median => "median",
        TranslatorKind::Gaussian => "gaussian",
        TranslatorKind::External => "external",
    }
}

fn sweep_config(args: &RegistrationArgs) -> ThetaSweepConfig {
    ThetaSweepConfig {
        theta_max: args.theta_max.to_radians(),
        theta_step: args.theta_step.to_radians(),
        ..ThetaSweepConfig::default()
    }
}

fn mi_config(args: &RegistrationArgs) -> MiOptConfig {
    MiOptConfig { bins: args.mi_bins, max_evaluations: args.mi_max_evals, ..MiOptConfig::default() }
}

struct Registered {
    result: RegistrationResult,
    /// Phase-correlation initialization of a chained run, with its MI.
    init: Option<(RegistrationResult, f64)>,
}

fn register_images(lidar: &BevImage, radar: &BevImage, args: &RegistrationArgs) -> Result<Registered, Error> {
    match args.method {
        MethodArg::Phase => Ok(Registered { result: register_phase(lidar, radar, &sweep_config(args))?, init: None }),
        MethodArg::Mi => {
            let result = register_mi(lidar, radar, &RigidTransform2D::default(), &mi_config(args))?;
            Ok(Registered { result, init: None })
        }
        MethodArg::PhaseMi => {
            let phase = register_phase(lidar, radar, &sweep_config(args))?;
            let mi = mi_config(args);
            let init_mi = transformed_mi(lidar, radar, &phase.transform, mi.bins)?;
            let mut result = register_mi(lidar, radar, &phase.transform, &mi)?;
            result.converged &= phase.converged;
            Ok(Registered { result, init: Some((phase, init_mi)) })
        }
    }
}

fn read_square_png(path: &Path, mpp: f64) -> Result<BevImage, Error> {
    if !path.is_file() {
        return Err(missing(path));
    }
    let (w, h, pixels) = dataset_io::read_gray_png(path)?;
    if w != h {
        return Err(Error::Format { path: path.to_path_buf(), msg: format!("BEV image must be square, got {w}x{h}") });
    }
    BevImage::from_pixels(&BevConfig::new(w, mpp)?, pixels, 0.0)
}

#[derive(Serialize)]
struct PhaseInit {
    x_m: f64,
    y_m: f64,
    theta_rad: f64,
    score: f64,
    converged: bool,
    mi: f64,
}

#[derive(Serialize)]
struct RegisterOutput {
    schema_version: u32,
    x_m: f64,
    y_m: f64,
    theta_rad: f64,
    score: f64,
    method: &'static str,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase_init: Option<PhaseInit>,
}

pub fn register(args: RegisterArgs) -> CmdResult {
    check_positive("--mpp", args.mpp)?;
    let lidar = read_square_png(&args.lidar, args.mpp)?;
    let radar = read_square_png(&args.radar, args.mpp)?;
    if !lidar.same_shape(&radar) {
        return Err(Error::Input(format!("image sizes differ: {} vs {}", lidar.size, radar.size)).into());
    }
    let spec = translator_spec(&args.translator, None)?;
    let frame_id = match &args.frame_id {
        Some(id) => id.clone(),
        None => args.radar.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string(),
    };
    let radar = translate_image(&radar, &spec, &frame_id)?;
    let reg = register_images(&lidar, &radar, &args.registration)?;
    let t = reg.result.transform;
    let out = RegisterOutput {
        schema_version: SCHEMA_VERSION,
        x_m: t.x,
        y_m: t.y,
        theta_rad: t.theta,
        score: reg.result.score,
        method: args.registration.method.name(),
        converged: reg.result.converged,
        phase_init: reg.init.map(|(p, mi)| PhaseInit {
            x_m: p.transform.x,
            y_m: p.transform.y,
            theta_rad: p.transform.theta,
            score: p.score,
            converged: p.converged,
            mi,
        }),
    };
    write_json(&args.out, &out)?;
    println!("x = {:.4} m, y = {:.4} m, theta = {:.5} rad, converged = {}", t.x, t.y, t.theta, out.converged);
    Ok(())
}

struct FrameEstimate {
    id: String,
    result: RegistrationResult,
}

#[derive(Serialize)]
struct Triple {
    x_m: f64,
    y_m: f64,
    theta_rad: f64,
}

#[derive(Serialize)]
struct CalibStatsOutput {
    schema_version: u32,
    method: &'static str,
    translator: &'static str,
    t_max_s: f64,
    pair_count: usize,
    converged_count: usize,
    tau_xy_m: f64,
    tau_theta_rad: f64,
    mean: Option<Triple>,
    std: Option<Triple>,
    median: Option<Triple>,
    convergence_rate: Option<f64>,
}

pub fn calib(args: CalibArgs) -> CmdResult {
    if !(args.t_max.is_finite() && args.t_max >= 0.0) {
        return Err(Error::Config(format!("--t-max must be non-negative, got {}", args.t_max)).into());
    }
    check_positive("--tau-xy", args.tau_xy)?;
    check_positive("--tau-theta", args.tau_theta)?;
    let ds = Dataset::open(&args.dataset_dir)?;
    let bev = ds.meta.bev;
    let cfg = BevConfig::new(
        args.size.or(bev.map(|b| b.size)).unwrap_or(300),
        args.mpp.or(bev.map(|b| b.meters_per_pixel)).unwrap_or(0.5),
    )?;
    let spec = translator_spec(&args.translator, Some(&ds.translated_dir()))?;
    let pairs = ds.pairs(args.t_max);
    if pairs.is_empty() {
        return Err(CliError::Empty(format!(
            "no radar/LiDAR pairs within {} s in {} ({} radar, {} LiDAR frames)",
            args.t_max,
            args.dataset_dir.display(),
            ds.radar_frames.len(),
            ds.lidar_frames.len()
        )));
    }
    let radar_traj = ds.radar_trajectory()?;
    let lidar_traj = ds.lidar_trajectory()?;
    let radar_traj = radar_traj.as_ref().or(lidar_traj.as_ref());
    let lidar_traj = lidar_traj.as_ref().or(radar_traj);

    let estimates = pairs
        .par_iter()
        .map(|(r, l)| -> Result<FrameEstimate, Error> {
            let scan = ds.load_radar(r)?;
            let radar_bev = match radar_traj {
                Some(traj) => deskew::deskew_scan(deskew::SweepInput::Radar(&scan), traj, &cfg)?,
                None => polar_to_cartesian_forward(&scan, &cfg)?,
            };
            let cloud = ds.load_lidar(l)?;
            let lidar_bev = match lidar_traj {
                Some(traj) => deskew::deskew_scan(deskew::SweepInput::Lidar(&cloud), traj, &cfg)?,
                None => rasterize_bev(&cloud, &cfg)?,
            };
            let radar_bev = translate_image(&radar_bev, &spec, &r.id())?;
            let reg = register_images(&lidar_bev, &radar_bev, &args.registration)?;
            Ok(FrameEstimate { id: r.id(), result: reg.result })
        })
        .collect::<Result<Vec<_>, Error>>()?;

    let mut csv = String::from("frame_id,x_m,y_m,theta_rad,score,converged\n");
    for e in &estimates {
        let t = e.result.transform;
        csv.push_str(&format!("{},{},{},{},{},{}\n", e.id, t.x, t.y, t.theta, e.result.score, e.result.converged));
    }
    write_file(&args.out.join("frames.csv"), csv)?;

    let transforms: Vec<RigidTransform2D> = estimates.iter().map(|e| e.result.transform).collect();
    let stats = if transforms.len() >= 2 {
        Some(calibration_stats(&transforms, args.tau_xy, args.tau_theta)?)
    } else {
        eprintln!("warning: one frame pair; distribution statistics need at least two");
        None
    };
    let triple = |x: f64, y: f64, theta: f64| Triple { x_m: x, y_m: y, theta_rad: theta };
    let out = CalibStatsOutput {
        schema_version: SCHEMA_VERSION,
        method: args.registration.method.name(),
        translator: translator_name(&args.translator),
        t_max_s: args.t_max,
        pair_count: estimates.len(),
        converged_count: estimates.iter().filter(|e| e.result.converged).count(),
        tau_xy_m: args.tau_xy,
        tau_theta_rad: args.tau_theta,
        mean: stats.map(|s| triple(s.x.mean, s.y.mean, s.theta.mean)),
        std: stats.map(|s| triple(s.x.std, s.y.std, s.theta.std)),
        median: stats.map(|s| triple(s.median.x, s.median.y, s.median.theta)),
        convergence_rate: stats.map(|s| s.convergence_rate),
    };
    write_json(&args.out.join("stats.json"), &out)?;
    match &out.mean {
        Some(m) => println!(
            "{} pairs: mean x = {:.4} m, y = {:.4} m, theta = {:.5} rad, convergence rate {:.3}",
            out.pair_count,
            m.x_m,
            m.y_m,
            m.theta_rad,
            out.convergence_rate.unwrap_or_default()
        ),
        None => println!("{} pair registered", out.pair_count),
    }
    Ok(())
}

fn png_names(dir: &Path) -> Result<BTreeSet<String>, Error> {
    if !dir.is_dir() {
        return Err(missing(dir));
    }
    let mut names = BTreeSet::new();
    for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        if path.is_file() && path.extension().and_then(|e| e.to_str()) == Some("png") {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                names.insert(name.to_string());
            }
        }
    }
    Ok(names)
}

struct ImageScore {
    name: String,
    psnr: f64,
    ssim: f64,
}

#[derive(Serialize)]
struct EvalSummary {
    schema_version: u32,
    translator: &'static str,
    image_count: usize,
    mean_psnr_db: f64,
    mean_ssim: f64,
    unpaired: Vec<String>,
}

pub fn eval(args: EvalArgs) -> CmdResult {
    let refs = png_names(&args.ref_dir)?;
    let tests = png_names(&args.test_dir)?;
    let paired: Vec<&String> = refs.intersection(&tests).collect();
    let unpaired: Vec<String> = refs.symmetric_difference(&tests).cloned().collect();
    if !unpaired.is_empty() {
        eprintln!("warning: {} unpaired image(s): {}", unpaired.len(), unpaired.join(", "));
    }
    if paired.is_empty() {
        return Err(CliError::Empty(format!(
            "no images present in both {} and {}",
            args.ref_dir.display(),
            args.test_dir.display()
        )));
    }
    let spec = translator_spec(&args.translator, None)?;
    let scores = paired
        .par_iter()
        .map(|name| -> Result<ImageScore, Error> {
            let reference = read_square_png(&args.ref_dir.join(name), 1.0)?;
            let test = read_square_png(&args.test_dir.join(name), 1.0)?;
            if !reference.same_shape(&test) {
                return Err(Error::Input(format!("{name}: sizes differ ({} vs {})", reference.size, test.size)));
            }
            let stem = name.trim_end_matches(".png");
            let test = translate_image(&test, &spec, stem)?;
            Ok(ImageScore { name: (*name).clone(), psnr: psnr(&reference, &test)?, ssim: ssim(&reference, &test)? })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let n = scores.len() as f64;
    let mean_psnr = scores.iter().map(|s| s.psnr).sum::<f64>() / n;
    let mean_ssim = scores.iter().map(|s| s.ssim).sum::<f64>() / n;
    let mut csv = String::from("image,psnr_db,ssim\n");
    for s in &scores {
        csv.push_str(&format!("{},{},{}\n", s.name, s.psnr, s.ssim));
    }
    csv.push_str(&format!("mean,{mean_psnr},{mean_ssim}\n"));
    write_file(&args.out, csv)?;
    let summary = EvalSummary {
        schema_version: SCHEMA_VERSION,
        translator: translator_name(&args.translator),
        image_count: scores.len(),
        mean_psnr_db: mean_psnr,
        mean_ssim,
        unpaired,
    };
    write_json(&args.out.with_extension("json"), &summary)?;
    println!("{} image pairs: mean PSNR {:.4} dB, mean SSIM {:.4}", scores.len(), mean_psnr, mean_ssim);
    Ok(())
}

pub fn synth(args: SynthArgs) -> CmdResult {
    let noise = NoiseModel::from_profile(&args.noise_profile)?;
    if !args.velocity.is_finite() || !args.yaw_rate.is_finite() {
        return Err(Error::Config("velocity and yaw rate must be finite".into()).into());
    }
    if !(args.lidar_offset.is_finite() && args.lidar_offset.abs() <= 0.25) {
        return Err(
            Error::Config(format!("--lidar-offset must lie in [-0.25, 0.25] s, got {}", args.lidar_offset)).into()
        );
    }
    let cfg = SynthDatasetConfig {
        seed: args.seed,
        frames: args.frames,
        extrinsic: args.extrinsic,
        velocity: args.velocity,
        yaw_rate: args.yaw_rate,
        noise,
        bev: BevConfig::new(args.grid.size, args.grid.mpp)?,
        lidar_offset: args.lidar_offset,
        ..SynthDatasetConfig::default()
    };
    let dataset = generate_dataset(&cfg)?;
    dataset.write(&args.out_dir)?;
    println!("wrote {} frames to {}", dataset.frames.len(), args.out_dir.display());
    Ok(())
}
