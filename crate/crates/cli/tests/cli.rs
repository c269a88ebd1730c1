use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bevcalib"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("run bevcalib")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn synth(dir: &Path, seed: &str, extra: &[&str]) {
    let mut args = vec!["synth", "--seed", seed, "--frames", "3", "--size", "128", "--mpp", "1.0", "--out-dir", s(dir)];
    args.extend_from_slice(extra);
    ok(&args);
}

fn files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn synth_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    synth(&a, "5", &["--extrinsic", "0.7,-0.3,0.01"]);
    synth(&b, "5", &["--extrinsic", "0.7,-0.3,0.01"]);
    let names = files(&a);
    assert_eq!(names, files(&b));
    for name in &names {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{}", name.display());
    }
    let truth = json(&a.join("ground_truth.json"));
    assert_eq!(truth["extrinsic"]["x"], 0.7);
    assert_eq!(truth["extrinsic"]["y"], -0.3);
    assert_eq!(truth["extrinsic"]["theta"], 0.01);
}

#[test]
fn calib_is_deterministic_and_config_is_overridable() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "6", &[]);
    let cfg = tmp.path().join("calib.conf");
    fs::write(&cfg, "# registration\nmethod = phase\ntheta_max = 4\n").unwrap();

    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    ok(&["calib", "--dataset-dir", s(&data), "--config", s(&cfg), "--out", s(&a)]);
    ok(&["calib", "--dataset-dir", s(&data), "--config", s(&cfg), "--out", s(&b)]);
    assert_eq!(fs::read(a.join("frames.csv")).unwrap(), fs::read(b.join("frames.csv")).unwrap());
    let stats = json(&a.join("stats.json"));
    assert_eq!(stats["method"], "phase");
    assert_eq!(stats["pair_count"], 3);
    assert_eq!(stats["schema_version"], 1);

    ok(&["calib", "--dataset-dir", s(&data), "--config", s(&cfg), "--method", "phase+mi", "--out", s(&c)]);
    assert_eq!(json(&c.join("stats.json"))["method"], "phase+mi");
    let csv = fs::read_to_string(c.join("frames.csv")).unwrap();
    assert!(csv.starts_with("frame_id,x_m,y_m,theta_rad,score,converged\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn external_translator_reads_translated_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "7", &[]);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["calib", "--dataset-dir", s(&data), "--method", "phase", "--out", s(&a)]);
    ok(&["calib", "--dataset-dir", s(&data), "--method", "phase", "--translator", "external", "--out", s(&b)]);
    assert_eq!(fs::read(a.join("frames.csv")).unwrap(), fs::read(b.join("frames.csv")).unwrap());

    fs::remove_dir_all(data.join("translated")).unwrap();
    let c = tmp.path().join("c");
    let out = run(&["calib", "--dataset-dir", s(&data), "--translator", "external", "--out", s(&c)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

fn first_png(dir: &Path) -> PathBuf {
    let mut pngs: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    pngs.sort();
    pngs.into_iter().find(|p| p.extension().is_some_and(|e| e == "png")).unwrap()
}

#[test]
fn register_self_and_phase_init() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "8", &[]);
    let lidar = first_png(&data.join("bev/lidar"));
    let radar = first_png(&data.join("bev/radar"));

    let out = tmp.path().join("self.json");
    ok(&[
        "register",
        "--lidar",
        s(&lidar),
        "--radar",
        s(&lidar),
        "--mpp",
        "1.0",
        "--method",
        "phase",
        "--out",
        s(&out),
    ]);
    let r = json(&out);
    for key in ["x_m", "y_m", "theta_rad"] {
        assert!(r[key].as_f64().unwrap().abs() < 1e-9, "{key}: {}", r[key]);
    }
    assert_eq!(r["method"], "phase");
    assert!(r.get("phase_init").is_none());

    let out = tmp.path().join("pair.json");
    ok(&["register", "--lidar", s(&lidar), "--radar", s(&radar), "--mpp", "1.0", "--out", s(&out)]);
    let r = json(&out);
    assert_eq!(r["method"], "phase+mi");
    assert!(r["score"].as_f64().unwrap() >= r["phase_init"]["mi"].as_f64().unwrap());
}

#[test]
fn eval_of_identical_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "9", &[]);
    let dir = data.join("bev/radar");
    let out = tmp.path().join("eval.csv");
    ok(&["eval", "--ref-dir", s(&dir), "--test-dir", s(&dir), "--out", s(&out)]);
    let summary = json(&out.with_extension("json"));
    assert_eq!(summary["image_count"], 3);
    assert_eq!(summary["mean_psnr_db"], 100.0);
    assert_eq!(summary["mean_ssim"], 1.0);
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("image,psnr_db,ssim\n"));
    assert!(csv.lines().last().unwrap().starts_with("mean,100,1"));
}

fn write_png(path: &Path, width: usize, height: usize, f: impl Fn(usize, usize) -> u8) {
    let px: Vec<u8> = (0..width * height).map(|i| f(i % width, i / width)).collect();
    bevcalib::dataset_io::write_gray_png(path, width, height, &px).unwrap();
}

#[test]
fn convert_dense_scan() {
    let tmp = tempfile::tempdir().unwrap();
    let scan = tmp.path().join("1000000000.png");
    write_png(&scan, 1800, 400, |x, y| 40 + ((x * 7 + y * 13) % 200) as u8);
    let out = tmp.path().join("out");
    ok(&["convert", "--input", s(&scan), "--out", s(&out)]);
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["half_range_m"], 75.0);
    let frame = &summary["frames"][0];
    assert!(frame["backward_nonzero"].as_u64() >= frame["forward_nonzero"].as_u64());
    assert!(out.join("1000000000.png").is_file());
}

#[test]
fn deskew_synthetic_lidar_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "10", &[]);
    let mut sweeps: Vec<PathBuf> = fs::read_dir(data.join("lidar"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_str().unwrap().ends_with(".bin") && !p.to_str().unwrap().ends_with(".times.bin"))
        .collect();
    sweeps.sort();
    let traj = data.join("poses_lidar.csv");
    let imu = data.join("imu.csv");
    let out = tmp.path().join("deskewed.png");
    ok(&[
        "deskew",
        "--scan",
        s(&sweeps[0]),
        "--traj",
        s(&traj),
        "--imu",
        s(&imu),
        "--sensor",
        "lidar",
        "--size",
        "128",
        "--mpp",
        "1.0",
        "--out",
        s(&out),
    ]);
    assert!(out.is_file());
    let summary = json(&out.with_extension("json"));
    assert!(summary["point_count"].as_u64().unwrap() > 0);
    assert!(summary["max_displacement_m"].as_f64().unwrap() > 0.0);

    // same sweep renamed to a time long after the trajectory ends
    let late = tmp.path().join("9000000000000000000.bin");
    fs::copy(&sweeps[0], &late).unwrap();
    let code =
        run(&["deskew", "--scan", s(&late), "--traj", s(&traj), "--sensor", "lidar", "--out", s(&out)]).status.code();
    assert_eq!(code, Some(4));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let missing = t.join("nope.png");
    let out = t.join("out");

    assert_eq!(code(&["convert", "--input", s(&missing), "--out", s(&out)]), 3);
    assert_eq!(code(&["convert", "--bogus"]), 2);
    assert_eq!(code(&["synth", "--extrinsic", "1,2", "--out-dir", s(&out)]), 2);
    assert_eq!(code(&["synth", "--noise-profile", "loud", "--out-dir", s(&out)]), 2);

    let bad_cfg = t.join("bad.conf");
    fs::write(&bad_cfg, "this is not a setting\n").unwrap();
    assert_eq!(code(&["convert", "--config", s(&bad_cfg), "--input", s(&missing), "--out", s(&out)]), 2);

    let (ref_dir, test_dir) = (t.join("ref"), t.join("test"));
    fs::create_dir_all(&ref_dir).unwrap();
    fs::create_dir_all(&test_dir).unwrap();
    assert_eq!(code(&["eval", "--ref-dir", s(&ref_dir), "--test-dir", s(&test_dir), "--out", s(&t.join("e.csv"))]), 6);

    let flat = t.join("flat.png");
    write_png(&flat, 32, 32, |_, _| 7);
    let json_out = t.join("r.json");
    assert_eq!(code(&["register", "--lidar", s(&flat), "--radar", s(&flat), "--out", s(&json_out)]), 5);

    let data = t.join("data");
    synth(&data, "11", &["--lidar-offset", "0.2"]);
    assert_eq!(code(&["calib", "--dataset-dir", s(&data), "--t-max", "0.01", "--out", s(&out)]), 6);
}
