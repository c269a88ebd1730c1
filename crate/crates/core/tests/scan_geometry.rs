use bevcalib::scan_geometry::{
    cartesian_image_to_points, polar_to_cartesian_backward, polar_to_cartesian_forward, rasterize_bev, ScanTiming,
};
use bevcalib::{BevConfig, BevImage, PolarScan};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn forward_hand_trigonometry() {
    let mut cells = vec![0u8; 4 * 2];
    cells[1] = 255;
    let scan = PolarScan::new(4, 2, cells, 1.0, 0.0, 0.25).unwrap();
    let img = polar_to_cartesian_forward(&scan, &BevConfig::new(5, 1.0).unwrap()).unwrap();
    let (row, col) = img.pixel_of(1.5, 0.0).unwrap();
    assert_eq!((row, col), (2, 4));
    assert_eq!(img.get(row, col), 255);
    assert_eq!(img.nonzero_count(), 1);
}

#[test]
fn backward_uniform_scan_fills_disc() {
    let scan = PolarScan::new(360, 40, vec![200; 360 * 40], 0.5, 0.0, 0.25).unwrap();
    let img = polar_to_cartesian_backward(&scan, &BevConfig::new(61, 1.0).unwrap()).unwrap();
    for row in 0..61 {
        for col in 0..61 {
            let (x, y) = img.pixel_center(row, col);
            let rho = x.hypot(y);
            if rho <= 20.0 {
                assert_eq!(img.get(row, col), 200, "pixel at rho {rho}");
            } else {
                assert_eq!(img.get(row, col), 0);
            }
        }
    }
}

fn random_scan(seed: u64, density: f64, azimuths: usize, bins: usize, dr: f64) -> PolarScan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = (0..azimuths * bins)
        .map(|_| if rng.random::<f64>() < density { rng.random_range(1..=255) } else { 0 })
        .collect();
    PolarScan::new(azimuths, bins, cells, dr, 0.0, 0.25).unwrap()
}

#[test]
fn backward_is_denser_on_dense_scans() {
    let cfg = BevConfig::new(300, 0.5).unwrap();
    for seed in 0..5 {
        let scan = random_scan(seed, 0.8, 400, 1800, 0.0432);
        let fwd = polar_to_cartesian_forward(&scan, &cfg).unwrap().nonzero_count();
        let bwd = polar_to_cartesian_backward(&scan, &cfg).unwrap().nonzero_count();
        assert!(bwd >= fwd, "seed {seed}: backward {bwd} < forward {fwd}");
    }
}

// Point sampling at pixel centers misses isolated cells narrower than a
// pixel, so on sparse scans with fine range bins the forward image has more
// nonzero pixels than the backward one.
#[test]
fn backward_is_sparser_on_sparse_sub_pixel_scans() {
    let cfg = BevConfig::new(300, 0.5).unwrap();
    let scan = random_scan(1, 0.02, 400, 800, 0.0432);
    let fwd = polar_to_cartesian_forward(&scan, &cfg).unwrap().nonzero_count();
    let bwd = polar_to_cartesian_backward(&scan, &cfg).unwrap().nonzero_count();
    assert!(bwd < fwd);
}

#[test]
fn pixel_point_gets_time_of_its_azimuth() {
    let cfg = BevConfig::new(21, 1.0).unwrap();
    let mut img = cfg.blank(0.0);
    let (row, col) = img.pixel_of(3.0, -4.0).unwrap();
    img.set(row, col, 50);
    let times: Vec<f64> = (0..8).map(|a| 10.0 + 0.01 * a as f64).collect();
    let timing = ScanTiming { azimuth_times: Some(times), ..ScanTiming::linear(10.0, 0.08) };
    let cloud = cartesian_image_to_points(&img, &timing, 0);
    assert_eq!(cloud.len(), 1);
    let p = cloud.points[0];
    assert_eq!((p.x, p.y, p.z), (3.0, -4.0, 0.0));
    let bearing = (-4.0f64).atan2(3.0).rem_euclid(std::f64::consts::TAU);
    let expected = 10.0 + 0.08 * bearing / std::f64::consts::TAU;
    assert!((p.t - expected).abs() < 1e-12, "{} vs {expected}", p.t);
}

proptest! {
    #[test]
    fn forward_never_exceeds_polar_cells(
        seed in any::<u64>(),
        azimuths in 4usize..96,
        bins in 1usize..96,
        dr in 0.05f64..2.0,
        size in 5usize..80,
        mpp in 0.1f64..2.0,
        density in 0.05f64..1.0,
    ) {
        let scan = random_scan(seed, density, azimuths, bins, dr);
        let img = polar_to_cartesian_forward(&scan, &BevConfig::new(size, mpp).unwrap()).unwrap();
        prop_assert!(img.nonzero_count() <= scan.nonzero_count());
    }

    #[test]
    fn points_rasterize_back_to_source(
        size in 5usize..64,
        mpp in 0.05f64..3.0,
        seed in any::<u64>(),
        density in 0.0f64..0.5,
    ) {
        let cfg = BevConfig::new(size, mpp).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pixels: Vec<u8> = (0..size * size)
            .map(|_| if rng.random::<f64>() < density { rng.random_range(1..=255) } else { 0 })
            .collect();
        let img = BevImage::from_pixels(&cfg, pixels, 0.0).unwrap();
        let cloud = cartesian_image_to_points(&img, &ScanTiming::linear(0.0, 0.1), 0);
        let back = rasterize_bev(&cloud, &cfg).unwrap();
        prop_assert_eq!(back.pixels, img.pixels);
    }
}
