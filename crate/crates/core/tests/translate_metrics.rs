use bevcalib::dataset_io::write_bev_png;
use bevcalib::metrics::{calibration_stats, psnr, ssim, PSNR_CAP_DB};
use bevcalib::translate::{gaussian_filter, gaussian_kernel, median_filter, translate_image, TranslatorSpec};
use bevcalib::{BevConfig, BevImage, RigidTransform2D};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn image(size: usize, pixels: Vec<u8>) -> BevImage {
    BevImage::from_pixels(&BevConfig::new(size, 0.5).unwrap(), pixels, 0.0).unwrap()
}

fn random_image(size: usize, seed: u64) -> BevImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    image(size, (0..size * size).map(|_| rng.random()).collect())
}

#[test]
fn median_of_single_impulse_is_blank() {
    let mut px = vec![0; 9];
    px[4] = 255;
    assert_eq!(median_filter(&image(3, px), 3).unwrap().pixels, vec![0; 9]);
}

#[test]
fn median_keeps_a_solid_block() {
    let mut img = image(9, vec![0; 81]);
    for r in 2..7 {
        for c in 2..7 {
            img.set(r, c, 200);
        }
    }
    assert_eq!(median_filter(&img, 3).unwrap().nonzero_count(), 25 - 4);
}

#[test]
fn gaussian_impulse_response_is_the_kernel() {
    let mut img = image(7, vec![0; 49]);
    img.set(3, 3, 255);
    let out = gaussian_filter(&img, 3, 0.8).unwrap();
    let taps = gaussian_kernel(3, 0.8);
    for r in 0..7 {
        for c in 0..7 {
            let want = if (2..=4).contains(&r) && (2..=4).contains(&c) {
                (255.0 * taps[r - 2] * taps[c - 2]).round() as u8
            } else {
                0
            };
            assert_eq!(out.get(r, c), want, "pixel ({r}, {c})");
        }
    }
}

#[test]
fn gaussian_conserves_intensity_away_from_edges() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut img = image(32, vec![0; 1024]);
    for _ in 0..40 {
        img.set(rng.random_range(4..28), rng.random_range(4..28), rng.random());
    }
    let out = gaussian_filter(&img, 5, 1.0).unwrap();
    let total = |i: &BevImage| i.pixels.iter().map(|&v| v as f64).sum::<f64>();
    let slack = 0.5 * out.nonzero_count() as f64;
    assert!((total(&out) - total(&img)).abs() <= slack);
}

#[test]
fn external_translator_reads_the_frame_image() {
    let dir = tempfile::tempdir().unwrap();
    let img = random_image(16, 1);
    write_bev_png(&dir.path().join("42.png"), &img).unwrap();
    let spec = TranslatorSpec::External { directory: dir.path().to_path_buf() };
    let out = translate_image(&image(16, vec![0; 256]), &spec, "42").unwrap();
    assert_eq!(out.pixels, img.pixels);
    assert!(translate_image(&img, &spec, "43").is_err());
}

#[test]
fn psnr_and_ssim_of_identical_images() {
    let img = random_image(16, 2);
    assert_eq!(psnr(&img, &img).unwrap(), PSNR_CAP_DB);
    assert!((ssim(&img, &img).unwrap() - 1.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn metrics_are_symmetric(a in any::<u64>(), b in any::<u64>()) {
        let (x, y) = (random_image(16, a), random_image(16, b));
        prop_assert_eq!(psnr(&x, &y).unwrap(), psnr(&y, &x).unwrap());
        prop_assert!((ssim(&x, &y).unwrap() - ssim(&y, &x).unwrap()).abs() < 1e-12);
        prop_assert!(ssim(&x, &y).unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn stats_ignore_estimate_order(seed in any::<u64>(), n in 2usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut est: Vec<RigidTransform2D> = (0..n)
            .map(|_| RigidTransform2D::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-0.1..0.1)))
            .collect();
        let a = calibration_stats(&est, 0.5, 0.02).unwrap();
        est.shuffle(&mut rng);
        let b = calibration_stats(&est, 0.5, 0.02).unwrap();
        prop_assert_eq!(a, b);
    }
}
