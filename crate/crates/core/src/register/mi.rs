use super::warp::{warp_rigid, Plane};
use super::{Method, RegistrationResult, RigidTransform2D};
use crate::error::{Error, Result};
use crate::scan_geometry::BevImage;

#[inline]
fn bin_of(v: f64, bins: usize) -> usize {
    ((v * bins as f64 / 256.0) as usize).min(bins - 1)
}

/// MI in nats of the joint histogram over pixels where `mask` (if given) holds.
pub fn mutual_information_masked(a: &[f64], b: &[f64], mask: Option<&[bool]>, bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(Error::Config(format!("mutual information needs at least 2 bins, got {bins}")));
    }
    if a.len() != b.len() || mask.is_some_and(|m| m.len() != a.len()) {
        return Err(Error::Input("mutual information inputs differ in size".into()));
    }
    let mut joint = vec![0u64; bins * bins];
    let mut count = 0u64;
    for i in 0..a.len() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        joint[bin_of(a[i], bins) * bins + bin_of(b[i], bins)] += 1;
        count += 1;
    }
    if count == 0 {
        return Err(Error::Degenerate("no overlapping valid pixels".into()));
    }
    let total = count as f64;
    let mut pa = vec![0.0; bins];
    let mut pb = vec![0.0; bins];
    for i in 0..bins {
        for j in 0..bins {
            let p = joint[i * bins + j] as f64 / total;
            pa[i] += p;
            pb[j] += p;
        }
    }
    let mut mi = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            let c = joint[i * bins + j];
            if c == 0 {
                continue;
            }
            let p = c as f64 / total;
            mi += p * (p / (pa[i] * pb[j])).ln();
        }
    }
    Ok(mi.max(0.0))
}

/// Mutual information (nats) between two equal-size images.
pub fn mutual_information(a: &BevImage, b: &BevImage, bins: usize) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::Input(format!("image sizes differ: {} vs {}", a.size, b.size)));
    }
    let (pa, pb) = (Plane::from_image(a), Plane::from_image(b));
    mutual_information_masked(&pa.data, &pb.data, None, bins)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiOptConfig {
    pub bins: usize,
    /// Initial simplex step per parameter: x and y in meters, theta in radians.
    /// Also the unit used to measure convergence.
    pub simplex_scale: [f64; 3],
    pub max_evaluations: usize,
    /// Simplex diameter, in units of `simplex_scale`, below which the search stops.
    pub tolerance: f64,
}

impl Default for MiOptConfig {
    fn default() -> Self {
        Self { bins: 32, simplex_scale: [1.0, 1.0, 0.02], max_evaluations: 400, tolerance: 1e-4 }
    }
}

/// MI of `lidar` against `radar` warped by `transform`, out-of-bounds excluded.
pub fn transformed_mi(lidar: &BevImage, radar: &BevImage, transform: &RigidTransform2D, bins: usize) -> Result<f64> {
    if !lidar.same_shape(radar) {
        return Err(Error::Input(format!("image sizes differ: {} vs {}", lidar.size, radar.size)));
    }
    let lp = Plane::from_image(lidar);
    let (values, valid) = warp_rigid(&Plane::from_image(radar), transform);
    mutual_information_masked(&lp.data, &values, Some(&valid), bins)
}

/// Maximizes MI over `(x, y, theta)` with Nelder-Mead started at `init`.
pub fn register_mi(
    lidar: &BevImage,
    radar: &BevImage,
    init: &RigidTransform2D,
    opt: &MiOptConfig,
) -> Result<RegistrationResult> {
    if !lidar.same_shape(radar) {
        return Err(Error::Input(format!("image sizes differ: {} vs {}", lidar.size, radar.size)));
    }
    if !(init.x.is_finite() && init.y.is_finite() && init.theta.is_finite()) {
        return Err(Error::Input("non-finite initial transform".into()));
    }
    if opt.bins < 2 {
        return Err(Error::Config(format!("mutual information needs at least 2 bins, got {}", opt.bins)));
    }
    if opt.simplex_scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::Config("simplex scale must be positive".into()));
    }
    let lp = Plane::from_image(lidar);
    let rp = Plane::from_image(radar);
    let scale = opt.simplex_scale;
    let to_transform = |z: &[f64; 3]| {
        RigidTransform2D::new(init.x + z[0] * scale[0], init.y + z[1] * scale[1], init.theta + z[2] * scale[2])
    };
    let objective = |z: &[f64; 3]| -> f64 {
        let (values, valid) = warp_rigid(&rp, &to_transform(z));
        match mutual_information_masked(&lp.data, &values, Some(&valid), opt.bins) {
            Ok(mi) => -mi,
            Err(_) => f64::INFINITY,
        }
    };
    let init_cost = objective(&[0.0; 3]);
    if !init_cost.is_finite() {
        return Err(Error::Degenerate("initial transform leaves no overlapping pixels".into()));
    }
    let outcome = nelder_mead(objective, init_cost, opt.max_evaluations, opt.tolerance);
    Ok(RegistrationResult {
        transform: to_transform(&outcome.best),
        score: -outcome.cost,
        method: Method::Mi,
        converged: outcome.converged,
    })
}

struct SimplexOutcome {
    best: [f64; 3],
    cost: f64,
    converged: bool,
}

/// Minimizes `f` from the origin with a unit right-angle initial simplex.
/// The origin stays in the simplex until beaten, so the result never has a
/// higher cost than `origin_cost`.
fn nelder_mead(f: impl Fn(&[f64; 3]) -> f64, origin_cost: f64, max_evals: usize, tol: f64) -> SimplexOutcome {
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;

    let mut simplex: Vec<([f64; 3], f64)> = vec![([0.0; 3], origin_cost)];
    for i in 0..3 {
        let mut v = [0.0; 3];
        v[i] = 1.0;
        simplex.push((v, f(&v)));
    }
    let mut evals = 4;
    let diameter = |s: &[([f64; 3], f64)]| {
        s[1..].iter().map(|(v, _)| (0..3).map(|k| (v[k] - s[0].0[k]).powi(2)).sum::<f64>().sqrt()).fold(0.0, f64::max)
    };
    let combine = |a: &[f64; 3], b: &[f64; 3], t: f64| -> [f64; 3] {
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
    };
    let mut converged = false;
    loop {
        // stable sort keeps earlier (incumbent) vertices first on ties
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if diameter(&simplex) < tol {
            converged = true;
            break;
        }
        if evals >= max_evals {
            break;
        }
        let mut centroid = [0.0; 3];
        for (v, _) in &simplex[..3] {
            for k in 0..3 {
                centroid[k] += v[k] / 3.0;
            }
        }
        let worst = simplex[3];
        let reflected = combine(&centroid, &worst.0, -ALPHA);
        let fr = f(&reflected);
        evals += 1;
        if fr < simplex[0].1 {
            let expanded = combine(&centroid, &worst.0, -GAMMA);
            let fe = f(&expanded);
            evals += 1;
            simplex[3] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[2].1 {
            simplex[3] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst.1 {
            let c = combine(&centroid, &reflected, RHO);
            (c, f(&c))
        } else {
            let c = combine(&centroid, &worst.0, RHO);
            (c, f(&c))
        };
        evals += 1;
        if fc < worst.1.min(fr) {
            simplex[3] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0;
        for vertex in simplex.iter_mut().skip(1) {
            let v = combine(&best, &vertex.0, SIGMA);
            *vertex = (v, f(&v));
            evals += 1;
        }
    }
    SimplexOutcome { best: simplex[0].0, cost: simplex[0].1, converged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan_geometry::BevConfig;

    fn img(size: usize, px: Vec<u8>) -> BevImage {
        BevImage::from_pixels(&BevConfig::new(size, 1.0).unwrap(), px, 0.0).unwrap()
    }

    #[test]
    fn constant_image_has_zero_mi() {
        let a = img(4, vec![9; 16]);
        let b = img(4, (0..16).map(|v| v * 16).collect());
        assert_eq!(mutual_information(&a, &b, 32).unwrap(), 0.0);
    }

    #[test]
    fn two_equal_bins_give_ln_two() {
        let a = img(4, (0..16).map(|i| if i % 2 == 0 { 0 } else { 200 }).collect());
        let mi = mutual_information(&a, &a, 32).unwrap();
        assert!((mi - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn bins_below_two_rejected() {
        let a = img(2, vec![0, 1, 2, 3]);
        assert!(matches!(mutual_information(&a, &a, 1), Err(Error::Config(_))));
    }

    #[test]
    fn empty_mask_is_degenerate() {
        let r = mutual_information_masked(&[1.0, 2.0], &[1.0, 2.0], Some(&[false, false]), 4);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |z: &[f64; 3]| (z[0] - 1.5).powi(2) + 2.0 * (z[1] + 0.5).powi(2) + (z[2] - 0.25).powi(2);
        let out = nelder_mead(f, f(&[0.0; 3]), 2000, 1e-8);
        assert!(out.converged);
        assert!((out.best[0] - 1.5).abs() < 1e-6);
        assert!((out.best[1] + 0.5).abs() < 1e-6);
        assert!((out.best[2] - 0.25).abs() < 1e-6);
    }
}
