use super::RigidTransform2D;
use crate::scan_geometry::BevImage;

/// Floating-point copy of a BEV raster used inside the registration loops.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub size: usize,
    pub meters_per_pixel: f64,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn from_image(img: &BevImage) -> Self {
        Self {
            size: img.size,
            meters_per_pixel: img.meters_per_pixel,
            data: img.pixels.iter().map(|&v| v as f64).collect(),
        }
    }

    #[inline]
    fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.size + col]
    }

    /// Bilinear sample at continuous pixel coordinates; `None` outside the grid.
    #[inline]
    pub fn sample(&self, row: f64, col: f64) -> Option<f64> {
        let max = (self.size - 1) as f64;
        if !(row >= 0.0 && col >= 0.0 && row <= max && col <= max) {
            return None;
        }
        let r0 = (row.floor() as usize).min(self.size.saturating_sub(2));
        let c0 = (col.floor() as usize).min(self.size.saturating_sub(2));
        if self.size == 1 {
            return Some(self.at(0, 0));
        }
        let (wr, wc) = (row - r0 as f64, col - c0 as f64);
        let top = (1.0 - wc) * self.at(r0, c0) + wc * self.at(r0, c0 + 1);
        let bottom = (1.0 - wc) * self.at(r0 + 1, c0) + wc * self.at(r0 + 1, c0 + 1);
        Some((1.0 - wr) * top + wr * bottom)
    }

    pub fn is_constant(&self) -> bool {
        self.data.iter().all(|&v| v == self.data[0])
    }
}

/// Resamples `src` under `transform`: `out(q) = src(transform^-1 q)` in metric
/// coordinates about the image center. Returns values and a validity mask
/// marking samples that fell inside the source grid.
pub fn warp_rigid(src: &Plane, transform: &RigidTransform2D) -> (Vec<f64>, Vec<bool>) {
    let n = src.size;
    let c = (n as f64 - 1.0) / 2.0;
    let mpp = src.meters_per_pixel;
    let (s, co) = transform.theta.sin_cos();
    // inverse: q_src = R^T (q - t)
    let mut values = vec![0.0; n * n];
    let mut valid = vec![false; n * n];
    for row in 0..n {
        let y = (c - row as f64) * mpp - transform.y;
        for col in 0..n {
            let x = (col as f64 - c) * mpp - transform.x;
            let sx = co * x + s * y;
            let sy = -s * x + co * y;
            if let Some(v) = src.sample(c - sy / mpp, c + sx / mpp) {
                values[row * n + col] = v;
                valid[row * n + col] = true;
            }
        }
    }
    (values, valid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(size: usize, f: impl Fn(usize, usize) -> f64) -> Plane {
        let mut data = Vec::with_capacity(size * size);
        for r in 0..size {
            for c in 0..size {
                data.push(f(r, c));
            }
        }
        Plane { size, meters_per_pixel: 0.5, data }
    }

    #[test]
    fn identity_warp_is_exact() {
        let p = plane(9, |r, c| (r * 9 + c) as f64);
        let (v, m) = warp_rigid(&p, &RigidTransform2D::default());
        assert_eq!(v, p.data);
        assert!(m.iter().all(|&b| b));
    }

    #[test]
    fn translation_moves_content_right_and_up() {
        let mut p = plane(9, |_, _| 0.0);
        p.data[4 * 9 + 4] = 100.0;
        // +1 m in x = +2 columns, +0.5 m in y = -1 row
        let (v, _) = warp_rigid(&p, &RigidTransform2D::new(1.0, 0.5, 0.0));
        assert_eq!(v[3 * 9 + 6], 100.0);
    }

    #[test]
    fn quarter_turn_maps_x_axis_to_y_axis() {
        let mut p = plane(9, |_, _| 0.0);
        p.data[4 * 9 + 7] = 50.0; // x = +1.5 m
        let (v, _) = warp_rigid(&p, &RigidTransform2D::new(0.0, 0.0, std::f64::consts::FRAC_PI_2));
        assert!((v[9 + 4] - 50.0).abs() < 1e-9); // y = +1.5 m
    }
}
