use nalgebra::{Matrix3, Vector3, Vector6};

/// Rigid body pose, rotation stored as an orthonormal matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

/// Twist ordered as `(rho, omega)`: translational part first.
pub type Twist = Vector6<f64>;

#[inline]
pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Coefficients `(sin t / t, (1 - cos t) / t^2, (t - sin t) / t^3)` with
/// series fallbacks near zero.
fn so3_coefficients(theta: f64) -> (f64, f64, f64) {
    let t2 = theta * theta;
    if theta < 1e-4 {
        (1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0, 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0)
    } else {
        let (s, c) = theta.sin_cos();
        (s / theta, (1.0 - c) / t2, (theta - s) / (t2 * theta))
    }
}

pub fn so3_exp(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let (a, b, _) = so3_coefficients(theta);
    let k = hat(w);
    Matrix3::identity() + a * k + b * k * k
}

pub fn so3_log(r: &Matrix3<f64>) -> Vector3<f64> {
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let vee = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let sin = vee.norm() / 2.0;
    let theta = sin.atan2(cos);
    if theta < 1e-4 {
        // theta / sin(theta) ~ 1 + theta^2 / 6
        return vee * (0.5 * (1.0 + theta * theta / 6.0));
    }
    if std::f64::consts::PI - theta > 1e-6 {
        return vee * (theta / (2.0 * sin));
    }
    // Near pi: axis from the symmetric part, sign from the skew part.
    let b = (r + r.transpose()) / 2.0 - cos * Matrix3::identity();
    let (i, _) = (0..3).map(|i| (i, b[(i, i)])).fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
    let mut axis = b.column(i).into_owned();
    axis /= axis.norm();
    if axis.dot(&vee) < 0.0 {
        axis = -axis;
    }
    axis * theta
}

/// Nearest rotation in the Frobenius sense (polar decomposition), det +1.
pub fn orthonormalize(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        r = u * v_t;
    }
    r
}

/// `|RtR - I|` under the Frobenius norm.
pub fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).norm()
}

impl Pose {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::new(x, y, z) }
    }

    /// Planar pose: yaw about +z and a translation in the xy-plane.
    pub fn planar(x: f64, y: f64, yaw: f64) -> Self {
        let (s, c) = yaw.sin_cos();
        Self { rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0), translation: Vector3::new(x, y, 0.0) }
    }

    pub fn yaw(&self) -> f64 {
        self.rotation[(1, 0)].atan2(self.rotation[(0, 0)])
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -(rt * self.translation) }
    }

    pub fn compose(&self, other: &Pose) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn exp(xi: &Twist) -> Self {
        let rho = Vector3::new(xi[0], xi[1], xi[2]);
        let omega = Vector3::new(xi[3], xi[4], xi[5]);
        let theta = omega.norm();
        let (a, b, c) = so3_coefficients(theta);
        let k = hat(&omega);
        let k2 = k * k;
        let rotation = Matrix3::identity() + a * k + b * k2;
        let v = Matrix3::identity() + b * k + c * k2;
        Self { rotation, translation: v * rho }
    }

    pub fn log(&self) -> Twist {
        let omega = so3_log(&self.rotation);
        let theta = omega.norm();
        let k = hat(&omega);
        // V^{-1} = I - K/2 + (1/theta^2)(1 - A/(2B)) K^2
        let coeff = if theta < 1e-4 {
            1.0 / 12.0 + theta * theta / 720.0
        } else {
            let (a, b, _) = so3_coefficients(theta);
            (1.0 - a / (2.0 * b)) / (theta * theta)
        };
        let v_inv = Matrix3::identity() - 0.5 * k + coeff * k * k;
        let rho = v_inv * self.translation;
        Twist::new(rho.x, rho.y, rho.z, omega.x, omega.y, omega.z)
    }

    /// Rotation restored to the nearest orthonormal matrix.
    pub fn renormalized(&self) -> Self {
        if orthonormality_error(&self.rotation) < 1e-13 {
            return *self;
        }
        Self { rotation: orthonormalize(&self.rotation), translation: self.translation }
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.rotation)
    }

    /// Translation distance and rotation angle between two poses.
    pub fn distance(&self, other: &Pose) -> (f64, f64) {
        let d = self.inverse().compose(other);
        ((self.translation - other.translation).norm(), so3_log(&d.rotation).norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn twist(v: [f64; 6]) -> Twist {
        Twist::from_row_slice(&v)
    }

    #[test]
    fn exp_log_roundtrip() {
        for xi in [
            twist([0.3, -1.0, 2.0, 0.1, 0.2, -0.3]),
            twist([1.0, 0.0, 0.0, 0.0, 0.0, 1e-7]),
            twist([0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            twist([2.0, 1.0, 0.5, 0.0, 3.0, 0.0]),
            twist([0.1, 0.2, 0.3, 0.0, 0.0, std::f64::consts::PI - 1e-8]),
        ] {
            let back = Pose::exp(&xi).log();
            assert!((back - xi).norm() < 1e-7, "{xi:?} -> {back:?}");
        }
    }

    #[test]
    fn exp_is_orthonormal() {
        let p = Pose::exp(&twist([1.0, 2.0, 3.0, 0.4, -0.5, 0.6]));
        assert!(p.orthonormality_error() < 1e-14);
        assert!((p.rotation.determinant() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_composes_to_identity() {
        let p = Pose::exp(&twist([1.0, 2.0, 3.0, 0.4, -0.5, 0.6]));
        let id = p.compose(&p.inverse());
        assert!((id.rotation - Matrix3::identity()).norm() < 1e-14);
        assert!(id.translation.norm() < 1e-14);
    }

    #[test]
    fn orthonormalize_fixes_perturbation() {
        let mut m = so3_exp(&Vector3::new(0.2, 0.1, -0.4));
        m[(0, 1)] += 3e-6;
        let r = orthonormalize(&m);
        assert!(orthonormality_error(&r) < 1e-12);
        assert!((r - m).norm() < 1e-5);
    }
}
