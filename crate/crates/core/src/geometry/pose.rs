use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3, Vector6};

use crate::error::{Error, Result};

/// Twist `[omega; v]`: rotation part first, translation part second.
pub type Tangent = Vector6<f64>;

const SMALL_ANGLE: f64 = 1e-6;

/// Rigid transform stored as camera-to-world.
///
/// Rendering uses [`Pose::world_to_camera`]. Optimizers perturb the
/// world-to-camera transform on the left, see [`Pose::retract`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Validates orthonormality (det +1) within 1e-9.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let pose = Self {
            rotation,
            translation,
        };
        if !pose.is_valid(1e-9) {
            return Err(Error::InvalidArgument(
                "rotation is not orthonormal with determinant +1".into(),
            ));
        }
        Ok(pose)
    }

    pub fn from_quaternion(translation: Vector3<f64>, q: UnitQuaternion<f64>) -> Self {
        Self {
            rotation: q.to_rotation_matrix().into_inner(),
            translation,
        }
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.rotation))
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        let r = &self.rotation;
        let ortho = (r.transpose() * r - Matrix3::identity()).amax();
        ortho <= tol
            && (r.determinant() - 1.0).abs() <= tol
            && self.translation.iter().all(|v| v.is_finite())
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    #[inline]
    pub fn apply(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * x + self.translation
    }

    pub fn world_to_camera(&self) -> Pose {
        self.inverse()
    }

    /// Camera centre in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        self.translation
    }

    /// Applies a tangent step: the world-to-camera transform becomes
    /// `exp(step) * world_to_camera`.
    pub fn retract(&self, step: &Tangent) -> Pose {
        let delta = se3_exp_unchecked(step);
        delta.compose(&self.world_to_camera()).inverse()
    }

    /// Tangent taking `self` to `other` under [`Pose::retract`].
    pub fn local(&self, other: &Pose) -> Tangent {
        se3_log(&other.world_to_camera().compose(self))
    }

    pub fn re_orthonormalize(&self) -> Pose {
        let q = self.quaternion();
        Pose::from_quaternion(self.translation, q)
    }
}

fn so3_exp(omega: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = omega.norm_squared();
    let theta = theta2.sqrt();
    let k = skew(omega);
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Matrix3::identity() + k * a + k * k * b
}

fn se3_exp_unchecked(tangent: &Tangent) -> Pose {
    let omega = Vector3::new(tangent[0], tangent[1], tangent[2]);
    let v = Vector3::new(tangent[3], tangent[4], tangent[5]);
    let theta2 = omega.norm_squared();
    let theta = theta2.sqrt();
    let k = skew(&omega);
    let (b, c) = if theta < SMALL_ANGLE {
        (0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0)
    } else {
        (
            (1.0 - theta.cos()) / theta2,
            (theta - theta.sin()) / (theta2 * theta),
        )
    };
    let jac = Matrix3::identity() + k * b + k * k * c;
    Pose {
        rotation: so3_exp(&omega),
        translation: jac * v,
    }
}

/// Exponential map of a twist; rotation through Rodrigues' formula.
pub fn se3_exp(tangent: &Tangent) -> Result<Pose> {
    if tangent.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite twist".into()));
    }
    Ok(se3_exp_unchecked(tangent))
}

fn so3_log(r: &Matrix3<f64>) -> Vector3<f64> {
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = cos.acos();
    let vee = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    if theta < SMALL_ANGLE {
        return vee * (0.5 + theta * theta / 12.0);
    }
    if std::f64::consts::PI - theta < 1e-4 {
        // Near pi the antisymmetric part vanishes; read the axis off R + I.
        let b = (r + Matrix3::identity()) * 0.5;
        let (mut col, mut best) = (0, b[(0, 0)]);
        for i in 1..3 {
            if b[(i, i)] > best {
                best = b[(i, i)];
                col = i;
            }
        }
        let mut axis = b.column(col).into_owned() / best.max(1e-300).sqrt();
        axis.normalize_mut();
        if axis.dot(&vee) < 0.0 {
            axis = -axis;
        }
        return axis * theta;
    }
    vee * (theta / (2.0 * theta.sin()))
}

/// Inverse of [`se3_exp`] for rotation angles below pi.
pub fn se3_log(pose: &Pose) -> Tangent {
    let omega = so3_log(&pose.rotation);
    let theta2 = omega.norm_squared();
    let theta = theta2.sqrt();
    let k = skew(&omega);
    let d = if theta < SMALL_ANGLE {
        1.0 / 12.0 + theta2 / 720.0
    } else {
        (1.0 - theta * theta.sin() / (2.0 * (1.0 - theta.cos()))) / theta2
    };
    let v_inv = Matrix3::identity() - k * 0.5 + k * k * d;
    let v = v_inv * pose.translation;
    Vector6::new(omega.x, omega.y, omega.z, v.x, v.y, v.z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_twist_is_identity() {
        let p = se3_exp(&Tangent::zeros()).unwrap();
        assert_eq!(p, Pose::identity());
    }

    #[test]
    fn quarter_turn_about_z() {
        let p = se3_exp(&Vector6::new(0.0, 0.0, FRAC_PI_2, 0.0, 0.0, 0.0)).unwrap();
        let x = p.apply(&Vector3::x());
        assert!((x - Vector3::y()).amax() < 1e-12);
        assert!(p.translation().amax() < 1e-15);
    }

    #[test]
    fn round_trip_reference_twist() {
        let xi = Vector6::new(0.1, -0.2, 0.3, 1.0, 2.0, 3.0);
        let back = se3_log(&se3_exp(&xi).unwrap());
        assert!((back - xi).amax() < 1e-9, "{back:?}");
    }

    #[test]
    fn non_finite_twist_rejected() {
        let xi = Vector6::new(f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(se3_exp(&xi), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn log_near_pi() {
        let xi = Vector6::new(0.0, std::f64::consts::PI - 1e-5, 0.0, 0.2, 0.0, 0.0);
        let back = se3_log(&se3_exp(&xi).unwrap());
        assert!((back - xi).amax() < 1e-6, "{back:?}");
    }

    #[test]
    fn retract_then_local_recovers_step() {
        let base = se3_exp(&Vector6::new(0.3, 0.1, -0.2, 0.5, -1.0, 0.2)).unwrap();
        let step = Vector6::new(0.01, -0.02, 0.005, 0.03, 0.0, -0.01);
        let moved = base.retract(&step);
        assert!((base.local(&moved) - step).amax() < 1e-12);
    }

    #[test]
    fn rejects_non_orthonormal() {
        let r = Matrix3::identity() * 2.0;
        assert!(Pose::new(r, Vector3::zeros()).is_err());
    }
}
