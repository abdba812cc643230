use nalgebra::{Matrix3, Matrix4, Vector3};

use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-9;

/// Rigid world-to-camera transform: `x_cam = rotation * x_world + translation`.
///
/// Cameras look along +Z with +X right and +Y down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Validating constructor; the rotation must be orthonormal with det +1.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let pose = Pose {
            rotation,
            translation,
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .rotation
            .iter()
            .chain(self.translation.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Validation("pose contains non-finite values".into()));
        }
        let residual = self.rotation.transpose() * self.rotation - Matrix3::identity();
        let worst = residual.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if worst > ORTHONORMAL_TOL {
            return Err(Error::Validation(format!(
                "rotation is not orthonormal (residual {worst:e})"
            )));
        }
        let det = self.rotation.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::Validation(format!(
                "rotation determinant {det} != 1"
            )));
        }
        Ok(())
    }

    /// `self ∘ other`: applies `other` first, then `self`.
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

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// Geodesic angle of the rotation part, in degrees.
    pub fn rotation_angle_deg(&self) -> f64 {
        rotation_angle(&self.rotation).to_degrees()
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Reads a homogeneous 4x4 matrix; the bottom row must be `[0 0 0 1]`.
    pub fn from_matrix(m: &Matrix4<f64>) -> Result<Pose> {
        let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::Validation(format!(
                "pose bottom row must be [0, 0, 0, 1], got {bottom:?}"
            )));
        }
        Pose::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
        )
    }

    /// Largest absolute elementwise deviation from the identity transform.
    /// Reads 16 values of a row-major homogeneous matrix.
    pub fn from_row_major(values: &[f64; 16]) -> Result<Pose> {
        Pose::from_matrix(&Matrix4::from_row_slice(values))
    }

    pub fn to_row_major(&self) -> [f64; 16] {
        let m = self.to_matrix();
        std::array::from_fn(|i| m[(i / 4, i % 4)])
    }

    pub fn identity_residual(&self) -> f64 {
        (self.to_matrix() - Matrix4::identity())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

pub fn invert_pose(p: &Pose) -> Pose {
    p.inverse()
}

/// Rotation angle in radians via atan2 of the axial and symmetric parts,
/// which stays accurate near 0 and near pi.
pub(crate) fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    let axial = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );
    let sin = 0.5 * axial.norm();
    let cos = 0.5 * (r.trace() - 1.0);
    sin.atan2(cos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Unit};
    use proptest::prelude::*;

    #[test]
    fn row_major_round_trip() {
        let p = Pose::new(
            Rotation3::from_axis_angle(&Vector3::z_axis(), 0.3).into_inner(),
            Vector3::new(1.0, -2.0, 3.0),
        )
        .unwrap();
        let rm = p.to_row_major();
        assert_eq!(rm[3], 1.0);
        assert_eq!(rm[12..], [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(Pose::from_row_major(&rm).unwrap(), p);
        let mut bad = rm;
        bad[14] = 0.5;
        assert!(Pose::from_row_major(&bad).is_err());
    }

    fn arb_pose() -> impl Strategy<Value = Pose> {
        (
            prop::array::uniform3(-1.0f64..1.0),
            -std::f64::consts::PI..std::f64::consts::PI,
            prop::array::uniform3(-10.0f64..10.0),
        )
            .prop_filter("axis must be non-degenerate", |(a, _, _)| {
                Vector3::from(*a).norm() > 1e-3
            })
            .prop_map(|(axis, angle, t)| {
                let axis = Unit::new_normalize(Vector3::from(axis));
                Pose::new(
                    Rotation3::from_axis_angle(&axis, angle).into_inner(),
                    Vector3::from(t),
                )
                .unwrap()
            })
    }

    #[test]
    fn identity_inverse() {
        assert_eq!(invert_pose(&Pose::identity()), Pose::identity());
    }

    #[test]
    fn translation_inverse() {
        let p = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(invert_pose(&p).translation, Vector3::new(0.0, 0.0, -1.0));
        assert_eq!(invert_pose(&p).rotation, Matrix3::identity());
    }

    #[test]
    fn rejects_non_orthonormal() {
        let mut r = Matrix3::identity();
        r[(0, 0)] = 1.01;
        assert!(Pose::new(r, Vector3::zeros()).is_err());
        // reflection
        let r = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(Pose::new(r, Vector3::zeros()).is_err());
    }

    #[test]
    fn matrix_round_trip() {
        let p = Pose::new(
            Rotation3::from_euler_angles(0.1, -0.2, 0.3).into_inner(),
            Vector3::new(1.0, 2.0, 3.0),
        )
        .unwrap();
        assert_eq!(Pose::from_matrix(&p.to_matrix()).unwrap(), p);
        let mut bad = p.to_matrix();
        bad[(3, 0)] = 1.0;
        assert!(Pose::from_matrix(&bad).is_err());
    }

    #[test]
    fn angle_accuracy() {
        for deg in [0.0, 1e-6, 0.5, 15.0, 30.0, 90.0, 179.0, 180.0] {
            let r = Rotation3::from_axis_angle(&Vector3::y_axis(), f64::to_radians(deg));
            let got = rotation_angle(r.matrix()).to_degrees();
            assert!((got - deg).abs() < 1e-9, "{deg}: {got}");
        }
    }

    #[test]
    fn center_of_translated_camera() {
        // world-to-camera translation -1 on x puts the camera at +1.
        let p = Pose::from_translation(Vector3::new(-1.0, 0.0, 0.0));
        assert_eq!(p.center(), Vector3::new(1.0, 0.0, 0.0));
    }

    proptest! {
        #[test]
        fn compose_with_inverse_is_identity(p in arb_pose()) {
            prop_assert!(p.compose(&p.inverse()).identity_residual() <= 1e-9);
            prop_assert!(p.inverse().compose(&p).identity_residual() <= 1e-9);
        }

        #[test]
        fn composition_stays_orthonormal(a in arb_pose(), b in arb_pose(), c in arb_pose()) {
            let mut acc = Pose::identity();
            for _ in 0..50 {
                acc = acc.compose(&a).compose(&b).compose(&c.inverse());
            }
            prop_assert!(acc.validate().is_ok());
        }
    }
}
