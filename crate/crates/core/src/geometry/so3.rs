//! Rotation-group helpers on plain `Matrix3<f64>` storage.

use nalgebra::{Matrix3, Vector3};

use super::GeometryError;

/// Trace margin below which `log_so3` refuses to extract an axis.
pub const ANGLE_NEAR_PI_MARGIN: f64 = 1e-9;

/// The cross-product matrix `[w]×`.
pub fn skew(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Inverse of [`skew`]; reads the antisymmetric part of `m`.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Rodrigues' formula for `exp([w]×)`.
pub fn exp_so3(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = w.norm_squared();
    let k = skew(w);
    let k2 = k * k;
    // Taylor coefficients below ~1e-4 rad keep full precision.
    let (a, b) = if theta2 < 1e-8 {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Matrix3::identity() + k * a + k2 * b
}

/// Rotation vector of `r`, valid for rotation angles strictly below π.
pub fn log_so3(r: &Matrix3<f64>) -> Result<Vector3<f64>, GeometryError> {
    let trace = r.trace();
    if trace <= -1.0 + ANGLE_NEAR_PI_MARGIN {
        return Err(GeometryError::AngleNearPi { trace });
    }
    let cos = ((trace - 1.0) * 0.5).clamp(-1.0, 1.0);
    let axis_sin = vee(r);
    let sin = axis_sin.norm();
    let theta = sin.atan2(cos);
    if sin < 1e-7 && cos > 0.0 {
        // theta / sin(theta) = 1 + theta^2/6 + O(theta^4)
        return Ok(axis_sin * (1.0 + theta * theta / 6.0));
    }
    if cos < 0.0 && sin < 1e-4 {
        // Near pi the antisymmetric part loses precision; recover the axis
        // from the symmetric part instead.
        let s = (r + r.transpose()) * 0.5 - Matrix3::identity() * cos;
        let d = Vector3::new(s[(0, 0)], s[(1, 1)], s[(2, 2)]);
        let i = d.imax();
        let mut axis = s.column(i).into_owned();
        axis /= axis.norm();
        if axis.dot(&axis_sin) < 0.0 {
            axis = -axis;
        }
        return Ok(axis * theta);
    }
    Ok(axis_sin * (theta / sin))
}

/// Re-orthonormalizes a nearly orthonormal matrix via the SVD polar factor.
pub fn orthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = r.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut out = u * v_t;
    if out.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        out = u * v_t;
    }
    out
}

/// Smallest rotation taking unit vector `from` onto unit vector `to`.
pub fn rotation_between(from: &Vector3<f64>, to: &Vector3<f64>) -> Matrix3<f64> {
    let axis = from.cross(to);
    let sin = axis.norm();
    let cos = from.dot(to);
    if sin < 1e-15 {
        if cos > 0.0 {
            return Matrix3::identity();
        }
        return exp_so3(&(any_perpendicular(from) * std::f64::consts::PI));
    }
    exp_so3(&(axis * (sin.atan2(cos) / sin)))
}

/// A deterministic unit vector orthogonal to `v`.
pub fn any_perpendicular(v: &Vector3<f64>) -> Vector3<f64> {
    let a = v.abs();
    let seed = if a.x <= a.y && a.x <= a.z {
        Vector3::x()
    } else if a.y <= a.z {
        Vector3::y()
    } else {
        Vector3::z()
    };
    v.cross(&seed).normalize()
}
