//! Rigid-body primitives: unit quaternions, rigid transforms, camera poses
//! and the per-pair error measures the metrics are built from.
//!
//! Conventions used throughout the toolkit:
//!
//! * quaternions are stored as `(w, x, y, z)` and kept on the `w >= 0`
//!   hemisphere;
//! * a [`Pose`] maps camera coordinates to world coordinates;
//! * the relative pose of a pair is `inverse(anchor) * query`, i.e. the
//!   query camera expressed in the anchor camera frame.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Pitch values within this distance (degrees) of ±90° are treated as
/// gimbal locked.
pub const GIMBAL_LOCK_TOLERANCE_DEG: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("quaternion ({w}, {x}, {y}, {z}) cannot be normalized")]
    DegenerateQuaternion { w: f64, x: f64, y: f64, z: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("gimbal lock: pitch {pitch_deg}° is within tolerance of ±90°")]
    GimbalLock { pitch_deg: f64 },
}

/// A 3-vector in meters. Used for points and translations alike.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Translations share the point representation.
pub type Translation = Vec3;

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_l1(self) -> f64 {
        self.x.abs() + self.y.abs() + self.z.abs()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Vector norm used by the translation error measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Norm {
    #[default]
    L1,
    L2,
}

impl Norm {
    pub fn of(self, v: Vec3) -> f64 {
        match self {
            Norm::L1 => v.norm_l1(),
            Norm::L2 => v.norm(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Norm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            other => Err(format!("unknown norm '{other}' (expected l1 or l2)")),
        }
    }
}

/// Unit quaternion `(w, x, y, z)` on the `w >= 0` hemisphere.
///
/// Every constructor normalizes, so a value of this type always represents
/// a rotation. Use [`Quaternion::components`] to get the raw storage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Normalizes `(w, x, y, z)` and moves it onto the canonical hemisphere.
    /// Input that is already unit to rounding is kept bit for bit, so `q`
    /// and its negation map to the same value.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        if !(w.is_finite() && x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(GeometryError::NonFinite("quaternion"));
        }
        let n2 = w * w + x * x + y * y + z * z;
        if (n2 - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(Self::canonical(w, x, y, z));
        }
        let n = n2.sqrt();
        if !(n > f64::MIN_POSITIVE) {
            return Err(GeometryError::DegenerateQuaternion { w, x, y, z });
        }
        Ok(Self::canonical(w / n, x / n, y / n, z / n))
    }

    /// Hemisphere selection. Ties at `w == 0` are broken on the first
    /// nonzero vector component so the representative is unique.
    fn canonical(w: f64, x: f64, y: f64, z: f64) -> Self {
        let flip = if w != 0.0 {
            w < 0.0
        } else if x != 0.0 {
            x < 0.0
        } else if y != 0.0 {
            y < 0.0
        } else {
            z < 0.0
        };
        // `+ 0.0` folds negative zeros so storage never carries -0.0.
        if flip {
            Self { w: -w + 0.0, x: -x + 0.0, y: -y + 0.0, z: -z + 0.0 }
        } else {
            Self { w: w + 0.0, x: x + 0.0, y: y + 0.0, z: z + 0.0 }
        }
    }

    /// Rotation of `angle_rad` about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vec3, angle_rad: f64) -> Result<Self, GeometryError> {
        let n = axis.norm();
        if !(n > f64::MIN_POSITIVE) {
            return if angle_rad == 0.0 {
                Ok(Self::IDENTITY)
            } else {
                Err(GeometryError::DegenerateQuaternion { w: 0.0, x: axis.x, y: axis.y, z: axis.z })
            };
        }
        let (s, c) = (angle_rad / 2.0).sin_cos();
        let a = axis.scale(s / n);
        Self::new(c, a.x, a.y, a.z)
    }

    /// Rotation with the given rotation vector (axis times angle, radians).
    pub fn from_rotation_vector(v: Vec3) -> Self {
        let angle = v.norm();
        if angle < 1e-300 {
            return Self::IDENTITY;
        }
        Self::from_axis_angle(v, angle).unwrap_or(Self::IDENTITY)
    }

    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    /// `[w, x, y, z]`.
    pub fn components(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn conjugate(&self) -> Quaternion {
        Self::canonical(self.w, -self.x, -self.y, -self.z)
    }

    /// Hamilton product `self * other`, renormalized.
    pub fn multiply(&self, o: &Quaternion) -> Quaternion {
        let (a, b) = (self, o);
        let w = a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z;
        let x = a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y;
        let y = a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x;
        let z = a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w;
        let n = (w * w + x * x + y * y + z * z).sqrt();
        Self::canonical(w / n, x / n, y / n, z / n)
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        // v' = v + 2w(u x v) + 2 u x (u x v)
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v).scale(2.0);
        v + t.scale(self.w) + u.cross(t)
    }

    /// Row-major rotation matrix.
    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        let Quaternion { w, x, y, z } = *self;
        [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ]
    }

    /// Quaternion of a proper rotation matrix (row-major). The input is
    /// assumed orthonormal; use a polar decomposition first for noisy data.
    pub fn from_matrix(m: &[[f64; 3]; 3]) -> Result<Self, GeometryError> {
        let trace = m[0][0] + m[1][1] + m[2][2];
        let (w, x, y, z) = if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            (0.25 * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s)
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
            ((m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s)
        } else if m[1][1] > m[2][2] {
            let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
            ((m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s)
        } else {
            let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
            ((m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s)
        };
        Self::new(w, x, y, z)
    }

    /// Rotation angle in degrees, in `[0, 180]`.
    pub fn angle_deg(&self) -> f64 {
        let v = (self.x * self.x + self.y * self.y + self.z * self.z).sqrt();
        (2.0 * v.atan2(self.w.abs())).to_degrees()
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, rhs: Quaternion) -> Quaternion {
        self.multiply(&rhs)
    }
}

/// Rigid transform `p -> rotation * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidTransform {
    pub rotation: Quaternion,
    pub translation: Translation,
}

/// Relative poses are plain rigid transforms: the query camera in the
/// anchor camera frame.
pub type RelativePose = RigidTransform;

impl RigidTransform {
    pub const IDENTITY: RigidTransform =
        RigidTransform { rotation: Quaternion::IDENTITY, translation: Vec3::ZERO };

    pub fn new(rotation: Quaternion, translation: Translation) -> Self {
        Self { rotation, translation }
    }

    pub fn inverse(&self) -> RigidTransform {
        let r = self.rotation.conjugate();
        RigidTransform { rotation: r, translation: -r.rotate(self.translation) }
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation.rotate(other.translation) + self.translation,
        }
    }

    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.translation
    }
}

/// A camera-to-world pose of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub frame_id: String,
    pub transform: RigidTransform,
}

impl Pose {
    pub fn new(frame_id: impl Into<String>, transform: RigidTransform) -> Self {
        Self { frame_id: frame_id.into(), transform }
    }

    pub fn rotation(&self) -> Quaternion {
        self.transform.rotation
    }

    pub fn translation(&self) -> Translation {
        self.transform.translation
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vec3 {
        self.transform.translation
    }
}

/// `a ∘ b`.
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

/// `inverse(anchor) ∘ query`, so that `compose(anchor, relative) == query`.
pub fn relative(anchor: &RigidTransform, query: &RigidTransform) -> RelativePose {
    anchor.inverse().compose(query)
}

pub fn translation_error(t: Translation, t_hat: Translation, norm: Norm) -> f64 {
    norm.of(t - t_hat)
}

/// Geodesic angle between two rotations in degrees, `[0, 180]`.
/// Insensitive to the sign of either quaternion.
///
/// Equal to `2 acos |⟨q, q̂⟩|`, evaluated as the angle of `q⁻¹ q̂` through
/// `atan2`, which stays accurate for nearly equal rotations.
pub fn rotation_error(q: &Quaternion, q_hat: &Quaternion) -> f64 {
    let (a, b) = (q, q_hat);
    let w = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
    let x = a.w * b.x - b.w * a.x - (a.y * b.z - a.z * b.y);
    let y = a.w * b.y - b.w * a.y - (a.z * b.x - a.x * b.z);
    let z = a.w * b.z - b.w * a.z - (a.x * b.y - a.y * b.x);
    let v = (x * x + y * y + z * z).sqrt();
    (2.0 * v.atan2(w.abs())).to_degrees()
}

/// Intrinsic Z-Y-X angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl EulerAngles {
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self { yaw, pitch, roll }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.yaw, self.pitch, self.roll]
    }
}

/// Decomposes `q` as `Rz(yaw) * Ry(pitch) * Rx(roll)`. Returns
/// [`GeometryError::GimbalLock`] when pitch is within
/// [`GIMBAL_LOCK_TOLERANCE_DEG`] of ±90°, where yaw and roll are not
/// separable.
pub fn to_euler(q: &Quaternion) -> Result<EulerAngles, GeometryError> {
    let [w, x, y, z] = q.components();
    let sin_pitch = (2.0 * (w * y - z * x)).clamp(-1.0, 1.0);
    let cos_pitch = {
        // Computed from the other matrix entries instead of sqrt(1 - s^2),
        // which loses precision near the poles.
        let m00 = 1.0 - 2.0 * (y * y + z * z);
        let m10 = 2.0 * (x * y + w * z);
        m00.hypot(m10)
    };
    let pitch = sin_pitch.atan2(cos_pitch).to_degrees();
    if 90.0 - pitch.abs() <= GIMBAL_LOCK_TOLERANCE_DEG {
        return Err(GeometryError::GimbalLock { pitch_deg: pitch });
    }
    let yaw = (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z)).to_degrees();
    let roll = (2.0 * (w * x + y * z)).atan2(1.0 - 2.0 * (x * x + y * y)).to_degrees();
    Ok(EulerAngles { yaw, pitch, roll })
}

/// Inverse of [`to_euler`].
pub fn from_euler(e: EulerAngles) -> Quaternion {
    let h = |deg: f64| (deg.to_radians() / 2.0).sin_cos();
    let (sy, cy) = h(e.yaw);
    let (sp, cp) = h(e.pitch);
    let (sr, cr) = h(e.roll);
    Quaternion::new(
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    )
    .expect("product of unit quaternions is unit")
}

/// Wraps an angle difference in degrees into `(-180, 180]`.
pub fn wrap_degrees(d: f64) -> f64 {
    let r = d.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}
