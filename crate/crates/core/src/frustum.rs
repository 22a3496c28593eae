//! Frustum-overlap scoring between two camera poses.
//!
//! The anchor camera is represented by its six bounding planes, the other
//! camera by a regular lattice of points filling its viewing volume. The
//! score is the fraction of lattice points that fall inside the anchor's
//! planes, and it is forced to zero once the relative rotation between the
//! two cameras exceeds a configurable gate.
//!
//! Camera frame: `+z` is the optical axis, `+x` right, `+y` down.

use std::fmt;

use thiserror::Error;

use crate::geometry::{rotation_error, Pose, Quaternion, RigidTransform, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrustumError {
    #[error("field of view must lie in (0, 180) degrees, got hfov={hfov} vfov={vfov}")]
    FieldOfView { hfov: f64, vfov: f64 },
    #[error("clip distances must satisfy 0 < near < far, got near={near} far={far}")]
    ClipRange { near: f64, far: f64 },
    #[error("grid {0}x{1}x{2} must have every dimension >= 1 and at least 8 points")]
    Grid(usize, usize, usize),
    #[error("boundary epsilon must be finite and >= 0, got {0}")]
    Epsilon(f64),
    #[error("rotation gate must lie in (0, 180] degrees, got {0}")]
    RotationGate(f64),
    #[error("cannot parse grid '{0}' (expected NXxNYxNZ)")]
    GridSyntax(String),
}

/// Lattice resolution of the point frustum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Grid {
    pub const fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Self { nx, ny, nz }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.nx, self.ny, self.nz)
    }
}

impl std::str::FromStr for Grid {
    type Err = FrustumError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<_> = s.split(['x', 'X']).map(str::trim).collect();
        let bad = || FrustumError::GridSyntax(s.to_string());
        if parts.len() != 3 {
            return Err(bad());
        }
        let n = |i: usize| parts[i].parse::<usize>().map_err(|_| bad());
        Ok(Grid::new(n(0)?, n(1)?, n(2)?))
    }
}

/// Viewing-volume parameters shared by both frustum representations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrustumSpec {
    pub hfov_deg: f64,
    pub vfov_deg: f64,
    pub near: f64,
    pub far: f64,
    pub grid: Grid,
    /// Points this far outside a face (meters) still count as inside.
    pub boundary_epsilon: f64,
}

impl Default for FrustumSpec {
    /// Roughly the Kinect viewing volume.
    fn default() -> Self {
        Self {
            hfov_deg: 58.0,
            vfov_deg: 45.0,
            near: 0.1,
            far: 4.0,
            grid: Grid::new(8, 8, 8),
            boundary_epsilon: 1e-9,
        }
    }
}

impl FrustumSpec {
    pub fn validate(&self) -> Result<(), FrustumError> {
        let fov_ok = |a: f64| a > 0.0 && a < 180.0;
        if !(fov_ok(self.hfov_deg) && fov_ok(self.vfov_deg)) {
            return Err(FrustumError::FieldOfView { hfov: self.hfov_deg, vfov: self.vfov_deg });
        }
        if !(self.near > 0.0 && self.near < self.far && self.far.is_finite()) {
            return Err(FrustumError::ClipRange { near: self.near, far: self.far });
        }
        let g = self.grid;
        if g.nx == 0 || g.ny == 0 || g.nz == 0 || g.len() < 8 {
            return Err(FrustumError::Grid(g.nx, g.ny, g.nz));
        }
        if !(self.boundary_epsilon >= 0.0 && self.boundary_epsilon.is_finite()) {
            return Err(FrustumError::Epsilon(self.boundary_epsilon));
        }
        Ok(())
    }

    pub fn tan_half_h(&self) -> f64 {
        (self.hfov_deg.to_radians() / 2.0).tan()
    }

    pub fn tan_half_v(&self) -> f64 {
        (self.vfov_deg.to_radians() / 2.0).tan()
    }

    /// Number of lattice points, `N_b`.
    pub fn point_count(&self) -> usize {
        self.grid.len()
    }

    /// Eight corners of the truncated pyramid in camera coordinates,
    /// near face first.
    pub fn camera_corners(&self) -> [Vec3; 8] {
        let (th, tv) = (self.tan_half_h(), self.tan_half_v());
        let mut out = [Vec3::ZERO; 8];
        let mut i = 0;
        for d in [self.near, self.far] {
            for sy in [-1.0, 1.0] {
                for sx in [-1.0, 1.0] {
                    out[i] = Vec3::new(sx * d * th, sy * d * tv, d);
                    i += 1;
                }
            }
        }
        out
    }
}

/// Overlap scoring parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapConfig {
    pub frustum: FrustumSpec,
    /// Pairs whose relative rotation exceeds this (degrees) score zero.
    pub max_relative_rotation_deg: f64,
    /// Score both directions and keep the smaller one.
    pub symmetric: bool,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        Self { frustum: FrustumSpec::default(), max_relative_rotation_deg: 110.0, symmetric: false }
    }
}

impl OverlapConfig {
    pub fn validate(&self) -> Result<(), FrustumError> {
        self.frustum.validate()?;
        let g = self.max_relative_rotation_deg;
        if !(g > 0.0 && g <= 180.0) {
            return Err(FrustumError::RotationGate(g));
        }
        Ok(())
    }
}

/// Oriented plane; `signed_distance >= 0` on the inner side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
}

impl Plane {
    fn through_origin(normal: Vec3) -> Self {
        Plane { normal: normal.scale(1.0 / normal.norm()), offset: 0.0 }
    }

    pub fn signed_distance(&self, p: Vec3) -> f64 {
        self.normal.dot(p) + self.offset
    }

    fn transformed(&self, t: &RigidTransform) -> Plane {
        let normal = t.rotation.rotate(self.normal);
        Plane { normal, offset: self.offset - normal.dot(t.translation) }
    }
}

/// Plane representation: near, far, left, right, top, bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFrustum {
    pub planes: [Plane; 6],
    pub boundary_epsilon: f64,
}

impl PlaneFrustum {
    pub fn near(&self) -> &Plane {
        &self.planes[0]
    }

    pub fn far(&self) -> &Plane {
        &self.planes[1]
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let eps = -self.boundary_epsilon;
        self.planes.iter().all(|pl| pl.signed_distance(p) >= eps)
    }

    /// Number of `points` inside the frustum.
    pub fn count_contained(&self, points: &[Vec3]) -> usize {
        points.iter().filter(|p| self.contains(**p)).count()
    }
}

/// Lattice representation: `N_b` world-space points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFrustum {
    pub points: Vec<Vec3>,
}

impl PointFrustum {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Evenly spaced values over `[lo, hi]`, both ends included. A single
/// sample sits at the midpoint.
fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            0.5 * (lo + hi)
        } else if i == n - 1 {
            hi
        } else {
            lo + (hi - lo) * (i as f64) / ((n - 1) as f64)
        }
    })
}

pub fn build_plane_frustum(pose: &Pose, spec: &FrustumSpec) -> PlaneFrustum {
    build_plane_frustum_at(&pose.transform, spec)
}

pub fn build_plane_frustum_at(t: &RigidTransform, spec: &FrustumSpec) -> PlaneFrustum {
    let (th, tv) = (spec.tan_half_h(), spec.tan_half_v());
    let camera = [
        Plane { normal: Vec3::new(0.0, 0.0, 1.0), offset: -spec.near },
        Plane { normal: Vec3::new(0.0, 0.0, -1.0), offset: spec.far },
        // x >= -z tan(h/2)
        Plane::through_origin(Vec3::new(1.0, 0.0, th)),
        Plane::through_origin(Vec3::new(-1.0, 0.0, th)),
        Plane::through_origin(Vec3::new(0.0, 1.0, tv)),
        Plane::through_origin(Vec3::new(0.0, -1.0, tv)),
    ];
    PlaneFrustum {
        planes: camera.map(|p| p.transformed(t)),
        boundary_epsilon: spec.boundary_epsilon,
    }
}

pub fn build_point_frustum(pose: &Pose, spec: &FrustumSpec) -> PointFrustum {
    build_point_frustum_at(&pose.transform, spec)
}

pub fn build_point_frustum_at(t: &RigidTransform, spec: &FrustumSpec) -> PointFrustum {
    let (th, tv) = (spec.tan_half_h(), spec.tan_half_v());
    let g = spec.grid;
    let mut points = Vec::with_capacity(g.len());
    for d in linspace(spec.near, spec.far, g.nz) {
        let (hx, hy) = (d * th, d * tv);
        for y in linspace(-hy, hy, g.ny) {
            for x in linspace(-hx, hx, g.nx) {
                points.push(t.transform_point(Vec3::new(x, y, d)));
            }
        }
    }
    PointFrustum { points }
}

/// Bounding sphere of a frustum in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

impl Sphere {
    pub fn intersects(&self, other: &Sphere) -> bool {
        (self.center - other.center).norm() <= self.radius + other.radius
    }
}

/// Sphere on the optical axis enclosing all eight corners.
pub fn bounding_sphere(t: &RigidTransform, spec: &FrustumSpec) -> Sphere {
    let corners = spec.camera_corners();
    // The center minimizing the max distance to a symmetric frustum lies on
    // the axis; pick the depth that equalizes near and far corner distances,
    // clamped into [near, far].
    let rn2 = corners[0].x.powi(2) + corners[0].y.powi(2);
    let rf2 = corners[4].x.powi(2) + corners[4].y.powi(2);
    let (n, f) = (spec.near, spec.far);
    let c = ((rf2 + f * f - rn2 - n * n) / (2.0 * (f - n))).clamp(n, f);
    let center_cam = Vec3::new(0.0, 0.0, c);
    let radius = corners.iter().map(|p| (*p - center_cam).norm()).fold(0.0, f64::max);
    // Padding keeps lattice points that touch the boundary inside the sphere.
    let pad = spec.boundary_epsilon + 1e-9 * (1.0 + f);
    Sphere { center: t.transform_point(center_cam), radius: radius + pad }
}

/// Per-pose frustum data, built once and reused across all pairs.
#[derive(Debug, Clone)]
pub struct CameraFrustum {
    pub rotation: Quaternion,
    pub planes: PlaneFrustum,
    pub points: PointFrustum,
    pub sphere: Sphere,
}

impl CameraFrustum {
    pub fn new(pose: &Pose, spec: &FrustumSpec) -> Self {
        Self::from_transform(&pose.transform, spec)
    }

    pub fn from_transform(t: &RigidTransform, spec: &FrustumSpec) -> Self {
        Self {
            rotation: t.rotation,
            planes: build_plane_frustum_at(t, spec),
            points: build_point_frustum_at(t, spec),
            sphere: bounding_sphere(t, spec),
        }
    }
}

/// Fraction of `other`'s lattice inside `anchor`'s planes, with the
/// rotation gate and the bounding-sphere reject applied first.
/// `early_reject = false` skips the sphere test; it never changes the result.
pub fn directional_score(
    anchor: &CameraFrustum,
    other: &CameraFrustum,
    cfg: &OverlapConfig,
    early_reject: bool,
) -> f64 {
    if rotation_error(&anchor.rotation, &other.rotation) > cfg.max_relative_rotation_deg {
        return 0.0;
    }
    if early_reject && !anchor.sphere.intersects(&other.sphere) {
        return 0.0;
    }
    let n = other.points.len();
    anchor.planes.count_contained(&other.points.points) as f64 / n as f64
}

/// Overlap score on prepared frustums, honoring `cfg.symmetric`.
pub fn overlap_score_prepared(
    anchor: &CameraFrustum,
    other: &CameraFrustum,
    cfg: &OverlapConfig,
    early_reject: bool,
) -> f64 {
    let forward = directional_score(anchor, other, cfg, early_reject);
    if cfg.symmetric && forward > 0.0 {
        forward.min(directional_score(other, anchor, cfg, early_reject))
    } else {
        forward
    }
}

/// Overlap score of `other` as seen from `anchor`, in `[0, 1]`.
pub fn overlap_score(anchor: &Pose, other: &Pose, cfg: &OverlapConfig) -> f64 {
    let a = CameraFrustum::new(anchor, &cfg.frustum);
    let b = CameraFrustum::new(other, &cfg.frustum);
    overlap_score_prepared(&a, &b, cfg, true)
}
