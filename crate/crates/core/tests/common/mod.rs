//! Random inputs and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use frustoval::frustum::OverlapConfig;
use frustoval::geometry::{Pose, Quaternion, RigidTransform, Vec3};
use nalgebra::{Matrix4, UnitQuaternion, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform rotation (Shoemake's subgroup algorithm).
pub fn random_quaternion(rng: &mut ChaCha8Rng) -> Quaternion {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    Quaternion::new(a * (tau * u2).sin(), a * (tau * u2).cos(), b * (tau * u3).sin(), b * (tau * u3).cos()).unwrap()
}

pub fn random_vec(rng: &mut ChaCha8Rng, half: f64) -> Vec3 {
    Vec3::new(rng.random_range(-half..half), rng.random_range(-half..half), rng.random_range(-half..half))
}

pub fn random_transform(rng: &mut ChaCha8Rng, half: f64) -> RigidTransform {
    RigidTransform::new(random_quaternion(rng), random_vec(rng, half))
}

/// Rotation of at most `max_deg` about a random axis.
pub fn small_rotation(rng: &mut ChaCha8Rng, max_deg: f64) -> Quaternion {
    let axis = random_vec(rng, 1.0);
    let angle = rng.random_range(0.0..max_deg).to_radians();
    Quaternion::from_axis_angle(axis, angle).unwrap_or(Quaternion::IDENTITY)
}

/// A pose within `max_t` meters and `max_deg` degrees of `base`.
pub fn nearby(rng: &mut ChaCha8Rng, base: &RigidTransform, max_t: f64, max_deg: f64) -> RigidTransform {
    RigidTransform::new(base.rotation * small_rotation(rng, max_deg), base.translation + random_vec(rng, max_t))
}

pub fn pose(id: &str, t: RigidTransform) -> Pose {
    Pose::new(id, t)
}

/// Homogeneous camera-to-world matrix built through nalgebra's own
/// quaternion conversion.
pub fn matrix(t: &RigidTransform) -> Matrix4<f64> {
    let [w, x, y, z] = t.rotation.components();
    let q = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(w, x, y, z));
    let mut m = q.to_homogeneous();
    m[(0, 3)] = t.translation.x;
    m[(1, 3)] = t.translation.y;
    m[(2, 3)] = t.translation.z;
    m
}

fn steps(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

/// Camera-frame lattice of `N_b` points.
pub fn camera_lattice(cfg: &OverlapConfig) -> Vec<Vector4<f64>> {
    let f = &cfg.frustum;
    let (th, tv) = ((f.hfov_deg.to_radians() / 2.0).tan(), (f.vfov_deg.to_radians() / 2.0).tan());
    let mut out = Vec::new();
    for d in steps(f.near, f.far, f.grid.nz) {
        for y in steps(-d * tv, d * tv, f.grid.ny) {
            for x in steps(-d * th, d * th, f.grid.nx) {
                out.push(Vector4::new(x, y, d, 1.0));
            }
        }
    }
    out
}

/// Pyramid inequalities in the anchor camera frame, with the slack scaled
/// so it matches a distance along the face normal.
pub fn inside_camera(p: &Vector4<f64>, cfg: &OverlapConfig) -> bool {
    let f = &cfg.frustum;
    let (th, tv) = ((f.hfov_deg.to_radians() / 2.0).tan(), (f.vfov_deg.to_radians() / 2.0).tan());
    let e = f.boundary_epsilon;
    let (x, y, z) = (p.x, p.y, p.z);
    z >= f.near - e
        && z <= f.far + e
        && x.abs() <= z * th + e * (1.0 + th * th).sqrt()
        && y.abs() <= z * tv + e * (1.0 + tv * tv).sqrt()
}

/// Relative rotation angle in degrees from rotation matrices.
pub fn matrix_angle_deg(a: &Matrix4<f64>, b: &Matrix4<f64>) -> f64 {
    let ra = a.fixed_view::<3, 3>(0, 0);
    let rb = b.fixed_view::<3, 3>(0, 0);
    let rel = ra.transpose() * rb;
    ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Directional overlap by brute force: `other`'s lattice mapped into
/// `anchor`'s camera frame and tested against the pyramid inequalities.
pub fn oracle_directional(anchor: &RigidTransform, other: &RigidTransform, cfg: &OverlapConfig) -> (f64, usize) {
    let (ma, mb) = (matrix(anchor), matrix(other));
    if matrix_angle_deg(&ma, &mb) > cfg.max_relative_rotation_deg {
        return (0.0, 0);
    }
    let to_anchor = ma.try_inverse().unwrap() * mb;
    let lattice = camera_lattice(cfg);
    let inside = lattice.iter().filter(|p| inside_camera(&(to_anchor * *p), cfg)).count();
    (inside as f64 / lattice.len() as f64, inside)
}

pub fn oracle_overlap(anchor: &RigidTransform, other: &RigidTransform, cfg: &OverlapConfig) -> f64 {
    let (forward, _) = oracle_directional(anchor, other, cfg);
    if cfg.symmetric {
        forward.min(oracle_directional(other, anchor, cfg).0)
    } else {
        forward
    }
}

/// Component-wise distance between quaternions up to sign.
pub fn quat_distance(a: &Quaternion, b: &Quaternion) -> f64 {
    let (ca, cb) = (a.components(), b.components());
    let plus = ca.iter().zip(cb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let minus = ca.iter().zip(cb).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
    plus.min(minus)
}
