mod common;

use common::{matrix, matrix_angle_deg, quat_distance, random_transform, rng};
use frustoval::geometry::{
    compose, from_euler, relative, rotation_error, to_euler, translation_error, wrap_degrees, EulerAngles,
    GeometryError, Norm, Quaternion, RigidTransform, Vec3,
};
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;

fn quat() -> impl Strategy<Value = Quaternion> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("non-degenerate", |(w, x, y, z)| w * w + x * x + y * y + z * z > 1e-3)
        .prop_map(|(w, x, y, z)| Quaternion::new(w, x, y, z).unwrap())
}

fn vec3(half: f64) -> impl Strategy<Value = Vec3> {
    (-half..half, -half..half, -half..half).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn transform() -> impl Strategy<Value = RigidTransform> {
    (quat(), vec3(10.0)).prop_map(|(q, t)| RigidTransform::new(q, t))
}

fn close(a: &RigidTransform, b: &RigidTransform, tol: f64) -> bool {
    quat_distance(&a.rotation, &b.rotation) <= tol && (a.translation - b.translation).norm_l1() <= 3.0 * tol
}

#[test]
fn compose_of_relative_recovers_query_on_a_thousand_pairs() {
    let mut r = rng(11);
    for _ in 0..1000 {
        let (a, b) = (random_transform(&mut r, 20.0), random_transform(&mut r, 20.0));
        let back = compose(&a, &relative(&a, &b));
        assert!(quat_distance(&back.rotation, &b.rotation) <= 1e-9);
        for (x, y) in back.translation.to_array().iter().zip(b.translation.to_array()) {
            assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }
}

#[test]
fn relative_matches_matrix_product() {
    let mut r = rng(12);
    for _ in 0..200 {
        let (a, b) = (random_transform(&mut r, 5.0), random_transform(&mut r, 5.0));
        let expect = matrix(&a).try_inverse().unwrap() * matrix(&b);
        let got = matrix(&relative(&a, &b));
        assert!((expect - got).abs().max() < 1e-12);
    }
}

#[test]
fn quarter_turn_is_ninety_degrees() {
    let q = Quaternion::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), std::f64::consts::FRAC_PI_2).unwrap();
    assert!((rotation_error(&Quaternion::IDENTITY, &q) - 90.0).abs() <= 1e-9);
    let q = Quaternion::from_axis_angle(Vec3::new(1.0, -2.0, 0.5), std::f64::consts::FRAC_PI_2).unwrap();
    assert!((rotation_error(&Quaternion::IDENTITY, &q) - 90.0).abs() <= 1e-9);
}

#[test]
fn rotation_error_triangle_inequality_on_ten_thousand_triples() {
    let mut r = rng(13);
    for _ in 0..10_000 {
        let a = common::random_quaternion(&mut r);
        let b = common::random_quaternion(&mut r);
        let c = common::random_quaternion(&mut r);
        assert!(rotation_error(&a, &c) <= rotation_error(&a, &b) + rotation_error(&b, &c) + 1e-9);
    }
}

#[test]
fn canonical_hemisphere_and_signed_zero() {
    let q = Quaternion::new(-0.5, 0.5, -0.5, 0.5).unwrap();
    assert_eq!(q.components(), [0.5, -0.5, 0.5, -0.5]);
    let q = Quaternion::new(0.0, -1.0, 0.0, 0.0).unwrap();
    assert_eq!(q.components(), [0.0, 1.0, 0.0, 0.0]);
    assert!(q.components()[0].is_sign_positive());
    assert!(Quaternion::new(0.0, 0.0, 0.0, 0.0).is_err());
    assert!(Quaternion::new(f64::NAN, 1.0, 0.0, 0.0).is_err());
}

#[test]
fn gimbal_lock_is_reported() {
    let q = from_euler(EulerAngles::new(30.0, 90.0, 10.0));
    assert!(matches!(to_euler(&q), Err(GeometryError::GimbalLock { .. })));
    let q = from_euler(EulerAngles::new(30.0, -90.0, 10.0));
    assert!(matches!(to_euler(&q), Err(GeometryError::GimbalLock { .. })));
    assert!(to_euler(&from_euler(EulerAngles::new(30.0, 89.9, 10.0))).is_ok());
}

#[test]
fn wrap_degrees_range() {
    assert_eq!(wrap_degrees(180.0), 180.0);
    assert_eq!(wrap_degrees(-180.0), 180.0);
    assert_eq!(wrap_degrees(190.0), -170.0);
    assert_eq!(wrap_degrees(-350.0), 10.0);
    assert_eq!(wrap_degrees(720.0), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn compose_relative_round_trip(a in transform(), b in transform()) {
        prop_assert!(close(&compose(&a, &relative(&a, &b)), &b, 1e-9));
    }

    #[test]
    fn inverse_composes_to_identity(a in transform()) {
        prop_assert!(close(&a.compose(&a.inverse()), &RigidTransform::IDENTITY, 1e-9));
    }

    #[test]
    fn compose_is_associative(a in transform(), b in transform(), c in transform()) {
        prop_assert!(close(&a.compose(&b).compose(&c), &a.compose(&b.compose(&c)), 1e-9));
    }

    #[test]
    fn quaternions_are_unit_and_canonical(q in quat()) {
        let [w, x, y, z] = q.components();
        prop_assert!((w * w + x * x + y * y + z * z - 1.0).abs() < 1e-12);
        prop_assert!(w >= 0.0);
    }

    #[test]
    fn rotation_error_is_a_metric(a in quat(), b in quat(), c in quat()) {
        let d = rotation_error(&a, &b);
        prop_assert!((0.0..=180.0).contains(&d));
        prop_assert!(rotation_error(&a, &a) < 1e-5);
        prop_assert!((d - rotation_error(&b, &a)).abs() < 1e-9);
        prop_assert!(rotation_error(&a, &c) <= d + rotation_error(&b, &c) + 1e-9);
    }

    #[test]
    fn rotation_error_ignores_sign(q in quat()) {
        let [w, x, y, z] = q.components();
        // The negation is a different storage of the same rotation.
        let neg = Quaternion::new(-w, -x, -y, -z).unwrap();
        prop_assert!(rotation_error(&q, &neg) < 1e-5);
        prop_assert_eq!(neg, q);
    }

    #[test]
    fn rotation_error_matches_matrix_angle(a in quat(), b in quat()) {
        let ta = RigidTransform::new(a, Vec3::ZERO);
        let tb = RigidTransform::new(b, Vec3::ZERO);
        let m = matrix_angle_deg(&matrix(&ta), &matrix(&tb));
        // acos of the trace is ill-conditioned near 0 and 180 degrees.
        prop_assert!((rotation_error(&a, &b) - m).abs() < 1e-4);
    }

    #[test]
    fn rotation_error_is_left_invariant(a in quat(), b in quat(), g in quat()) {
        let d = rotation_error(&a, &b);
        prop_assert!((rotation_error(&(g * a), &(g * b)) - d).abs() < 1e-5);
    }

    #[test]
    fn translation_norms_are_ordered(t in vec3(100.0), u in vec3(100.0)) {
        let l1 = translation_error(t, u, Norm::L1);
        let l2 = translation_error(t, u, Norm::L2);
        prop_assert!(l2 <= l1 + 1e-12);
        prop_assert!(l1 <= 3f64.sqrt() * l2 + 1e-9);
        prop_assert_eq!(translation_error(t, t, Norm::L2), 0.0);
    }

    #[test]
    fn euler_round_trip(yaw in -179.9f64..179.9, pitch in -89.0f64..89.0, roll in -179.9f64..179.9) {
        let q = from_euler(EulerAngles::new(yaw, pitch, roll));
        let e = to_euler(&q).unwrap();
        prop_assert!(wrap_degrees(e.yaw - yaw).abs() < 1e-7);
        prop_assert!((e.pitch - pitch).abs() < 1e-7);
        prop_assert!(wrap_degrees(e.roll - roll).abs() < 1e-7);
    }

    #[test]
    fn euler_matches_rz_ry_rx(yaw in -180.0f64..180.0, pitch in -89.0f64..89.0, roll in -180.0f64..180.0) {
        let expect = Rotation3::from_axis_angle(&Vector3::z_axis(), yaw.to_radians())
            * Rotation3::from_axis_angle(&Vector3::y_axis(), pitch.to_radians())
            * Rotation3::from_axis_angle(&Vector3::x_axis(), roll.to_radians());
        let got = from_euler(EulerAngles::new(yaw, pitch, roll)).to_matrix();
        for (i, row) in got.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                prop_assert!((v - expect[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matrix_round_trip(q in quat()) {
        let back = Quaternion::from_matrix(&q.to_matrix()).unwrap();
        prop_assert!(quat_distance(&back, &q) < 1e-12);
    }

    #[test]
    fn rotation_vector_angle(v in vec3(1.8)) {
        prop_assume!(v.norm() < 3.1);
        let q = Quaternion::from_rotation_vector(v);
        let expect = v.norm().to_degrees();
        prop_assert!((q.angle_deg() - expect).abs() < 1e-7);
    }
}
