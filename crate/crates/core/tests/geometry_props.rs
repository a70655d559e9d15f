use bevkit::geometry::{project_point, transform_points, unproject_pixel, CameraIntrinsics, RigidPose};
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;

fn intrinsics() -> impl Strategy<Value = CameraIntrinsics> {
    (10.0..2000.0f64, 10.0..2000.0f64, 0.0..1600.0f64, 0.0..900.0f64)
        .prop_map(|(fx, fy, cx, cy)| CameraIntrinsics::new(fx, fy, cx, cy, 1600, 900).unwrap())
}

fn pose() -> impl Strategy<Value = RigidPose> {
    (
        prop::array::uniform3(-3.2..3.2f64),
        prop::array::uniform3(-100.0..100.0f64),
    )
        .prop_map(|(r, t)| {
            let rot = Rotation3::from_euler_angles(r[0], r[1], r[2]);
            RigidPose::new(*rot.matrix(), Vector3::from(t)).unwrap()
        })
}

fn points() -> impl Strategy<Value = Vec<Vector3<f64>>> {
    prop::collection::vec(prop::array::uniform3(-100.0..100.0f64).prop_map(Vector3::from), 1..32)
}

proptest! {
    #[test]
    fn project_inverts_unproject(intr in intrinsics(), u in -200.0..1800.0f64, v in -200.0..1100.0f64, z in 0.01..500.0f64) {
        let p = unproject_pixel(&intr, u, v, z).unwrap();
        let q = project_point(&intr, &p).unwrap();
        prop_assert!((q.u - u).abs() < 1e-6);
        prop_assert!((q.v - v).abs() < 1e-6);
        prop_assert!((q.depth - z).abs() < 1e-9);
    }

    #[test]
    fn pose_inverse_round_trip(pose in pose(), pts in points()) {
        let back = transform_points(&pose.inverse(), &transform_points(&pose, &pts));
        for (a, b) in pts.iter().zip(&back) {
            prop_assert!((a - b).abs().max() < 1e-9);
        }
    }

    #[test]
    fn transforms_are_rigid(pose in pose(), pts in points()) {
        let moved = transform_points(&pose, &pts);
        prop_assert_eq!(moved.len(), pts.len());
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let before = (pts[i] - pts[j]).norm();
                let after = (moved[i] - moved[j]).norm();
                prop_assert!((before - after).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn identity_pose_is_identity(pts in points()) {
        prop_assert_eq!(transform_points(&RigidPose::identity(), &pts), pts);
    }
}
