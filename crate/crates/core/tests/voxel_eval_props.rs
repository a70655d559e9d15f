mod common;

use bevkit::eval::{iou, rasterize_boxes, threshold, ScoreMap, VehicleBox};
use bevkit::grid::{AxisSpec, VoxelGridSpec};
use bevkit::voxel::{reduce_to_bev, voxelize, BevMask, OccupancyGrid};
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_points(rng: &mut impl Rng, n: usize) -> Vec<Vector3<f64>> {
    (0..n)
        .map(|_| Vector3::new(rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0), rng.random_range(-2.0..12.0)))
        .collect()
}

fn grid_64() -> VoxelGridSpec {
    VoxelGridSpec::new(
        AxisSpec::new(-16.0, 16.0, 64).unwrap(),
        AxisSpec::new(-16.0, 16.0, 64).unwrap(),
        AxisSpec::new(0.0, 1.0, 1).unwrap(),
    )
    .unwrap()
}

fn mask_strategy() -> impl Strategy<Value = BevMask> {
    prop::collection::vec(any::<bool>(), 48).prop_map(|v| BevMask::from_values(6, 8, v).unwrap())
}

#[test]
fn voxelize_matches_floor_indexing() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let spec = VoxelGridSpec::default();
    let pts = random_points(&mut rng, 10_000);
    let grid = voxelize(&common::cloud_of(pts.clone()), &spec);
    assert_eq!(grid.values(), common::voxelize_oracle(&pts, &spec).as_slice());
    assert!(grid.occupied() <= pts.len());
}

#[test]
fn reduce_matches_column_any() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let spec = VoxelGridSpec::new(
        AxisSpec::new(0.0, 1.0, 7).unwrap(),
        AxisSpec::new(0.0, 1.0, 5).unwrap(),
        AxisSpec::new(0.0, 1.0, 4).unwrap(),
    )
    .unwrap();
    let values: Vec<bool> = (0..7 * 5 * 4).map(|_| rng.random_bool(0.1)).collect();
    let grid = OccupancyGrid::from_values(spec, values).unwrap();
    let bev = reduce_to_bev(&grid);
    for x in 0..7 {
        for y in 0..5 {
            assert_eq!(bev.get(x, y), (0..4).any(|z| grid.get(x, y, z)));
        }
    }
    let mut single = OccupancyGrid::empty(spec);
    single.set(3, 2, 1);
    let bev = reduce_to_bev(&single);
    assert_eq!(bev.count(), 1);
    assert!(bev.get(3, 2));
}

#[test]
fn rasterize_matches_per_cell_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let spec = grid_64();
    for _ in 0..50 {
        let n = rng.random_range(0..=20);
        let boxes: Vec<VehicleBox> = (0..n)
            .map(|_| {
                VehicleBox::new(
                    [rng.random_range(-18.0..18.0), rng.random_range(-18.0..18.0)],
                    rng.random_range(0.3..6.0),
                    rng.random_range(0.3..3.0),
                    rng.random_range(0.0..std::f64::consts::TAU),
                )
                .unwrap()
            })
            .collect();
        let mask = rasterize_boxes(&boxes, &spec);
        assert_eq!(mask.values(), common::rasterize_oracle(&boxes, &spec).as_slice());
    }
}

proptest! {
    #[test]
    fn voxelize_is_idempotent_and_permutation_invariant(seed in any::<u64>(), n in 0usize..400) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = VoxelGridSpec::default();
        let pts = random_points(&mut rng, n);
        let base = voxelize(&common::cloud_of(pts.clone()), &spec);

        let mut doubled = pts.clone();
        doubled.extend_from_slice(&pts);
        prop_assert_eq!(&voxelize(&common::cloud_of(doubled), &spec), &base);

        let mut rev = pts.clone();
        rev.reverse();
        prop_assert_eq!(&voxelize(&common::cloud_of(rev), &spec), &base);

        prop_assert!(base.occupied() <= n.min(200 * 200 * 8));
    }

    #[test]
    fn adding_points_never_clears_voxels(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = VoxelGridSpec::default();
        let pts = random_points(&mut rng, 200);
        let base = voxelize(&common::cloud_of(pts.clone()), &spec);
        let mut more = pts;
        more.extend(random_points(&mut rng, 200));
        let grown = voxelize(&common::cloud_of(more), &spec);
        prop_assert!(base.values().iter().zip(grown.values()).all(|(a, b)| !*a || *b));
    }

    #[test]
    fn iou_is_symmetric_and_reflexive(a in mask_strategy(), b in mask_strategy()) {
        prop_assert_eq!(iou(&a, &b).unwrap(), iou(&b, &a).unwrap());
        prop_assert_eq!(iou(&a, &a).unwrap(), 1.0);
        let v = iou(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn threshold_is_monotone(scores in prop::collection::vec(0.0..=1.0f32, 12), t1 in 0.0..=1.0f64, t2 in 0.0..=1.0f64) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let s = ScoreMap::new(3, 4, scores).unwrap();
        let loose = threshold(&s, lo);
        let strict = threshold(&s, hi);
        prop_assert!(strict.values().iter().zip(loose.values()).all(|(s, l)| !*s || *l));
    }
}
