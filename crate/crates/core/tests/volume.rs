mod common;

use common::criteria::{self, wave_grid, worst_gradient_error};
use common::*;
use loupe_core::geom::Vec3;
use loupe_core::phantom::{generate_phantom, PhantomSpec};
use loupe_core::volume::{downsample, load_raw, write_raw, ScalarType, VolumeGrid};
use loupe_oracles::{self as oracle, Grid};
use rand::RngExt;

fn engine_grid(g: &Grid) -> VolumeGrid {
    VolumeGrid::new(g.dims, g.spacing, g.origin, g.values.clone()).unwrap()
}

#[test]
fn trilinear_is_exact_on_affine_fields() {
    let f = |p: [f64; 3]| 0.4 + 0.1 * p[0] - 0.05 * p[1] + 0.2 * p[2];
    let g = Grid::from_fn([9, 7, 5], [0.1, 0.15, 0.2], [-0.4, -0.45, -0.4], f);
    let grid = engine_grid(&g);
    let (lo, hi) = grid.bounds();
    let mut r = rng(10);
    for _ in 0..20_000 {
        let p = Vec3::new(
            r.random_range(lo.x..=hi.x),
            r.random_range(lo.y..=hi.y),
            r.random_range(lo.z..=hi.z),
        );
        assert!((grid.sample_trilinear(&p) - f(v3(&p))).abs() < 1e-12);
    }
}

#[test]
fn trilinear_matches_eight_corner_oracle_on_noise() {
    let mut r = rng(11);
    let dims = [6, 5, 4];
    let values: Vec<f64> = (0..120).map(|_| r.random_range(0.0..1.0)).collect();
    let g = Grid { dims, spacing: [0.3, 0.2, 0.5], origin: [1.0, -1.0, 0.0], values };
    let grid = engine_grid(&g);
    for _ in 0..20_000 {
        // Slightly larger than the box so the outside rule is exercised too.
        let p = [
            r.random_range(0.9..2.6),
            r.random_range(-1.1..-0.1),
            r.random_range(-0.1..1.6),
        ];
        let got = grid.sample_trilinear(&Vec3::from(p));
        assert!((got - g.trilinear(p)).abs() < 1e-12, "{p:?}");
    }
}

#[test]
fn gradient_magnitude_within_five_percent_at_64() {
    criteria::gradient_at_64();
}

#[test]
fn gradient_error_shrinks_with_resolution() {
    let coarse = worst_gradient_error(&wave_grid(24), 13);
    let fine = worst_gradient_error(&wave_grid(48), 13);
    // Second-order differences on a piecewise-linear interpolant: at least
    // a halving of the error per doubling.
    assert!(fine < 0.5 * coarse, "{coarse} → {fine}");
}

#[test]
fn phantom_wreck_voxels_match_brute_force_count() {
    let spec = PhantomSpec::default();
    let with = generate_phantom(&spec).unwrap();
    let without = generate_phantom(&spec.without_wreck()).unwrap();
    let w = spec.wreck.unwrap();
    let [nx, ny, nz] = spec.dims;
    let mut expected = 0;
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let f = [
                    i as f64 / (nx - 1) as f64,
                    j as f64 / (ny - 1) as f64,
                    k as f64 / (nz - 1) as f64,
                ];
                expected += oracle::in_ellipsoid(f, w.center, w.semi_axes) as usize;
            }
        }
    }
    let raised: Vec<f64> = with
        .values()
        .iter()
        .zip(without.values())
        .filter(|(a, b)| a != b)
        .map(|(a, b)| a - b)
        .collect();
    assert_eq!(raised.len(), expected);
    assert!(expected > 1_000);
    assert!(raised.iter().all(|d| (d - w.delta).abs() < 1e-12));
}

#[test]
fn downsample_is_block_mean() {
    let mut r = rng(14);
    let dims = [8, 6, 4];
    let values: Vec<f64> = (0..dims.iter().product()).map(|_| r.random_range(0.0..1.0)).collect();
    let g = Grid { dims, spacing: [1.0, 2.0, 0.5], origin: [0.0; 3], values };
    let small = downsample(&engine_grid(&g), [2, 3, 2]).unwrap();
    assert_eq!(small.dims(), [4, 2, 2]);
    assert_eq!(small.spacing(), [2.0, 6.0, 1.0]);
    for k in 0..2 {
        for j in 0..2 {
            for i in 0..4 {
                let mut sum = 0.0;
                for (di, dj, dk) in block_offsets(2, 3, 2) {
                    sum += g.at(2 * i + di, 3 * j + dj, 2 * k + dk);
                }
                assert!((small.value(i, j, k) - sum / 12.0).abs() < 1e-12);
            }
        }
    }
    // Block centers: the first block of two voxels at 0 and 1 is centered at 0.5.
    let o = small.origin();
    assert!((o[0] - 0.5).abs() < 1e-12 && (o[1] - 2.0).abs() < 1e-12 && (o[2] - 0.25).abs() < 1e-12);
}

fn block_offsets(a: usize, b: usize, c: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..c).flat_map(move |k| (0..b).flat_map(move |j| (0..a).map(move |i| (i, j, k))))
}

#[test]
fn raw_roundtrip_u8_quantizes_and_f32_is_close() {
    let dir = tempfile::tempdir().unwrap();
    let grid = wave_grid(9);
    for (dtype, tol) in [(ScalarType::U8, 0.5 / 255.0 + 1e-12), (ScalarType::F32, 1e-7)] {
        let data = dir.path().join(format!("v.{}", dtype.as_str()));
        let meta_path = dir.path().join(format!("v.{}.json", dtype.as_str()));
        let meta = write_raw(&grid, &data, &meta_path, dtype).unwrap();
        assert_eq!(std::fs::metadata(&data).unwrap().len(), meta.expected_bytes().unwrap());
        let back = load_raw(&data, &meta).unwrap();
        assert_eq!(back.dims(), grid.dims());
        for (a, b) in back.values().iter().zip(grid.values()) {
            assert!((a - b).abs() <= tol);
        }
    }
}
