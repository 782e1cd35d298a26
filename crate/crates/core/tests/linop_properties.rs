//! Adjoint consistency and the power-method norm against an SVD.

use nalgebra::DMatrix;
use nspd_core::vector::dot;
use nspd_core::LinearMap;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dense(rows: usize, cols: usize, seed: u64) -> (LinearMap, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    (LinearMap::dense(rows, cols, data.clone()).unwrap(), data)
}

fn random_sparse(rows: usize, cols: usize, seed: u64) -> LinearMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if rng.random::<f64>() < 0.3 {
                t.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
    }
    LinearMap::sparse(rows, cols, &t).unwrap()
}

fn svd_norm(rows: usize, cols: usize, row_major: &[f64]) -> f64 {
    let m = DMatrix::from_row_slice(rows, cols, row_major);
    m.singular_values().max()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn adjoint_identity_holds(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>()) {
        let (dense, _) = random_dense(rows, cols, seed);
        let sparse = random_sparse(rows, cols, seed ^ 0xabc);
        let diag = LinearMap::diagonal(&(0..rows).map(|i| i as f64 - 2.5).collect::<Vec<_>>());
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        for map in [&dense, &sparse, &diag] {
            for _ in 0..100 {
                let u: Vec<f64> = (0..map.cols()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let w: Vec<f64> = (0..map.rows()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let lhs = dot(&map.apply(&u).unwrap(), &w);
                let rhs = dot(&u, &map.adjoint_apply(&w).unwrap());
                prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
            }
        }
    }

    #[test]
    fn power_method_matches_svd(rows in 2usize..30, cols in 2usize..30, seed in any::<u64>()) {
        let (map, data) = random_dense(rows, cols, seed);
        let exact = svd_norm(rows, cols, &data);
        let est = map.estimate_norm(1e-14, 100_000, 7).unwrap().sigma;
        prop_assert!((est - exact).abs() <= 1e-6 * exact, "{est} vs {exact}");
        let sparse = random_sparse(rows, cols, seed);
        let exact = svd_norm(rows, cols, &sparse.to_dense());
        prop_assert!((sparse.norm() - exact).abs() <= 1e-6 * exact.max(1e-12));
    }
}

#[test]
fn scaled_map_has_scaled_norm() {
    let (map, data) = random_dense(8, 5, 3);
    let exact = svd_norm(8, 5, &data);
    let half = map.scaled(0.5);
    assert!((half.norm() - 0.5 * exact).abs() < 1e-8 * exact);
}
