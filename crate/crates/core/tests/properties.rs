use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tfio::{
    central_random_signal, fio_apply, read_field, stft, torus_fio_apply, torus_grid, write_field, FioProblem, GaborSystem, PhaseSpec,
    SampledField, SymbolSpec, TorusSignal, UniformGrid, C64,
};

fn bump(grid: UniformGrid, x: f64, xi: f64) -> SampledField {
    SampledField::from_fn_1d(grid, |t| C64::from_polar((-PI * (t - x).powi(2)).exp(), TAU * xi * t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn field_files_round_trip(n in 2usize..24, half in 0.5f64..10.0, blocks in 1usize..3, seed in any::<u64>()) {
        let grid = UniformGrid::line(2 * n, half).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<C64> = (0..grid.len().pow(blocks as u32))
            .map(|_| C64::new(rand::Rng::gen_range(&mut rng, -1e3..1e3), rand::Rng::gen_range(&mut rng, -1e-3..1e-3)))
            .collect();
        let f = SampledField::new(vec![grid; blocks], data).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        prop_assert_eq!(read_field(&buf[..]).unwrap(), f);
    }

    #[test]
    fn tight_systems_reconstruct(seed in any::<u64>()) {
        let grid = UniformGrid::line(64, 4.0).unwrap();
        let g = bump(grid, 0.0, 0.0);
        let sys = GaborSystem::covering(g, 0.5, 0.5).unwrap().tighten().unwrap();
        let f = central_random_signal(grid, &mut ChaCha8Rng::seed_from_u64(seed));
        let back = sys.synthesize(&sys.analyze(&f).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&f).unwrap() < 1e-9);
    }

    #[test]
    fn unit_symbol_multiplies(x1 in -2.0f64..2.0, x2 in -2.0f64..2.0, k1 in -2.0f64..2.0, k2 in -2.0f64..2.0) {
        let grid = UniformGrid::line(128, 8.0).unwrap();
        let (f, g) = (bump(grid, x1, k1), bump(grid, x2, k2));
        let p = FioProblem::bilinear_pdo(SymbolSpec::one(2), grid).unwrap();
        let out = fio_apply(&p, &[&f, &g]).unwrap();
        let want = SampledField::new(vec![grid], f.data().iter().zip(g.data()).map(|(a, b)| a * b).collect()).unwrap();
        prop_assert!(out.max_abs_diff(&want).unwrap() < 1e-10);
    }

    #[test]
    fn stft_covariance(x in -2.0f64..2.0, xi in -2.0f64..2.0) {
        // |V_g(M_ξ T_x g)(x', ξ')| = |V_g g(x' - x, ξ' - ξ)| at lattice-aligned shifts
        let grid = UniformGrid::line(64, 8.0).unwrap();
        let h = grid.spacing();
        let dual = grid.dual();
        let (x, xi) = ((x / h).round() * h, (xi / dual.spacing()).round() * dual.spacing());
        let g = bump(grid, 0.0, 0.0);
        let base = stft(&g, &g, &grid, &dual).unwrap();
        let moved = stft(&bump(grid, x, xi), &g, &grid, &dual).unwrap();
        let (ds, dk) = ((x / h).round() as i64, (xi / dual.spacing()).round() as i64);
        let n = grid.len() as i64;
        for i in 0..n {
            for k in 0..n {
                let (i0, k0) = (i - ds, k - dk);
                if (8..n - 8).contains(&i0) && (8..n - 8).contains(&k0) {
                    let a = moved.get(i as usize, k as usize).norm();
                    let b = base.get(i0 as usize, k0 as usize).norm();
                    prop_assert!((a - b).abs() < 1e-9, "{} {} {} {}", i, k, a, b);
                }
            }
        }
    }

    #[test]
    fn torus_frequencies_add(k1 in -5i64..=5, k2 in -5i64..=5) {
        let grid = torus_grid(32).unwrap();
        let f = TorusSignal::pure(5, k1).unwrap();
        let g = TorusSignal::pure(5, k2).unwrap();
        let lin = [PhaseSpec::linear(), PhaseSpec::linear()];
        let out = torus_fio_apply(&SymbolSpec::one(2), &lin, &[&f, &g], &grid).unwrap();
        let want = SampledField::from_fn_1d(grid, |x| C64::from_polar(1.0, TAU * (k1 + k2) as f64 * x));
        prop_assert!(out.max_abs_diff(&want).unwrap() < 1e-12);
    }
}
