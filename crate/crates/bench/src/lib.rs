//! Shared inputs for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tfio::{central_random_signal, GaborSystem, SampledField, UniformGrid, C64};

pub fn grid(n: usize, half_width: f64) -> UniformGrid {
    UniformGrid::line(n, half_width).expect("valid grid")
}

pub fn signals(grid: UniformGrid, count: usize, seed: u64) -> Vec<SampledField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| central_random_signal(grid, &mut rng)).collect()
}

pub fn gaussian(grid: UniformGrid) -> SampledField {
    SampledField::from_fn_1d(grid, |t| C64::new(2f64.powf(0.25) * (-std::f64::consts::PI * t * t).exp(), 0.0))
}

/// Tight Gaussian system with lattice constants 1/2, truncated to `radius`.
pub fn tight_system(grid: UniformGrid, radius: usize) -> GaborSystem {
    let tight = GaborSystem::covering(gaussian(grid), 0.5, 0.5).and_then(|s| s.tighten()).expect("Gaussian frame");
    GaborSystem::new(tight.window().clone(), 0.5, 0.5, radius, radius).expect("valid lattice")
}
