//! Shared fixtures for the benchmark targets.

use cocycle_core::cocycle::LocallyConstantGenerator;
use cocycle_core::{presets, ConformalStructure, Sft, SymbolicPoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn golden_mean() -> Sft {
    presets::golden_mean_shift(1.0).unwrap()
}

pub fn bunched_generator(sft: &Sft) -> LocallyConstantGenerator {
    presets::bunched_window1(sft).unwrap()
}

pub fn long_periodic_point(sft: &Sft, period: usize) -> SymbolicPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    loop {
        let p = sft.random_periodic_point(period, &mut rng);
        if p.period().unwrap() >= period / 2 {
            return p;
        }
    }
}

pub fn random_structures(d: usize, count: usize) -> Vec<ConformalStructure> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..count).map(|_| presets::random_structure(d, &mut rng)).collect()
}
