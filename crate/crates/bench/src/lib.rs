//! Shared fixtures for the criterion benchmarks.

use cqpolar::channel::random_qubit_state;
use cqpolar::operator::DensityOperator;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A mixed state on `qubits` qubits, built as a random mixture of two
/// random product states so that it is not itself a product.
pub fn mixed_state(qubits: u32, seed: u64) -> DensityOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut product = || {
        let mut s = random_qubit_state(&mut rng, 0.9);
        for _ in 1..qubits {
            s = s.kron(&random_qubit_state(&mut rng, 0.9));
        }
        s
    };
    let (a, b) = (product(), product());
    let w: f64 = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed).gen_range(0.2..0.8);
    DensityOperator::mixture(&[(w, &a), (1.0 - w, &b)]).unwrap()
}

pub fn random_bits(n: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0..=1u8)).collect()
}
