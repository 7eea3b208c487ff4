//! Seeded random instances: states, Haar unitaries, phases, permutations,
//! density matrices and restricted operators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::gates::Permutation;
use crate::restricted::{RestrictedOp, Variant};
use crate::sim::{CMatrix, DensityMatrix, StateVector, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state on `num_qubits` qubits.
pub fn random_state<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> StateVector {
    let amps = (0..1usize << num_qubits).map(|_| gaussian(rng)).collect();
    StateVector::normalized(amps).expect("gaussian vector is nonzero")
}

pub fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
}

/// Haar-random `dim x dim` unitary (QR of a Ginibre matrix with the phases
/// of `R`'s diagonal pushed into `Q`).
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let z = CMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Full-rank but generally non-unitary block with singular values bounded
/// away from zero.
pub fn random_full_rank<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let u = random_unitary(dim, rng);
    let v = random_unitary(dim, rng);
    let s = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |_, _| {
        C64::new(rng.random_range(0.5..2.0), 0.0)
    }));
    u * s * v
}

pub fn random_permutation<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Permutation {
    let mut map: Vec<usize> = (1..=(1usize << num_qubits)).collect();
    map.shuffle(rng);
    Permutation::new(map).expect("shuffle preserves bijection")
}

/// Random density matrix of the given rank: a random ensemble of Haar states
/// with random weights.
pub fn random_density<R: Rng + ?Sized>(num_qubits: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let weights: Vec<f64> = (0..rank).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let ensemble: Vec<(f64, StateVector)> = weights
        .into_iter()
        .map(|w| (w / total, random_state(num_qubits, rng)))
        .collect();
    DensityMatrix::from_ensemble(&ensemble).expect("valid ensemble")
}

pub fn random_hpv<R: Rng + ?Sized>(d: u8, rng: &mut R) -> RestrictedOp {
    RestrictedOp::hpv(d, [random_phase(rng), random_phase(rng)]).expect("unit-modulus entries")
}

pub fn random_wang<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RestrictedOp {
    let perm = random_permutation(n, rng);
    let t = (0..perm.n_levels()).map(|_| random_phase(rng)).collect();
    RestrictedOp::wang(perm, t).expect("unit-modulus entries")
}

/// Hybrid operator with Haar-random unitary blocks.
pub fn random_hybrid<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> RestrictedOp {
    let perm = random_permutation(n, rng);
    random_hybrid_with(perm, m, rng)
}

pub fn random_hybrid_with<R: Rng + ?Sized>(perm: Permutation, m: usize, rng: &mut R) -> RestrictedOp {
    let blocks = (0..perm.n_levels()).map(|_| random_unitary(1 << m, rng)).collect();
    RestrictedOp::hybrid(perm, blocks).expect("unitary blocks")
}

/// Hybrid operator with full-rank, generally non-unitary blocks.
pub fn random_nonunitary_hybrid<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> RestrictedOp {
    let perm = random_permutation(n, rng);
    let blocks = (0..perm.n_levels()).map(|_| random_full_rank(1 << m, rng)).collect();
    RestrictedOp::with_mode(Variant::Hybrid { perm, blocks }, false).expect("full-rank blocks")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::unitarity_deviation;

    #[test]
    fn unitaries_are_unitary() {
        let mut rng = seeded(5);
        for dim in [1, 2, 4, 8] {
            assert!(unitarity_deviation(&random_unitary(dim, &mut rng)) < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_draws() {
        let a = random_state(3, &mut seeded(9));
        let b = random_state(3, &mut seeded(9));
        assert_eq!(a, b);
    }

    #[test]
    fn density_has_requested_rank() {
        let rho = random_density(2, 2, &mut seeded(4));
        let eig = rho.eigen();
        assert!(eig[1].0 > 1e-6);
        assert!(eig[2].0.abs() < 1e-10);
    }
}
