//! Independent oracles for the protocol engine.
//!
//! * [`direct_apply`] multiplies the dense operator into the input state.
//! * [`appendix_trace`] rebuilds the joint state after every stage from a
//!   closed form (a sum over the `2^N` leading-register terms of `xi`) and
//!   compares it with what the engine produced.
//! * [`mixed_state_check`] runs the protocol on every eigenvector of a
//!   density matrix and recombines.
//!
//! Intermediate states are compared after the teleportation corrections
//! have been applied.

use nalgebra::DVector;
use serde::Serialize;

use crate::engine::{run_pinned, run_protocol, Outcomes, Protocol, Registers};
use crate::error::{Error, Result};
use crate::gates::index_bits;
use crate::restricted::RestrictedOp;
use crate::sim::{phase_aligned_deviation, CMatrix, DensityMatrix, StateVector, C64};
use crate::EQ_TOL;

/// `T |xi>` by dense matrix-vector product, renormalized for non-unitary
/// operators.
pub fn direct_apply(op: &RestrictedOp, xi: &StateVector) -> Result<StateVector> {
    if xi.num_qubits() != op.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: op.num_qubits(),
            actual: xi.num_qubits(),
        });
    }
    let gate = op.build()?;
    let targets: Vec<usize> = (0..xi.num_qubits()).collect();
    let out = xi.apply_matrix(gate.matrix(), &targets)?;
    if op.unitary_mode() {
        Ok(out)
    } else {
        out.renormalized()
    }
}

/// One term `y_m |m> (x) |eta_m>` of the split of `xi` along its first `N`
/// qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtTerm {
    /// `y_m >= 0`.
    pub weight: f64,
    /// Normalized state of the trailing `M` qubits; carries the phase.
    pub eta: StateVector,
}

/// Splits `xi` as `sum_m y_m |m> (x) |eta_m>`. The `eta_m` are not
/// orthogonal in general. A term with `y_m = 0` gets `eta_m = |0...0>`.
pub fn expand_xi(xi: &StateVector, n: usize, m: usize) -> Result<Vec<SchmidtTerm>> {
    if xi.num_qubits() != n + m {
        return Err(Error::DimensionMismatch {
            expected: n + m,
            actual: xi.num_qubits(),
        });
    }
    let block = 1usize << m;
    Ok(xi
        .amplitudes()
        .chunks(block)
        .map(|chunk| {
            let weight = chunk.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let eta = if weight > 0.0 {
                StateVector::normalized(chunk.to_vec()).expect("nonzero chunk")
            } else {
                StateVector::zero(m)
            };
            SchmidtTerm { weight, eta }
        })
        .collect())
}

/// Inverse of [`expand_xi`].
pub fn reassemble(terms: &[SchmidtTerm]) -> Vec<C64> {
    terms
        .iter()
        .flat_map(|t| t.eta.amplitudes().iter().map(move |a| a * t.weight))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Checkpoint {
    /// After Bob's preparation.
    Psi1,
    /// After the Bob-to-Alice teleports.
    Psi2,
    /// After Alice's sending.
    Psi3,
    /// After the Alice-to-Bob teleports.
    Psi4,
    /// After Bob's recovery, before the swaps.
    Psi5,
    Final,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointResult {
    pub label: Checkpoint,
    /// Max amplitude deviation after global-phase alignment.
    pub deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceCheckReport {
    pub n: usize,
    pub m: usize,
    pub b: Vec<u8>,
    pub a: Vec<u8>,
    pub teleports: Vec<[u8; 2]>,
    pub checkpoints: Vec<CheckpointResult>,
}

impl TraceCheckReport {
    pub fn passed(&self) -> bool {
        self.checkpoints.iter().all(|c| c.pass)
    }

    pub fn max_deviation(&self) -> f64 {
        self.checkpoints.iter().map(|c| c.deviation).fold(0.0, f64::max)
    }
}

/// A product of small states placed on named global qubits.
struct Term {
    coeff: C64,
    factors: Vec<(Vec<usize>, Vec<C64>)>,
}

fn basis_amps(bits: &[u8]) -> Vec<C64> {
    let idx = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
    let mut v = vec![C64::new(0.0, 0.0); 1 << bits.len()];
    v[idx] = C64::new(1.0, 0.0);
    v
}

fn bit(b: u8) -> Vec<C64> {
    basis_amps(&[b])
}

/// `sum_terms coeff * (x)_factors`, normalized.
fn assemble(num_qubits: usize, terms: &[Term]) -> Result<StateVector> {
    let dim = 1usize << num_qubits;
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    for term in terms {
        if term.coeff.norm() == 0.0 {
            continue;
        }
        for (i, amp) in amps.iter_mut().enumerate() {
            let mut value = term.coeff;
            for (qubits, local) in &term.factors {
                let idx = qubits
                    .iter()
                    .fold(0usize, |acc, &q| (acc << 1) | ((i >> (num_qubits - 1 - q)) & 1));
                value *= local[idx];
                if value.norm() == 0.0 {
                    break;
                }
            }
            *amp += value;
        }
    }
    StateVector::normalized(amps)
}

/// Closed-form joint state at each checkpoint for one outcome tuple.
struct ClosedForms<'a> {
    regs: &'a Registers,
    outcomes: &'a Outcomes,
    terms: Vec<SchmidtTerm>,
    op: &'a RestrictedOp,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Phase {
    Prepared,
    SentB,
    AliceDone,
    SentA,
    Recovered,
    Swapped,
}

impl ClosedForms<'_> {
    fn state(&self, phase: Phase) -> Result<StateVector> {
        let regs = self.regs;
        let (n, m) = (regs.n, regs.m);
        let o = self.outcomes;
        let perm = self.op.permutation();
        let blocks = self.op.blocks();
        let phi_plus = StateVector::phi_plus().into_amplitudes();

        let mut terms = Vec::with_capacity(self.terms.len());
        for (idx, term) in self.terms.iter().enumerate() {
            let k = index_bits(idx, n);
            let l = perm.image_bits(idx + 1);
            let mut factors: Vec<(Vec<usize>, Vec<C64>)> = Vec::new();
            let mut coeff = C64::new(term.weight, 0.0);

            // B_1..B_N hold the preparation outcomes from here on.
            for i in 0..n {
                factors.push((vec![regs.b[i]], bit(o.b[i])));
            }
            // A_1..A_N: sigma_b |k> until Alice measures, then |a>.
            for i in 0..n {
                let a_i = if phase >= Phase::AliceDone { o.a[i] } else { k[i] ^ o.b[i] };
                factors.push((vec![regs.a[i]], bit(a_i)));
            }
            // Y_1..Y_N: |k> until Bob's recovery, then |p_m>.
            let y_bits = if phase >= Phase::Recovered { &l } else { &k };
            for i in 0..n {
                factors.push((vec![regs.y[i]], bit(y_bits[i])));
            }
            if phase >= Phase::AliceDone && phase < Phase::Recovered {
                let sign: u8 = (0..n).map(|i| o.a[i] & l[i]).sum::<u8>() % 2;
                if sign == 1 {
                    coeff = -coeff;
                }
            }

            let eta = term.eta.amplitudes().to_vec();
            let g_eta: Vec<C64> = (&blocks[idx] * DVector::from_vec(eta.clone())).iter().copied().collect();
            let trailing = |qubits: Vec<usize>, v: Vec<C64>| (qubits, v);
            let y_tail: Vec<usize> = regs.y[n..].to_vec();
            let a_mid: Vec<usize> = regs.a[n..n + m].to_vec();
            let b_far: Vec<usize> = regs.b[n + m..].to_vec();

            // Where the M-qubit payload lives.
            factors.push(match phase {
                Phase::Prepared => trailing(y_tail.clone(), eta),
                Phase::SentB => trailing(a_mid.clone(), eta),
                Phase::AliceDone => trailing(a_mid.clone(), g_eta),
                Phase::SentA | Phase::Recovered => trailing(b_far.clone(), g_eta),
                Phase::Swapped => trailing(y_tail.clone(), g_eta),
            });

            for j in 0..m {
                let (src, half) = (o.teleports[j][0], o.teleports[j][1]);
                let (src_back, half_back) = (o.teleports[m + j][0], o.teleports[m + j][1]);
                let pair_mid = vec![regs.a[n + j], regs.b[n + j]];
                let pair_far = vec![regs.a[n + m + j], regs.b[n + m + j]];
                if phase == Phase::Prepared {
                    factors.push((pair_mid, phi_plus.clone()));
                } else {
                    // After the swaps Y_{N+j}'s collapsed value sits on B_{N+M+j}.
                    let holder = if phase == Phase::Swapped { regs.b[n + m + j] } else { regs.y[n + j] };
                    factors.push((vec![holder], bit(src)));
                    factors.push((vec![regs.b[n + j]], bit(half)));
                }
                if phase >= Phase::SentA {
                    factors.push((vec![regs.a[n + j]], bit(src_back)));
                    factors.push((vec![regs.a[n + m + j]], bit(half_back)));
                } else {
                    factors.push((pair_far, phi_plus.clone()));
                }
            }
            terms.push(Term { coeff, factors });
        }
        assemble(regs.num_qubits(), &terms)
    }
}

/// Runs the hybrid protocol pinned to `outcomes` and checks the joint state
/// after every stage against its closed form.
pub fn appendix_trace(op: &RestrictedOp, xi: &StateVector, outcomes: &Outcomes) -> Result<TraceCheckReport> {
    let (n, m) = op.dims();
    if outcomes.b.len() != n || outcomes.a.len() != n || outcomes.teleports.len() != 2 * m {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: outcomes.b.len(),
        });
    }
    let trail = run_pinned(Protocol::Hybrid, op, xi, outcomes)?;
    let (before_swaps, _) = trail[4].bob_recover_steps()?;
    let closed = ClosedForms {
        regs: trail[0].registers(),
        outcomes,
        terms: expand_xi(xi, n, m)?,
        op,
    };

    let observed = [
        (Checkpoint::Psi1, Phase::Prepared, trail[1].state().clone()),
        (Checkpoint::Psi2, Phase::SentB, trail[2].state().clone()),
        (Checkpoint::Psi3, Phase::AliceDone, trail[3].state().clone()),
        (Checkpoint::Psi4, Phase::SentA, trail[4].state().clone()),
        (Checkpoint::Psi5, Phase::Recovered, before_swaps),
        (Checkpoint::Final, Phase::Swapped, trail[5].state().clone()),
    ];
    let checkpoints = observed
        .into_iter()
        .map(|(label, phase, state)| {
            let expected = closed.state(phase)?;
            let deviation = phase_aligned_deviation(&expected, &state)?;
            Ok(CheckpointResult {
                label,
                deviation,
                pass: deviation < EQ_TOL,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(TraceCheckReport {
        n,
        m,
        b: outcomes.b.clone(),
        a: outcomes.a.clone(),
        teleports: outcomes.teleports.clone(),
        checkpoints,
    })
}

/// Runs the hybrid protocol on each eigenvector of `rho`, recombines the
/// branch outputs with eigenvalue and branch weights, and returns the max
/// entrywise deviation from `T rho T^dagger`.
pub fn mixed_state_check(op: &RestrictedOp, rho: &DensityMatrix) -> Result<f64> {
    if !op.unitary_mode() {
        return Err(Error::NonUnitaryMode);
    }
    if rho.num_qubits() != op.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: op.num_qubits(),
            actual: rho.num_qubits(),
        });
    }
    let dim = 1usize << rho.num_qubits();
    let mut recombined = CMatrix::zeros(dim, dim);
    for (weight, eigvec) in rho.eigen() {
        if weight <= EQ_TOL {
            continue;
        }
        for run in run_protocol(Protocol::Hybrid, op, &eigvec)? {
            let v = DVector::from_column_slice(run.final_y_state.amplitudes());
            recombined += (&v * v.adjoint()) * C64::new(weight * run.probability, 0.0);
        }
    }
    let targets: Vec<usize> = (0..rho.num_qubits()).collect();
    let expected = rho.apply_channel(&op.build()?, &targets)?;
    Ok((expected.entries() - recombined).camax())
}
