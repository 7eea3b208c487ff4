//! Single-qubit teleportation over a shared `|Phi+>` pair, and bidirectional
//! state teleportation (BQST) built from it.
//!
//! Bell measurement convention: the sender applies CNOT(source -> own half),
//! then H on the source, and measures `(source, own half)` giving bits
//! `(m1, m2)`. The receiver applies `sigma_1` if `m2 = 1`, then `sigma_3` if
//! `m1 = 1`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::{init_hybrid, Announcement, Protocol, Registers, RunResult, Transcript};
use crate::error::{Error, Result};
use crate::gates::{self, GateMatrix, Permutation};
use crate::locc::{LoccState, Party, Purpose};
use crate::sim::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeleportRecord {
    pub sender: Party,
    pub source: usize,
    pub target: usize,
    /// `(m1, m2)`: source bit, then sender-half bit.
    pub bell_outcome: [u8; 2],
    /// Pauli index of the receiver's correction up to phase:
    /// 0 = I, 1 = X, 2 = Y, 3 = Z.
    pub correction: u8,
    pub ebits_used: usize,
    pub cbits_used: usize,
}

fn pauli_index(m1: u8, m2: u8) -> u8 {
    match (m1, m2) {
        (0, 0) => 0,
        (0, 1) => 1,
        (1, 1) => 2,
        _ => 3,
    }
}

/// Teleports the state of `source` onto `receiver_half`, consuming the pair
/// `(sender_half, receiver_half)`. Returns all four Bell-outcome branches
/// in ascending `(m1, m2)` order, each already corrected.
pub fn teleport(
    ctx: &LoccState,
    source: usize,
    sender_half: usize,
    receiver_half: usize,
) -> Result<Vec<(LoccState, TeleportRecord)>> {
    if source == sender_half || source == receiver_half {
        return Err(Error::QubitCollision(source));
    }
    if sender_half == receiver_half {
        return Err(Error::QubitCollision(sender_half));
    }
    let sender = ctx.owner(source)?;
    let receiver = sender.other();
    let (alice_q, bob_q) = match sender {
        Party::Alice => (sender_half, receiver_half),
        Party::Bob => (receiver_half, sender_half),
    };

    let mut ctx = ctx.clone();
    ctx.consume_pair(alice_q, bob_q)?;
    ctx.apply(sender, &gates::cnot(), &[source, sender_half])?;
    ctx.apply(sender, &gates::hadamard(), &[source])?;

    let x = gates::sigma(1)?;
    let z = gates::sigma(3)?;
    ctx.measure(sender, &[source, sender_half])?
        .into_iter()
        .map(|(bits, mut branch)| {
            let (m1, m2) = (bits[0], bits[1]);
            branch.send(sender, bits, Purpose::Teleport);
            if m2 == 1 {
                branch.apply(receiver, &x, &[receiver_half])?;
            }
            if m1 == 1 {
                branch.apply(receiver, &z, &[receiver_half])?;
            }
            let record = TeleportRecord {
                sender,
                source,
                target: receiver_half,
                bell_outcome: [m1, m2],
                correction: pauli_index(m1, m2),
                ebits_used: 1,
                cbits_used: 2,
            };
            Ok((branch, record))
        })
        .collect()
}

/// Teleports every `(source, sender_half, receiver_half)` triple in order,
/// enumerating all branches. Each branch carries its records and the
/// branch-id digits (`2 m1 + m2` per teleport).
pub(crate) fn teleport_all(
    ctx: LoccState,
    triples: &[(usize, usize, usize)],
) -> Result<Vec<(LoccState, Vec<TeleportRecord>)>> {
    let mut frontier = vec![(ctx, Vec::new())];
    for &(source, sender_half, receiver_half) in triples {
        let mut next = Vec::with_capacity(frontier.len() * 4);
        for (ctx, records) in frontier {
            for (branch, record) in teleport(&ctx, source, sender_half, receiver_half)? {
                let mut records = records.clone();
                records.push(record);
                next.push((branch, records));
            }
        }
        frontier = next;
    }
    Ok(frontier)
}

pub(crate) fn teleport_digits(records: &[TeleportRecord]) -> usize {
    records
        .iter()
        .fold(0, |id, r| id * 4 + (2 * r.bell_outcome[0] + r.bell_outcome[1]) as usize)
}

/// Bidirectional state teleportation of Bob's `M`-qubit state `xi` through
/// Alice's device `op`: Bob teleports each qubit to Alice, she applies `op`,
/// and teleports the result back. Enumerates all `16^M` branches.
pub fn bqst(op: &GateMatrix, xi: &StateVector) -> Result<Vec<RunResult>> {
    let m = op.num_qubits();
    let (state, regs, _) = init_hybrid(0, m, xi)?;
    let ctx = LoccState::new(state, regs.owners().to_vec(), regs.pairs())?;
    bqst_from(ctx, &regs, op)
}

/// BQST on an existing context whose layout follows `regs` with `N = 0`.
pub fn bqst_from(ctx: LoccState, regs: &Registers, op: &GateMatrix) -> Result<Vec<RunResult>> {
    let m = op.num_qubits();
    if regs.y.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: regs.y.len(),
        });
    }
    let available = ctx.unconsumed_pairs();
    if available < 2 * m {
        return Err(Error::InsufficientEntanglement {
            needed: 2 * m,
            available,
        });
    }

    let to_alice: Vec<_> = (0..m).map(|j| (regs.y[j], regs.b[j], regs.a[j])).collect();
    let to_bob: Vec<_> = (0..m).map(|j| (regs.a[j], regs.a[m + j], regs.b[m + j])).collect();
    let device: Vec<usize> = regs.a[..m].to_vec();
    let swap = gates::swap_e();
    let regs = Arc::new(regs.clone());

    let mut results = Vec::new();
    for (mut ctx, records) in teleport_all(ctx, &to_alice)? {
        if op.is_unitary() {
            ctx.apply(Party::Alice, op, &device)?;
        } else {
            ctx.apply_operator(Party::Alice, op.matrix(), &device)?;
        }
        for (mut ctx, back) in teleport_all(ctx, &to_bob)? {
            for j in 0..m {
                ctx.apply(Party::Bob, &swap, &[regs.y[j], regs.b[m + j]])?;
            }
            let mut all = records.clone();
            all.extend(back);
            let final_y_state = ctx.state().extract_subsystem(&regs.y)?;
            results.push(RunResult {
                protocol: Protocol::Bqst,
                n: 0,
                m,
                branch_id: teleport_digits(&all),
                final_y_state,
                probability: ctx.probability(),
                transcript: Transcript {
                    announcement: Announcement {
                        perm: Permutation::identity(0),
                        bits: Vec::new(),
                    },
                    b: Vec::new(),
                    a: Vec::new(),
                    teleports: all,
                },
                ledger: *ctx.ledger(),
                events: ctx.events().to_vec(),
                owners: regs.owners().to_vec(),
            });
        }
    }
    Ok(results)
}
