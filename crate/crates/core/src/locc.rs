//! Two-party bookkeeping shared by every protocol: who owns which qubit,
//! which Bell pairs are still available, what has been said on the classical
//! channel and how much it all cost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::GateMatrix;
use crate::sim::{CMatrix, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    /// Restricted-set label announced before the protocol starts.
    Setup,
    /// Bob's preparation outcomes `b`.
    PrepOutcomes,
    /// Alice's sending outcomes `a`.
    SendOutcomes,
    /// Bell-measurement outcome of one teleportation.
    Teleport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub sender: Party,
    pub bits: Vec<u8>,
    pub purpose: Purpose,
}

/// Append-only log of classical messages.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalChannel {
    log: Vec<Message>,
}

impl ClassicalChannel {
    pub fn messages(&self) -> &[Message] {
        &self.log
    }

    /// Most recent message with the given purpose.
    pub fn last(&self, purpose: Purpose) -> Option<&Message> {
        self.log.iter().rev().find(|m| m.purpose == purpose)
    }

    fn push(&mut self, message: Message) {
        assert!(message.bits.iter().all(|&b| b <= 1), "classical bits must be 0 or 1");
        self.log.push(message);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceLedger {
    #[serde(rename = "ebits")]
    pub ebits_consumed: usize,
    #[serde(rename = "cbits_b2a")]
    pub cbits_bob_to_alice: usize,
    #[serde(rename = "cbits_a2b")]
    pub cbits_alice_to_bob: usize,
    /// Restricted-set announcement, kept out of the per-run counts.
    pub setup_bits: usize,
}

impl ResourceLedger {
    /// Per-run classical bits in both directions.
    pub fn cbits(&self) -> usize {
        self.cbits_bob_to_alice + self.cbits_alice_to_bob
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BellPair {
    pub alice: usize,
    pub bob: usize,
    pub consumed: bool,
}

/// One gate application, kept for the locality audit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateEvent {
    pub party: Party,
    pub targets: Vec<usize>,
}

/// The joint state of one protocol branch together with all classical
/// bookkeeping. Every quantum action names the party performing it and is
/// refused if that party does not own all of the qubits involved.
#[derive(Debug, Clone)]
pub struct LoccState {
    state: StateVector,
    owners: Vec<Party>,
    pairs: Vec<BellPair>,
    channel: ClassicalChannel,
    ledger: ResourceLedger,
    probability: f64,
    events: Vec<GateEvent>,
}

impl LoccState {
    pub fn new(state: StateVector, owners: Vec<Party>, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if owners.len() != state.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: state.num_qubits(),
                actual: owners.len(),
            });
        }
        let pairs = pairs
            .into_iter()
            .map(|(alice, bob)| BellPair {
                alice,
                bob,
                consumed: false,
            })
            .collect();
        Ok(Self {
            state,
            owners,
            pairs,
            channel: ClassicalChannel::default(),
            ledger: ResourceLedger::default(),
            probability: 1.0,
            events: Vec::new(),
        })
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn owners(&self) -> &[Party] {
        &self.owners
    }

    pub fn owner(&self, qubit: usize) -> Result<Party> {
        self.owners.get(qubit).copied().ok_or(Error::TargetOutOfRange {
            index: qubit,
            num_qubits: self.owners.len(),
        })
    }

    pub fn channel(&self) -> &ClassicalChannel {
        &self.channel
    }

    pub fn ledger(&self) -> &ResourceLedger {
        &self.ledger
    }

    /// Probability of the branch history leading here.
    pub fn probability(&self) -> f64 {
        self.probability
    }

    pub fn events(&self) -> &[GateEvent] {
        &self.events
    }

    pub fn unconsumed_pairs(&self) -> usize {
        self.pairs.iter().filter(|p| !p.consumed).count()
    }

    fn check_local(&self, party: Party, qubits: &[usize]) -> Result<()> {
        for &q in qubits {
            let owner = self.owner(q)?;
            if owner != party {
                return Err(Error::LocalityViolation { party, qubit: q, owner });
            }
        }
        Ok(())
    }

    /// `party` applies a unitary gate to qubits it owns.
    pub fn apply(&mut self, party: Party, gate: &GateMatrix, targets: &[usize]) -> Result<()> {
        self.check_local(party, targets)?;
        self.state.apply_gate_mut(gate, targets)?;
        self.events.push(GateEvent {
            party,
            targets: targets.to_vec(),
        });
        Ok(())
    }

    /// `party` applies an arbitrary full-rank operator; the state is
    /// renormalized afterwards.
    pub fn apply_operator(&mut self, party: Party, matrix: &CMatrix, targets: &[usize]) -> Result<()> {
        self.check_local(party, targets)?;
        self.state = self.state.apply_matrix(matrix, targets)?.renormalized()?;
        self.events.push(GateEvent {
            party,
            targets: targets.to_vec(),
        });
        Ok(())
    }

    /// `party` measures its own qubits; one successor per possible outcome.
    pub fn measure(&self, party: Party, qubits: &[usize]) -> Result<Vec<(Vec<u8>, LoccState)>> {
        self.check_local(party, qubits)?;
        let branches = self.state.measure(qubits)?;
        Ok(branches
            .into_iter()
            .map(|b| {
                let next = LoccState {
                    state: b.post_state,
                    owners: self.owners.clone(),
                    pairs: self.pairs.clone(),
                    channel: self.channel.clone(),
                    ledger: self.ledger,
                    probability: self.probability * b.probability,
                    events: self.events.clone(),
                };
                (b.outcome_bits, next)
            })
            .collect())
    }

    pub fn send(&mut self, sender: Party, bits: Vec<u8>, purpose: Purpose) {
        let count = bits.len();
        match (purpose, sender) {
            (Purpose::Setup, _) => self.ledger.setup_bits += count,
            (_, Party::Bob) => self.ledger.cbits_bob_to_alice += count,
            (_, Party::Alice) => self.ledger.cbits_alice_to_bob += count,
        }
        self.channel.push(Message { sender, bits, purpose });
    }

    /// Marks the pair on `(alice, bob)` as used.
    pub fn consume_pair(&mut self, alice: usize, bob: usize) -> Result<()> {
        let idx = self
            .pairs
            .iter()
            .position(|p| p.alice == alice && p.bob == bob)
            .ok_or(Error::NoSuchPair(alice, bob))?;
        if self.pairs[idx].consumed {
            return Err(Error::EntanglementAlreadyConsumed(idx));
        }
        self.pairs[idx].consumed = true;
        self.ledger.ebits_consumed += 1;
        Ok(())
    }
}
