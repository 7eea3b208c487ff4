//! Alice/Bob state machines for the HPV, Wang and hybrid protocols.
//!
//! A [`Session`] is one branch of a protocol run. Each stage method returns
//! one successor per measurement outcome, so the whole tree is enumerated
//! depth-first by [`run_protocol`]. Stages must be taken in order:
//!
//! ```text
//! Init -bob_prepare-> Prepared -bob_teleport-> SentB -alice_send-> AliceDone
//!      -alice_teleport-> SentA -bob_recover-> Recovered
//! ```
//!
//! Register layout for `(N, M)`: the `N + 2M` Bell pairs come first as
//! `A_1 B_1 A_2 B_2 ...`, followed by Bob's `Y_1 ... Y_{N+M}`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{self, label_bits, GateMatrix, Permutation};
use crate::locc::{GateEvent, LoccState, Party, Purpose, ResourceLedger};
use crate::restricted::{RestrictedOp, Variant};
use crate::sim::{CMatrix, StateVector, C64};
use crate::teleport::{self, teleport_all, teleport_digits, TeleportRecord};
use crate::EQ_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Hpv,
    Wang,
    Hybrid,
    Bqst,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Protocol::Hpv => "hpv",
            Protocol::Wang => "wang",
            Protocol::Hybrid => "hybrid",
            Protocol::Bqst => "bqst",
        };
        f.write_str(s)
    }
}

impl Protocol {
    /// `(ebits, per-run cbits)` the protocol consumes at `(N, M)`.
    pub fn predicted_cost(self, n: usize, m: usize) -> (usize, usize) {
        match self {
            Protocol::Bqst => (2 * (n + m), 4 * (n + m)),
            _ => (n + 2 * m, 2 * n + 4 * m),
        }
    }

    /// Classical bits spent announcing the restricted set.
    pub fn setup_bits(self, n: usize) -> usize {
        match self {
            Protocol::Bqst => 0,
            _ => label_bits(n),
        }
    }
}

/// Global qubit indices of every named register and who owns them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registers {
    pub n: usize,
    pub m: usize,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub y: Vec<usize>,
    owners: Vec<Party>,
}

impl Registers {
    pub fn new(n: usize, m: usize) -> Self {
        let pairs = n + 2 * m;
        let a = (0..pairs).map(|i| 2 * i).collect();
        let b = (0..pairs).map(|i| 2 * i + 1).collect();
        let y = (0..n + m).map(|j| 2 * pairs + j).collect();
        let mut owners: Vec<Party> = (0..2 * pairs)
            .map(|q| if q % 2 == 0 { Party::Alice } else { Party::Bob })
            .collect();
        owners.extend(std::iter::repeat_n(Party::Bob, n + m));
        Self { n, m, a, b, y, owners }
    }

    pub fn num_pairs(&self) -> usize {
        self.a.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.owners.len()
    }

    pub fn owners(&self) -> &[Party] {
        &self.owners
    }

    /// `(A_i, B_i)` for every shared pair.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.a.iter().copied().zip(self.b.iter().copied()).collect()
    }
}

/// `(|Phi+>^{N+2M}) (x) |xi>` on the standard layout, with a zeroed ledger.
pub fn init_hybrid(n: usize, m: usize, xi: &StateVector) -> Result<(StateVector, Registers, ResourceLedger)> {
    if xi.num_qubits() != n + m {
        return Err(Error::DimensionMismatch {
            expected: n + m,
            actual: xi.num_qubits(),
        });
    }
    let norm = xi.norm_sqr();
    if (norm - 1.0).abs() > EQ_TOL {
        return Err(Error::NotNormalized(norm));
    }
    let regs = Registers::new(n, m);
    let mut state = StateVector::zero(0);
    for _ in 0..regs.num_pairs() {
        state = state.tensor(&StateVector::phi_plus());
    }
    Ok((state.tensor(xi), regs, ResourceLedger::default()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Init,
    Prepared,
    SentB,
    AliceDone,
    SentA,
    Recovered,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// The restricted-set label Alice sends before the protocol starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Announcement {
    pub perm: Permutation,
    /// Lehmer index of `perm` over `ceil(log2((2^N)!))` bits; for HPV this
    /// is the single bit `d`.
    pub bits: Vec<u8>,
}

fn u128_bits(value: u128, width: usize) -> Vec<u8> {
    (0..width).map(|i| ((value >> (width - 1 - i)) & 1) as u8).collect()
}

fn bits_u128(bits: &[u8]) -> u128 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as u128)
}

fn bits_usize(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

impl Announcement {
    pub fn encode(perm: &Permutation) -> Self {
        let width = label_bits(perm.num_qubits());
        Self {
            perm: perm.clone(),
            bits: u128_bits(perm.lehmer_index(), width),
        }
    }

    /// What Bob reconstructs from the received bits.
    pub fn decode(num_qubits: usize, bits: &[u8]) -> Result<Permutation> {
        Permutation::from_lehmer(num_qubits, bits_u128(bits))
    }
}

/// Everything observable about one branch: outcomes and the announcement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub announcement: Announcement,
    pub b: Vec<u8>,
    pub a: Vec<u8>,
    /// Bob-to-Alice teleports first, then Alice-to-Bob.
    pub teleports: Vec<TeleportRecord>,
}

/// Measurement outcomes pinning a single branch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcomes {
    pub b: Vec<u8>,
    pub a: Vec<u8>,
    /// Bell outcomes `(m1, m2)`: the `M` Bob-to-Alice teleports, then the
    /// `M` Alice-to-Bob ones.
    pub teleports: Vec<[u8; 2]>,
}

impl Outcomes {
    /// The `index`-th outcome tuple in branch-id order.
    pub fn from_branch_id(n: usize, m: usize, mut index: usize) -> Self {
        let mut digits = Vec::new();
        let radices: Vec<usize> = std::iter::empty()
            .chain(std::iter::once(1 << n))
            .chain(std::iter::repeat_n(4, m))
            .chain(std::iter::once(1 << n))
            .chain(std::iter::repeat_n(4, m))
            .collect();
        for &r in radices.iter().rev() {
            digits.push(index % r);
            index /= r;
        }
        digits.reverse();
        let b = gates::index_bits(digits[0], n);
        let a = gates::index_bits(digits[m + 1], n);
        let teleports = digits[1..=m]
            .iter()
            .chain(&digits[m + 2..])
            .map(|&d| [(d >> 1) as u8, (d & 1) as u8])
            .collect();
        Self { b, a, teleports }
    }

    /// Number of distinct outcome tuples at `(N, M)`.
    pub fn count(n: usize, m: usize) -> usize {
        (1 << (2 * n)) * (1 << (4 * m))
    }

    fn consistent_with(&self, t: &Transcript) -> bool {
        let prefix = |want: &[u8], got: &[u8]| got.is_empty() || want == got;
        prefix(&self.b, &t.b)
            && prefix(&self.a, &t.a)
            && t.teleports.len() <= self.teleports.len()
            && t.teleports
                .iter()
                .zip(&self.teleports)
                .all(|(r, want)| r.bell_outcome == *want)
    }
}

/// One finished branch.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub protocol: Protocol,
    pub n: usize,
    pub m: usize,
    /// Mixed-radix encoding of the outcomes, in the order they occur.
    pub branch_id: usize,
    /// Bob's `Y_1 ... Y_{N+M}` at the end, up to global phase.
    pub final_y_state: StateVector,
    pub probability: f64,
    pub transcript: Transcript,
    pub ledger: ResourceLedger,
    /// Every gate application along the branch.
    pub events: Vec<GateEvent>,
    pub owners: Vec<Party>,
}

impl RunResult {
    /// Gate applications where the acting party did not own a target.
    pub fn locality_violations(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.targets.iter().any(|&q| self.owners[q] != e.party))
            .count()
    }
}

/// One branch of a protocol run, paused between stages.
#[derive(Debug, Clone)]
pub struct Session {
    protocol: Protocol,
    regs: Arc<Registers>,
    op: Arc<RestrictedOp>,
    device: Arc<GateMatrix>,
    locc: LoccState,
    stage: Stage,
    transcript: Transcript,
    branch_id: usize,
}

impl Session {
    /// Initializes the registers and sends the restricted-set announcement.
    pub fn start(protocol: Protocol, op: &RestrictedOp, xi: &StateVector) -> Result<Self> {
        let (n, m) = op.dims();
        match protocol {
            Protocol::Hpv if (n, m) != (1, 0) => {
                return Err(Error::InvalidOperator(format!("HPV needs a 1-qubit operator, got N={n}, M={m}")))
            }
            Protocol::Wang if m != 0 => {
                return Err(Error::InvalidOperator(format!("Wang needs M = 0, got M={m}")))
            }
            Protocol::Bqst => return Err(Error::InvalidOperator("BQST runs through teleport::bqst".into())),
            _ => {}
        }
        let (state, regs, _) = init_hybrid(n, m, xi)?;
        let mut locc = LoccState::new(state, regs.owners().to_vec(), regs.pairs())?;
        let announcement = Announcement::encode(&op.permutation());
        if !announcement.bits.is_empty() {
            locc.send(Party::Alice, announcement.bits.clone(), Purpose::Setup);
        }
        Ok(Self {
            protocol,
            regs: Arc::new(regs),
            device: Arc::new(op.build()?),
            op: Arc::new(op.clone()),
            locc,
            stage: Stage::Init,
            transcript: Transcript {
                announcement,
                b: Vec::new(),
                a: Vec::new(),
                teleports: Vec::new(),
            },
            branch_id: 0,
        })
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn state(&self) -> &StateVector {
        self.locc.state()
    }

    pub fn registers(&self) -> &Registers {
        &self.regs
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn locc(&self) -> &LoccState {
        &self.locc
    }

    pub fn probability(&self) -> f64 {
        self.locc.probability()
    }

    fn expect(&self, expected: Stage) -> Result<()> {
        if self.stage != expected {
            return Err(Error::StageViolation {
                expected: expected.to_string(),
                found: self.stage.to_string(),
            });
        }
        Ok(())
    }

    fn successor(&self, locc: LoccState, stage: Stage, radix: usize, digit: usize) -> Session {
        Session {
            protocol: self.protocol,
            regs: Arc::clone(&self.regs),
            op: Arc::clone(&self.op),
            device: Arc::clone(&self.device),
            locc,
            stage,
            transcript: self.transcript.clone(),
            branch_id: self.branch_id * radix + digit,
        }
    }

    /// Takes the next stage, whichever it is.
    pub fn advance(&self) -> Result<Vec<Session>> {
        match self.stage {
            Stage::Init => self.bob_prepare(),
            Stage::Prepared => self.bob_teleport(),
            Stage::SentB => self.alice_send(),
            Stage::AliceDone => self.alice_teleport(),
            Stage::SentA => self.bob_recover().map(|s| vec![s]),
            Stage::Recovered => Err(Error::StageViolation {
                expected: "any stage before Recovered".into(),
                found: self.stage.to_string(),
            }),
        }
    }

    /// Takes the next stage and keeps only the branch matching `outcomes`.
    pub fn advance_pinned(&self, outcomes: &Outcomes) -> Result<Session> {
        self.advance()?
            .into_iter()
            .find(|s| outcomes.consistent_with(&s.transcript))
            .ok_or(Error::NoMatchingBranch)
    }

    /// Step 1 and the first half of step 2: CNOT(Y_i -> B_i) for `i <= N`,
    /// measure `B_1 ... B_N`, and send `b` to Alice.
    pub fn bob_prepare(&self) -> Result<Vec<Session>> {
        self.expect(Stage::Init)?;
        let regs = &self.regs;
        let n = regs.n;
        let mut locc = self.locc.clone();
        let cnot = gates::cnot();
        for i in 0..n {
            locc.consume_pair(regs.a[i], regs.b[i])?;
            locc.apply(Party::Bob, &cnot, &[regs.y[i], regs.b[i]])?;
        }
        if n == 0 {
            return Ok(vec![self.successor(locc, Stage::Prepared, 1, 0)]);
        }
        Ok(locc
            .measure(Party::Bob, &regs.b[..n])?
            .into_iter()
            .map(|(bits, mut branch)| {
                branch.send(Party::Bob, bits.clone(), Purpose::PrepOutcomes);
                let mut s = self.successor(branch, Stage::Prepared, 1 << n, bits_usize(&bits));
                s.transcript.b = bits;
                s
            })
            .collect())
    }

    /// Second half of step 2: Bob teleports `Y_{N+j}` onto `A_{N+j}` using
    /// the pair `(A_{N+j}, B_{N+j})`.
    pub fn bob_teleport(&self) -> Result<Vec<Session>> {
        self.expect(Stage::Prepared)?;
        let regs = &self.regs;
        let (n, m) = (regs.n, regs.m);
        let triples: Vec<_> = (0..m).map(|j| (regs.y[n + j], regs.b[n + j], regs.a[n + j])).collect();
        self.teleport_stage(&triples, Stage::SentB)
    }

    fn teleport_stage(&self, triples: &[(usize, usize, usize)], next: Stage) -> Result<Vec<Session>> {
        Ok(teleport_all(self.locc.clone(), triples)?
            .into_iter()
            .map(|(branch, records)| {
                let mut s = self.successor(branch, next, 1 << (2 * triples.len()), teleport_digits(&records));
                s.transcript.teleports.extend(records);
                s
            })
            .collect())
    }

    /// Step 3: `sigma_{b_i}` on `A_i`, the operator on `A_1 ... A_{N+M}`,
    /// `H` on `A_1 ... A_N`, measure them, and send `a` to Bob.
    pub fn alice_send(&self) -> Result<Vec<Session>> {
        self.expect(Stage::SentB)?;
        let regs = &self.regs;
        let (n, m) = (regs.n, regs.m);
        let b = match self.locc.channel().last(Purpose::PrepOutcomes) {
            Some(msg) => msg.bits.clone(),
            None if n == 0 => Vec::new(),
            None => return Err(Error::StageViolation {
                expected: "b received".into(),
                found: "no preparation outcomes on channel".into(),
            }),
        };
        let mut locc = self.locc.clone();
        let x = gates::sigma(1)?;
        for (i, &bit) in b.iter().enumerate() {
            if bit == 1 {
                locc.apply(Party::Alice, &x, &[regs.a[i]])?;
            }
        }
        let device_qubits = &regs.a[..n + m];
        if self.op.unitary_mode() {
            locc.apply(Party::Alice, &self.device, device_qubits)?;
        } else {
            locc.apply_operator(Party::Alice, self.device.matrix(), device_qubits)?;
        }
        let h = gates::hadamard();
        for i in 0..n {
            locc.apply(Party::Alice, &h, &[regs.a[i]])?;
        }
        if n == 0 {
            return Ok(vec![self.successor(locc, Stage::AliceDone, 1, 0)]);
        }
        Ok(locc
            .measure(Party::Alice, &regs.a[..n])?
            .into_iter()
            .map(|(bits, mut branch)| {
                branch.send(Party::Alice, bits.clone(), Purpose::SendOutcomes);
                let mut s = self.successor(branch, Stage::AliceDone, 1 << n, bits_usize(&bits));
                s.transcript.a = bits;
                s
            })
            .collect())
    }

    /// Step 4: Alice teleports `A_{N+j}` onto `B_{N+M+j}` using the pair
    /// `(A_{N+M+j}, B_{N+M+j})`.
    pub fn alice_teleport(&self) -> Result<Vec<Session>> {
        self.expect(Stage::AliceDone)?;
        let regs = &self.regs;
        let (n, m) = (regs.n, regs.m);
        let triples: Vec<_> = (0..m)
            .map(|j| (regs.a[n + j], regs.a[n + m + j], regs.b[n + m + j]))
            .collect();
        self.teleport_stage(&triples, Stage::SentA)
    }

    /// Step 5. Bob uses only what arrived on the channel: the announced
    /// label and Alice's outcomes `a`.
    pub fn bob_recover(&self) -> Result<Session> {
        self.bob_recover_steps().map(|(_, s)| s)
    }

    /// Like [`Session::bob_recover`], also returning the register state
    /// just before the final swaps.
    pub fn bob_recover_steps(&self) -> Result<(StateVector, Session)> {
        self.expect(Stage::SentA)?;
        let regs = &self.regs;
        let (n, m) = (regs.n, regs.m);
        let channel = self.locc.channel();
        let label = channel.last(Purpose::Setup).map(|msg| msg.bits.clone()).unwrap_or_default();
        let a = channel.last(Purpose::SendOutcomes).map(|msg| msg.bits.clone()).unwrap_or_default();
        if a.len() != n {
            return Err(Error::StageViolation {
                expected: format!("{n} outcome bits from Alice"),
                found: format!("{} bits", a.len()),
            });
        }

        let mut locc = self.locc.clone();
        if self.protocol == Protocol::Hpv {
            let d = label.first().copied().unwrap_or(0);
            locc.apply(Party::Bob, &gates::sigma(d as usize)?, &[regs.y[0]])?;
            locc.apply(Party::Bob, &gates::r_gate(a[0]), &[regs.y[0]])?;
        } else {
            if n > 0 {
                let perm = Announcement::decode(n, &label)?;
                locc.apply(Party::Bob, &gates::r_n(&perm), &regs.y[..n])?;
            }
            for (i, &bit) in a.iter().enumerate() {
                locc.apply(Party::Bob, &gates::r_gate(bit), &[regs.y[i]])?;
            }
        }
        let before_swaps = locc.state().clone();
        let swap = gates::swap_e();
        for j in 0..m {
            locc.apply(Party::Bob, &swap, &[regs.y[n + j], regs.b[n + m + j]])?;
        }
        Ok((before_swaps, self.successor(locc, Stage::Recovered, 1, 0)))
    }

    /// Finishes a recovered branch.
    pub fn into_result(self) -> Result<RunResult> {
        self.expect(Stage::Recovered)?;
        let final_y_state = self.locc.state().extract_subsystem(&self.regs.y)?;
        Ok(RunResult {
            protocol: self.protocol,
            n: self.regs.n,
            m: self.regs.m,
            branch_id: self.branch_id,
            final_y_state,
            probability: self.locc.probability(),
            transcript: self.transcript,
            ledger: *self.locc.ledger(),
            events: self.locc.events().to_vec(),
            owners: self.regs.owners().to_vec(),
        })
    }
}

fn enumerate(session: Session, out: &mut Vec<RunResult>) -> Result<()> {
    if session.stage == Stage::Recovered {
        out.push(session.into_result()?);
        return Ok(());
    }
    for next in session.advance()? {
        enumerate(next, out)?;
    }
    Ok(())
}

/// Runs every branch of `protocol` for `op` on `xi`, in branch-id order.
pub fn run_protocol(protocol: Protocol, op: &RestrictedOp, xi: &StateVector) -> Result<Vec<RunResult>> {
    if protocol == Protocol::Bqst {
        let device = op.build()?;
        return teleport::bqst(&device, xi);
    }
    let mut out = Vec::with_capacity(Outcomes::count(op.dims().0, op.dims().1));
    enumerate(Session::start(protocol, op, xi)?, &mut out)?;
    Ok(out)
}

/// Runs a single branch, drawing each measurement outcome from `rng`.
pub fn run_sampled<R: Rng + ?Sized>(
    protocol: Protocol,
    op: &RestrictedOp,
    xi: &StateVector,
    rng: &mut R,
) -> Result<RunResult> {
    fn pick<R: Rng + ?Sized, T>(items: Vec<T>, weight: impl Fn(&T) -> f64, rng: &mut R) -> T {
        let total: f64 = items.iter().map(&weight).sum();
        let draw = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let last = items.len() - 1;
        for (i, item) in items.into_iter().enumerate() {
            acc += weight(&item);
            if draw < acc || i == last {
                return item;
            }
        }
        unreachable!("at least one branch")
    }

    if protocol == Protocol::Bqst {
        let all = teleport::bqst(&op.build()?, xi)?;
        return Ok(pick(all, |r| r.probability, rng));
    }
    let mut session = Session::start(protocol, op, xi)?;
    while session.stage != Stage::Recovered {
        session = pick(session.advance()?, Session::probability, rng);
    }
    session.into_result()
}

/// Runs the branch selected by `outcomes`, returning the session after every
/// stage (`Init` first, `Recovered` last).
pub fn run_pinned(protocol: Protocol, op: &RestrictedOp, xi: &StateVector, outcomes: &Outcomes) -> Result<Vec<Session>> {
    let mut trail = vec![Session::start(protocol, op, xi)?];
    while trail.last().map(|s| s.stage) != Some(Stage::Recovered) {
        let next = trail.last().expect("nonempty").advance_pinned(outcomes)?;
        trail.push(next);
    }
    Ok(trail)
}

/// HPV protocol for `U(d)` with nonzero entries `u` in row order.
pub fn run_hpv(d: u8, u: [C64; 2], xi: &StateVector) -> Result<Vec<RunResult>> {
    run_protocol(Protocol::Hpv, &RestrictedOp::hpv(d, u)?, xi)
}

pub fn run_wang(perm: Permutation, t: Vec<C64>, xi: &StateVector) -> Result<Vec<RunResult>> {
    run_protocol(Protocol::Wang, &RestrictedOp::wang(perm, t)?, xi)
}

pub fn run_hybrid(perm: Permutation, blocks: Vec<CMatrix>, xi: &StateVector) -> Result<Vec<RunResult>> {
    run_protocol(Protocol::Hybrid, &RestrictedOp::new(Variant::Hybrid { perm, blocks })?, xi)
}
