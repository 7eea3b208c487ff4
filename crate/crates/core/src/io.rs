//! JSON formats for states, matrices, operators and reports.
//!
//! Complex numbers are `[re, im]` pairs. Matrices are row-major.

use serde::{Deserialize, Serialize};

use crate::engine::{Protocol, RunResult};
use crate::error::{Error, Result};
use crate::gates::{GateMatrix, Permutation};
use crate::locc::ResourceLedger;
use crate::restricted::{Decomposition, RestrictedOp, Variant};
use crate::sim::{fidelity, CMatrix, StateVector, C64};
use crate::teleport::TeleportRecord;
use crate::verify::direct_apply;

pub type ComplexJson = [f64; 2];

fn to_pair(z: &C64) -> ComplexJson {
    [z.re, z.im]
}

fn from_pair(p: &ComplexJson) -> C64 {
    C64::new(p[0], p[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub num_qubits: usize,
    pub amplitudes: Vec<ComplexJson>,
}

impl From<&StateVector> for StateJson {
    fn from(s: &StateVector) -> Self {
        Self {
            num_qubits: s.num_qubits(),
            amplitudes: s.amplitudes().iter().map(to_pair).collect(),
        }
    }
}

impl TryFrom<StateJson> for StateVector {
    type Error = Error;

    fn try_from(j: StateJson) -> Result<Self> {
        if j.amplitudes.len() != 1usize << j.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << j.num_qubits,
                actual: j.amplitudes.len(),
            });
        }
        StateVector::new(j.amplitudes.iter().map(from_pair).collect())
    }
}

pub fn parse_state(text: &str) -> Result<StateVector> {
    serde_json::from_str::<StateJson>(text)?.try_into()
}

pub fn state_to_json(state: &StateVector) -> String {
    serde_json::to_string_pretty(&StateJson::from(state)).expect("plain data")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<Vec<ComplexJson>>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        Self {
            dim: m.nrows(),
            entries: m.row_iter().map(|row| row.iter().map(to_pair).collect()).collect(),
        }
    }
}

impl TryFrom<&MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(j: &MatrixJson) -> Result<Self> {
        if j.entries.len() != j.dim || j.entries.iter().any(|r| r.len() != j.dim) {
            return Err(Error::Parse(format!("matrix entries do not form a {0}x{0} array", j.dim)));
        }
        Ok(CMatrix::from_fn(j.dim, j.dim, |r, c| from_pair(&j.entries[r][c])))
    }
}

pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    (&serde_json::from_str::<MatrixJson>(text)?).try_into()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum OpJson {
    Hpv {
        d: u8,
        u: [ComplexJson; 2],
    },
    Wang {
        #[serde(rename = "N")]
        n: usize,
        perm: Permutation,
        t: Vec<ComplexJson>,
    },
    Hybrid {
        #[serde(rename = "N")]
        n: usize,
        #[serde(rename = "M")]
        m: usize,
        perm: Permutation,
        blocks: Vec<MatrixJson>,
        #[serde(default = "default_true")]
        unitary_mode: bool,
    },
}

impl From<&RestrictedOp> for OpJson {
    fn from(op: &RestrictedOp) -> Self {
        match op.variant() {
            Variant::Hpv { d, u } => OpJson::Hpv {
                d: *d,
                u: [to_pair(&u[0]), to_pair(&u[1])],
            },
            Variant::Wang { perm, t } => OpJson::Wang {
                n: perm.num_qubits(),
                perm: perm.clone(),
                t: t.iter().map(to_pair).collect(),
            },
            Variant::Hybrid { perm, blocks } => OpJson::Hybrid {
                n: perm.num_qubits(),
                m: op.dims().1,
                perm: perm.clone(),
                blocks: blocks.iter().map(MatrixJson::from).collect(),
                unitary_mode: op.unitary_mode(),
            },
        }
    }
}

impl TryFrom<OpJson> for RestrictedOp {
    type Error = Error;

    fn try_from(j: OpJson) -> Result<Self> {
        match j {
            OpJson::Hpv { d, u } => RestrictedOp::hpv(d, [from_pair(&u[0]), from_pair(&u[1])]),
            OpJson::Wang { n, perm, t } => {
                check_n(n, &perm)?;
                RestrictedOp::wang(perm, t.iter().map(from_pair).collect())
            }
            OpJson::Hybrid {
                n,
                m,
                perm,
                blocks,
                unitary_mode,
            } => {
                check_n(n, &perm)?;
                let blocks = blocks.iter().map(CMatrix::try_from).collect::<Result<Vec<_>>>()?;
                if let Some(b) = blocks.iter().find(|b| b.nrows() != 1 << m) {
                    return Err(Error::DimensionMismatch {
                        expected: 1 << m,
                        actual: b.nrows(),
                    });
                }
                RestrictedOp::with_mode(Variant::Hybrid { perm, blocks }, unitary_mode)
            }
        }
    }
}

fn check_n(n: usize, perm: &Permutation) -> Result<()> {
    if perm.num_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: perm.num_qubits(),
        });
    }
    Ok(())
}

pub fn parse_op(text: &str) -> Result<RestrictedOp> {
    serde_json::from_str::<OpJson>(text)?.try_into()
}

pub fn op_to_json(op: &RestrictedOp) -> String {
    serde_json::to_string_pretty(&OpJson::from(op)).expect("plain data")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub branch_id: usize,
    pub b: Vec<u8>,
    pub a: Vec<u8>,
    pub teleports: Vec<TeleportRecord>,
    pub probability: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub protocol: Protocol,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub branches: Vec<BranchReport>,
    pub ledger: ResourceLedger,
}

impl RunReport {
    /// Scores every branch against `direct_apply(op, xi)`.
    pub fn new(protocol: Protocol, op: &RestrictedOp, xi: &StateVector, runs: &[RunResult]) -> Result<Self> {
        let expected = direct_apply(op, xi)?;
        let (n, m) = match protocol {
            Protocol::Bqst => (0, op.num_qubits()),
            _ => op.dims(),
        };
        let branches = runs
            .iter()
            .map(|r| {
                Ok(BranchReport {
                    branch_id: r.branch_id,
                    b: r.transcript.b.clone(),
                    a: r.transcript.a.clone(),
                    teleports: r.transcript.teleports.clone(),
                    probability: r.probability,
                    fidelity: fidelity(&r.final_y_state, &expected)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let ledger = runs.first().map(|r| r.ledger).unwrap_or_default();
        Ok(Self {
            protocol,
            n,
            m,
            branches,
            ledger,
        })
    }

    pub fn min_fidelity(&self) -> f64 {
        self.branches.iter().map(|b| b.fidelity).fold(1.0, f64::min)
    }

    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionJson {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub perm: Permutation,
    pub blocks: Vec<MatrixJson>,
    pub ebit_cost: usize,
}

impl From<&Decomposition> for DecompositionJson {
    fn from(d: &Decomposition) -> Self {
        Self {
            n: d.n,
            m: d.m,
            perm: d.perm.clone(),
            blocks: d.blocks.iter().map(MatrixJson::from).collect(),
            ebit_cost: d.ebit_cost,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourcePrediction {
    pub protocol: Protocol,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub ebits: usize,
    pub cbits: usize,
    pub setup_bits: usize,
}

impl ResourcePrediction {
    /// Counts without simulating.
    pub fn new(protocol: Protocol, n: usize, m: usize) -> Self {
        let (ebits, cbits) = protocol.predicted_cost(n, m);
        Self {
            protocol,
            n,
            m,
            ebits,
            cbits,
            setup_bits: protocol.setup_bits(n),
        }
    }

    pub fn matches(&self, ledger: &ResourceLedger) -> bool {
        self.ebits == ledger.ebits_consumed && self.cbits == ledger.cbits() && self.setup_bits == ledger.setup_bits
    }
}

/// Parses a square matrix file and wraps it without a unitarity check.
pub fn parse_gate(text: &str) -> Result<GateMatrix> {
    GateMatrix::from_matrix(parse_matrix(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_protocol;
    use crate::random::{random_hybrid, random_nonunitary_hybrid, random_state, seeded};

    #[test]
    fn state_round_trip() {
        let s = random_state(2, &mut seeded(1));
        assert_eq!(parse_state(&state_to_json(&s)).unwrap(), s);
        assert!(matches!(
            parse_state(r#"{"num_qubits": 1, "amplitudes": [[1,0]]}"#),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(parse_state("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn op_round_trip_and_default_mode() {
        let mut rng = seeded(2);
        for op in [random_hybrid(1, 1, &mut rng), random_nonunitary_hybrid(1, 1, &mut rng)] {
            assert_eq!(parse_op(&op_to_json(&op)).unwrap(), op);
        }
        let text = r#"{"variant":"hybrid","N":1,"M":0,"perm":[2,1],
            "blocks":[{"dim":1,"entries":[[[1,0]]]},{"dim":1,"entries":[[[0,1]]]}]}"#;
        let op = parse_op(text).unwrap();
        assert!(op.unitary_mode());
        let hpv = parse_op(r#"{"variant":"hpv","d":1,"u":[[1,0],[0,1]]}"#).unwrap();
        assert_eq!(hpv.permutation().map(), &[2, 1]);
    }

    #[test]
    fn malformed_matrix_is_parse_error() {
        assert!(matches!(parse_matrix(r#"{"dim":2,"entries":[[[1,0]]]}"#), Err(Error::Parse(_))));
        assert!(matches!(parse_matrix(r#"{"dim":2"#), Err(Error::Parse(_))));
    }

    #[test]
    fn run_report_shape() {
        let mut rng = seeded(3);
        let op = random_hybrid(1, 1, &mut rng);
        let xi = random_state(2, &mut rng);
        let runs = run_protocol(Protocol::Hybrid, &op, &xi).unwrap();
        let report = RunReport::new(Protocol::Hybrid, &op, &xi, &runs).unwrap();
        assert_eq!(report.branches.len(), 64);
        assert_eq!(report.ledger.ebits_consumed, 3);
        assert!(report.min_fidelity() > 1.0 - 1e-9);
        assert!((report.total_probability() - 1.0).abs() < 1e-9);
        let json: serde_json::Value = serde_json::to_value(&report).unwrap();
        for key in ["protocol", "N", "M", "branches", "ledger"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        for key in ["ebits", "cbits_b2a", "cbits_a2b", "setup_bits"] {
            assert!(json["ledger"].get(key).is_some(), "{key}");
        }
        assert_eq!(json["protocol"], "hybrid");
    }

    #[test]
    fn prediction_counts() {
        let p = ResourcePrediction::new(Protocol::Hybrid, 2, 1);
        assert_eq!((p.ebits, p.cbits, p.setup_bits), (4, 8, 5));
        let p = ResourcePrediction::new(Protocol::Hpv, 1, 0);
        assert_eq!((p.ebits, p.cbits, p.setup_bits), (1, 2, 1));
    }
}
