//! Restricted operator families and their block-permutation structure.
//!
//! Every family is a special case of
//!
//! ```text
//! T(x, G) = sum_{m=1}^{2^N} |p_m(x)><m| (x) G_m
//! ```
//!
//! with `G_m` full-rank `2^M x 2^M` blocks. Wang operators are the `M = 0`
//! case (scalar blocks) and HPV operators are Wang operators with `N = 1`.

use crate::error::{Error, Result};
use crate::gates::{unitarity_deviation, GateMatrix, Permutation};
use crate::sim::{CMatrix, C64};
use crate::EQ_TOL;

/// Blocks whose smallest singular value is at or below this are rejected.
pub const RANK_TOL: f64 = 1e-8;
/// A block whose largest entry is below this is zero.
pub const ZERO_BLOCK_TOL: f64 = 1e-10;
/// A block whose largest entry is at least this is nonzero. Anything in
/// between is reported as ambiguous.
pub const NONZERO_BLOCK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    /// Single-qubit diagonal (`d = 0`) or antidiagonal (`d = 1`) operator.
    /// `u` holds the two nonzero entries in row order: `(u00, u11)` or
    /// `(u01, u10)`.
    Hpv { d: u8, u: [C64; 2] },
    /// `sum_m t_m |p_m><m|` on `N` qubits.
    Wang { perm: Permutation, t: Vec<C64> },
    /// `sum_m |p_m><m| (x) G_m` on `N + M` qubits.
    Hybrid { perm: Permutation, blocks: Vec<CMatrix> },
}

/// An operator from one of the restricted sets, together with the mode it is
/// run in.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedOp {
    variant: Variant,
    unitary_mode: bool,
}

pub(crate) fn min_singular_value(block: &CMatrix) -> f64 {
    block.clone().svd(false, false).singular_values.min()
}

impl RestrictedOp {
    /// Validates and wraps a variant in unitary mode.
    pub fn new(variant: Variant) -> Result<Self> {
        Self::with_mode(variant, true)
    }

    /// `unitary_mode = false` admits any full-rank blocks. Such operators
    /// are not physical; protocol runs renormalize after applying them.
    pub fn with_mode(variant: Variant, unitary_mode: bool) -> Result<Self> {
        let op = Self { variant, unitary_mode };
        op.validate()?;
        Ok(op)
    }

    pub fn hpv(d: u8, u: [C64; 2]) -> Result<Self> {
        Self::new(Variant::Hpv { d, u })
    }

    pub fn wang(perm: Permutation, t: Vec<C64>) -> Result<Self> {
        Self::new(Variant::Wang { perm, t })
    }

    pub fn hybrid(perm: Permutation, blocks: Vec<CMatrix>) -> Result<Self> {
        Self::new(Variant::Hybrid { perm, blocks })
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn unitary_mode(&self) -> bool {
        self.unitary_mode
    }

    fn validate(&self) -> Result<()> {
        match &self.variant {
            Variant::Hpv { d, u } => {
                if *d > 1 {
                    return Err(Error::InvalidOperator(format!("HPV set index d = {d}")));
                }
                self.check_scalars(u)
            }
            Variant::Wang { perm, t } => {
                if t.len() != perm.n_levels() {
                    return Err(Error::DimensionMismatch {
                        expected: perm.n_levels(),
                        actual: t.len(),
                    });
                }
                self.check_scalars(t)
            }
            Variant::Hybrid { perm, blocks } => {
                if blocks.len() != perm.n_levels() {
                    return Err(Error::DimensionMismatch {
                        expected: perm.n_levels(),
                        actual: blocks.len(),
                    });
                }
                let bdim = blocks[0].nrows();
                if !bdim.is_power_of_two() {
                    return Err(Error::InvalidOperator(format!("block dimension {bdim}")));
                }
                for (i, g) in blocks.iter().enumerate() {
                    if g.nrows() != bdim || g.ncols() != bdim {
                        return Err(Error::DimensionMismatch {
                            expected: bdim,
                            actual: g.ncols(),
                        });
                    }
                    let min_singular = min_singular_value(g);
                    if min_singular <= RANK_TOL {
                        return Err(Error::RankDeficientBlock { block: i, min_singular });
                    }
                    if self.unitary_mode {
                        let deviation = unitarity_deviation(g);
                        if deviation >= EQ_TOL {
                            return Err(Error::NonUnitary { deviation });
                        }
                    }
                }
                Ok(())
            }
        }
    }

    fn check_scalars(&self, t: &[C64]) -> Result<()> {
        for (i, v) in t.iter().enumerate() {
            if v.norm() <= RANK_TOL {
                return Err(Error::RankDeficientBlock {
                    block: i,
                    min_singular: v.norm(),
                });
            }
            if self.unitary_mode && (v.norm() - 1.0).abs() >= EQ_TOL {
                return Err(Error::NonUnitary {
                    deviation: (v.norm_sqr() - 1.0).abs(),
                });
            }
        }
        Ok(())
    }

    /// `(N, M)`.
    pub fn dims(&self) -> (usize, usize) {
        match &self.variant {
            Variant::Hpv { .. } => (1, 0),
            Variant::Wang { perm, .. } => (perm.num_qubits(), 0),
            Variant::Hybrid { perm, blocks } => (perm.num_qubits(), blocks[0].nrows().trailing_zeros() as usize),
        }
    }

    pub fn num_qubits(&self) -> usize {
        let (n, m) = self.dims();
        n + m
    }

    /// The permutation labelling the restricted set. For HPV this is the
    /// identity when `d = 0` and the swap `(2, 1)` when `d = 1`.
    pub fn permutation(&self) -> Permutation {
        match &self.variant {
            Variant::Hpv { d: 0, .. } => Permutation::identity(1),
            Variant::Hpv { .. } => Permutation::new(vec![2, 1]).expect("valid"),
            Variant::Wang { perm, .. } | Variant::Hybrid { perm, .. } => perm.clone(),
        }
    }

    /// `G_1 ... G_{2^N}`, with scalar variants as `1 x 1` blocks.
    pub fn blocks(&self) -> Vec<CMatrix> {
        let scalar = |v: C64| CMatrix::from_element(1, 1, v);
        match &self.variant {
            Variant::Hpv { d: 0, u } => vec![scalar(u[0]), scalar(u[1])],
            // column 1 is sent to row 2 with weight u10, column 2 to row 1 with u01
            Variant::Hpv { u, .. } => vec![scalar(u[1]), scalar(u[0])],
            Variant::Wang { t, .. } => t.iter().map(|&v| scalar(v)).collect(),
            Variant::Hybrid { blocks, .. } => blocks.clone(),
        }
    }

    /// The same operator expressed as a hybrid variant.
    pub fn to_hybrid(&self) -> RestrictedOp {
        RestrictedOp {
            variant: Variant::Hybrid {
                perm: self.permutation(),
                blocks: self.blocks(),
            },
            unitary_mode: self.unitary_mode,
        }
    }

    /// Dense `2^{N+M}` matrix: block `(p_m, m)` is `G_m`, all others zero.
    pub fn build(&self) -> Result<GateMatrix> {
        let perm = self.permutation();
        let blocks = self.blocks();
        let bdim = blocks[0].nrows();
        let dim = perm.n_levels() * bdim;
        let mut u = CMatrix::zeros(dim, dim);
        for (col, g) in blocks.iter().enumerate() {
            let row = perm.image(col + 1) - 1;
            u.view_mut((row * bdim, col * bdim), (bdim, bdim)).copy_from(g);
        }
        let gate = GateMatrix::from_matrix(u)?;
        if self.unitary_mode && !gate.is_unitary() {
            return Err(Error::NonUnitary {
                deviation: gate.unitarity_deviation(),
            });
        }
        Ok(gate)
    }
}

/// A block-permutation factorization of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub n: usize,
    pub m: usize,
    pub perm: Permutation,
    pub blocks: Vec<CMatrix>,
    /// `N + 2M` shared Bell pairs for the hybrid protocol.
    pub ebit_cost: usize,
}

impl Decomposition {
    pub fn to_op(&self, unitary_mode: bool) -> Result<RestrictedOp> {
        RestrictedOp::with_mode(
            Variant::Hybrid {
                perm: self.perm.clone(),
                blocks: self.blocks.clone(),
            },
            unitary_mode,
        )
    }
}

/// Recovers the permutation and blocks of `u` viewed as a `2^N x 2^N` grid of
/// `2^M x 2^M` blocks.
pub fn decompose(u: &CMatrix, n: usize, m: usize) -> Result<Decomposition> {
    let dim = 1usize << (n + m);
    if u.nrows() != dim || u.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: u.nrows(),
        });
    }
    let levels = 1usize << n;
    let bdim = 1usize << m;

    let mut nonzero = vec![vec![false; levels]; levels];
    for (row, flags) in nonzero.iter_mut().enumerate() {
        for (col, flag) in flags.iter_mut().enumerate() {
            let magnitude = u.view((row * bdim, col * bdim), (bdim, bdim)).camax();
            if (ZERO_BLOCK_TOL..NONZERO_BLOCK_TOL).contains(&magnitude) {
                return Err(Error::AmbiguousStructure { row, col, magnitude });
            }
            *flag = magnitude >= NONZERO_BLOCK_TOL;
        }
    }

    for (row, flags) in nonzero.iter().enumerate() {
        let count = flags.iter().filter(|&&f| f).count();
        if count != 1 {
            return Err(Error::NotBlockPermutation(format!("block row {row} has {count} nonzero blocks")));
        }
    }

    let mut map = Vec::with_capacity(levels);
    let mut blocks = Vec::with_capacity(levels);
    for col in 0..levels {
        let rows: Vec<usize> = (0..levels).filter(|&r| nonzero[r][col]).collect();
        if rows.len() != 1 {
            return Err(Error::NotBlockPermutation(format!(
                "block column {col} has {} nonzero blocks",
                rows.len()
            )));
        }
        let g: CMatrix = u.view((rows[0] * bdim, col * bdim), (bdim, bdim)).into_owned();
        let min_singular = min_singular_value(&g);
        if min_singular <= RANK_TOL {
            return Err(Error::RankDeficientBlock { block: col, min_singular });
        }
        map.push(rows[0] + 1);
        blocks.push(g);
    }

    Ok(Decomposition {
        n,
        m,
        perm: Permutation::new(map)?,
        blocks,
        ebit_cost: n + 2 * m,
    })
}

/// Every block-permutation split of a unitary, cheapest first. The `N = 0`
/// split (plain bidirectional teleportation) always succeeds.
pub fn classify(u: &GateMatrix) -> Result<Vec<Decomposition>> {
    if !u.is_unitary() {
        return Err(Error::NonUnitary {
            deviation: u.unitarity_deviation(),
        });
    }
    let total = u.num_qubits();
    let mut found = Vec::new();
    for n in (0..=total).rev() {
        match decompose(u.matrix(), n, total - n) {
            Ok(d) => found.push(d),
            Err(Error::NotBlockPermutation(_)) | Err(Error::RankDeficientBlock { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    found.sort_by_key(|d| d.ebit_cost);
    Ok(found)
}
