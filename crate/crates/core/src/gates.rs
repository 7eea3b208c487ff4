//! Fixed operators used by the protocols and the permutation type that
//! labels a restricted set.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{CMatrix, C64};
use crate::EQ_TOL;

/// A `dim x dim` complex matrix acting on `log2(dim)` qubits.
///
/// The `unitary` flag is computed at construction; only flagged gates may be
/// passed to [`crate::StateVector::apply_gate`].
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    matrix: CMatrix,
    unitary: bool,
}

/// `max |G^dagger G - I|`.
pub fn unitarity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    (m.adjoint() * m - CMatrix::identity(n, n)).camax()
}

impl GateMatrix {
    /// Wraps a unitary matrix, failing if it is not unitary within
    /// [`EQ_TOL`].
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let gate = Self::from_matrix(matrix)?;
        if !gate.unitary {
            return Err(Error::NonUnitaryGate {
                deviation: gate.unitarity_deviation(),
            });
        }
        Ok(gate)
    }

    /// Wraps any square power-of-two matrix, flagging whether it is unitary.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim || !dim.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: dim.next_power_of_two(),
                actual: matrix.ncols(),
            });
        }
        let unitary = unitarity_deviation(&matrix) < EQ_TOL;
        Ok(Self { matrix, unitary })
    }

    fn trusted(matrix: CMatrix) -> Self {
        Self { matrix, unitary: true }
    }

    pub fn identity(num_qubits: usize) -> Self {
        let dim = 1 << num_qubits;
        Self::trusted(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(&self.matrix)
    }

    pub fn adjoint(&self) -> GateMatrix {
        Self {
            matrix: self.matrix.adjoint(),
            unitary: self.unitary,
        }
    }

    /// Matrix product `self * other` (apply `other` first).
    pub fn compose(&self, other: &GateMatrix) -> Result<GateMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Self::from_matrix(&self.matrix * &other.matrix)
    }

    /// Kronecker product; `self` acts on the more-significant qubits.
    pub fn kron(&self, other: &GateMatrix) -> GateMatrix {
        Self {
            matrix: self.matrix.kronecker(&other.matrix),
            unitary: self.unitary && other.unitary,
        }
    }

    pub fn max_deviation(&self, other: &GateMatrix) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        (&self.matrix - &other.matrix).camax()
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn mat2(entries: [C64; 4]) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &entries)
}

/// `sigma_0` (identity) through `sigma_3`.
pub fn sigma(i: usize) -> Result<GateMatrix> {
    let (o, l) = (c(0.0, 0.0), c(1.0, 0.0));
    let m = match i {
        0 => mat2([l, o, o, l]),
        1 => mat2([o, l, l, o]),
        2 => mat2([o, c(0.0, -1.0), c(0.0, 1.0), o]),
        3 => mat2([l, o, o, -l]),
        _ => return Err(Error::BadIndex(i)),
    };
    Ok(GateMatrix::trusted(m))
}

pub fn hadamard() -> GateMatrix {
    let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    GateMatrix::trusted(mat2([h, h, h, -h]))
}

/// `r(a) = (1 - a) sigma_0 + a sigma_3`.
pub fn r_gate(a: u8) -> GateMatrix {
    if a == 0 {
        GateMatrix::identity(1)
    } else {
        GateMatrix::trusted(mat2([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]))
    }
}

/// Controlled NOT with the first target slot as control.
pub fn cnot() -> GateMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 1)] = c(1.0, 0.0);
    m[(2, 3)] = c(1.0, 0.0);
    m[(3, 2)] = c(1.0, 0.0);
    GateMatrix::trusted(m)
}

/// Two-qubit swap.
pub fn swap_e() -> GateMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 2)] = c(1.0, 0.0);
    m[(2, 1)] = c(1.0, 0.0);
    m[(3, 3)] = c(1.0, 0.0);
    GateMatrix::trusted(m)
}

/// `R_N(x) = sum_m |p_m(x)><m|`, the permutation matrix of `perm`.
pub fn r_n(perm: &Permutation) -> GateMatrix {
    let dim = perm.n_levels();
    let mut m = CMatrix::zeros(dim, dim);
    for col in 1..=dim {
        m[(perm.image(col) - 1, col - 1)] = c(1.0, 0.0);
    }
    GateMatrix::trusted(m)
}

/// A bijection on `{1, ..., 2^N}`, stored 1-indexed: `map[m - 1] = p_m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    map: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(map: Vec<usize>) -> Result<Self> {
        Permutation::new(map)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.map
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.map.iter().map(|m| m.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        let valid = n.is_power_of_two()
            && map.iter().all(|&v| {
                if v == 0 || v > n || seen[v - 1] {
                    return false;
                }
                seen[v - 1] = true;
                true
            });
        if !valid {
            return Err(Error::BadPermutation { n_levels: n, map });
        }
        Ok(Self { map })
    }

    pub fn identity(num_qubits: usize) -> Self {
        Self {
            map: (1..=(1 << num_qubits)).collect(),
        }
    }

    pub fn n_levels(&self) -> usize {
        self.map.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.map.len().trailing_zeros() as usize
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    /// `p_m`, 1-indexed in and out.
    pub fn image(&self, m: usize) -> usize {
        self.map[m - 1]
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &v)| v == i + 1)
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v - 1] = i + 1;
        }
        Self { map: inv }
    }

    /// Binary digits `l_m^1 ... l_m^N` of `p_m - 1`, most significant first.
    pub fn image_bits(&self, m: usize) -> Vec<u8> {
        index_bits(self.image(m) - 1, self.num_qubits())
    }

    /// Rank of the permutation in lexicographic order (Lehmer code), from 0.
    ///
    /// This numbering is a convention of this crate; any fixed bijection
    /// between labels and permutations would do.
    pub fn lehmer_index(&self) -> u128 {
        let n = self.map.len();
        let mut rank: u128 = 0;
        for i in 0..n {
            let smaller_after = self.map[i + 1..].iter().filter(|&&v| v < self.map[i]).count() as u128;
            rank = rank * (n - i) as u128 + smaller_after;
        }
        rank
    }

    /// Inverse of [`Permutation::lehmer_index`].
    pub fn from_lehmer(num_qubits: usize, mut index: u128) -> Result<Self> {
        let n = 1usize << num_qubits;
        let mut digits = vec![0usize; n];
        for i in (0..n).rev() {
            let radix = (n - i) as u128;
            digits[i] = (index % radix) as usize;
            index /= radix;
        }
        if index != 0 {
            return Err(Error::BadIndex(n));
        }
        let mut pool: Vec<usize> = (1..=n).collect();
        let map = digits.into_iter().map(|d| pool.remove(d)).collect();
        Ok(Self { map })
    }

    /// Every permutation of `2^num_qubits` levels in Lehmer order.
    pub fn all(num_qubits: usize) -> impl Iterator<Item = Permutation> {
        let n = 1u128 << num_qubits;
        let count: u128 = (1..=n).product();
        (0..count).map(move |i| Self::from_lehmer(num_qubits, i).expect("index in range"))
    }
}

/// Bits of `index` over `width` positions, most significant first.
pub fn index_bits(index: usize, width: usize) -> Vec<u8> {
    (0..width).map(|i| ((index >> (width - 1 - i)) & 1) as u8).collect()
}

/// Classical bits needed to announce one of the `(2^N)!` restricted-set
/// labels: `ceil(log2((2^N)!))`.
pub fn label_bits(num_qubits: usize) -> usize {
    let n = 1u128 << num_qubits.min(5);
    if num_qubits <= 5 {
        // 32! < 2^118 still fits
        let fact: u128 = (1..=n).product();
        return (u128::BITS - (fact - 1).leading_zeros()) as usize;
    }
    let log2: f64 = (1..=(1u64 << num_qubits)).map(|k| (k as f64).log2()).sum();
    log2.ceil() as usize
}
