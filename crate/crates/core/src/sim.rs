//! Dense state-vector and density-matrix kernel.
//!
//! Registers are ordered big-endian: qubit 0 is the most-significant bit of
//! the amplitude index. All operations return new values.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gates::GateMatrix;
use crate::{EQ_TOL, PSD_TOL};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Branches whose probability falls below this are treated as impossible.
pub const PROB_FLOOR: f64 = 1e-13;

#[inline]
fn bit_of(index: usize, qubit: usize, num_qubits: usize) -> usize {
    (index >> (num_qubits - 1 - qubit)) & 1
}

#[inline]
fn mask_of(qubit: usize, num_qubits: usize) -> usize {
    1 << (num_qubits - 1 - qubit)
}

pub(crate) fn check_targets(targets: &[usize], num_qubits: usize) -> Result<()> {
    for (i, &t) in targets.iter().enumerate() {
        if t >= num_qubits {
            return Err(Error::TargetOutOfRange { index: t, num_qubits });
        }
        if targets[..i].contains(&t) {
            return Err(Error::DuplicateTarget(t));
        }
    }
    Ok(())
}

/// Applies `matrix` to `targets` of the raw amplitude array in place.
///
/// `targets[0]` is the most-significant qubit of the matrix's local index.
pub(crate) fn apply_kernel(amps: &mut [C64], num_qubits: usize, matrix: &CMatrix, targets: &[usize]) {
    let k = targets.len();
    let local_dim = 1usize << k;
    debug_assert_eq!(matrix.nrows(), local_dim);

    let offsets: Vec<usize> = (0..local_dim)
        .map(|j| {
            targets
                .iter()
                .enumerate()
                .filter(|(slot, _)| (j >> (k - 1 - slot)) & 1 == 1)
                .map(|(_, &q)| mask_of(q, num_qubits))
                .sum()
        })
        .collect();
    let mut masks: Vec<usize> = targets.iter().map(|&q| mask_of(q, num_qubits)).collect();
    masks.sort_unstable();
    // Spreads the bits of a compact index around the target positions.
    let spread = |mut base: usize| {
        for &mask in &masks {
            base = (base & (mask - 1)) | ((base & !(mask - 1)) << 1);
        }
        base
    };
    let rows: Vec<C64> = (0..local_dim)
        .flat_map(|r| (0..local_dim).map(move |c| (r, c)))
        .map(|(r, c)| matrix[(r, c)])
        .collect();
    let bases = amps.len() >> k;

    if k == 1 {
        let (u00, u01, u10, u11) = (rows[0], rows[1], rows[2], rows[3]);
        let off = offsets[1];
        for compact in 0..bases {
            let base = spread(compact);
            let (x, y) = (amps[base], amps[base + off]);
            amps[base] = u00 * x + u01 * y;
            amps[base + off] = u10 * x + u11 * y;
        }
        return;
    }

    let mut gathered = vec![C64::new(0.0, 0.0); local_dim];
    for compact in 0..bases {
        let base = spread(compact);
        for (g, off) in gathered.iter_mut().zip(&offsets) {
            *g = amps[base + off];
        }
        for (row, off) in rows.chunks_exact(local_dim).zip(&offsets) {
            amps[base + off] = row.iter().zip(&gathered).map(|(u, g)| u * g).sum();
        }
    }
}

/// A pure state on an ordered qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Builds a state from amplitudes, rejecting anything not normalized to
    /// within [`EQ_TOL`].
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let state = Self::from_raw(amplitudes)?;
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > EQ_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Builds a state by rescaling `amplitudes` to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let state = Self::from_raw(amplitudes)?;
        let norm = state.norm_sqr();
        if norm <= PROB_FLOOR {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state.scaled(1.0 / norm.sqrt()))
    }

    fn from_raw(amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: len.next_power_of_two(),
                actual: len,
            });
        }
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    /// Computational basis state `|index>` on `num_qubits` qubits.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::BadIndex(index));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self { num_qubits, amplitudes })
    }

    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0).expect("index 0 always valid")
    }

    /// `(|00> + |11>) / sqrt(2)`.
    pub fn phi_plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            num_qubits: 2,
            amplitudes: vec![C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(h, 0.0)],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn scaled(mut self, factor: f64) -> Self {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
        self
    }

    /// Multiplies every amplitude by a complex scalar.
    pub fn times(&self, factor: C64) -> Self {
        Self {
            num_qubits: self.num_qubits,
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
        }
    }

    /// `self (x) other`; `self` occupies the more-significant qubits.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        StateVector {
            num_qubits: self.num_qubits + other.num_qubits,
            amplitudes,
        }
    }

    /// Applies a unitary gate to `targets`, identity elsewhere.
    pub fn apply_gate(&self, gate: &GateMatrix, targets: &[usize]) -> Result<StateVector> {
        if !gate.is_unitary() {
            return Err(Error::NonUnitaryGate {
                deviation: gate.unitarity_deviation(),
            });
        }
        self.apply_matrix(gate.matrix(), targets)
    }

    /// Applies an arbitrary `2^k x 2^k` matrix to `targets` without any
    /// unitarity check. The result is not renormalized.
    pub fn apply_matrix(&self, matrix: &CMatrix, targets: &[usize]) -> Result<StateVector> {
        let mut out = self.clone();
        out.apply_matrix_mut(matrix, targets)?;
        Ok(out)
    }

    /// In-place [`StateVector::apply_matrix`].
    pub fn apply_matrix_mut(&mut self, matrix: &CMatrix, targets: &[usize]) -> Result<()> {
        check_targets(targets, self.num_qubits)?;
        let local_dim = 1usize << targets.len();
        if matrix.nrows() != local_dim || matrix.ncols() != local_dim {
            return Err(Error::DimensionMismatch {
                expected: local_dim,
                actual: matrix.nrows(),
            });
        }
        apply_kernel(&mut self.amplitudes, self.num_qubits, matrix, targets);
        Ok(())
    }

    /// In-place [`StateVector::apply_gate`].
    pub fn apply_gate_mut(&mut self, gate: &GateMatrix, targets: &[usize]) -> Result<()> {
        if !gate.is_unitary() {
            return Err(Error::NonUnitaryGate {
                deviation: gate.unitarity_deviation(),
            });
        }
        self.apply_matrix_mut(gate.matrix(), targets)
    }

    /// Rescales to unit norm.
    pub fn renormalized(&self) -> Result<StateVector> {
        Self::normalized(self.amplitudes.clone())
    }

    /// Exhaustive projective measurement of `qubits` in the computational
    /// basis. One branch per outcome with nonzero probability, in ascending
    /// outcome order (`qubits[0]` most significant).
    pub fn measure(&self, qubits: &[usize]) -> Result<Vec<Branch>> {
        check_targets(qubits, self.num_qubits)?;
        let k = qubits.len();
        let mut branches = Vec::new();
        for outcome in 0..(1usize << k) {
            let bits: Vec<u8> = (0..k).map(|slot| ((outcome >> (k - 1 - slot)) & 1) as u8).collect();
            if let Some(branch) = self.project(qubits, &bits) {
                branches.push(branch);
            }
        }
        Ok(branches)
    }

    /// Projects onto a single outcome; `None` if it has (numerically) zero
    /// probability.
    pub fn project(&self, qubits: &[usize], bits: &[u8]) -> Option<Branch> {
        let n = self.num_qubits;
        let mask: usize = qubits.iter().map(|&q| mask_of(q, n)).sum();
        let want: usize = qubits
            .iter()
            .zip(bits)
            .filter(|(_, &b)| b == 1)
            .map(|(&q, _)| mask_of(q, n))
            .sum();
        let zero = C64::new(0.0, 0.0);
        let mut probability = 0.0;
        let mut amplitudes: Vec<C64> = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                if i & mask == want {
                    probability += a.norm_sqr();
                    a
                } else {
                    zero
                }
            })
            .collect();
        if probability <= PROB_FLOOR {
            return None;
        }
        let scale = 1.0 / probability.sqrt();
        for a in &mut amplitudes {
            *a *= scale;
        }
        Some(Branch {
            outcome_bits: bits.to_vec(),
            probability: probability / self.norm_sqr(),
            post_state: StateVector {
                num_qubits: n,
                amplitudes,
            },
        })
    }

    /// Draws one measurement branch with a seeded generator.
    pub fn sample_measure(&self, qubits: &[usize], seed: u64) -> Result<Branch> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_measure_with(qubits, &mut rng)
    }

    pub fn sample_measure_with<R: Rng + ?Sized>(&self, qubits: &[usize], rng: &mut R) -> Result<Branch> {
        let mut branches = self.measure(qubits)?;
        let draw: f64 = rng.random();
        let mut cumulative = 0.0;
        let last = branches.len() - 1;
        for (i, branch) in branches.iter().enumerate() {
            cumulative += branch.probability;
            if draw < cumulative || i == last {
                return Ok(branches.swap_remove(i));
            }
        }
        unreachable!("measure always yields at least one branch")
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: other.num_qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn to_density(&self) -> DensityMatrix {
        let v = DVector::from_column_slice(&self.amplitudes);
        DensityMatrix {
            num_qubits: self.num_qubits,
            entries: &v * v.adjoint(),
        }
    }

    /// Rows indexed by the kept qubits, columns by the rest.
    fn split_matrix(&self, keep: &[usize]) -> Result<CMatrix> {
        check_targets(keep, self.num_qubits)?;
        let n = self.num_qubits;
        let rest: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let mut m = CMatrix::zeros(1 << keep.len(), 1 << rest.len());
        for (i, a) in self.amplitudes.iter().enumerate() {
            let row = keep.iter().fold(0, |acc, &q| (acc << 1) | bit_of(i, q, n));
            let col = rest.iter().fold(0, |acc, &q| (acc << 1) | bit_of(i, q, n));
            m[(row, col)] = *a;
        }
        Ok(m)
    }

    /// Partial trace onto `keep`, in the order given.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let m = self.split_matrix(keep)?;
        let entries = &m * m.adjoint();
        Ok(DensityMatrix {
            num_qubits: keep.len(),
            entries,
        })
    }

    /// The pure state of `keep` when the register factorizes as
    /// `|psi>_keep (x) |phi>_rest`. The global phase of the result is
    /// arbitrary.
    pub fn extract_subsystem(&self, keep: &[usize]) -> Result<StateVector> {
        let m = self.split_matrix(keep)?;
        let (best, _) = (0..m.ncols())
            .map(|c| (c, m.column(c).norm_squared()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let col = m.column(best);
        let v: Vec<C64> = col.iter().copied().collect();
        let psi = StateVector::normalized(v)?;
        let total = self.norm_sqr();
        let captured: f64 = (0..m.ncols())
            .map(|c| {
                psi.amplitudes
                    .iter()
                    .zip(m.column(c).iter())
                    .map(|(p, x)| p.conj() * x)
                    .sum::<C64>()
                    .norm_sqr()
            })
            .sum::<f64>()
            / total;
        if (1.0 - captured).abs() > EQ_TOL {
            return Err(Error::NotProductState(captured));
        }
        Ok(psi)
    }
}

/// One outcome of an exhaustive measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub outcome_bits: Vec<u8>,
    pub probability: f64,
    /// Renormalized post-measurement state on the full register.
    pub post_state: StateVector,
}

/// `|<a|b>|^2`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

/// Max entrywise deviation between `reference` and `candidate` after
/// aligning the global phase on the largest-magnitude reference amplitude.
pub fn phase_aligned_deviation(reference: &StateVector, candidate: &StateVector) -> Result<f64> {
    if reference.num_qubits != candidate.num_qubits {
        return Err(Error::DimensionMismatch {
            expected: reference.num_qubits,
            actual: candidate.num_qubits,
        });
    }
    let pivot = reference
        .amplitudes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let c = candidate.amplitudes[pivot];
    let phase = if c.norm() > PROB_FLOOR {
        let ratio = reference.amplitudes[pivot] / c;
        ratio / ratio.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    Ok(reference
        .amplitudes
        .iter()
        .zip(&candidate.amplitudes)
        .map(|(r, x)| (r - phase * x).norm())
        .fold(0.0, f64::max))
}

/// A mixed state on an ordered qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(entries: CMatrix) -> Result<Self> {
        let dim = entries.nrows();
        if entries.ncols() != dim || !dim.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: dim.next_power_of_two(),
                actual: entries.ncols(),
            });
        }
        let herm = (&entries - entries.adjoint()).camax();
        if herm > EQ_TOL {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian ({herm:e})")));
        }
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > EQ_TOL || trace.im.abs() > EQ_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {trace}")));
        }
        let rho = DensityMatrix {
            num_qubits: dim.trailing_zeros() as usize,
            entries,
        };
        let min_eig = rho.eigen().iter().map(|(l, _)| *l).fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(rho)
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        DensityMatrix {
            num_qubits,
            entries: CMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0),
        }
    }

    /// `sum_i w_i |psi_i><psi_i|` with weights summing to one.
    pub fn from_ensemble(ensemble: &[(f64, StateVector)]) -> Result<Self> {
        let first = ensemble.first().ok_or(Error::InvalidDensityMatrix("empty ensemble".into()))?;
        let dim = first.1.dim();
        let mut entries = CMatrix::zeros(dim, dim);
        for (w, s) in ensemble {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: s.dim(),
                });
            }
            entries += s.to_density().entries * C64::new(*w, 0.0);
        }
        DensityMatrix::new(entries)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    /// Eigenpairs sorted by descending eigenvalue.
    pub fn eigen(&self) -> Vec<(f64, StateVector)> {
        let eig = SymmetricEigen::new(self.entries.clone());
        let mut pairs: Vec<(f64, StateVector)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let v: Vec<C64> = eig.eigenvectors.column(i).iter().copied().collect();
                let s = StateVector::normalized(v).expect("eigenvectors are nonzero");
                (l, s)
            })
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        pairs
    }

    /// `U rho U^dagger` with `U` the gate on `targets`.
    pub fn apply_channel(&self, gate: &GateMatrix, targets: &[usize]) -> Result<DensityMatrix> {
        if !gate.is_unitary() {
            return Err(Error::NonUnitaryGate {
                deviation: gate.unitarity_deviation(),
            });
        }
        check_targets(targets, self.num_qubits)?;
        if gate.dim() != 1 << targets.len() {
            return Err(Error::DimensionMismatch {
                expected: 1 << targets.len(),
                actual: gate.dim(),
            });
        }
        let left = self.apply_to_columns(&self.entries, gate.matrix(), targets);
        let both = self.apply_to_columns(&left.adjoint(), gate.matrix(), targets);
        Ok(DensityMatrix {
            num_qubits: self.num_qubits,
            entries: both.adjoint(),
        })
    }

    fn apply_to_columns(&self, m: &CMatrix, gate: &CMatrix, targets: &[usize]) -> CMatrix {
        let mut out = m.clone();
        for c in 0..m.ncols() {
            let mut col: Vec<C64> = m.column(c).iter().copied().collect();
            apply_kernel(&mut col, self.num_qubits, gate, targets);
            out.set_column(c, &DVector::from_vec(col));
        }
        out
    }

    /// Max entrywise deviation.
    pub fn max_deviation(&self, other: &DensityMatrix) -> Result<f64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: other.num_qubits,
            });
        }
        Ok((&self.entries - &other.entries).camax())
    }
}

/// Uhlmann fidelity, reducing to `tr(rho sigma)` when either side is pure.
pub fn dm_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.num_qubits != sigma.num_qubits {
        return Err(Error::DimensionMismatch {
            expected: rho.num_qubits,
            actual: sigma.num_qubits,
        });
    }
    if (rho.purity() - 1.0).abs() < EQ_TOL || (sigma.purity() - 1.0).abs() < EQ_TOL {
        return Ok((&rho.entries * &sigma.entries).trace().re.clamp(0.0, 1.0));
    }
    let sqrt_rho = {
        let eig = SymmetricEigen::new(rho.entries.clone());
        let d = eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
        &eig.eigenvectors * CMatrix::from_diagonal(&d) * eig.eigenvectors.adjoint()
    };
    let inner = &sqrt_rho * &sigma.entries * &sqrt_rho;
    let inner = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(inner);
    let root: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok((root * root).clamp(0.0, 1.0))
}
