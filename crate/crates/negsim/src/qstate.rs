//! Core quantum-state linear algebra: statevectors, gate application, partial
//! trace, partial transpose and Hermitian eigendecomposition.
//!
//! Bit convention used everywhere in this crate: qubit `k` corresponds to bit
//! `k` of the basis-state integer, so qubit 0 is the least significant bit.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{NegsimError, Result};

const NORM_TOL: f64 = 1e-10;
const HERM_TOL: f64 = 1e-8;
const PSD_TOL: f64 = -1e-8;

/// Pure state of `n_qubits` qubits as a complex amplitude vector of length 2^n.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Wraps an amplitude vector, checking length and normalization.
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1 << n_qubits {
            return Err(NegsimError::Domain(format!(
                "amplitude vector has length {}, expected {}",
                amplitudes.len(),
                1usize << n_qubits
            )));
        }
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(NegsimError::Validation(format!(
                "state norm^2 = {norm2}, not 1 within {NORM_TOL}"
            )));
        }
        Ok(Self { n_qubits, amplitudes })
    }

    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn from_parts_unchecked(n_qubits: usize, amplitudes: Vec<Complex64>) -> Self {
        Self { n_qubits, amplitudes }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Computational basis state |bitstring⟩ of `n_qubits` qubits.
pub fn basis_state(n_qubits: usize, bitstring: usize) -> Result<StateVector> {
    if n_qubits >= usize::BITS as usize || bitstring >= (1 << n_qubits) {
        return Err(NegsimError::Domain(format!(
            "bitstring {bitstring} out of range for {n_qubits} qubits"
        )));
    }
    let mut amplitudes = vec![Complex64::ZERO; 1 << n_qubits];
    amplitudes[bitstring] = Complex64::ONE;
    Ok(StateVector { n_qubits, amplitudes })
}

fn check_unitary_2x2(gate: &DMatrix<Complex64>) -> Result<()> {
    if gate.nrows() != 2 || gate.ncols() != 2 {
        return Err(NegsimError::Domain("gate must be 2x2".into()));
    }
    let prod = gate.adjoint() * gate;
    let id = DMatrix::<Complex64>::identity(2, 2);
    let err = (&prod - &id).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if err > NORM_TOL {
        return Err(NegsimError::Validation(format!(
            "gate is not unitary: max |U†U - I| = {err:.2e}"
        )));
    }
    Ok(())
}

/// Applies a 2x2 unitary to the target qubit of `state`.
pub fn apply_single_qubit_gate(
    state: &StateVector,
    gate: &DMatrix<Complex64>,
    target: usize,
) -> Result<StateVector> {
    check_unitary_2x2(gate)?;
    if target >= state.n_qubits {
        return Err(NegsimError::Domain(format!(
            "target qubit {target} out of range for {} qubits",
            state.n_qubits
        )));
    }
    let mut out = state.clone();
    apply_single_qubit_gate_in_place(&mut out, gate, target);
    Ok(out)
}

/// Gate kernel without validation; callers guarantee unitarity and range.
pub(crate) fn apply_single_qubit_gate_in_place(
    state: &mut StateVector,
    gate: &DMatrix<Complex64>,
    target: usize,
) {
    let (g00, g01, g10, g11) = (gate[(0, 0)], gate[(0, 1)], gate[(1, 0)], gate[(1, 1)]);
    let stride = 1usize << target;
    let amps = state.amplitudes.as_mut_slice();
    let n = amps.len();
    let mut base = 0;
    while base < n {
        for low in base..base + stride {
            let a0 = amps[low];
            let a1 = amps[low + stride];
            amps[low] = g00 * a0 + g01 * a1;
            amps[low + stride] = g10 * a0 + g11 * a1;
        }
        base += 2 * stride;
    }
}

/// Split of all qubits into subsystems A1, A2 and environment B.
///
/// Inside reduced matrices on A, the A1 qubits occupy the most significant
/// index block: reduced index r = i_A1 * L_A2 + i_A2.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Partition {
    a1_qubits: Vec<usize>,
    a2_qubits: Vec<usize>,
    b_qubits: Vec<usize>,
}

impl Partition {
    /// Builds a partition, checking the three lists are disjoint and cover 0..N-1.
    pub fn new(a1: Vec<usize>, a2: Vec<usize>, b: Vec<usize>) -> Result<Self> {
        let n = a1.len() + a2.len() + b.len();
        let mut seen = vec![false; n];
        for &q in a1.iter().chain(a2.iter()).chain(b.iter()) {
            if q >= n {
                return Err(NegsimError::Domain(format!(
                    "qubit index {q} out of range for {n} qubits"
                )));
            }
            if seen[q] {
                return Err(NegsimError::Domain(format!("qubit index {q} repeated")));
            }
            seen[q] = true;
        }
        Ok(Self { a1_qubits: a1, a2_qubits: a2, b_qubits: b })
    }

    /// Contiguous assignment: A1 = [0, n_a1), A2 = [n_a1, n_a1+n_a2), B = rest.
    pub fn contiguous(n_a1: usize, n_a2: usize, n_b: usize) -> Self {
        let a1 = (0..n_a1).collect();
        let a2 = (n_a1..n_a1 + n_a2).collect();
        let b = (n_a1 + n_a2..n_a1 + n_a2 + n_b).collect();
        Self { a1_qubits: a1, a2_qubits: a2, b_qubits: b }
    }

    pub fn a1_qubits(&self) -> &[usize] {
        &self.a1_qubits
    }
    pub fn a2_qubits(&self) -> &[usize] {
        &self.a2_qubits
    }
    pub fn b_qubits(&self) -> &[usize] {
        &self.b_qubits
    }
    pub fn n_a1(&self) -> usize {
        self.a1_qubits.len()
    }
    pub fn n_a2(&self) -> usize {
        self.a2_qubits.len()
    }
    pub fn n_b(&self) -> usize {
        self.b_qubits.len()
    }
    pub fn n_a(&self) -> usize {
        self.n_a1() + self.n_a2()
    }
    pub fn n_total(&self) -> usize {
        self.n_a() + self.n_b()
    }
    pub fn l_a1(&self) -> usize {
        1 << self.n_a1()
    }
    pub fn l_a2(&self) -> usize {
        1 << self.n_a2()
    }
    pub fn l_a(&self) -> usize {
        1 << self.n_a()
    }
    pub fn l_b(&self) -> usize {
        1 << self.n_b()
    }

    /// Returns a copy with A1 and A2 swapped.
    pub fn swapped(&self) -> Self {
        Self {
            a1_qubits: self.a2_qubits.clone(),
            a2_qubits: self.a1_qubits.clone(),
            b_qubits: self.b_qubits.clone(),
        }
    }

    /// Full basis index with the given subsystem indices scattered onto
    /// the partition's qubit positions.
    fn compose(&self, i_a1: usize, i_a2: usize, i_b: usize) -> usize {
        let mut x = 0usize;
        for (t, &q) in self.a1_qubits.iter().enumerate() {
            x |= ((i_a1 >> t) & 1) << q;
        }
        for (t, &q) in self.a2_qubits.iter().enumerate() {
            x |= ((i_a2 >> t) & 1) << q;
        }
        for (t, &q) in self.b_qubits.iter().enumerate() {
            x |= ((i_b >> t) & 1) << q;
        }
        x
    }
}

/// Hermitian, trace-one, positive-semidefinite matrix on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (up to -1e-8) before wrapping.
    pub fn new(n_qubits: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(NegsimError::Domain(format!(
                "matrix is {}x{}, expected {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm_err = hermiticity_error(&matrix);
        if herm_err > NORM_TOL {
            return Err(NegsimError::Validation(format!(
                "matrix not Hermitian: max |M - M†| = {herm_err:.2e}"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > NORM_TOL || trace.im.abs() > NORM_TOL {
            return Err(NegsimError::Validation(format!(
                "trace = {trace}, not 1 within {NORM_TOL}"
            )));
        }
        let spectrum = hermitian_eigs(&matrix, false)?;
        let min_eig = spectrum.eigenvalues()[0];
        if min_eig < PSD_TOL {
            return Err(NegsimError::Validation(format!(
                "matrix not PSD: min eigenvalue = {min_eig:.3e}"
            )));
        }
        Ok(Self { n_qubits, matrix })
    }

    /// For internally constructed matrices whose invariants hold by construction.
    pub(crate) fn from_matrix_unchecked(n_qubits: usize, matrix: DMatrix<Complex64>) -> Self {
        Self { n_qubits, matrix }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }
}

/// Reduced density matrix on A (A1 block most significant) by tracing out B.
pub fn partial_trace_to_a(state: &StateVector, partition: &Partition) -> Result<DensityMatrix> {
    if partition.n_total() != state.n_qubits() {
        return Err(NegsimError::Domain(format!(
            "partition covers {} qubits, state has {}",
            partition.n_total(),
            state.n_qubits()
        )));
    }
    let l_a = partition.l_a();
    let l_a2 = partition.l_a2();
    let l_b = partition.l_b();
    // Full index for each (reduced index, b index); b part is additive.
    let a_part: Vec<usize> = (0..l_a)
        .map(|r| partition.compose(r / l_a2, r % l_a2, 0))
        .collect();
    let b_part: Vec<usize> = (0..l_b).map(|ib| partition.compose(0, 0, ib)).collect();

    let amps = state.amplitudes();
    let mut rho = DMatrix::<Complex64>::zeros(l_a, l_a);
    let mut v = vec![Complex64::ZERO; l_a];
    for &bp in &b_part {
        for (r, &ap) in a_part.iter().enumerate() {
            v[r] = amps[ap | bp];
        }
        for c in 0..l_a {
            let vc = v[c].conj();
            let col = &mut rho.column_mut(c);
            for r in 0..l_a {
                col[r] += v[r] * vc;
            }
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(partition.n_a(), rho))
}

/// Partial transpose of `rho` over the A1 index block.
pub fn partial_transpose(rho: &DensityMatrix, partition: &Partition) -> Result<DMatrix<Complex64>> {
    if rho.n_qubits() != partition.n_a() {
        return Err(NegsimError::Domain(format!(
            "density matrix on {} qubits, partition A has {}",
            rho.n_qubits(),
            partition.n_a()
        )));
    }
    let l1 = partition.l_a1();
    let l2 = partition.l_a2();
    let m = rho.matrix();
    let mut out = DMatrix::<Complex64>::zeros(l1 * l2, l1 * l2);
    for i1 in 0..l1 {
        for j1 in 0..l1 {
            for i2 in 0..l2 {
                for j2 in 0..l2 {
                    out[(j1 * l2 + i2, i1 * l2 + j2)] = m[(i1 * l2 + i2, j1 * l2 + j2)];
                }
            }
        }
    }
    Ok(out)
}

/// Real eigenvalues (ascending) and optional eigenvectors of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: Option<DMatrix<Complex64>>,
}

impl HermitianSpectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> Option<&DMatrix<Complex64>> {
        self.eigenvectors.as_ref()
    }
}

fn hermiticity_error(m: &DMatrix<Complex64>) -> f64 {
    let mut err = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            err = err.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    err
}

/// Eigendecomposition of a Hermitian matrix; symmetrizes as (M + M†)/2 first.
pub fn hermitian_eigs(matrix: &DMatrix<Complex64>, with_vectors: bool) -> Result<HermitianSpectrum> {
    if matrix.nrows() != matrix.ncols() {
        return Err(NegsimError::Domain("matrix must be square".into()));
    }
    let herm_err = hermiticity_error(matrix);
    if herm_err > HERM_TOL {
        return Err(NegsimError::Validation(format!(
            "matrix not Hermitian within {HERM_TOL}: max |M - M†| = {herm_err:.2e}"
        )));
    }
    let mut a = (matrix + matrix.adjoint()).scale(0.5);
    let n = a.nrows();
    let mut v = if with_vectors {
        Some(DMatrix::<Complex64>::identity(n, n))
    } else {
        None
    };
    jacobi_diagonalize(&mut a, v.as_mut())?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = v.map(|full| {
        let mut sorted = DMatrix::<Complex64>::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            sorted.column_mut(dst).copy_from(&full.column(src));
        }
        sorted
    });
    Ok(HermitianSpectrum { eigenvalues, eigenvectors })
}

/// Cyclic Jacobi diagonalization for complex Hermitian matrices. Implemented
/// in-crate because the general-purpose symmetric eigensolver of the linear
/// algebra backend mispairs eigenvectors with eigenvalues on degenerate
/// complex Hermitian inputs.
fn jacobi_diagonalize(
    a: &mut DMatrix<Complex64>,
    mut v: Option<&mut DMatrix<Complex64>>,
) -> Result<()> {
    let n = a.nrows();
    if n <= 1 {
        return Ok(());
    }
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= tol {
            return Ok(());
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let z = a[(p, q)];
                let m = z.norm();
                if m <= tol / n as f64 {
                    continue;
                }
                let phase = z / m;
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * m);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U restricted to (p, q): [[c, s], [-s conj(phase), c conj(phase)]]
                let upp = Complex64::from(c);
                let upq = Complex64::from(s);
                let uqp = -s * phase.conj();
                let uqq = c * phase.conj();
                // A <- U† A U
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * upp + akq * uqp;
                    a[(k, q)] = akp * upq + akq * uqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = upp.conj() * apk + uqp.conj() * aqk;
                    a[(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
                }
                a[(p, q)] = Complex64::ZERO;
                a[(q, p)] = Complex64::ZERO;
                a[(p, p)] = Complex64::from(a[(p, p)].re);
                a[(q, q)] = Complex64::from(a[(q, q)].re);
                if let Some(vm) = v.as_deref_mut() {
                    for k in 0..n {
                        let vkp = vm[(k, p)];
                        let vkq = vm[(k, q)];
                        vm[(k, p)] = vkp * upp + vkq * uqp;
                        vm[(k, q)] = vkp * upq + vkq * uqq;
                    }
                }
            }
        }
    }
    Err(NegsimError::Numerical(
        "Jacobi eigensolver did not converge within 100 sweeps".into(),
    ))
}

/// Tr(rho^2); for a Hermitian matrix this is the squared Frobenius norm.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}
