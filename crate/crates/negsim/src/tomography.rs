//! Simulated quantum state tomography and noise: finite-shot Pauli
//! measurements, linear inversion, physical projection, purity rescaling, and
//! the depolarizing channel.
//!
//! Subsystem qubits are addressed in the local ordering of the reduced density
//! matrix: local qubit `k` is bit `k` of the row index.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NegsimError, Result};
use crate::qstate::{
    hermitian_eigs, partial_trace_to_a, purity, DensityMatrix, Partition, StateVector,
};

/// Guard against setting-count explosion: 3^8 = 6561 settings.
pub const MAX_TOMOGRAPHY_QUBITS: usize = 8;

/// Single-qubit measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliBasis {
    X,
    Y,
    Z,
}

/// One measurement configuration: a basis label per measured qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliSetting {
    pub bases: Vec<PauliBasis>,
}

impl PauliSetting {
    /// Setting `index` of the canonical enumeration of all 3^n settings:
    /// qubit k's basis is digit k of `index` in base 3 (0=X, 1=Y, 2=Z).
    pub fn from_index(n_qubits: usize, index: usize) -> Self {
        let mut bases = Vec::with_capacity(n_qubits);
        let mut rest = index;
        for _ in 0..n_qubits {
            bases.push(match rest % 3 {
                0 => PauliBasis::X,
                1 => PauliBasis::Y,
                _ => PauliBasis::Z,
            });
            rest /= 3;
        }
        Self { bases }
    }
}

/// Outcome statistics for one setting. In exact-expectation mode
/// (`shots == 0`) `counts` holds the analytic Born probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub setting: PauliSetting,
    pub counts: Vec<f64>,
    pub shots: u64,
}

impl ShotRecord {
    /// Outcome frequencies (counts normalized by shots; exact counts as-is).
    pub fn frequencies(&self) -> Vec<f64> {
        if self.shots == 0 {
            self.counts.clone()
        } else {
            self.counts.iter().map(|c| c / self.shots as f64).collect()
        }
    }
}

fn basis_rotation(basis: PauliBasis) -> [Complex64; 4] {
    let s = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
    let i = Complex64::i();
    match basis {
        // rows are the bra vectors of the +1 / -1 eigenstates
        PauliBasis::X => [s, s, s, -s],
        PauliBasis::Y => [s, -i * s, s, i * s],
        PauliBasis::Z => [
            Complex64::from(1.0),
            Complex64::from(0.0),
            Complex64::from(0.0),
            Complex64::from(1.0),
        ],
    }
}

/// In-place conjugation M -> (I ⊗ g ⊗ I) M (I ⊗ g ⊗ I)† on local qubit `q`.
fn conjugate_single_qubit(m: &mut DMatrix<Complex64>, q: usize, g: &[Complex64; 4]) {
    let dim = m.nrows();
    let bit = 1usize << q;
    // left multiply rows
    for c in 0..dim {
        for r0 in 0..dim {
            if r0 & bit != 0 {
                continue;
            }
            let r1 = r0 | bit;
            let a = m[(r0, c)];
            let b = m[(r1, c)];
            m[(r0, c)] = g[0] * a + g[1] * b;
            m[(r1, c)] = g[2] * a + g[3] * b;
        }
    }
    // right multiply by g†
    for r in 0..dim {
        for c0 in 0..dim {
            if c0 & bit != 0 {
                continue;
            }
            let c1 = c0 | bit;
            let a = m[(r, c0)];
            let b = m[(r, c1)];
            m[(r, c0)] = a * g[0].conj() + b * g[1].conj();
            m[(r, c1)] = a * g[2].conj() + b * g[3].conj();
        }
    }
}

/// Born probabilities of computational-basis outcomes after rotating `rho`
/// into the eigenbasis of `setting`.
fn setting_probabilities(rho: &DensityMatrix, setting: &PauliSetting) -> Vec<f64> {
    let mut m = rho.matrix().clone();
    for (q, &b) in setting.bases.iter().enumerate() {
        if b != PauliBasis::Z {
            conjugate_single_qubit(&mut m, q, &basis_rotation(b));
        }
    }
    (0..m.nrows()).map(|k| m[(k, k)].re.max(0.0)).collect()
}

/// Measurement statistics for a reduced density matrix over all 3^n settings.
/// `shots_per_setting == 0` requests exact-expectation mode.
pub fn simulate_measurements_rho(
    rho: &DensityMatrix,
    shots_per_setting: u64,
    rng: &mut impl Rng,
) -> Result<Vec<ShotRecord>> {
    let n = rho.n_qubits();
    if n > MAX_TOMOGRAPHY_QUBITS {
        return Err(NegsimError::Domain(format!(
            "tomography limited to {MAX_TOMOGRAPHY_QUBITS} qubits, got {n}"
        )));
    }
    let n_settings = 3usize.pow(n as u32);
    let dim = rho.dim();
    let mut records = Vec::with_capacity(n_settings);
    for s in 0..n_settings {
        let setting = PauliSetting::from_index(n, s);
        let probs = setting_probabilities(rho, &setting);
        let counts = if shots_per_setting == 0 {
            probs
        } else {
            // inverse-CDF sampling against the cumulative outcome distribution
            let mut cdf = Vec::with_capacity(dim);
            let mut acc = 0.0;
            for &p in &probs {
                acc += p;
                cdf.push(acc);
            }
            let total = acc;
            let mut counts = vec![0.0; dim];
            for _ in 0..shots_per_setting {
                let u = rng.gen::<f64>() * total;
                let k = cdf.partition_point(|&c| c < u).min(dim - 1);
                counts[k] += 1.0;
            }
            counts
        };
        records.push(ShotRecord { setting, counts, shots: shots_per_setting });
    }
    Ok(records)
}

/// [`simulate_measurements_rho`] applied to the exact reduced density matrix
/// of `state` on subsystem A of `partition`.
pub fn simulate_measurements(
    state: &StateVector,
    partition: &Partition,
    shots_per_setting: u64,
    rng: &mut impl Rng,
) -> Result<Vec<ShotRecord>> {
    let rho = partial_trace_to_a(state, partition)?;
    simulate_measurements_rho(&rho, shots_per_setting, rng)
}

/// Reconstructs ρ̂ = (1/2^n) Σ_P ⟨P⟩ P over all 4^n Pauli strings, with each
/// expectation averaged over every compatible setting. Hermitian and trace
/// one by construction; not necessarily positive.
pub fn linear_inversion(records: &[ShotRecord]) -> Result<DMatrix<Complex64>> {
    let first = records
        .first()
        .ok_or_else(|| NegsimError::IncompleteData("no shot records".into()))?;
    let n = first.setting.bases.len();
    let dim = 1usize << n;
    let n_strings = 1usize << (2 * n);
    let expected = 3usize.pow(n as u32);

    // Pauli string id: 2 bits per qubit, 0=I, 1=X, 2=Y, 3=Z.
    let mut sums = vec![0.0f64; n_strings];
    let mut hits = vec![0u32; n_strings];
    let mut seen = std::collections::HashSet::new();
    for rec in records {
        if rec.setting.bases.len() != n {
            return Err(NegsimError::IncompleteData("mixed setting sizes".into()));
        }
        if rec.counts.len() != dim {
            return Err(NegsimError::Validation("count vector length != 2^n".into()));
        }
        if !seen.insert(rec.setting.clone()) {
            continue; // duplicate setting: first record wins
        }
        let freqs = rec.frequencies();
        for mask in 0..dim {
            let mut est = 0.0;
            for (o, &f) in freqs.iter().enumerate() {
                let parity = (o & mask).count_ones() & 1;
                est += if parity == 0 { f } else { -f };
            }
            let mut id = 0usize;
            for (k, &b) in rec.setting.bases.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    let code = match b {
                        PauliBasis::X => 1,
                        PauliBasis::Y => 2,
                        PauliBasis::Z => 3,
                    };
                    id |= code << (2 * k);
                }
            }
            sums[id] += est;
            hits[id] += 1;
        }
    }
    if seen.len() != expected {
        return Err(NegsimError::IncompleteData(format!(
            "need all {expected} settings, got {}",
            seen.len()
        )));
    }

    let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
    for id in 0..n_strings {
        if hits[id] == 0 {
            continue;
        }
        let coeff = sums[id] / hits[id] as f64 / dim as f64;
        if coeff == 0.0 {
            continue;
        }
        // each string has exactly one nonzero entry per row
        for r in 0..dim {
            let mut c = r;
            let mut factor = Complex64::from(1.0);
            for k in 0..n {
                let code = id >> (2 * k) & 3;
                let rb = r >> k & 1;
                match code {
                    0 => {}
                    1 => c ^= 1 << k,
                    2 => {
                        c ^= 1 << k;
                        factor *= if rb == 0 { -Complex64::i() } else { Complex64::i() };
                    }
                    _ => {
                        if rb == 1 {
                            factor = -factor;
                        }
                    }
                }
            }
            rho[(r, c)] += factor * coeff;
        }
    }
    Ok(rho)
}

/// Nearest trace-one positive-semidefinite matrix under the Frobenius norm:
/// clip the most-negative eigenvalues to zero in ascending order while
/// subtracting the accumulated deficit equally from the remaining ones;
/// eigenvectors unchanged.
pub fn project_physical(h: &DMatrix<Complex64>) -> Result<DensityMatrix> {
    let tr: Complex64 = (0..h.nrows()).map(|k| h[(k, k)]).sum();
    if (tr.re - 1.0).abs() > 1e-6 || tr.im.abs() > 1e-8 {
        return Err(NegsimError::Validation(format!("trace {tr} != 1", tr = tr.re)));
    }
    let spec = hermitian_eigs(h, true)?;
    let mut evals = spec.eigenvalues().to_vec(); // ascending
    let dim = evals.len();
    let mut deficit = 0.0;
    let mut cut = 0usize; // eigenvalues below `cut` are clipped to zero
    while cut < dim {
        let remaining = (dim - cut) as f64;
        if evals[cut] + deficit / remaining < 0.0 {
            deficit += evals[cut];
            evals[cut] = 0.0;
            cut += 1;
        } else {
            break;
        }
    }
    if cut == dim {
        return Err(NegsimError::Numerical(
            "all eigenvalues clipped during physical projection".into(),
        ));
    }
    let share = deficit / (dim - cut) as f64;
    for ev in evals.iter_mut().skip(cut) {
        *ev += share;
    }
    let v = spec
        .eigenvectors()
        .expect("eigenvectors requested")
        .clone();
    let mut scaled = v.clone();
    for (j, &ev) in evals.iter().enumerate() {
        for r in 0..dim {
            scaled[(r, j)] *= Complex64::from(ev);
        }
    }
    let rho = &scaled * v.adjoint();
    let n = (dim as f64).log2().round() as usize;
    DensityMatrix::new(n, rho)
}

/// Depolarizing channel (1−ε)ρ + ε I/L.
pub fn depolarize(rho: &DensityMatrix, epsilon: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(NegsimError::Domain(format!("epsilon {epsilon} not in [0, 1]")));
    }
    let dim = rho.dim();
    let mut m = rho.matrix() * Complex64::from(1.0 - epsilon);
    let mix = epsilon / dim as f64;
    for k in 0..dim {
        m[(k, k)] += Complex64::from(mix);
    }
    Ok(DensityMatrix::from_matrix_unchecked(rho.n_qubits(), m))
}

/// Mixes toward (target < current purity) or away from (target > current)
/// the maximally mixed state until Tr(ρ'²) matches `target_purity`:
/// ρ' = λρ + (1−λ)I/L, with the λ > 1 branch followed by a physical
/// projection. Resulting purity is within 1e-6 of the target.
pub fn purity_rescale(rho: &DensityMatrix, target_purity: f64) -> Result<DensityMatrix> {
    let dim = rho.dim();
    let floor = 1.0 / dim as f64;
    if target_purity < floor - 1e-12 || target_purity > 1.0 + 1e-12 {
        return Err(NegsimError::Domain(format!(
            "target purity {target_purity} outside [1/L, 1] = [{floor}, 1]"
        )));
    }
    let tol = 1e-6;
    let mut current = rho.clone();
    for _ in 0..64 {
        let p0 = purity(&current);
        if (p0 - target_purity).abs() <= tol {
            return Ok(current);
        }
        if p0 - floor <= 1e-14 {
            return Err(NegsimError::InfeasibleTarget(format!(
                "cannot raise purity of the maximally mixed state to {target_purity}"
            )));
        }
        let lambda = ((target_purity - floor) / (p0 - floor)).sqrt();
        let mut m = current.matrix() * Complex64::from(lambda);
        let mix = (1.0 - lambda) / dim as f64;
        for k in 0..dim {
            m[(k, k)] += Complex64::from(mix);
        }
        if lambda <= 1.0 {
            return Ok(DensityMatrix::from_matrix_unchecked(rho.n_qubits(), m));
        }
        // λ > 1 may leave the physical cone; project and retry toward target
        let projected = project_physical(&m)?;
        if (purity(&projected) - p0).abs() < 1e-13 {
            return Err(NegsimError::InfeasibleTarget(format!(
                "purity stalled at {p0}, target {target_purity} unreachable"
            )));
        }
        current = projected;
    }
    let achieved = purity(&current);
    if (achieved - target_purity).abs() <= tol {
        Ok(current)
    } else {
        Err(NegsimError::InfeasibleTarget(format!(
            "purity {achieved} after rescaling, target {target_purity}"
        )))
    }
}
