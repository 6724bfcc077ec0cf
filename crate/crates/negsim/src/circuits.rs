//! Pseudo-random circuit construction: Haar SU(2) sampling, xy-plane rotation
//! decomposition, and the global excitation-conserving hopping entangler.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NegsimError, Result};
use crate::qstate::{apply_single_qubit_gate_in_place, basis_state, StateVector};

/// xy-plane rotation R_phi(theta) = exp[-i (cos(phi) sx + sin(phi) sy) theta/2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationParams {
    pub theta: f64,
    pub phi: f64,
}

impl RotationParams {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta: normalize_angle(theta), phi: normalize_angle(phi) }
    }
}

fn normalize_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut a = a % two_pi;
    if a < 0.0 {
        a += two_pi;
    }
    // -0.0 and values rounding up to 2*pi collapse to 0
    if a >= two_pi || a == 0.0 {
        a = 0.0;
    }
    a
}

/// 2x2 matrix of R_phi(theta): cos(t/2) I - i sin(t/2)(cos(phi) sx + sin(phi) sy).
pub fn rotation_matrix(params: &RotationParams) -> DMatrix<Complex64> {
    let half = 0.5 * params.theta;
    let (c, s) = (half.cos(), half.sin());
    let (cp, sp) = (params.phi.cos(), params.phi.sin());
    // -i s (cp sx + sp sy) has off-diagonals -i s (cp -i sp) and -i s (cp + i sp)
    DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(c, 0.0),
            Complex64::new(-s * sp, -s * cp),
            Complex64::new(s * sp, -s * cp),
            Complex64::new(c, 0.0),
        ],
    )
}

/// Haar-random SU(2) matrix: QR of a complex Ginibre sample, phase-fixed to det 1.
pub fn sample_haar_su2<R: Rng + ?Sized>(rng: &mut R) -> DMatrix<Complex64> {
    loop {
        let mut g = || {
            // Box-Muller
            let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
            let u2: f64 = rng.gen();
            let r = (-2.0 * u1.ln()).sqrt();
            (r * (std::f64::consts::TAU * u2).cos(), r * (std::f64::consts::TAU * u2).sin())
        };
        let (a_re, a_im) = g();
        let (b_re, b_im) = g();
        let mut col0 = [Complex64::new(a_re, a_im), Complex64::new(b_re, b_im)];
        let n0 = (col0[0].norm_sqr() + col0[1].norm_sqr()).sqrt();
        if n0 < 1e-12 {
            continue;
        }
        col0[0] /= n0;
        col0[1] /= n0;
        // Orthogonal complement of a unit 2-vector is unique up to phase; draw the phase.
        let phase = Complex64::from_polar(1.0, std::f64::consts::TAU * rng.gen::<f64>());
        let col1 = [-col0[1].conj() * phase, col0[0].conj() * phase];
        let mut u = DMatrix::from_row_slice(2, 2, &[col0[0], col1[0], col0[1], col1[1]]);
        // det = phase; divide each column by sqrt(det) to land in SU(2)
        let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
        let s = det.sqrt();
        u.iter_mut().for_each(|z| *z /= s);
        return u;
    }
}

/// Writes a 2x2 unitary as a unit quaternion (w, x, y, z) with
/// U ~ w I - i (x sx + y sy + z sz), discarding the global phase.
fn to_quaternion(u: &DMatrix<Complex64>) -> Result<[f64; 4]> {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    if (det.norm() - 1.0).abs() > 1e-9 {
        return Err(NegsimError::Validation("matrix is not unitary".into()));
    }
    let s = det.sqrt();
    let a = u[(0, 0)] / s;
    let b = u[(0, 1)] / s;
    Ok([a.re, -b.im, -b.re, -a.im])
}

/// Decomposes a 2x2 unitary into two successive xy-plane rotations:
/// rotation_matrix(second) * rotation_matrix(first) = e^{i delta} U.
///
/// Closed form via quaternions. A product of two xy rotations with equal
/// angles theta1 = theta2 = 2a covers all of SU(2); inputs that are already
/// xy rotations take a single-rotation fast path (identity maps to zeros).
pub fn decompose_to_xy_rotations(
    u: &DMatrix<Complex64>,
) -> Result<(RotationParams, RotationParams)> {
    let [w, x, y, z] = to_quaternion(u)?;

    // Already an xy rotation (z component zero): single rotation suffices.
    if z.abs() < 1e-12 {
        let (w, x, y) = if w < 0.0 { (-w, -x, -y) } else { (w, x, y) };
        let r = x.hypot(y);
        if r < 1e-12 {
            return Ok((RotationParams::new(0.0, 0.0), RotationParams::new(0.0, 0.0)));
        }
        let theta = 2.0 * r.atan2(w);
        let phi = y.atan2(x);
        return Ok((RotationParams::new(theta, phi), RotationParams::new(0.0, 0.0)));
    }

    // General case; flip the quaternion sign so 1 - w >= 1 and the formulas
    // below are well conditioned.
    let (w, x, y, z) = if w > 0.0 { (-w, -x, -y, -z) } else { (w, x, y, z) };
    let t = ((1.0 - w).powi(2) + z * z) / (2.0 * (1.0 - w));
    let t = t.clamp(0.0, 1.0);
    let cos_d = (1.0 - w) / t - 1.0;
    let sin_d = -z / t;
    let delta = sin_d.atan2(cos_d);
    let a = t.sqrt().asin();
    let r = x.hypot(y);
    let phi_mid = if r < 1e-12 { 0.0 } else { y.atan2(x) };
    let first = RotationParams::new(2.0 * a, phi_mid - 0.5 * delta);
    let second = RotationParams::new(2.0 * a, phi_mid + 0.5 * delta);

    // Round-trip check is the binding contract for this decomposition.
    let recon = rotation_matrix(&second) * rotation_matrix(&first);
    let qr = to_quaternion(&recon)?;
    let qt = [w, x, y, z];
    let dot: f64 = qr.iter().zip(&qt).map(|(p, q)| p * q).sum();
    let err = (1.0 - dot.abs()).abs();
    if err > 1e-9 {
        return Err(NegsimError::Decomposition(format!(
            "round-trip quaternion mismatch {err:.2e} for quaternion {qt:?}"
        )));
    }
    Ok((first, second))
}

/// Symmetric coupling matrix J with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    n_qubits: usize,
    j: Vec<f64>, // row-major n x n
}

impl CouplingMatrix {
    pub fn uniform(n_qubits: usize, strength: f64) -> Self {
        let mut j = vec![strength; n_qubits * n_qubits];
        for i in 0..n_qubits {
            j[i * n_qubits + i] = 0.0;
        }
        Self { n_qubits, j }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut j = vec![0.0; n * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(NegsimError::Domain("coupling matrix must be square".into()));
            }
            for (k, &v) in row.iter().enumerate() {
                j[i * n + k] = v;
            }
        }
        for i in 0..n {
            if j[i * n + i] != 0.0 {
                return Err(NegsimError::Validation("coupling diagonal must be zero".into()));
            }
            for k in 0..i {
                if (j[i * n + k] - j[k * n + i]).abs() > 1e-12 {
                    return Err(NegsimError::Validation("coupling matrix must be symmetric".into()));
                }
            }
        }
        Ok(Self { n_qubits: n, j })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.j[i * self.n_qubits + k]
    }
}

/// Sparse description of H = sum_{i<j} J_ij (s+_i s-_j + s+_j s-_i) on the
/// active qubits. H commutes with the total excitation number, so its matrix
/// is block diagonal over Hamming-weight sectors.
#[derive(Debug, Clone)]
pub struct HoppingHamiltonian {
    active: Vec<usize>,
    /// (i, j, J_ij) with i < j, both from `active`, J_ij != 0.
    terms: Vec<(usize, usize, f64)>,
}

pub fn build_entangler_hamiltonian(
    coupling: &CouplingMatrix,
    active: &[usize],
) -> Result<HoppingHamiltonian> {
    let mut seen = std::collections::HashSet::new();
    for &q in active {
        if q >= coupling.n_qubits() {
            return Err(NegsimError::Domain(format!("active qubit {q} out of range")));
        }
        if !seen.insert(q) {
            return Err(NegsimError::Domain(format!("active qubit {q} repeated")));
        }
    }
    let mut terms = Vec::new();
    for (a, &i) in active.iter().enumerate() {
        for &j in active.iter().skip(a + 1) {
            let v = coupling.get(i, j);
            if v != 0.0 {
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                terms.push((lo, hi, v));
            }
        }
    }
    Ok(HoppingHamiltonian { active: active.to_vec(), terms })
}

impl HoppingHamiltonian {
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn terms(&self) -> &[(usize, usize, f64)] {
        &self.terms
    }

    /// Dense matrix on the full register of `n_qubits` qubits. Test oracle path.
    pub fn dense_matrix(&self, n_qubits: usize) -> DMatrix<Complex64> {
        let dim = 1usize << n_qubits;
        let mut h = DMatrix::<Complex64>::zeros(dim, dim);
        for x in 0..dim {
            for &(i, j, v) in &self.terms {
                if (x >> i) & 1 == 1 && (x >> j) & 1 == 0 {
                    let y = x ^ (1 << i) ^ (1 << j);
                    h[(y, x)] += Complex64::from(v);
                    h[(x, y)] += Complex64::from(v);
                }
            }
        }
        h
    }
}

/// One Hamming-weight sector of the hopping Hamiltonian in CSR form.
struct Sector {
    states: Vec<u32>,
    row_ptr: Vec<u32>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    /// Gershgorin bound on |eigenvalue| within this sector.
    radius: f64,
}

/// Precomputed structure for applying exp(-i tau H) to statevectors.
/// Built once per coupling matrix and reused across layers and instances.
pub struct EntanglerPlan {
    n_qubits: usize,
    sectors: Vec<Sector>,
}

impl EntanglerPlan {
    pub fn new(coupling: &CouplingMatrix) -> Result<Self> {
        let n = coupling.n_qubits();
        let active: Vec<usize> = (0..n).collect();
        let ham = build_entangler_hamiltonian(coupling, &active)?;
        let dim = 1usize << n;

        let mut states_by_k: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
        for x in 0..dim as u32 {
            states_by_k[x.count_ones() as usize].push(x);
        }
        let mut pos = vec![0u32; dim];
        for states in &states_by_k {
            for (p, &s) in states.iter().enumerate() {
                pos[s as usize] = p as u32;
            }
        }

        let mut sectors = Vec::with_capacity(n + 1);
        for states in states_by_k {
            let mut row_ptr = Vec::with_capacity(states.len() + 1);
            let mut cols = Vec::new();
            let mut vals = Vec::new();
            let mut radius = 0.0f64;
            row_ptr.push(0u32);
            for &x in &states {
                let mut row_sum = 0.0;
                for &(i, j, v) in ham.terms() {
                    let bi = (x >> i) & 1;
                    let bj = (x >> j) & 1;
                    if bi != bj {
                        let y = x ^ (1 << i) ^ (1 << j);
                        cols.push(pos[y as usize]);
                        vals.push(v);
                        row_sum += v.abs();
                    }
                }
                radius = radius.max(row_sum);
                row_ptr.push(cols.len() as u32);
            }
            sectors.push(Sector { states, row_ptr, cols, vals, radius });
        }
        Ok(Self { n_qubits: n, sectors })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// exp(-i tau H) |state⟩ via a Chebyshev expansion on each sector.
    pub fn apply(&self, state: &StateVector, tau: f64) -> Result<StateVector> {
        if state.n_qubits() != self.n_qubits {
            return Err(NegsimError::Domain(format!(
                "state has {} qubits, plan built for {}",
                state.n_qubits(),
                self.n_qubits
            )));
        }
        if tau < 0.0 {
            return Err(NegsimError::Domain("tau must be >= 0".into()));
        }
        if tau == 0.0 {
            return Ok(state.clone());
        }
        let mut out = state.clone();
        let amps_in = state.amplitudes().to_vec();
        let amps_out = out.amplitudes_mut();
        for sector in &self.sectors {
            sector.apply_exp(&amps_in, amps_out, tau)?;
        }
        let norm = out.norm();
        if (norm - 1.0).abs() > 1e-9 * state.norm().max(1.0) + 1e-9 {
            return Err(NegsimError::Numerical(format!(
                "entangler application drifted norm to {norm}"
            )));
        }
        Ok(out)
    }
}

impl Sector {
    fn matvec(&self, scale: f64, v: &[Complex64], out: &mut [Complex64]) {
        for r in 0..self.states.len() {
            let lo = self.row_ptr[r] as usize;
            let hi = self.row_ptr[r + 1] as usize;
            let mut acc = Complex64::ZERO;
            for t in lo..hi {
                acc += self.vals[t] * v[self.cols[t] as usize];
            }
            out[r] = acc * scale;
        }
    }

    fn apply_exp(&self, amps_in: &[Complex64], amps_out: &mut [Complex64], tau: f64) -> Result<()> {
        let m = self.states.len();
        if m == 0 {
            return Ok(());
        }
        if self.radius == 0.0 {
            // decoupled sector: H restricted here is zero
            for (p, &s) in self.states.iter().enumerate() {
                let _ = p;
                amps_out[s as usize] = amps_in[s as usize];
            }
            return Ok(());
        }
        let theta = tau * self.radius;
        let coeffs = bessel_j_sequence(theta)?;
        let inv_r = 1.0 / self.radius;

        let x: Vec<Complex64> = self.states.iter().map(|&s| amps_in[s as usize]).collect();
        let mut t_prev = x.clone();
        let mut t_cur = vec![Complex64::ZERO; m];
        self.matvec(inv_r, &x, &mut t_cur);

        // exp(-i theta u) = J_0 + 2 sum_k (-i)^k J_k T_k(u)
        let ik = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        let mut y: Vec<Complex64> = x.iter().map(|&v| v * coeffs[0]).collect();
        if coeffs.len() > 1 {
            let c1 = ik[1] * (2.0 * coeffs[1]);
            for (yy, &t) in y.iter_mut().zip(&t_cur) {
                *yy += c1 * t;
            }
        }
        let mut t_next = vec![Complex64::ZERO; m];
        for (k, &jk) in coeffs.iter().enumerate().skip(2) {
            self.matvec(2.0 * inv_r, &t_cur, &mut t_next);
            for i in 0..m {
                t_next[i] -= t_prev[i];
            }
            let ck = ik[k % 4] * (2.0 * jk);
            for (yy, &t) in y.iter_mut().zip(&t_next) {
                *yy += ck * t;
            }
            std::mem::swap(&mut t_prev, &mut t_cur);
            std::mem::swap(&mut t_cur, &mut t_next);
        }
        for (p, &s) in self.states.iter().enumerate() {
            amps_out[s as usize] = y[p];
        }
        Ok(())
    }
}

/// Bessel functions J_0..J_K at `theta` by Miller's downward recurrence,
/// with K chosen so the truncated Chebyshev tail is below ~1e-15.
fn bessel_j_sequence(theta: f64) -> Result<Vec<f64>> {
    if !(theta.is_finite() && theta >= 0.0) {
        return Err(NegsimError::Numerical(format!("bad Chebyshev argument {theta}")));
    }
    if theta == 0.0 {
        return Ok(vec![1.0]);
    }
    let kmax = theta.ceil() as usize + 40;
    let start = kmax + 20 + (kmax as f64).sqrt() as usize;
    let mut jj = vec![0.0f64; start + 2];
    jj[start + 1] = 0.0;
    jj[start] = 1e-290;
    for k in (1..=start).rev() {
        jj[k - 1] = (2.0 * k as f64 / theta) * jj[k] - jj[k + 1];
        if jj[k - 1].abs() > 1e250 {
            let s = 1e-250;
            for v in jj.iter_mut().skip(k - 1) {
                *v *= s;
            }
        }
    }
    let mut norm = jj[0];
    let mut k = 2;
    while k <= start {
        norm += 2.0 * jj[k];
        k += 2;
    }
    let inv = 1.0 / norm;
    let mut out: Vec<f64> = jj[..=kmax].iter().map(|v| v * inv).collect();
    // trim negligible tail
    while out.len() > 1 && out.last().unwrap().abs() < 1e-16 {
        out.pop();
    }
    Ok(out)
}

/// Convenience wrapper: builds a plan and applies exp(-i tau H) once.
pub fn apply_entangler(
    state: &StateVector,
    coupling: &CouplingMatrix,
    tau: f64,
) -> Result<StateVector> {
    EntanglerPlan::new(coupling)?.apply(state, tau)
}

/// Per-layer content of a pseudo-random circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    /// One (first, second) xy-rotation pair per qubit.
    pub single_gates: Vec<(RotationParams, RotationParams)>,
    pub tau_ent: f64,
}

/// Fully materialized circuit: d layers of per-qubit rotations plus the
/// shared entangler coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub coupling: CouplingMatrix,
    pub layers: Vec<LayerSpec>,
}

/// Draws a d-layer pseudo-random circuit: per qubit and layer a Haar SU(2)
/// gate decomposed into two xy rotations, entangled with exp(-i tau H).
pub fn build_random_circuit<R: Rng + ?Sized>(
    n_qubits: usize,
    d_layers: usize,
    coupling: &CouplingMatrix,
    tau_ent: f64,
    rng: &mut R,
) -> Result<CircuitSpec> {
    if coupling.n_qubits() != n_qubits {
        return Err(NegsimError::Domain("coupling size must match qubit count".into()));
    }
    if tau_ent <= 0.0 {
        return Err(NegsimError::Domain("tau_ent must be > 0".into()));
    }
    let mut layers = Vec::with_capacity(d_layers);
    for _ in 0..d_layers {
        let mut single_gates = Vec::with_capacity(n_qubits);
        for _ in 0..n_qubits {
            let u = sample_haar_su2(rng);
            single_gates.push(decompose_to_xy_rotations(&u)?);
        }
        layers.push(LayerSpec { single_gates, tau_ent });
    }
    Ok(CircuitSpec { n_qubits, coupling: coupling.clone(), layers })
}

/// Runs a circuit from |0...0⟩: per layer all single-qubit gates, then the
/// entangler, matching the pulse ordering of the hardware model.
pub fn run_circuit(spec: &CircuitSpec) -> Result<StateVector> {
    let plan = EntanglerPlan::new(&spec.coupling)?;
    run_circuit_with_plan(spec, &plan)
}

/// Like [`run_circuit`] but reusing a precomputed entangler plan.
pub fn run_circuit_with_plan(spec: &CircuitSpec, plan: &EntanglerPlan) -> Result<StateVector> {
    if plan.n_qubits() != spec.n_qubits {
        return Err(NegsimError::Domain("plan size must match circuit".into()));
    }
    let mut state = basis_state(spec.n_qubits, 0)?;
    for layer in &spec.layers {
        if layer.single_gates.len() != spec.n_qubits {
            return Err(NegsimError::Domain("layer gate count must equal qubit count".into()));
        }
        for (q, (first, second)) in layer.single_gates.iter().enumerate() {
            let u = rotation_matrix(second) * rotation_matrix(first);
            apply_single_qubit_gate_in_place(&mut state, &u, q);
        }
        state = plan.apply(&state, layer.tau_ent)?;
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(NegsimError::Numerical(format!("circuit output norm {norm}")));
    }
    Ok(state)
}

/// ⟨sum_i n_i⟩ of a statevector; conserved by the entangler.
pub fn excitation_expectation(state: &StateVector) -> f64 {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(x, a)| a.norm_sqr() * x.count_ones() as f64)
        .sum()
}
