//! End-to-end acceptance suite: each test covers one numbered criterion of
//! the reproduction checklist and prints a single pass/fail line.

use std::sync::LazyLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use negsim::circuits::{apply_entangler, build_entangler_hamiltonian, build_random_circuit,
    run_circuit, CouplingMatrix};
use negsim::ensemble::{
    persist, run_ensemble, sweep, PartitionSpec, RunConfig, RunResult, SweepAxis,
};
use negsim::entanglement::{detect_lobes, negativity, negativity_spectrum};
use negsim::qstate::{
    hermitian_eigs, partial_trace_to_a, DensityMatrix, Partition, StateVector,
};
use negsim::stats::ks_statistic;
use negsim::theory::{semicircle_cdf, semicircle_edge_sign, EdgeSign, SemicircleParams};
use negsim::tomography::{linear_inversion, simulate_measurements};

const SEED: u64 = 20260823;

fn report(criterion: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion:2} [{}] {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

fn fig2_config(n_b: usize) -> RunConfig {
    RunConfig {
        n_qubits: 6 + n_b,
        partition: PartitionSpec::Counts { n_a1: 2, n_a2: 4, n_b },
        layers: None, // depth convention: 5 for N_B >= 7, 4 below
        instances: 20,
        seed: SEED,
        ..RunConfig::default()
    }
}

static NB9: LazyLock<RunResult> = LazyLock::new(|| run_ensemble(&fig2_config(9), 1).unwrap());
static NB8: LazyLock<RunResult> = LazyLock::new(|| run_ensemble(&fig2_config(8), 1).unwrap());
static NB7: LazyLock<RunResult> = LazyLock::new(|| run_ensemble(&fig2_config(7), 1).unwrap());

fn pooled_eigenvalues(result: &RunResult) -> Vec<f64> {
    result
        .instances
        .iter()
        .flat_map(|r| r.spectrum.iter().copied())
        .collect()
}

#[test]
fn criterion_01_exact_ppt_edge_identity() {
    let mut pass = true;
    for n_a1 in 1..=4usize {
        for n_a2 in 1..=4usize {
            let n_a = n_a1 + n_a2;
            if !(2..=8).contains(&n_a) {
                continue;
            }
            for n_b in 0..=(n_a + 4) {
                let p = Partition::contiguous(n_a1, n_a2, n_b);
                let sign = semicircle_edge_sign(&p);
                let expect = match n_b.cmp(&(n_a + 2)) {
                    std::cmp::Ordering::Greater => EdgeSign::Positive,
                    std::cmp::Ordering::Equal => EdgeSign::Zero,
                    std::cmp::Ordering::Less => EdgeSign::Negative,
                };
                pass &= sign == expect;
            }
        }
    }
    report(
        1,
        "exact PPT/NPT edge identity",
        pass,
        "edge sign is zero exactly at N_B = N_A + 2 over all tested splits",
    );
}

#[test]
fn criterion_02_ppt_phase_spectrum() {
    let result = &*NB9;
    let pool = pooled_eigenvalues(result);
    let below = pool.iter().filter(|&&x| x < -1e-3).count();
    let frac = below as f64 / pool.len() as f64;
    let mean_e = result.mean_log_negativity;
    let pass = frac < 0.01 && mean_e < 0.05;
    report(
        2,
        "PPT phase",
        pass,
        &format!(
            "{below}/{} eigenvalues below -1e-3 ({:.3}%), mean E = {mean_e:.4}",
            pool.len(),
            100.0 * frac
        ),
    );
}

#[test]
fn criterion_03_npt_onset() {
    let result = &*NB7;
    let pool = pooled_eigenvalues(result);
    let min = pool.iter().copied().fold(f64::INFINITY, f64::min);
    let mean_e = result.mean_log_negativity;
    let pass = mean_e > 0.05 && min < -0.002;
    report(
        3,
        "NPT onset",
        pass,
        &format!("mean E = {mean_e:.4}, pooled spectrum minimum = {min:.5}"),
    );
}

#[test]
fn criterion_04_semicircle_law() {
    let mut pass = true;
    let mut details = Vec::new();
    for (n_b, result) in [(9usize, &*NB9), (8, &*NB8), (7, &*NB7)] {
        let partition = result.config.partition().unwrap();
        let params = SemicircleParams::for_partition(&partition);
        let mut pool = pooled_eigenvalues(result);
        pool.sort_by(f64::total_cmp);
        let ks = ks_statistic(&pool, |x| semicircle_cdf(x, &params));
        pass &= ks < 0.10;
        details.push(format!("N_B={n_b}: KS={ks:.4}"));
    }
    report(4, "semicircle law", pass, &details.join(", "));
}

#[test]
fn criterion_05_es_saturation_plateau() {
    let template = RunConfig {
        n_qubits: 9,
        partition: PartitionSpec::Counts { n_a1: 2, n_a2: 4, n_b: 3 },
        layers: Some(4),
        instances: 20,
        seed: SEED,
        ..RunConfig::default()
    };
    let values = [2usize, 3, 4];
    let results = sweep(&template, SweepAxis::SplitRatio, &values, 1).unwrap();
    let es: Vec<f64> = results.iter().map(|r| r.mean_log_negativity).collect();
    let spread = es.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - es.iter().copied().fold(f64::INFINITY, f64::min);
    let prediction = 1.2635;
    let within = es.iter().all(|e| (e - prediction).abs() <= 0.4);
    let pass = spread < 0.3 && within;
    report(
        5,
        "ES saturation plateau",
        pass,
        &format!(
            "mean E over N_A1 = 2,3,4: {:.4}, {:.4}, {:.4} (spread {spread:.3}, prediction {prediction})",
            es[0], es[1], es[2]
        ),
    );
}

#[test]
fn criterion_06_page_like_volume_law() {
    let template = RunConfig {
        n_qubits: 6,
        partition: PartitionSpec::Counts { n_a1: 3, n_a2: 3, n_b: 0 },
        layers: Some(4),
        instances: 20,
        seed: SEED,
        ..RunConfig::default()
    };
    let values = [1usize, 2, 3, 4, 5];
    let results = sweep(&template, SweepAxis::SplitRatio, &values, 1).unwrap();
    let es: Vec<f64> = results.iter().map(|r| r.mean_log_negativity).collect();
    let increasing = es[0] < es[1] && es[1] < es[2];
    let symmetric = (es[0] - es[4]).abs() < 0.1 && (es[1] - es[3]).abs() < 0.1;
    let midpoint = (2.3..=3.0).contains(&es[2]);
    let pass = increasing && symmetric && midpoint;
    report(
        6,
        "Page-like volume law",
        pass,
        &format!(
            "mean E over N_A1 = 1..5: {:.3}, {:.3}, {:.3}, {:.3}, {:.3}",
            es[0], es[1], es[2], es[3], es[4]
        ),
    );
}

#[test]
fn criterion_07_monotone_environment_sweep() {
    let template = fig2_config(9);
    let values: Vec<usize> = (1..=9).rev().collect(); // N_B = 9 down to 1
    let results = sweep(&template, SweepAxis::EnvironmentSize, &values, 1).unwrap();
    let es: Vec<f64> = results.iter().map(|r| r.mean_log_negativity).collect();
    // values descend in N_B, so E must be non-decreasing along the list
    // (0.02 slack absorbs finite-ensemble fluctuation between near-zero points)
    let monotone = es.windows(2).all(|w| w[1] >= w[0] - 0.02);
    let e_nb9 = es[0];
    let e_nb3 = es[6];
    let e_nb1 = es[8];
    let pass = monotone && e_nb9 < 0.05 && e_nb1 > e_nb3 + 0.2;
    report(
        7,
        "monotone environment sweep",
        pass,
        &format!(
            "E(N_B=9..1) = [{}]",
            es.iter().map(|e| format!("{e:.3}")).collect::<Vec<_>>().join(", ")
        ),
    );
}

#[test]
fn criterion_08_sharp_zero_peak() {
    let config = fig2_config(2);
    let result = run_ensemble(&config, 1).unwrap();
    let h = &result.histogram;
    let zero_bin = h
        .edges
        .windows(2)
        .position(|w| w[0] <= 0.0 && 0.0 < w[1])
        .expect("zero inside pooled support");
    let neighbors = [
        zero_bin.wrapping_sub(2),
        zero_bin.wrapping_sub(1),
        zero_bin + 1,
        zero_bin + 2,
    ];
    let neighbor_mean = neighbors
        .iter()
        .map(|&i| h.counts[i] as f64)
        .sum::<f64>()
        / 4.0;
    let peak = h.counts[zero_bin] as f64;
    let pass = peak > 1.5 * neighbor_mean;
    report(
        8,
        "sharp zero peak",
        pass,
        &format!(
            "zero bin count {peak} vs neighbor mean {neighbor_mean:.1} (ratio {:.2})",
            peak / neighbor_mean
        ),
    );
}

#[test]
fn criterion_09_two_lobe_split() {
    let config = fig2_config(1);
    let result = run_ensemble(&config, 1).unwrap();
    let pool = pooled_eigenvalues(&result);
    let lobes = detect_lobes(&pool, 0.02).unwrap();
    let pass = lobes.clusters == 2;
    report(
        9,
        "two-lobe split",
        pass,
        &format!(
            "{} clusters after excluding |xi| < 0.02 (widest gap {:?})",
            lobes.clusters, lobes.gap_width
        ),
    );
}

#[test]
fn criterion_10_porter_thomas_convergence() {
    let template = RunConfig {
        n_qubits: 9,
        partition: PartitionSpec::Counts { n_a1: 2, n_a2: 4, n_b: 3 },
        instances: 20,
        seed: SEED,
        ..RunConfig::default()
    };
    let depths: Vec<usize> = (1..=6).collect();
    let clean = sweep(&template, SweepAxis::Depth, &depths, 1).unwrap();
    let kl_clean: Vec<f64> = clean.iter().map(|r| r.mean_kl.unwrap()).collect();
    let decreasing = kl_clean[0] > kl_clean[1] && kl_clean[1] > kl_clean[2] && kl_clean[2] > kl_clean[3];
    let converged = kl_clean[3..].iter().all(|&k| k < 0.05);

    let mut noisy_template = template.clone();
    noisy_template.noise.depolarizing_per_layer = 0.02;
    let noisy = sweep(&noisy_template, SweepAxis::Depth, &depths, 1).unwrap();
    let kl_noisy: Vec<f64> = noisy.iter().map(|r| r.mean_kl.unwrap()).collect();
    let argmin = kl_noisy
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    let interior_min = argmin > 0 && argmin + 1 < kl_noisy.len();

    let pass = decreasing && converged && interior_min;
    report(
        10,
        "Porter-Thomas convergence",
        pass,
        &format!(
            "noiseless D_KL(d=1..6) = [{}]; noisy = [{}], interior minimum at d = {}",
            kl_clean.iter().map(|k| format!("{k:.4}")).collect::<Vec<_>>().join(", "),
            kl_noisy.iter().map(|k| format!("{k:.4}")).collect::<Vec<_>>().join(", "),
            argmin + 1
        ),
    );
}

fn random_mixed_state(n: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let dim = 1usize << n;
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let m = &g * g.adjoint();
    let tr: f64 = (0..dim).map(|k| m[(k, k)].re).sum();
    DensityMatrix::new(n, m / Complex64::from(tr)).unwrap()
}

#[test]
fn criterion_11_oracle_equivalences() {
    // (a) sparse entangler vs dense matrix exponential at N <= 6
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_a = 0.0f64;
    for n in 2..=6usize {
        let j = CouplingMatrix::uniform(n, 1.0);
        let spec = build_random_circuit(n, 1, &j, 0.4, &mut rng).unwrap();
        let s = run_circuit(&spec).unwrap();
        let tau = 0.8;
        let got = apply_entangler(&s, &j, tau).unwrap();
        let ham = build_entangler_hamiltonian(&j, &(0..n).collect::<Vec<_>>()).unwrap();
        let h = ham.dense_matrix(n);
        let eig = hermitian_eigs(&h, true).unwrap();
        let v = eig.eigenvectors().unwrap();
        let x = nalgebra::DVector::from_column_slice(s.amplitudes());
        let mut y = v.adjoint() * x;
        for (i, &lam) in eig.eigenvalues().iter().enumerate() {
            y[i] *= Complex64::from_polar(1.0, -lam * tau);
        }
        let want = v * y;
        for (i, a) in got.amplitudes().iter().enumerate() {
            worst_a = worst_a.max((a - want[i]).norm());
        }
    }
    let pass_a = worst_a < 1e-10;

    // (b) dual negativity formulas on 10^3 random 6-qubit mixed states
    let part33 = Partition::contiguous(3, 3, 0);
    let mut worst_b = 0.0f64;
    for _ in 0..1000 {
        let rho = random_mixed_state(6, &mut rng);
        let spec = negativity_spectrum(&rho, &part33).unwrap();
        let abs_sum: f64 = spec.eigenvalues().iter().map(|x| x.abs()).sum();
        let trace_norm_form = 0.5 * (abs_sum - 1.0);
        let neg_sum: f64 = -spec.eigenvalues().iter().filter(|&&x| x < 0.0).sum::<f64>();
        worst_b = worst_b.max((trace_norm_form - neg_sum).abs());
    }
    let pass_b = worst_b < 1e-9;

    // (c) pure-state identity E = 2 log2 sum sqrt(lambda) at N_B = 0
    let mut worst_c = 0.0f64;
    for (n_a1, n_a2) in [(2usize, 4usize), (3, 3), (1, 5)] {
        let n = n_a1 + n_a2;
        let j = CouplingMatrix::uniform(n, 1.0);
        let spec = build_random_circuit(n, 3, &j, 0.4, &mut rng).unwrap();
        let s = run_circuit(&spec).unwrap();
        let partition = Partition::contiguous(n_a1, n_a2, 0);
        let rho = partial_trace_to_a(&s, &partition).unwrap();
        let e = negativity(&negativity_spectrum(&rho, &partition).unwrap())
            .unwrap()
            .log_negativity;
        // Schmidt coefficients across A1:A2 from the reduced state of A1
        let a1_only = Partition::contiguous(n_a1, 0, n_a2);
        let rho_a1 = partial_trace_to_a(&s, &a1_only).unwrap();
        let lambdas = hermitian_eigs(rho_a1.matrix(), false).unwrap();
        let renyi_half: f64 = lambdas
            .eigenvalues()
            .iter()
            .map(|&l| l.max(0.0).sqrt())
            .sum();
        worst_c = worst_c.max((e - 2.0 * renyi_half.log2()).abs());
    }
    let pass_c = worst_c < 1e-9;

    // (d) exact-mode tomography round trip at N_A <= 4
    let mut worst_d = 0.0f64;
    for (n_a1, n_a2, n_b) in [(1usize, 1usize, 2usize), (1, 2, 2), (2, 2, 2)] {
        let n = n_a1 + n_a2 + n_b;
        let j = CouplingMatrix::uniform(n, 1.0);
        let spec = build_random_circuit(n, 2, &j, 0.4, &mut rng).unwrap();
        let s = run_circuit(&spec).unwrap();
        let partition = Partition::contiguous(n_a1, n_a2, n_b);
        let records = simulate_measurements(&s, &partition, 0, &mut rng).unwrap();
        let reconstructed = linear_inversion(&records).unwrap();
        let exact = partial_trace_to_a(&s, &partition).unwrap();
        worst_d = worst_d.max((reconstructed - exact.matrix()).norm());
    }
    let pass_d = worst_d < 1e-9;

    let pass = pass_a && pass_b && pass_c && pass_d;
    report(
        11,
        "oracle equivalences",
        pass,
        &format!(
            "entangler {worst_a:.2e}, dual negativity {worst_b:.2e}, \
             pure-state identity {worst_c:.2e}, tomography round trip {worst_d:.2e}"
        ),
    );
}

#[test]
fn criterion_12_worker_determinism() {
    let config = fig2_config(2);
    let serial = run_ensemble(&config, 1).unwrap();
    let parallel = run_ensemble(&config, 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let d1 = dir.path().join("serial");
    let d4 = dir.path().join("parallel");
    persist(&serial, &d1).unwrap();
    persist(&parallel, &d4).unwrap();
    let mut pass = true;
    let mut checked = 0;
    for name in ["summary.json", "spectra.csv", "negativity.csv", "histogram.csv", "pt.csv"] {
        let a = std::fs::read(d1.join(name));
        let b = std::fs::read(d4.join(name));
        match (a, b) {
            (Ok(a), Ok(b)) => {
                pass &= a == b;
                checked += 1;
            }
            (Err(_), Err(_)) => {}
            _ => pass = false,
        }
    }
    pass &= checked >= 4;
    report(
        12,
        "worker-count determinism",
        pass,
        &format!("{checked} output files byte-identical between 1 and 4 workers"),
    );
}
