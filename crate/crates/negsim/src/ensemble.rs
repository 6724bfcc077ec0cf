//! Orchestration: run configuration, deterministic seeded parallel ensemble
//! execution, sweeps, and persistence.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{build_random_circuit, run_circuit_with_plan, CouplingMatrix, EntanglerPlan};
use crate::entanglement::{
    negativity, negativity_spectrum, spectrum_histogram, NegativitySpectrum, SpectrumHistogram,
};
use crate::error::{NegsimError, Result};
use crate::qstate::{partial_trace_to_a, purity, DensityMatrix, Partition, StateVector};
use crate::theory::{
    bitstring_probabilities, classify_phase, kl_divergence_with_range, pt_density,
    predict_avg_log_negativity, semicircle_density, PhaseLabel, SemicircleParams,
};
use crate::tomography::{
    depolarize, linear_inversion, project_physical, purity_rescale, simulate_measurements_rho,
};

/// Persisted-file schema version.
pub const SCHEMA_VERSION: &str = "1";

/// Bitstring probabilities are persisted only up to this system size unless
/// overridden by `store_probabilities`.
pub const PROBABILITY_SIZE_GATE: usize = 14;

/// Partition given either as subsystem sizes (contiguous layout: A1 on the
/// lowest qubits, then A2, then B) or as explicit qubit index lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartitionSpec {
    Counts { n_a1: usize, n_a2: usize, n_b: usize },
    Explicit { a1: Vec<usize>, a2: Vec<usize>, b: Vec<usize> },
}

impl PartitionSpec {
    pub fn to_partition(&self) -> Result<Partition> {
        match self {
            PartitionSpec::Counts { n_a1, n_a2, n_b } => {
                Ok(Partition::contiguous(*n_a1, *n_a2, *n_b))
            }
            PartitionSpec::Explicit { a1, a2, b } => {
                Partition::new(a1.clone(), a2.clone(), b.clone())
            }
        }
    }
}

/// Entangler coupling: a uniform all-to-all strength or an explicit matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingSpec {
    Uniform { strength: f64 },
    Explicit { rows: Vec<Vec<f64>> },
}

impl Default for CouplingSpec {
    fn default() -> Self {
        CouplingSpec::Uniform { strength: 1.0 }
    }
}

impl CouplingSpec {
    pub fn to_matrix(&self, n_qubits: usize) -> Result<CouplingMatrix> {
        match self {
            CouplingSpec::Uniform { strength } => Ok(CouplingMatrix::uniform(n_qubits, *strength)),
            CouplingSpec::Explicit { rows } => {
                let m = CouplingMatrix::from_rows(rows)?;
                if m.n_qubits() != n_qubits {
                    return Err(NegsimError::Config(format!(
                        "coupling matrix is {}x{} but n_qubits = {n_qubits}",
                        m.n_qubits(),
                        m.n_qubits()
                    )));
                }
                Ok(m)
            }
        }
    }
}

/// Purity correction applied after tomography reconstruction: the literal
/// string "off" or a numeric target purity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PurityCorrection {
    #[default]
    Off,
    Target(f64),
}

impl Serialize for PurityCorrection {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PurityCorrection::Off => s.serialize_str("off"),
            PurityCorrection::Target(t) => s.serialize_f64(*t),
        }
    }
}

impl<'de> Deserialize<'de> for PurityCorrection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Tag(String),
            Target(f64),
        }
        match Repr::deserialize(d)? {
            Repr::Tag(tag) if tag == "off" => Ok(PurityCorrection::Off),
            Repr::Tag(tag) => Err(serde::de::Error::custom(format!(
                "expected \"off\" or a number, got {tag:?}"
            ))),
            Repr::Target(t) => Ok(PurityCorrection::Target(t)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TomographyConfig {
    pub enabled: bool,
    /// 0 selects exact-expectation mode.
    pub shots_per_setting: u64,
    pub purity_correction: PurityCorrection,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            shots_per_setting: 3000,
            purity_correction: PurityCorrection::Off,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct NoiseConfig {
    pub depolarizing_per_layer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectrumConfig {
    pub bins: usize,
    pub exclusion_epsilon: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { bins: 40, exclusion_epsilon: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KlConfig {
    pub bins: usize,
    pub range_multiplier: f64,
}

impl Default for KlConfig {
    fn default() -> Self {
        Self { bins: 24, range_multiplier: 6.0 }
    }
}

/// Full description of one ensemble run; every output is a pure function of
/// this structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub n_qubits: usize,
    pub partition: PartitionSpec,
    /// Circuit depth; `None` selects the depth convention 5 for N_B >= 7 and
    /// 4 otherwise.
    pub layers: Option<usize>,
    pub instances: usize,
    pub coupling: CouplingSpec,
    pub tau_ent: f64,
    pub seed: u64,
    pub tomography: TomographyConfig,
    pub noise: NoiseConfig,
    pub spectrum: SpectrumConfig,
    pub kl: KlConfig,
    /// Sweep point index mixed into per-instance substream seeds.
    pub point_index: u64,
    /// Overrides the probability size gate when set.
    pub store_probabilities: Option<bool>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_qubits: 15,
            partition: PartitionSpec::Counts { n_a1: 2, n_a2: 4, n_b: 9 },
            layers: None,
            instances: 20,
            coupling: CouplingSpec::default(),
            tau_ent: 0.4,
            seed: 1,
            tomography: TomographyConfig::default(),
            noise: NoiseConfig::default(),
            spectrum: SpectrumConfig::default(),
            kl: KlConfig::default(),
            point_index: 0,
            store_probabilities: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| NegsimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let partition = self.partition.to_partition().map_err(config_err)?;
        if partition.n_total() != self.n_qubits {
            return Err(NegsimError::Config(format!(
                "partition covers {} qubits but n_qubits = {}",
                partition.n_total(),
                self.n_qubits
            )));
        }
        if self.instances < 1 {
            return Err(NegsimError::Config("instances must be >= 1".into()));
        }
        if self.tau_ent <= 0.0 {
            return Err(NegsimError::Config("tau_ent must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.noise.depolarizing_per_layer) {
            return Err(NegsimError::Config(
                "noise.depolarizing_per_layer must be in [0, 1]".into(),
            ));
        }
        if self.spectrum.bins < 2 {
            return Err(NegsimError::Config("spectrum.bins must be >= 2".into()));
        }
        if self.kl.bins < 5 {
            return Err(NegsimError::Config("kl.bins must be >= 5".into()));
        }
        self.coupling.to_matrix(self.n_qubits).map_err(config_err)?;
        Ok(())
    }

    pub fn partition(&self) -> Result<Partition> {
        self.partition.to_partition()
    }

    /// Configured depth, or the convention default (5 when N_B >= 7, else 4).
    pub fn effective_layers(&self) -> Result<usize> {
        if let Some(d) = self.layers {
            return Ok(d);
        }
        let p = self.partition()?;
        Ok(if p.n_b() >= 7 { 5 } else { 4 })
    }

    fn stores_probabilities(&self) -> bool {
        self.store_probabilities
            .unwrap_or(self.n_qubits <= PROBABILITY_SIZE_GATE)
    }
}

fn config_err(e: NegsimError) -> NegsimError {
    NegsimError::Config(e.to_string())
}

/// Per-instance random substream seed: three chained splitmix64 finalizer
/// rounds over (master seed, instance index, sweep point index). Fixed for
/// all time; changing it silently breaks reproducibility of persisted runs.
pub fn substream_seed(master: u64, instance: u64, point: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ instance) ^ point)
}

/// Everything recorded about one circuit instance. A failed instance keeps
/// its `error` string and empty data fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance: usize,
    pub substream_seed: u64,
    /// Negativity-spectrum eigenvalues, ascending; empty on failure.
    pub spectrum: Vec<f64>,
    pub negativity: Option<f64>,
    pub log_negativity: Option<f64>,
    pub purity: Option<f64>,
    pub kl: Option<f64>,
    pub probabilities: Option<Vec<f64>>,
    pub error: Option<String>,
}

/// Pooled histogram of bitstring probabilities with the Porter-Thomas
/// reference density at bin centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    pub theory_density: Vec<f64>,
}

/// Aggregated result of one ensemble run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub schema_version: String,
    pub code_version: String,
    pub config: RunConfig,
    pub instances: Vec<InstanceRecord>,
    pub mean_log_negativity: f64,
    pub stderr_log_negativity: f64,
    pub mean_kl: Option<f64>,
    pub stderr_kl: Option<f64>,
    pub histogram: SpectrumHistogram,
    pub pt_histogram: Option<PtHistogram>,
    pub phase: PhaseLabel,
    pub predicted_log_negativity: f64,
}

fn run_instance_inner(
    config: &RunConfig,
    partition: &Partition,
    plan: &EntanglerPlan,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, f64, f64, f64, Option<f64>, Option<Vec<f64>>)> {
    let depth = config.effective_layers()?;
    let coupling = config.coupling.to_matrix(config.n_qubits)?;
    let spec = build_random_circuit(config.n_qubits, depth, &coupling, config.tau_ent, rng)?;
    let state: StateVector = run_circuit_with_plan(&spec, plan)?;

    // global white-noise fidelity after d depolarizing layers
    let eps = config.noise.depolarizing_per_layer;
    let fidelity = (1.0 - eps).powi(depth as i32);

    let mut rho: DensityMatrix = partial_trace_to_a(&state, partition)?;
    if eps > 0.0 {
        rho = depolarize(&rho, 1.0 - fidelity)?;
    }

    if config.tomography.enabled {
        let records =
            simulate_measurements_rho(&rho, config.tomography.shots_per_setting, rng)?;
        let raw = linear_inversion(&records)?;
        rho = project_physical(&raw)?;
        if let PurityCorrection::Target(target) = config.tomography.purity_correction {
            rho = purity_rescale(&rho, target)?;
        }
    }

    let spectrum = negativity_spectrum(&rho, partition)?;
    let res = negativity(&spectrum)?;
    let rho_purity = purity(&rho);

    let (kl, probabilities) = if config.stores_probabilities() {
        let mut probs = bitstring_probabilities(&state);
        if eps > 0.0 {
            let mix = (1.0 - fidelity) / probs.len() as f64;
            for p in &mut probs {
                *p = fidelity * *p + mix;
            }
        }
        let kl = kl_divergence_with_range(
            &probs,
            probs.len(),
            config.kl.bins,
            config.kl.range_multiplier,
        )?;
        (Some(kl), Some(probs))
    } else {
        (None, None)
    };

    Ok((
        spectrum.eigenvalues().to_vec(),
        res.negativity,
        res.log_negativity,
        rho_purity,
        kl,
        probabilities,
    ))
}

/// Runs one instance; fully deterministic given (config, instance_index).
pub fn run_instance(config: &RunConfig, instance_index: usize) -> Result<InstanceRecord> {
    if instance_index >= config.instances {
        return Err(NegsimError::Domain(format!(
            "instance index {instance_index} out of range (instances = {})",
            config.instances
        )));
    }
    let partition = config.partition()?;
    let coupling = config.coupling.to_matrix(config.n_qubits)?;
    let plan = EntanglerPlan::new(&coupling)?;
    Ok(run_instance_with_plan(config, &partition, &plan, instance_index))
}

fn run_instance_with_plan(
    config: &RunConfig,
    partition: &Partition,
    plan: &EntanglerPlan,
    instance_index: usize,
) -> InstanceRecord {
    let seed = substream_seed(config.seed, instance_index as u64, config.point_index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match run_instance_inner(config, partition, plan, &mut rng) {
        Ok((spectrum, n, e, p, kl, probs)) => InstanceRecord {
            instance: instance_index,
            substream_seed: seed,
            spectrum,
            negativity: Some(n),
            log_negativity: Some(e),
            purity: Some(p),
            kl,
            probabilities: probs,
            error: None,
        },
        Err(err) => InstanceRecord {
            instance: instance_index,
            substream_seed: seed,
            spectrum: Vec::new(),
            negativity: None,
            log_negativity: None,
            purity: None,
            kl: None,
            probabilities: None,
            error: Some(err.to_string()),
        },
    }
}

fn aggregate(config: &RunConfig, records: Vec<InstanceRecord>) -> Result<RunResult> {
    let partition = config.partition()?;
    let ok: Vec<&InstanceRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    if ok.is_empty() {
        let first = records
            .first()
            .and_then(|r| r.error.clone())
            .unwrap_or_default();
        return Err(NegsimError::Numerical(format!(
            "all {} instances failed; first error: {first}",
            records.len()
        )));
    }
    let es: Vec<f64> = ok.iter().map(|r| r.log_negativity.unwrap()).collect();
    let (mean_e, se_e) = crate::stats::mean_stderr(&es);

    let kls: Vec<f64> = ok.iter().filter_map(|r| r.kl).collect();
    let (mean_kl, stderr_kl) = if kls.len() == ok.len() {
        let (m, s) = crate::stats::mean_stderr(&kls);
        (Some(m), Some(s))
    } else {
        (None, None)
    };

    let spectra: Vec<NegativitySpectrum> = ok
        .iter()
        .map(|r| NegativitySpectrum::new(r.spectrum.clone(), partition.clone()))
        .collect::<Result<_>>()?;
    let histogram =
        spectrum_histogram(&spectra, config.spectrum.bins, config.spectrum.exclusion_epsilon)?;

    let pt_histogram = pooled_pt_histogram(config, &ok);

    Ok(RunResult {
        schema_version: SCHEMA_VERSION.to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        instances: records,
        mean_log_negativity: mean_e,
        stderr_log_negativity: se_e,
        mean_kl,
        stderr_kl,
        histogram,
        pt_histogram,
        phase: classify_phase(&partition),
        predicted_log_negativity: predict_avg_log_negativity(&partition),
    })
}

fn pooled_pt_histogram(config: &RunConfig, ok: &[&InstanceRecord]) -> Option<PtHistogram> {
    let l = 1usize << config.n_qubits;
    let bins = config.kl.bins;
    let hi = config.kl.range_multiplier / l as f64;
    let width = hi / bins as f64;
    let mut counts = vec![0u64; bins + 1];
    let mut total = 0u64;
    for rec in ok {
        let probs = rec.probabilities.as_ref()?;
        for &p in probs {
            let b = if p >= hi { bins } else { ((p / width) as usize).min(bins - 1) };
            counts[b] += 1;
            total += 1;
        }
    }
    let edges: Vec<f64> = (0..=bins).map(|i| i as f64 * width).collect();
    let density: Vec<f64> = counts[..bins]
        .iter()
        .map(|&c| c as f64 / (total as f64 * width))
        .collect();
    let theory_density: Vec<f64> = (0..bins)
        .map(|i| pt_density((i as f64 + 0.5) * width, l))
        .collect();
    Some(PtHistogram { edges, counts, density, theory_density })
}

/// Runs all instances on a pool of `workers` threads and merges the records
/// by instance index, so the result is independent of completion order.
pub fn run_ensemble(config: &RunConfig, workers: usize) -> Result<RunResult> {
    config.validate()?;
    let partition = config.partition()?;
    let coupling = config.coupling.to_matrix(config.n_qubits)?;
    let plan = EntanglerPlan::new(&coupling)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| NegsimError::Config(format!("worker pool: {e}")))?;
    let records: Vec<InstanceRecord> = pool.install(|| {
        (0..config.instances)
            .into_par_iter()
            .map(|i| run_instance_with_plan(config, &partition, &plan, i))
            .collect()
    });
    aggregate(config, records)
}

/// Sweep axis of [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Vary N_B at fixed (N_A1, N_A2); each value sets n_qubits = N_A + N_B.
    EnvironmentSize,
    /// Vary N_A1 at fixed N and N_B; N_A2 = N - N_B - N_A1.
    SplitRatio,
    /// Vary the circuit depth d.
    Depth,
}

/// Derives the config of one sweep point. Fresh circuits per point: the point
/// index is mixed into every per-instance substream seed.
pub fn sweep_point_config(
    template: &RunConfig,
    axis: SweepAxis,
    point: usize,
    value: usize,
) -> Result<RunConfig> {
    let base = template.partition.to_partition().map_err(config_err)?;
    let mut cfg = template.clone();
    cfg.point_index = point as u64;
    match axis {
        SweepAxis::EnvironmentSize => {
            let (n_a1, n_a2) = (base.n_a1(), base.n_a2());
            cfg.partition = PartitionSpec::Counts { n_a1, n_a2, n_b: value };
            cfg.n_qubits = n_a1 + n_a2 + value;
            if let CouplingSpec::Explicit { .. } = cfg.coupling {
                return Err(NegsimError::Config(
                    "environment sweeps require a uniform coupling spec".into(),
                ));
            }
        }
        SweepAxis::SplitRatio => {
            let (n, n_b) = (base.n_total(), base.n_b());
            let n_a = n - n_b;
            if value > n_a {
                return Err(NegsimError::Config(format!(
                    "split value {value} exceeds N_A = {n_a} at point {point}"
                )));
            }
            cfg.partition =
                PartitionSpec::Counts { n_a1: value, n_a2: n_a - value, n_b };
        }
        SweepAxis::Depth => {
            cfg.layers = Some(value);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One [`RunResult`] per axis value, with fresh seed derivation per point.
pub fn sweep(
    template: &RunConfig,
    axis: SweepAxis,
    values: &[usize],
    workers: usize,
) -> Result<Vec<RunResult>> {
    if values.is_empty() {
        return Err(NegsimError::Config("sweep needs at least one value".into()));
    }
    let configs: Vec<RunConfig> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| sweep_point_config(template, axis, i, v))
        .collect::<Result<_>>()?;
    configs.iter().map(|c| run_ensemble(c, workers)).collect()
}

/// Sweep summary table: value, mean E, stderr, mean D_KL, phase, prediction.
pub fn sweep_summary_csv(values: &[usize], results: &[RunResult]) -> String {
    let mut out =
        String::from("value,mean_log_negativity,stderr,mean_kl,phase,predicted_log_negativity\n");
    for (&v, r) in values.iter().zip(results) {
        let kl = r
            .mean_kl
            .map(|k| format!("{k}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{v},{},{},{kl},{},{}\n",
            r.mean_log_negativity, r.stderr_log_negativity, r.phase, r.predicted_log_negativity
        ));
    }
    out
}

fn spectra_csv(result: &RunResult) -> String {
    let mut out = String::from("instance,index,xi\n");
    for rec in &result.instances {
        for (k, xi) in rec.spectrum.iter().enumerate() {
            out.push_str(&format!("{},{k},{xi}\n", rec.instance));
        }
    }
    out
}

fn negativity_csv(result: &RunResult) -> String {
    let mut out = String::from("instance,negativity,log_negativity,purity\n");
    for rec in &result.instances {
        if let (Some(n), Some(e), Some(p)) = (rec.negativity, rec.log_negativity, rec.purity) {
            out.push_str(&format!("{},{n},{e},{p}\n", rec.instance));
        } else {
            out.push_str(&format!(
                "{},,,\n",
                rec.instance
            ));
        }
    }
    out
}

fn histogram_csv(result: &RunResult) -> Result<String> {
    let partition = result.config.partition()?;
    let params = SemicircleParams::for_partition(&partition);
    let l_a = partition.l_a();
    let h = &result.histogram;
    let mut out = String::from("bin_lo,bin_hi,count,density,theory_density\n");
    for (i, center) in h.bin_centers().iter().enumerate() {
        let theory = semicircle_density(*center, &params, l_a);
        out.push_str(&format!(
            "{},{},{},{},{theory}\n",
            h.edges[i],
            h.edges[i + 1],
            h.counts[i],
            h.density[i]
        ));
    }
    Ok(out)
}

fn pt_csv(h: &PtHistogram) -> String {
    let mut out = String::from("bin_lo,bin_hi,count,density,theory_density\n");
    for i in 0..h.density.len() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            h.edges[i], h.edges[i + 1], h.counts[i], h.density[i], h.theory_density[i]
        ));
    }
    out
}

/// Writes `summary.json` plus CSV views (`spectra.csv`, `negativity.csv`,
/// `histogram.csv`, and `pt.csv` when probabilities were stored) into `dir`.
pub fn persist(result: &RunResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(result)?;
    json.push('\n');
    std::fs::write(dir.join("summary.json"), json)?;
    std::fs::write(dir.join("spectra.csv"), spectra_csv(result))?;
    std::fs::write(dir.join("negativity.csv"), negativity_csv(result))?;
    std::fs::write(dir.join("histogram.csv"), histogram_csv(result)?)?;
    if let Some(pt) = &result.pt_histogram {
        std::fs::write(dir.join("pt.csv"), pt_csv(pt))?;
    }
    Ok(())
}

/// Loads a persisted run and re-verifies schema version and that the stored
/// aggregates match a recomputation from the per-instance records.
pub fn load(dir: &Path) -> Result<RunResult> {
    let text = std::fs::read_to_string(dir.join("summary.json"))?;
    let result: RunResult = serde_json::from_str(&text)?;
    if result.schema_version != SCHEMA_VERSION {
        return Err(NegsimError::SchemaMismatch {
            expected: SCHEMA_VERSION.to_string(),
            found: result.schema_version,
        });
    }
    let recomputed = aggregate(&result.config, result.instances.clone())?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    if !close(recomputed.mean_log_negativity, result.mean_log_negativity)
        || !close(recomputed.stderr_log_negativity, result.stderr_log_negativity)
    {
        return Err(NegsimError::Inconsistency(
            "stored aggregates disagree with per-instance records".into(),
        ));
    }
    Ok(result)
}
