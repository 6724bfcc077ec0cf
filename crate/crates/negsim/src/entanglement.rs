//! Negativity spectrum and negativity measures of reduced density matrices.

use serde::{Deserialize, Serialize};

use crate::error::{NegsimError, Result};
use crate::qstate::{hermitian_eigs, partial_transpose, DensityMatrix, Partition};

/// Eigenvalues of rho_A^{T1}, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativitySpectrum {
    eigenvalues: Vec<f64>,
    partition: Partition,
}

impl NegativitySpectrum {
    pub fn new(eigenvalues: Vec<f64>, partition: Partition) -> Result<Self> {
        if eigenvalues.len() != partition.l_a() {
            return Err(NegsimError::Domain(format!(
                "spectrum has {} values, expected L_A = {}",
                eigenvalues.len(),
                partition.l_a()
            )));
        }
        let sum: f64 = eigenvalues.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(NegsimError::Validation(format!(
                "spectrum sums to {sum}, not 1 within 1e-9"
            )));
        }
        if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err(NegsimError::Validation("spectrum must be sorted ascending".into()));
        }
        Ok(Self { eigenvalues, partition })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }
}

/// Negativity N_{A1:A2} and logarithmic negativity E = log2(2N + 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativityResult {
    pub negativity: f64,
    pub log_negativity: f64,
}

/// Spectrum of the partial transpose of rho_A over A1.
pub fn negativity_spectrum(
    rho_a: &DensityMatrix,
    partition: &Partition,
) -> Result<NegativitySpectrum> {
    let pt = partial_transpose(rho_a, partition)?;
    let eigs = hermitian_eigs(&pt, false)?;
    NegativitySpectrum::new(eigs.eigenvalues().to_vec(), partition.clone())
}

/// Negativity via the trace-norm form, cross-checked against the
/// negative-eigenvalue sum; the two must agree within 1e-6.
pub fn negativity(spectrum: &NegativitySpectrum) -> Result<NegativityResult> {
    let abs_sum: f64 = spectrum.eigenvalues().iter().map(|x| x.abs()).sum();
    let trace_norm_form = 0.5 * (abs_sum - 1.0);
    let neg_sum_form: f64 =
        -spectrum.eigenvalues().iter().filter(|&&x| x < 0.0).sum::<f64>();
    if (trace_norm_form - neg_sum_form).abs() > 1e-6 {
        return Err(NegsimError::Inconsistency(format!(
            "trace-norm negativity {trace_norm_form} vs negative-sum {neg_sum_form}; \
             input trace is likely not 1"
        )));
    }
    let n = trace_norm_form.max(0.0);
    Ok(NegativityResult { negativity: n, log_negativity: (2.0 * n + 1.0).log2() })
}

/// Pooled histogram of negativity-spectrum eigenvalues.
///
/// Density is normalized so its integral equals (retained count)/(instances),
/// directly comparable with the semicircle density whose integral is L_A.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumHistogram {
    /// bins + 1 edges, uniform over the retained pool's range.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    pub exclusion_epsilon: f64,
    pub instances: usize,
    pub retained: usize,
}

impl SpectrumHistogram {
    pub fn bin_centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

pub fn spectrum_histogram(
    spectra: &[NegativitySpectrum],
    bins: usize,
    exclusion_epsilon: f64,
) -> Result<SpectrumHistogram> {
    if bins < 2 {
        return Err(NegsimError::Domain("bins must be >= 2".into()));
    }
    if exclusion_epsilon < 0.0 {
        return Err(NegsimError::Domain("exclusion_epsilon must be >= 0".into()));
    }
    let pool: Vec<f64> = spectra
        .iter()
        .flat_map(|s| s.eigenvalues().iter().copied())
        .filter(|x| x.abs() >= exclusion_epsilon)
        .collect();
    if pool.is_empty() {
        return Err(NegsimError::Empty("no eigenvalues retained after exclusion".into()));
    }
    histogram_of_pool(&pool, bins, exclusion_epsilon, spectra.len())
}

pub(crate) fn histogram_of_pool(
    pool: &[f64],
    bins: usize,
    exclusion_epsilon: f64,
    instances: usize,
) -> Result<SpectrumHistogram> {
    let mut lo = pool.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = pool.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-12 {
        lo -= 1e-9;
        hi += 1e-9;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in pool {
        let mut b = ((x - lo) / width) as usize;
        if b >= bins {
            b = bins - 1;
        }
        counts[b] += 1;
    }
    let density: Vec<f64> =
        counts.iter().map(|&c| c as f64 / (instances as f64 * width)).collect();
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    Ok(SpectrumHistogram {
        edges,
        counts,
        density,
        exclusion_epsilon,
        instances,
        retained: pool.len(),
    })
}

/// Lobe structure of a pooled spectrum after near-zero exclusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LobeSummary {
    pub clusters: usize,
    /// Width and location of the widest splitting gap, if any.
    pub gap_width: Option<f64>,
    pub gap_location: Option<(f64, f64)>,
    pub exclusion_epsilon: f64,
    pub median_spacing: f64,
    pub retained: usize,
}

/// Clusters retained eigenvalues by their largest internal gaps.
///
/// A gap splits two clusters when it exceeds 3x the median nearest-neighbor
/// spacing and 5% of the retained pool's range; the second condition guards
/// against the heavy tail of nearest-neighbor spacings in large pools.
/// Clusters holding fewer than 2% of the retained eigenvalues (minimum 2) are
/// then merged back across their narrower boundary gap, so a handful of
/// extreme outliers cannot masquerade as a lobe.
pub fn detect_lobes(pool: &[f64], exclusion_epsilon: f64) -> Result<LobeSummary> {
    let mut kept: Vec<f64> =
        pool.iter().copied().filter(|x| x.abs() >= exclusion_epsilon).collect();
    if kept.len() < 4 {
        return Err(NegsimError::InsufficientData(format!(
            "only {} eigenvalues retained, need at least 4",
            kept.len()
        )));
    }
    kept.sort_by(f64::total_cmp);
    let range = kept[kept.len() - 1] - kept[0];
    let spacings: Vec<f64> = kept.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sorted_sp = spacings.clone();
    sorted_sp.sort_by(f64::total_cmp);
    let median = sorted_sp[sorted_sp.len() / 2];
    let threshold = (3.0 * median).max(0.05 * range);

    let mut splits: Vec<usize> = (0..spacings.len()).filter(|&i| spacings[i] > threshold).collect();

    // merge undersized clusters back across their narrower boundary gap
    let floor = ((kept.len() as f64 * 0.02).ceil() as usize).max(2);
    while !splits.is_empty() {
        let mut bounds = Vec::with_capacity(splits.len() + 2);
        bounds.push(0usize);
        bounds.extend(splits.iter().map(|&s| s + 1));
        bounds.push(kept.len());
        let undersized = (0..bounds.len() - 1)
            .map(|j| (j, bounds[j + 1] - bounds[j]))
            .filter(|&(_, size)| size < floor)
            .min_by_key(|&(_, size)| size);
        let Some((j, _)) = undersized else { break };
        let left = j.checked_sub(1);
        let right = (j < splits.len()).then_some(j);
        let remove = match (left, right) {
            (Some(l), Some(r)) => {
                if spacings[splits[l]] <= spacings[splits[r]] {
                    l
                } else {
                    r
                }
            }
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => break,
        };
        splits.remove(remove);
    }

    let clusters = splits.len() + 1;
    let mut gap_width: Option<f64> = None;
    let mut gap_location = None;
    for &i in &splits {
        if gap_width.map_or(true, |w| spacings[i] > w) {
            gap_width = Some(spacings[i]);
            gap_location = Some((kept[i], kept[i + 1]));
        }
    }
    Ok(LobeSummary {
        clusters,
        gap_width,
        gap_location,
        exclusion_epsilon,
        median_spacing: median,
        retained: kept.len(),
    })
}
