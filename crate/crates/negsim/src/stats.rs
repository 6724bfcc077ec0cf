//! Small statistics helpers: Kolmogorov-Smirnov distance, mean / standard error.

/// KS distance between the empirical CDF of `sorted` (ascending) and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "empty sample");
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n as f64).abs());
        d = d.max((f - (i + 1) as f64 / n as f64).abs());
    }
    d
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_exact_grid_is_small() {
        // midpoints of n equal probability slices
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        assert!(ks_statistic(&xs, |x| x) <= 0.5 / n as f64 + 1e-12);
    }

    #[test]
    fn ks_detects_shift() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 200.0).collect();
        assert!(ks_statistic(&xs, |x| x) > 0.4);
    }

    #[test]
    fn mean_stderr_basic() {
        let (m, se) = mean_stderr(&[1.0, 2.0, 3.0]);
        assert!((m - 2.0).abs() < 1e-15);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }
}
