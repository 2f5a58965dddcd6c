//! Monte Carlo estimators.

use super::seeds::replica_rng;
use rand::Rng;
use serde::Serialize;

/// Mean, unbiased variance and standard error of a replica set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub mean: f64,
    pub variance: Option<f64>,
    pub std_error: Option<f64>,
    pub reps: usize,
    /// `(p, q_p)` pairs, increasing in `p`.
    pub quantiles: Vec<(f64, f64)>,
    /// Percentile bootstrap interval for the mean.
    pub bootstrap_ci: Option<(f64, f64)>,
}

impl EstimatorSummary {
    /// Standard error, or infinity when undefined.
    pub fn se(&self) -> f64 {
        self.std_error.unwrap_or(f64::INFINITY)
    }

    pub fn quantile(&self, p: f64) -> Option<f64> {
        self.quantiles.iter().find(|(q, _)| (q - p).abs() < 1e-12).map(|&(_, v)| v)
    }
}

/// Mean and unbiased variance; variance and standard error are `None` for a single replica.
pub fn estimate(samples: &[f64]) -> EstimatorSummary {
    let n = samples.len();
    let mean = if n == 0 { f64::NAN } else { samples.iter().sum::<f64>() / n as f64 };
    let variance = (n >= 2).then(|| samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64);
    EstimatorSummary {
        mean,
        variance,
        std_error: variance.map(|v| (v / n as f64).sqrt()),
        reps: n,
        quantiles: Vec::new(),
        bootstrap_ci: None,
    }
}

/// [`estimate`] plus the quartiles and the 5% and 95% quantiles.
pub fn estimate_with_quantiles(samples: &[f64]) -> EstimatorSummary {
    let mut s = estimate(samples);
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    s.quantiles = [0.05, 0.25, 0.5, 0.75, 0.95]
        .iter()
        .filter_map(|&p| quantile_sorted(&sorted, p).map(|q| (p, q)))
        .collect();
    s
}

/// [`estimate`] plus a percentile bootstrap interval at confidence `level`.
pub fn estimate_with_bootstrap(samples: &[f64], resamples: usize, level: f64, seed: u64) -> EstimatorSummary {
    let mut s = estimate(samples);
    s.bootstrap_ci = bootstrap_ci(samples, resamples, level, seed);
    s
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_ci(samples: &[f64], resamples: usize, level: f64, seed: u64) -> Option<(f64, f64)> {
    let n = samples.len();
    if n < 2 || resamples == 0 {
        return None;
    }
    let mut rng = replica_rng(seed, 0);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| samples[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let a = 0.5 * (1.0 - level);
    Some((quantile_sorted(&means, a)?, quantile_sorted(&means, 1.0 - a)?))
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo]))
}

pub fn quantile(samples: &[f64], p: f64) -> Option<f64> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, p)
}

pub fn median(samples: &[f64]) -> Option<f64> {
    quantile(samples, 0.5)
}

/// Standard error of the sample median from the bootstrap.
pub fn median_se(samples: &[f64], resamples: usize, seed: u64) -> f64 {
    let n = samples.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let mut rng = replica_rng(seed, 1);
    let meds: Vec<f64> = (0..resamples)
        .map(|_| {
            let r: Vec<f64> = (0..n).map(|_| samples[rng.gen_range(0..n)]).collect();
            median(&r).unwrap()
        })
        .collect();
    estimate(&meds).variance.unwrap_or(0.0).sqrt()
}

/// Ordinary least-squares fit `y = a + b x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    /// Standard error of the slope from the residuals (`NaN` with two points).
    pub slope_se: f64,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_se = if xs.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    LinearFit { intercept, slope, slope_se }
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples() {
        let s = estimate(&[2.0; 10]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.variance, Some(0.0));
    }

    #[test]
    fn single_replica_has_no_error() {
        let s = estimate(&[1.5]);
        assert_eq!(s.std_error, None);
        assert!(serde_json::to_string(&s).unwrap().contains("\"std_error\":null"));
    }

    #[test]
    fn exact_line() {
        let f = least_squares(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]);
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!((f.intercept - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quantiles_interpolate() {
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), Some(2.0));
        assert_eq!(quantile(&[1.0, 2.0], 0.25), Some(1.25));
        let s = estimate_with_quantiles(&[5.0, 1.0, 4.0, 2.0, 3.0]);
        let q: Vec<f64> = s.quantiles.iter().map(|p| p.1).collect();
        assert!(q.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn ks_of_identical_samples() {
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(ks_statistic(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
    }
}
