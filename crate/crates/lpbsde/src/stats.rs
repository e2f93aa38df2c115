//! Batch-mean statistics for Monte Carlo estimates.
//!
//! Standard errors come from splitting the per-path values into contiguous
//! batches and taking the dispersion of the batch means. Values arrive in
//! path-index order, so the statistic is independent of how paths were
//! scheduled across workers.

use serde::Serialize;

/// Mean with a batch-based standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BatchMean {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub batches: usize,
}

/// Default batch count; kept at or above 30 so the stderr is usable.
pub const DEFAULT_BATCHES: usize = 32;

/// Batch-mean estimate of `E[values]`.
///
/// Uses `min(n_batches, len)` contiguous batches of near-equal size. With
/// fewer than two batches the stderr is reported as `inf`.
pub fn batch_stats(values: &[f64], n_batches: usize) -> BatchMean {
    let n = values.len();
    if n == 0 {
        return BatchMean {
            mean: f64::NAN,
            stderr: f64::INFINITY,
            n: 0,
            batches: 0,
        };
    }
    let b = n_batches.max(1).min(n);
    let mut batch_means = Vec::with_capacity(b);
    let base = n / b;
    let extra = n % b;
    let mut start = 0;
    for i in 0..b {
        let len = base + usize::from(i < extra);
        let chunk = &values[start..start + len];
        batch_means.push(chunk.iter().sum::<f64>() / len as f64);
        start += len;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if b < 2 {
        f64::INFINITY
    } else {
        let bm = batch_means.iter().sum::<f64>() / b as f64;
        let var = batch_means.iter().map(|m| (m - bm) * (m - bm)).sum::<f64>() / (b as f64 - 1.0);
        (var / b as f64).sqrt()
    };
    BatchMean {
        mean,
        stderr,
        n,
        batches: b,
    }
}

/// `E[value]` where `value = f(path)` over indexed inputs, batched.
pub fn batch_stats_of<T>(items: &[T], f: impl Fn(&T) -> f64, n_batches: usize) -> BatchMean {
    let values: Vec<f64> = items.iter().map(f).collect();
    batch_stats(&values, n_batches)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_values_have_zero_stderr() {
        let s = batch_stats(&[2.0; 640], 32);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.stderr, 0.0);
        assert_eq!(s.batches, 32);
    }

    #[test]
    fn stderr_shrinks_with_sample_size() {
        // alternating values; doubling n halves the batch variance
        let v1: Vec<f64> = (0..3200).map(|i| (i % 2) as f64).collect();
        let v2: Vec<f64> = (0..12800).map(|i| (i % 2) as f64).collect();
        let s1 = batch_stats(&v1, 32);
        let s2 = batch_stats(&v2, 32);
        assert!(s2.stderr <= s1.stderr);
    }

    #[test]
    fn uneven_batches_cover_all_values() {
        let vals: Vec<f64> = (0..101).map(|i| i as f64).collect();
        let s = batch_stats(&vals, 32);
        assert!((s.mean - 50.0).abs() < 1e-12);
        assert_eq!(s.n, 101);
    }
}
