//! Shared statistics helpers for the integration tests.
#![allow(dead_code)]

/// Kolmogorov-Smirnov statistic of `samples` against the continuous CDF `f`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!samples.is_empty());
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut worst = 0.0f64;
    for (i, x) in samples.iter().enumerate() {
        let f = cdf(*x);
        worst = worst.max((f - i as f64 / n).abs());
        worst = worst.max(((i + 1) as f64 / n - f).abs());
    }
    worst
}

/// Asymptotic 1% critical value for the two-sided KS statistic.
pub fn ks_critical_1pct(samples: usize) -> f64 {
    1.628 / (samples as f64).sqrt()
}
