//! Sample summaries and log-space reductions.

use crate::real::Real;

/// `log Σ exp(v_i)`; `-∞` for an empty or all `-∞` input.
pub fn log_sum_exp<T: Real>(v: &[T]) -> T {
    let mx = v.iter().copied().fold(T::neg_infinity(), T::max);
    if !mx.is_finite() {
        return mx;
    }
    mx + v.iter().map(|&x| (x - mx).exp()).sum::<T>().ln()
}

/// `log( (1/n) Σ exp(v_i) )`.
pub fn log_mean_exp<T: Real>(v: &[T]) -> T {
    if v.is_empty() {
        return T::neg_infinity();
    }
    log_sum_exp(v) - T::from_usize_lossy(v.len()).ln()
}

/// `log Σ w_i exp(v_i)` for weights that sum to one.
pub fn log_weighted_sum_exp<T: Real>(v: &[T], w: &[T]) -> T {
    let mx = v.iter().copied().fold(T::neg_infinity(), T::max);
    if !mx.is_finite() {
        return mx;
    }
    mx + v
        .iter()
        .zip(w)
        .map(|(&x, &wi)| wi * (x - mx).exp())
        .sum::<T>()
        .ln()
}

pub fn mean<T: Real>(v: &[T]) -> T {
    v.iter().copied().sum::<T>() / T::from_usize_lossy(v.len().max(1))
}

/// Unbiased sample variance (divisor `n - 1`).
pub fn variance<T: Real>(v: &[T]) -> T {
    if v.len() < 2 {
        return T::zero();
    }
    let m = mean(v);
    v.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / T::from_usize_lossy(v.len() - 1)
}

/// Linear-interpolation quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median of unsorted data (NaNs sort last).
pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, 0.5)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (na, nb) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_one_sample(a: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = a.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = cdf(t);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `(min, q25, median, q75, max, mean)` of a sample.
pub fn five_number_mean(v: &[f64]) -> [f64; 6] {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    [
        s[0],
        quantile_sorted(&s, 0.25),
        quantile_sorted(&s, 0.5),
        quantile_sorted(&s, 0.75),
        s[s.len() - 1],
        mean(&s),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lse_is_stable() {
        let v = [1000.0, 1000.0];
        assert_abs_diff_eq!(log_sum_exp(&v), 1000.0 + 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(log_mean_exp(&v), 1000.0, epsilon = 1e-12);
        assert_eq!(log_sum_exp::<f64>(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a = [0.1, 0.2, 0.3];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        assert_eq!(ks_two_sample(&a, &[1.0, 2.0]), 1.0);
        let u: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_one_sample(&u, |t| t) <= 0.0005 + 1e-12);
    }

    #[test]
    fn slope_and_quantiles() {
        assert_abs_diff_eq!(
            ols_slope(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]),
            2.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(median(&[3.0, 1.0, 2.0, 4.0]), 2.5, epsilon = 1e-14);
        let f = five_number_mean(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(f, [1.0, 2.0, 3.0, 4.0, 5.0, 3.0]);
    }
}
