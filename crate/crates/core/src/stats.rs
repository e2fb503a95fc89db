//! Small sample-statistics helpers.

use crate::scalar::Real;

/// Estimate `f(mean)` with its leave-one-out jackknife standard error.
///
/// Returns `None` for fewer than two samples.
pub fn jackknife_of_mean<T: Real>(values: &[T], f: impl Fn(T) -> T) -> Option<(T, T)> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let nf = T::from_usize_lossy(n);
    let total: T = values.iter().copied().sum();
    let estimate = f(total / nf);
    let loo: Vec<T> = values
        .iter()
        .map(|&x| f((total - x) / (nf - T::one())))
        .collect();
    let loo_mean = loo.iter().copied().sum::<T>() / nf;
    let ss: T = loo.iter().map(|&v| (v - loo_mean) * (v - loo_mean)).sum();
    Some((estimate, ((nf - T::one()) / nf * ss).sqrt()))
}

/// Sample mean and unbiased variance.
pub fn mean_variance<T: Real>(values: &[T]) -> (T, T) {
    let n = values.len();
    if n == 0 {
        return (T::nan(), T::nan());
    }
    let nf = T::from_usize_lossy(n);
    let mean = values.iter().copied().sum::<T>() / nf;
    if n == 1 {
        return (mean, T::zero());
    }
    let ss: T = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
    (mean, ss / (nf - T::one()))
}
