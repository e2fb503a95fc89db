use crate::error::{check_len, Error, Result};
use crate::scalar::Real;

/// Normalized squared error and pointwise relative errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMetrics<T> {
    /// `ε = Σ(A - A₀)² / Σ A₀²`.
    pub epsilon: T,
    /// `E(i) = |A(i) - A₀(i)| / |A₀(i)|`; infinite where `A₀(i) = 0 ≠ A(i)`.
    pub pointwise: Vec<T>,
}

/// Compares `estimate` with `truth`, skipping entries where `mask` is false.
pub fn error_metrics<T: Real>(
    estimate: &[T],
    truth: &[T],
    mask: Option<&[bool]>,
) -> Result<ErrorMetrics<T>> {
    check_len("estimate", truth.len(), estimate.len())?;
    if let Some(m) = mask {
        check_len("mask", truth.len(), m.len())?;
    }
    let keep = |i: usize| mask.is_none_or(|m| m[i]);
    let mut num = T::zero();
    let mut den = T::zero();
    let mut pointwise = Vec::with_capacity(truth.len());
    for (i, (&a, &a0)) in estimate.iter().zip(truth).enumerate() {
        let d = a - a0;
        if keep(i) {
            num += d * d;
            den += a0 * a0;
        }
        pointwise.push(if d == T::zero() {
            T::zero()
        } else if a0 == T::zero() {
            T::infinity()
        } else {
            d.abs() / a0.abs()
        });
    }
    if den == T::zero() {
        return Err(Error::ZeroReference);
    }
    Ok(ErrorMetrics {
        epsilon: num / den,
        pointwise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_doubled() {
        let truth = [1.0f64, -2.0, 0.5];
        let e = error_metrics(&truth, &truth, None).unwrap();
        assert_eq!(e.epsilon, 0.0);
        assert!(e.pointwise.iter().all(|&x| x == 0.0));
        let twice: Vec<f64> = truth.iter().map(|x| 2.0 * x).collect();
        let e = error_metrics(&twice, &truth, None).unwrap();
        assert!((e.epsilon - 1.0).abs() < 1e-15);
        assert!(e.pointwise.iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn zero_reference() {
        assert_eq!(
            error_metrics(&[1.0f64], &[0.0], None),
            Err(Error::ZeroReference)
        );
    }

    #[test]
    fn mask_excludes_points() {
        let e = error_metrics(&[1.0f64, 9.0], &[1.0, 1.0], Some(&[true, false])).unwrap();
        assert_eq!(e.epsilon, 0.0);
    }
}
