//! Readout normalization and uncertainty propagation through both
//! reconstruction pipelines.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{check_len, invalid, Result};
use crate::noise::trajectory_rng;
use crate::reconstruction::{
    cpmg_limit, cpmg_linear_map, cpmg_solve, propagate_rows, walsh_linear_map,
    walsh_reconstruct_exact,
};
use crate::scalar::Real;
use crate::stats::mean_variance;
use crate::walsh::{ShufflingMatrix, WalshBasis};

/// Normalized fluorescence for the two readout projections of one sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawReadout<T> {
    pub p_plus: T,
    pub p_minus: T,
    pub sigma_plus: T,
    pub sigma_minus: T,
    /// Readout contrast in `(0, 1]`.
    pub contrast: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiEstimate<T> {
    /// Contrast-corrected population `P₊`.
    pub population: T,
    pub sigma_population: T,
    /// `None` once `2P₊ - 1 ≤ 0`.
    pub chi: Option<T>,
    pub sigma_chi: Option<T>,
}

impl<T: Real> ChiEstimate<T> {
    pub fn is_valid(&self) -> bool {
        self.chi.is_some()
    }
}

/// `P₊ = ½ + (2-c)/(2c)·(a-b)/(a+b)`, `χ = -ln(2P₊-1)` and
/// `σ_χ = 2σ_P/(2P₊-1)`.
pub fn normalize_and_extract_chi<T: Real>(raw: &RawReadout<T>) -> Result<ChiEstimate<T>> {
    let c = raw.contrast;
    if !(c > T::zero() && c <= T::one()) {
        return Err(invalid("contrast", format!("must lie in (0, 1], got {c}")));
    }
    let (a, b) = (raw.p_plus, raw.p_minus);
    let sum = a + b;
    if !(sum > T::zero()) {
        return Err(invalid("readout", "p_plus + p_minus must be > 0"));
    }
    if !(raw.sigma_plus >= T::zero() && raw.sigma_minus >= T::zero()) {
        return Err(invalid("readout", "standard errors must be >= 0"));
    }
    let two = T::lit(2.0);
    let k = (two - c) / (two * c);
    let population = T::lit(0.5) + k * (a - b) / sum;
    let da = two * b * raw.sigma_plus;
    let db = two * a * raw.sigma_minus;
    let sigma_population = k * (da * da + db * db).sqrt() / (sum * sum);
    let arg = two * population - T::one();
    let (chi, sigma_chi) = if arg > T::zero() {
        (Some(-arg.ln()), Some(two * sigma_population / arg))
    } else {
        (None, None)
    };
    Ok(ChiEstimate {
        population,
        sigma_population,
        chi,
        sigma_chi,
    })
}

/// Relative error `Δχ = (2σ_P/c) e^χ / χ`; smallest at `χ = 1`.
pub fn relative_chi_error<T: Real>(chi: T, sigma_p: T, contrast: T) -> T {
    T::lit(2.0) * sigma_p / contrast * chi.exp() / chi
}

fn walsh_order(len: usize) -> Result<u32> {
    if !len.is_power_of_two() {
        return Err(invalid(
            "sigma_chi",
            format!("length {len} is not a power of two"),
        ));
    }
    Ok(len.trailing_zeros())
}

fn cpmg_order(len: usize) -> Result<usize> {
    if len < 2 || !(len - 1).is_power_of_two() {
        return Err(invalid("sigma_chi", format!("length {len} is not 2^n + 1")));
    }
    Ok(len - 1)
}

/// Per-point `σ_Ḡ` for independent `σ_χ` through the Walsh inversion.
pub fn propagate_walsh<T: Real>(sigma_chi: &[T], total_time: T) -> Result<Vec<T>> {
    let n = walsh_order(sigma_chi.len())?;
    let a = walsh_linear_map(&WalshBasis::new(n)?, &ShufflingMatrix::new(n)?, total_time);
    Ok(propagate_rows(
        &a,
        sigma_chi.len(),
        sigma_chi,
        &vec![true; sigma_chi.len()],
    ))
}

/// Per-point `σ_S` for independent `σ_χ` through the CPMG triangular solve.
pub fn propagate_cpmg<T: Real>(
    sigma_chi: &[T],
    total_time: T,
    limit: Option<usize>,
) -> Result<Vec<T>> {
    let order = cpmg_order(sigma_chi.len())?;
    let m = cpmg_linear_map(sigma_chi.len(), total_time, cpmg_limit(limit, order)?);
    Ok(propagate_rows(
        &m,
        sigma_chi.len(),
        sigma_chi,
        &vec![true; sigma_chi.len()],
    ))
}

/// Empirical standard deviation of `f(δχ)` over `draws` Gaussian
/// perturbations `δχ_m ~ N(0, σ_m²)`. Draw `i` uses stream `i` of `seed`.
pub fn monte_carlo_propagation<T, F>(
    sigma_chi: &[T],
    draws: usize,
    seed: u64,
    f: F,
) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(&[T]) -> Result<Vec<T>> + Sync,
{
    if draws < 2 {
        return Err(invalid("draws", "need at least two draws"));
    }
    let outputs = (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(seed, i as u64);
            let delta: Vec<T> = sigma_chi
                .iter()
                .map(|&s| s * T::lit(rng.sample::<f64, _>(StandardNormal)))
                .collect();
            f(&delta)
        })
        .collect::<Result<Vec<_>>>()?;
    let width = outputs[0].len();
    for o in &outputs {
        check_len("propagated output", width, o.len())?;
    }
    Ok((0..width)
        .map(|j| {
            let col: Vec<T> = outputs.iter().map(|o| o[j]).collect();
            mean_variance(&col).1.sqrt()
        })
        .collect())
}

/// Monte Carlo counterpart of [`propagate_walsh`].
pub fn monte_carlo_walsh<T: Real>(
    sigma_chi: &[T],
    total_time: T,
    draws: usize,
    seed: u64,
) -> Result<Vec<T>> {
    let n = walsh_order(sigma_chi.len())?;
    let basis = WalshBasis::new(n)?;
    let shuffling = ShufflingMatrix::new(n)?;
    monte_carlo_propagation(sigma_chi, draws, seed, |d| {
        walsh_reconstruct_exact(&basis, &shuffling, d, total_time).map(|(_, g)| g)
    })
}

/// Monte Carlo counterpart of [`propagate_cpmg`].
pub fn monte_carlo_cpmg<T: Real>(
    sigma_chi: &[T],
    total_time: T,
    limit: Option<usize>,
    draws: usize,
    seed: u64,
) -> Result<Vec<T>> {
    let limit = cpmg_limit(limit, cpmg_order(sigma_chi.len())?)?;
    monte_carlo_propagation(sigma_chi, draws, seed, |d| {
        Ok(cpmg_solve(d, total_time, limit))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(a: f64, b: f64, s: f64, c: f64) -> RawReadout<f64> {
        RawReadout {
            p_plus: a,
            p_minus: b,
            sigma_plus: s,
            sigma_minus: s,
            contrast: c,
        }
    }

    #[test]
    fn balanced_readout_is_invalid() {
        let e = normalize_and_extract_chi(&raw(0.4, 0.4, 0.0, 0.7)).unwrap();
        assert_eq!(e.population, 0.5);
        assert!(!e.is_valid());
    }

    #[test]
    fn unit_contrast_direct_value() {
        let e = normalize_and_extract_chi(&raw(0.9, 0.1, 0.0, 1.0)).unwrap();
        assert!((e.population - 0.9).abs() < 1e-15);
        assert!((e.chi.unwrap() - 0.2231435513142097).abs() < 1e-12);
        assert_eq!(e.sigma_chi, Some(0.0));
    }

    #[test]
    fn population_sigma_matches_finite_difference() {
        let r = RawReadout {
            p_plus: 0.83,
            p_minus: 0.41,
            sigma_plus: 0.013,
            sigma_minus: 0.021,
            contrast: 0.3,
        };
        let e = normalize_and_extract_chi(&r).unwrap();
        let p = |a: f64, b: f64| {
            normalize_and_extract_chi(&RawReadout {
                p_plus: a,
                p_minus: b,
                ..r
            })
            .unwrap()
            .population
        };
        let h = 1e-6;
        let ga = (p(r.p_plus + h, r.p_minus) - p(r.p_plus - h, r.p_minus)) / (2.0 * h);
        let gb = (p(r.p_plus, r.p_minus + h) - p(r.p_plus, r.p_minus - h)) / (2.0 * h);
        let expect = ((ga * r.sigma_plus).powi(2) + (gb * r.sigma_minus).powi(2)).sqrt();
        assert!((e.sigma_population - expect).abs() < 1e-8 * expect);
        let chi_of = |pp: f64| -(2.0 * pp - 1.0).ln();
        let dchi = (chi_of(e.population + h) - chi_of(e.population - h)) / (2.0 * h);
        assert!(
            (e.sigma_chi.unwrap() - dchi.abs() * e.sigma_population).abs()
                < 1e-6 * e.sigma_chi.unwrap()
        );
    }

    #[test]
    fn relative_error_minimum_at_one() {
        let grid: Vec<f64> = (1..=400).map(|i| i as f64 * 0.01).collect();
        let best = grid
            .iter()
            .copied()
            .min_by(|a, b| {
                relative_chi_error(*a, 0.01, 0.3)
                    .partial_cmp(&relative_chi_error(*b, 0.01, 0.3))
                    .unwrap()
            })
            .unwrap();
        assert!((best - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_readout() {
        assert!(normalize_and_extract_chi(&raw(0.5, 0.5, 0.0, 0.0)).is_err());
        assert!(normalize_and_extract_chi(&raw(0.0, 0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn zero_sigma_propagates_to_zero() {
        assert!(propagate_walsh(&[0.0f64; 16], 32.0)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        assert!(propagate_cpmg(&[0.0f64; 17], 32.0, None)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn single_harmonic_scale() {
        let t = 32.0;
        let mut sig = vec![0.0f64; 17];
        sig[12] = 0.7;
        let s = propagate_cpmg(&sig, t, None).unwrap();
        let expect = std::f64::consts::PI.powi(2) / (4.0 * t) * 0.7;
        assert!((s[12] - expect).abs() < 1e-15);
    }

    #[test]
    fn homogeneous_in_sigma() {
        let sig: Vec<f64> = (0..16).map(|i| 0.1 + 0.01 * i as f64).collect();
        let scaled: Vec<f64> = sig.iter().map(|s| 3.0 * s).collect();
        let a = propagate_walsh(&sig, 8.0).unwrap();
        let b = propagate_walsh(&scaled, 8.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((3.0 * x - y).abs() <= 1e-14 * y.abs());
        }
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let sig = vec![1.0f64; 8];
        let a = monte_carlo_walsh(&sig, 8.0, 64, 5).unwrap();
        let b = monte_carlo_walsh(&sig, 8.0, 64, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn length_checks() {
        assert!(propagate_walsh(&[1.0f64; 12], 1.0).is_err());
        assert!(propagate_cpmg(&[1.0f64; 16], 1.0, None).is_err());
    }
}
