//! Symmetric-extension DFTs between an even autocorrelation on
//! `t_j = j·Δt (j = 0..J)` and its spectrum on `ω_k = kπ/(JΔt) (k = 0..J)`.
//!
//! Forward: `S_k = Δt Σ_{j=-J}^{J} G_|j| e^{-iπkj/J}`.
//! Inverse: `G_j = (Δω/2π) Σ_{k=-K}^{K} S_|k| e^{iπkj/K}` on `t_j = jπ/(KΔω)`.

use super::{Autocorr, Spectrum};
use crate::error::{Error, Result};
use crate::scalar::Real;

fn uniform_step<T: Real>(grid: &[T], what: &str) -> Result<T> {
    if grid.len() < 2 {
        return Err(Error::NonUniformGrid(format!(
            "{what} needs at least two points"
        )));
    }
    if grid[0] != T::zero() {
        return Err(Error::NonUniformGrid(format!("{what} must start at zero")));
    }
    let step = grid[1] - grid[0];
    if !(step > T::zero()) {
        return Err(Error::NonUniformGrid(format!("{what} is not increasing")));
    }
    let tol = T::lit(1e-9);
    for (j, &x) in grid.iter().enumerate() {
        let expect = T::from_usize_lossy(j) * step;
        if (x - expect).abs() > tol * expect.abs().max(step) {
            return Err(Error::NonUniformGrid(format!(
                "{what} point {j} is off the uniform grid"
            )));
        }
    }
    Ok(step)
}

/// `Σ_{j=-J}^{J} x_|j| e^{sign·iπkj/J}` for `k = 0..J`, via a `2J`-entry
/// phase table. The imaginary parts cancel by symmetry; a residue beyond
/// rounding means the input was not what it claimed to be.
fn symmetric_sum<T: Real>(x: &[T], sign: T) -> Vec<T> {
    let j_max = x.len() - 1;
    let period = 2 * j_max;
    let (cos_t, sin_t): (Vec<T>, Vec<T>) = (0..period)
        .map(|p| {
            let a = T::PI() * T::from_usize_lossy(p) / T::from_usize_lossy(j_max);
            let (s, c) = a.sin_cos();
            (c, sign * s)
        })
        .unzip();
    let abs_sum: T = x.iter().map(|v| v.abs()).sum();
    (0..=j_max)
        .map(|k| {
            let mut re = x[0];
            let mut im = T::zero();
            for (j, &v) in x.iter().enumerate().skip(1) {
                let p = (k * j) % period;
                let q = (period - p) % period;
                re += v * (cos_t[p] + cos_t[q]);
                im += v * (sin_t[p] + sin_t[q]);
            }
            debug_assert!(
                im.abs()
                    <= T::lit(1e3)
                        * T::epsilon()
                        * T::lit(2.0)
                        * abs_sum.max(T::min_positive_value()),
                "symmetric DFT left an imaginary residue"
            );
            re
        })
        .collect()
}

/// Spectrum of an even autocorrelation.
pub fn dft_symmetric<T: Real>(g: &Autocorr<T>) -> Result<Spectrum<T>> {
    let dt = uniform_step(&g.times, "autocorrelation grid")?;
    let j_max = g.len() - 1;
    let d_omega = T::PI() / (T::from_usize_lossy(j_max) * dt);
    let values = symmetric_sum(&g.values, -T::one())
        .into_iter()
        .map(|v| v * dt)
        .collect();
    let mut s = Spectrum::uniform(g.scheme, d_omega, values);
    if g.valid.iter().any(|v| !v) {
        s.valid = vec![false; s.len()];
    }
    Ok(s)
}

/// Autocorrelation of an even spectrum.
pub fn idft_symmetric<T: Real>(s: &Spectrum<T>) -> Result<Autocorr<T>> {
    let d_omega = uniform_step(&s.omegas, "spectrum grid")?;
    let k_max = s.len() - 1;
    let dt = T::PI() / (T::from_usize_lossy(k_max) * d_omega);
    let scale = d_omega / (T::lit(2.0) * T::PI());
    let values = symmetric_sum(&s.values, T::one())
        .into_iter()
        .map(|v| v * scale)
        .collect();
    let mut g = Autocorr::uniform(s.scheme, dt, values);
    if s.valid.iter().any(|v| !v) {
        g.valid = vec![false; g.len()];
    }
    Ok(g)
}
