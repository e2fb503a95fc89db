//! Inversion of decay exponents into autocorrelations and spectra.
//!
//! Walsh pipeline: `χ → L̄ = (2/T²) W χ → Ḡ = T_N⁻¹ D_N⁻¹ L̄`, then a
//! symmetric DFT for the spectrum. CPMG pipeline: descending harmonic solve
//! of the delta-comb relation for `S(ω_k)`, then a symmetric inverse DFT.

mod dft;
mod fit;
mod metrics;

pub use dft::{dft_symmetric, idft_symmetric};
pub use fit::{fit_ou, FitOptions, OuFit};
pub use metrics::{error_metrics, ErrorMetrics};

use crate::decoherence::DecaySet;
use crate::error::{check_len, invalid, Error, Result};
use crate::scalar::{Field, Real};
use crate::sequences::Scheme;
use crate::walsh::{DyadicDiagonal, ShufflingMatrix, WalshBasis};

/// Autocorrelation on a uniform lag grid starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Autocorr<T> {
    pub scheme: Scheme,
    pub times: Vec<T>,
    pub values: Vec<T>,
    pub sigma: Option<Vec<T>>,
    pub valid: Vec<bool>,
}

impl<T: Real> Autocorr<T> {
    /// Uniform grid `t_j = j·dt`.
    pub fn uniform(scheme: Scheme, dt: T, values: Vec<T>) -> Self {
        let times = (0..values.len())
            .map(|j| T::from_usize_lossy(j) * dt)
            .collect();
        let valid = vec![true; values.len()];
        Self {
            scheme,
            times,
            values,
            sigma: None,
            valid,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Logical (dyadic-lag) autocorrelation `L̄[v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalAutocorr<T> {
    pub values: Vec<T>,
}

/// Spectrum samples on a uniform frequency grid starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    pub scheme: Scheme,
    pub omegas: Vec<T>,
    pub values: Vec<T>,
    pub sigma: Option<Vec<T>>,
    pub valid: Vec<bool>,
}

impl<T: Real> Spectrum<T> {
    pub fn uniform(scheme: Scheme, d_omega: T, values: Vec<T>) -> Self {
        let omegas = (0..values.len())
            .map(|k| T::from_usize_lossy(k) * d_omega)
            .collect();
        let valid = vec![true; values.len()];
        Self {
            scheme,
            omegas,
            values,
            sigma: None,
            valid,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Indices with negative solved values.
    pub fn negative_indices(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v < T::zero())
            .map(|(i, _)| i)
            .collect()
    }

    /// Copy with `|S|`, mirroring how spectra are usually plotted.
    pub fn abs(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v = v.abs();
        }
        out
    }
}

/// Walsh frequency grid `ω_k = kπN/(T(N-1))`, `k = 0..N-1`.
pub fn walsh_frequencies<T: Real>(n_points: usize, total_time: T) -> Vec<T> {
    if n_points < 2 {
        return vec![T::zero(); n_points];
    }
    let n = T::from_usize_lossy(n_points);
    let step = T::PI() * n / (total_time * (n - T::one()));
    (0..n_points)
        .map(|k| T::from_usize_lossy(k) * step)
        .collect()
}

/// CPMG grid `ω_k = kπ/T`, `k = 0..N`.
pub fn cpmg_frequencies<T: Real>(order: usize, total_time: T) -> Vec<T> {
    (0..=order)
        .map(|k| T::from_usize_lossy(k) * T::PI() / total_time)
        .collect()
}

/// `L̄ = (2N/T²) W⁻¹ χ = (2/T²) W χ`.
pub fn chi_to_logical<S: Field>(basis: &WalshBasis, chis: &[S], total_time: S) -> Result<Vec<S>> {
    check_len("chi", basis.len(), chis.len())?;
    let scale = S::from_int(2) / (total_time.clone() * total_time);
    Ok(basis
        .transform(chis)?
        .into_iter()
        .map(|x| x * scale.clone())
        .collect())
}

/// `Ḡ[j] = Σ_k T_N⁻¹[j,k] D_N⁻¹[k] L̄[k]`.
pub fn logical_to_autocorr<S: Field>(shuffling: &ShufflingMatrix, logical: &[S]) -> Result<Vec<S>> {
    check_len("logical autocorrelation", shuffling.len(), logical.len())?;
    let d = DyadicDiagonal::new(shuffling.order_exponent());
    let scaled: Vec<S> = logical
        .iter()
        .enumerate()
        .map(|(k, l)| l.clone() * d.inverse_value::<S>(k))
        .collect();
    shuffling.apply_inverse(&scaled)
}

/// Exact Walsh inversion `χ → (L̄, Ḡ)` in any field.
pub fn walsh_reconstruct_exact<S: Field>(
    basis: &WalshBasis,
    shuffling: &ShufflingMatrix,
    chis: &[S],
    total_time: S,
) -> Result<(Vec<S>, Vec<S>)> {
    if basis.order_exponent() != shuffling.order_exponent() {
        return Err(invalid("shuffling", "order differs from the Walsh basis"));
    }
    let l = chi_to_logical(basis, chis, total_time)?;
    let g = logical_to_autocorr(shuffling, &l)?;
    Ok((l, g))
}

/// Dense `Ḡ = A χ` map, `A = T_N⁻¹ D_N⁻¹ (2/T²) W` (row-major).
pub fn walsh_linear_map<T: Real>(
    basis: &WalshBasis,
    shuffling: &ShufflingMatrix,
    total_time: T,
) -> Vec<T> {
    let len = basis.len();
    let d = DyadicDiagonal::new(basis.order_exponent());
    let scale = T::lit(2.0) / (total_time * total_time);
    // B = D⁻¹ W scaled, then A = T⁻¹ B
    let b: Vec<T> = (0..len * len)
        .map(|idx| {
            let (k, m) = (idx / len, idx % len);
            scale * d.inverse_value::<T>(k) * T::lit(f64::from(basis.entry(m, k)))
        })
        .collect();
    let mut a = vec![T::zero(); len * len];
    for j in 0..len {
        for k in 0..=j {
            let t = shuffling.inverse_get(j, k);
            if t == 0 {
                continue;
            }
            let tf = T::lit(f64::from(t));
            for m in 0..len {
                a[j * len + m] += tf * b[k * len + m];
            }
        }
    }
    a
}

/// Output of the Walsh pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct WalshReconstruction<T> {
    pub logical: LogicalAutocorr<T>,
    pub autocorr: Autocorr<T>,
}

fn require_scheme<T>(chis: &DecaySet<T>, scheme: Scheme) -> Result<()> {
    if chis.scheme != scheme {
        return Err(Error::SchemeMismatch {
            expected: scheme.name(),
            got: chis.scheme.name(),
        });
    }
    Ok(())
}

fn masked_values<T: Real>(chis: &DecaySet<T>) -> Vec<T> {
    chis.values
        .iter()
        .zip(&chis.valid)
        .map(|(&v, &ok)| if ok { v } else { T::zero() })
        .collect()
}

/// Walsh pipeline on a decay set. Invalid exponents contribute zero, and
/// every output point whose row of the linear map touches one is flagged.
pub fn walsh_reconstruct<T: Real>(chis: &DecaySet<T>) -> Result<WalshReconstruction<T>> {
    require_scheme(chis, Scheme::Walsh)?;
    let len = chis.len();
    if !len.is_power_of_two() {
        return Err(invalid(
            "chi",
            format!("walsh set length {len} is not a power of two"),
        ));
    }
    let n = len.trailing_zeros();
    let basis = WalshBasis::new(n)?;
    let shuffling = ShufflingMatrix::new(n)?;
    let values = masked_values(chis);
    let (l, g) = walsh_reconstruct_exact(&basis, &shuffling, &values, chis.total_time)?;
    let tau = chis.total_time / T::from_usize_lossy(len);
    let mut autocorr = Autocorr::uniform(Scheme::Walsh, tau, g);
    let needs_map = chis.sigma.is_some() || chis.valid.iter().any(|v| !v);
    if needs_map {
        let a = walsh_linear_map(&basis, &shuffling, chis.total_time);
        if let Some(sig) = &chis.sigma {
            autocorr.sigma = Some(propagate_rows(&a, len, sig, &chis.valid));
        }
        for j in 0..len {
            autocorr.valid[j] = (0..len).all(|m| chis.valid[m] || a[j * len + m] == T::zero());
        }
    }
    Ok(WalshReconstruction {
        logical: LogicalAutocorr { values: l },
        autocorr,
    })
}

/// `σ_i = sqrt(Σ_m (A[i,m] σ_m)²)` over valid inputs.
pub(crate) fn propagate_rows<T: Real>(a: &[T], cols: usize, sigma: &[T], valid: &[bool]) -> Vec<T> {
    a.chunks(cols)
        .map(|row| {
            row.iter()
                .zip(sigma)
                .zip(valid)
                .filter(|(_, &ok)| ok)
                .map(|((&x, &s), _)| (x * s) * (x * s))
                .sum::<T>()
                .sqrt()
        })
        .collect()
}

/// Delta-comb forward model for the comparison set:
/// `χ_0 = (T/2) S_0`, `χ_k = (4T/π²) Σ_{j≥0} S_{(2j+1)k}/(2j+1)²` with
/// harmonics above index `limit` dropped.
pub fn cpmg_forward<T: Real>(spectrum: &[T], total_time: T, limit: usize) -> Vec<T> {
    let len = spectrum.len();
    let pi2 = T::PI() * T::PI();
    (0..len)
        .map(|k| {
            if k == 0 {
                return total_time / T::lit(2.0) * spectrum[0];
            }
            let mut acc = T::zero();
            let mut h = 1usize;
            while h * k <= limit && h * k < len {
                let hf = T::from_usize_lossy(h);
                acc += spectrum[h * k] / (hf * hf);
                h += 2;
            }
            T::lit(4.0) * total_time / pi2 * acc
        })
        .collect()
}

/// Descending triangular solve of [`cpmg_forward`].
pub fn cpmg_solve<T: Real>(chis: &[T], total_time: T, limit: usize) -> Vec<T> {
    let len = chis.len();
    let mut s = vec![T::zero(); len];
    if len == 0 {
        return s;
    }
    let pi2 = T::PI() * T::PI();
    for k in (1..len).rev() {
        let mut v = pi2 / (T::lit(4.0) * total_time) * chis[k];
        let mut h = 3usize;
        while h * k <= limit && h * k < len {
            let hf = T::from_usize_lossy(h);
            v -= s[h * k] / (hf * hf);
            h += 2;
        }
        s[k] = v;
    }
    s[0] = T::lit(2.0) * chis[0] / total_time;
    s
}

/// Dense `S = M χ` map of [`cpmg_solve`] (row-major, `(N+1)²`).
pub fn cpmg_linear_map<T: Real>(len: usize, total_time: T, limit: usize) -> Vec<T> {
    let mut m = vec![T::zero(); len * len];
    let mut e = vec![T::zero(); len];
    for c in 0..len {
        e[c] = T::one();
        let col = cpmg_solve(&e, total_time, limit);
        for (r, v) in col.into_iter().enumerate() {
            m[r * len + c] = v;
        }
        e[c] = T::zero();
    }
    m
}

pub(crate) fn cpmg_limit(limit: Option<usize>, order: usize) -> Result<usize> {
    match limit {
        None => Ok(order),
        Some(l) if (1..=order).contains(&l) => Ok(l),
        Some(l) => Err(invalid(
            "limit",
            format!("must lie in 1..={order}, got {l}"),
        )),
    }
}

/// CPMG pipeline on a comparison decay set; `limit` is the highest sampled
/// harmonic index kept (defaults to `N`).
pub fn cpmg_reconstruct<T: Real>(chis: &DecaySet<T>, limit: Option<usize>) -> Result<Spectrum<T>> {
    require_scheme(chis, Scheme::CpmgComparison)?;
    let len = chis.len();
    if len < 2 || !(len - 1).is_power_of_two() {
        return Err(invalid(
            "chi",
            format!("comparison set length {len} is not 2^n + 1"),
        ));
    }
    let order = len - 1;
    let limit = cpmg_limit(limit, order)?;
    let values = masked_values(chis);
    let s = cpmg_solve(&values, chis.total_time, limit);
    let mut out = Spectrum::uniform(Scheme::CpmgComparison, T::PI() / chis.total_time, s);
    let needs_map = chis.sigma.is_some() || chis.valid.iter().any(|v| !v);
    if needs_map {
        let m = cpmg_linear_map(len, chis.total_time, limit);
        if let Some(sig) = &chis.sigma {
            out.sigma = Some(propagate_rows(&m, len, sig, &chis.valid));
        }
        for k in 0..len {
            out.valid[k] = (0..len).all(|c| chis.valid[c] || m[k * len + c] == T::zero());
        }
    }
    Ok(out)
}
