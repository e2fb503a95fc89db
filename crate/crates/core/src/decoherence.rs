//! Decoherence exponents `χ = ½ ∬ G(t₁ - t₂) f(t₁) f(t₂) dt₁ dt₂`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{check_len, invalid, Error, Result};
use crate::noise::{trajectory_rng, NoiseCorrelation, OuModel, OuSampler};
use crate::quadrature::integrate_adaptive;
use crate::scalar::{Field, Real};
use crate::sequences::{sign_value, ModulationSequence, Scheme, Segment, SequenceSet};
use crate::stats::jackknife_of_mean;
use crate::walsh::WalshBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChiMethod {
    Bilinear,
    Quadrature,
    MonteCarlo,
    /// Extracted from a simulated or measured signal.
    Signal,
}

impl ChiMethod {
    pub fn name(self) -> &'static str {
        match self {
            ChiMethod::Bilinear => "bilinear",
            ChiMethod::Quadrature => "quadrature",
            ChiMethod::MonteCarlo => "mc",
            ChiMethod::Signal => "signal",
        }
    }
}

impl fmt::Display for ChiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChiMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilinear" => Ok(ChiMethod::Bilinear),
            "quadrature" => Ok(ChiMethod::Quadrature),
            "mc" | "monte-carlo" => Ok(ChiMethod::MonteCarlo),
            "signal" => Ok(ChiMethod::Signal),
            other => Err(invalid("chi method", format!("unknown method {other:?}"))),
        }
    }
}

/// Decay exponents for every member of a sequence set.
#[derive(Debug, Clone, PartialEq)]
pub struct DecaySet<T> {
    pub scheme: Scheme,
    pub total_time: T,
    pub values: Vec<T>,
    pub sigma: Option<Vec<T>>,
    /// `false` marks entries that could not be extracted.
    pub valid: Vec<bool>,
    pub method: ChiMethod,
    pub seed: Option<u64>,
}

impl<T: Real> DecaySet<T> {
    pub fn new(scheme: Scheme, total_time: T, values: Vec<T>, method: ChiMethod) -> Self {
        let valid = values.iter().map(|v| v.is_finite()).collect();
        Self {
            scheme,
            total_time,
            values,
            sigma: None,
            valid,
            method,
            seed: None,
        }
    }

    pub fn with_sigma(mut self, sigma: Vec<T>) -> Result<Self> {
        check_len("sigma chi", self.values.len(), sigma.len())?;
        self.sigma = Some(sigma);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn invalid_indices(&self) -> Vec<usize> {
        self.valid
            .iter()
            .enumerate()
            .filter(|(_, v)| !**v)
            .map(|(i, _)| i)
            .collect()
    }

    /// Whether `χ_0` is the largest entry.
    pub fn ramsey_is_largest(&self) -> bool {
        match self.values.first() {
            Some(&c0) => self.values.iter().all(|&v| v <= c0),
            None => false,
        }
    }
}

/// `L̄[j] = (1/N) Σ_k Ḡ[|(j ⊕ k) - k|]`, exactly.
pub fn logical_autocorrelation<S: Field>(gbar: &[S]) -> Result<Vec<S>> {
    let len = gbar.len();
    if !len.is_power_of_two() {
        return Err(invalid(
            "gbar",
            format!("length {len} is not a power of two"),
        ));
    }
    let scale = S::from_int(len as i64);
    Ok((0..len)
        .map(|j| {
            (0..len).fold(S::zero(), |acc, k| acc + gbar[(j ^ k).abs_diff(k)].clone())
                / scale.clone()
        })
        .collect())
}

/// `χ_m = (T²/2N²) Σ_{j,k} Ḡ[|j-k|] W[m,j] W[m,k]`.
pub fn chi_bilinear<S: Field>(
    basis: &WalshBasis,
    gbar: &[S],
    total_time: S,
    m: usize,
) -> Result<S> {
    check_len("gbar", basis.len(), gbar.len())?;
    if m >= basis.len() {
        return Err(crate::error::out_of_range("sequency m", m, "0..2^n"));
    }
    let len = basis.len();
    let mut acc = S::zero();
    for j in 0..len {
        let wj = basis.entry(m, j);
        for k in 0..len {
            let g = gbar[j.abs_diff(k)].clone();
            if wj == basis.entry(m, k) {
                acc += g;
            } else {
                acc -= g;
            }
        }
    }
    let n = S::from_int(len as i64);
    Ok(total_time.clone() * total_time * acc / (S::from_int(2) * n.clone() * n))
}

/// All `χ_m` through the logical autocorrelation: `χ = (T²/2N) W L̄`.
pub fn chi_bilinear_all<S: Field>(basis: &WalshBasis, gbar: &[S], total_time: S) -> Result<Vec<S>> {
    check_len("gbar", basis.len(), gbar.len())?;
    let l = logical_autocorrelation(gbar)?;
    let scale =
        total_time.clone() * total_time / (S::from_int(2) * S::from_int(basis.len() as i64));
    Ok(basis
        .transform(&l)?
        .into_iter()
        .map(|x| x * scale.clone())
        .collect())
}

// (1 - e^{-z}) / z
fn expm1_ratio<T: Real>(z: Complex<T>) -> Complex<T> {
    if z.norm() < T::lit(0.1) {
        let mut term = Complex::new(T::one(), T::zero());
        let mut acc = Complex::new(T::zero(), T::zero());
        let mut fact = T::one();
        for k in 0..14 {
            fact *= T::from_usize_lossy(k + 1);
            acc += term / fact;
            term *= -z;
        }
        acc
    } else {
        (Complex::new(T::one(), T::zero()) - (-z).exp()) / z
    }
}

// (z - 1 + e^{-z}) / z²
fn ramp<T: Real>(z: Complex<T>) -> Complex<T> {
    if z.norm() < T::lit(0.1) {
        let mut term = Complex::new(T::one(), T::zero());
        let mut acc = Complex::new(T::zero(), T::zero());
        let mut fact = T::one();
        for k in 0..14 {
            fact *= T::from_usize_lossy(k + 2);
            acc += term / fact;
            term *= -z;
        }
        acc
    } else {
        (z - Complex::new(T::one(), T::zero()) + (-z).exp()) / (z * z)
    }
}

/// Exact double integral of one OU kernel against piecewise-constant
/// modulation, `O(K)` in the number of segments.
fn ou_segment_sum<T: Real>(segments: &[Segment<T>], comp: &OuModel<T>) -> T {
    if comp.b2 == T::zero() {
        return T::zero();
    }
    let lambda = Complex::new(T::one() / comp.tau_c, -comp.omega_s);
    let two = T::lit(2.0);
    let mut acc = Complex::new(T::zero(), T::zero());
    // Σ_{b<a} s_b φ_b e^{-λ(start_a - end_b)}
    let mut tail = Complex::new(T::zero(), T::zero());
    for s in segments {
        let d = s.duration;
        let z = lambda * d;
        let sign = sign_value::<T>(s.sign);
        let phi = expm1_ratio(z) * d;
        acc = acc + ramp(z) * (two * d * d) + tail * phi * (two * sign);
        tail = tail * (-z).exp() + phi * sign;
    }
    comp.b2 * acc.re / two
}

/// `χ` by exact per-segment integration of every OU component.
pub fn chi_quadrature<T: Real, M: NoiseCorrelation<T> + ?Sized>(
    seq: &ModulationSequence<T>,
    model: &M,
) -> Result<T> {
    let merged = seq.merged();
    let chi: T = model
        .components()
        .iter()
        .map(|c| ou_segment_sum(merged.segments(), c))
        .sum();
    if !chi.is_finite() {
        return Err(invalid("model", "decay exponent is not finite"));
    }
    Ok(chi.max(T::zero()))
}

/// `χ` for an arbitrary even correlation `G` by reducing each segment pair
/// to a 1-D integral over the lag `u = t₁ - t₂` with the box-overlap weight.
pub fn chi_numerical<T: Real>(seq: &ModulationSequence<T>, g: impl Fn(T) -> T, rel_tol: T) -> T {
    let merged = seq.merged();
    let b = merged.boundaries();
    let segs = merged.segments();
    let mut total = T::zero();
    for a in 0..segs.len() {
        for c in 0..segs.len() {
            let (a0, a1) = (b[a], b[a + 1]);
            let (c0, c1) = (b[c], b[c + 1]);
            let weight = |u: T| (a1.min(c1 + u) - a0.max(c0 + u)).max(T::zero());
            let mut knots = vec![a0 - c1, a0 - c0, a1 - c1, a1 - c0];
            if knots[0] < T::zero() && knots[3] > T::zero() {
                knots.push(T::zero());
            }
            knots.sort_by(|x, y| x.partial_cmp(y).expect("finite knots"));
            let mut pair = T::zero();
            for w in knots.windows(2) {
                if w[1] > w[0] {
                    pair += integrate_adaptive(w[0], w[1], 16, 1024, rel_tol, |u| weight(u) * g(u));
                }
            }
            total += sign_value::<T>(segs[a].sign) * sign_value::<T>(segs[c].sign) * pair;
        }
    }
    total / T::lit(2.0)
}

/// Both sides of `χ_m = T² S̄(m,m)` for a Walsh sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameCheck<T> {
    pub chi: T,
    /// `S̄(m,m) = (1/T²) ∬_{t₂<t₁} G(t₁-t₂) w_m(t₁) w_m(t₂)`.
    pub sbar: T,
    pub total_time: T,
}

impl<T: Real> FrameCheck<T> {
    pub fn t2_sbar(&self) -> T {
        self.total_time * self.total_time * self.sbar
    }
}

/// Evaluates `S̄(m,m)` through the Walsh autocorrelation `c_m(u)`, which is
/// linear between multiples of `τ = T/N`, and compares with `χ_m`.
pub fn frame_diagonal_check<T: Real, M: NoiseCorrelation<T> + ?Sized>(
    basis: &WalshBasis,
    m: usize,
    total_time: T,
    model: &M,
    rel_tol: T,
) -> Result<FrameCheck<T>> {
    let seq = crate::sequences::walsh_sequence_from(basis, m, total_time)?;
    let chi = chi_quadrature(&seq, model)?;
    let len = basis.len();
    let tau = total_time / T::from_usize_lossy(len);
    let auto: Vec<T> = (0..=len)
        .map(|k| {
            let s: i64 = (0..len.saturating_sub(k))
                .map(|j| i64::from(basis.entry(m, j) * basis.entry(m, j + k)))
                .sum();
            tau * T::lit(s as f64)
        })
        .collect();
    let mut acc = T::zero();
    for k in 0..len {
        let lo = T::from_usize_lossy(k) * tau;
        let (c0, c1) = (auto[k], auto[k + 1]);
        if c0 == T::zero() && c1 == T::zero() {
            continue;
        }
        acc += integrate_adaptive(lo, lo + tau, 16, 2048, rel_tol, |u| {
            let x = (u - lo) / tau;
            (c0 + (c1 - c0) * x) * model.autocorrelation(u)
        });
    }
    Ok(FrameCheck {
        chi,
        sbar: acc / (total_time * total_time),
        total_time,
    })
}

/// Monte Carlo decay estimate for one sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T> {
    /// `⟨φ²⟩/2`.
    pub chi: T,
    /// Jackknife standard error of `chi`.
    pub sigma: T,
    pub mean_phase: T,
    pub sigma_mean_phase: T,
    /// `-ln⟨cos φ⟩` and its jackknife error.
    pub signal_chi: T,
    pub signal_sigma: T,
}

/// Step `τ_min / oversample` shared by all sequences.
pub fn mc_time_step<T: Real>(seqs: &[ModulationSequence<T>], oversample: usize) -> Result<T> {
    if oversample == 0 {
        return Err(invalid("oversample", "must be >= 1"));
    }
    let tmin = seqs
        .iter()
        .filter_map(|s| s.merged().min_duration())
        .fold(T::infinity(), |a, b| a.min(b));
    if !tmin.is_finite() {
        return Err(invalid("sequences", "no segments"));
    }
    Ok(tmin / T::from_usize_lossy(oversample))
}

fn sign_grid<T: Real>(seq: &ModulationSequence<T>, dt: T, steps: usize) -> Result<Vec<i8>> {
    let mut out = Vec::with_capacity(steps);
    for s in seq.segments() {
        let ratio = s.duration / dt;
        let count = ratio.round();
        if (ratio - count).abs() > T::lit(1e-6) * ratio.max(T::one()) || count < T::one() {
            return Err(invalid(
                "dt",
                format!("step {dt} does not divide segment duration {}", s.duration),
            ));
        }
        let count = count.to_usize().expect("finite step count");
        out.extend(std::iter::repeat_n(s.sign, count));
    }
    if out.len() != steps {
        return Err(invalid("sequences", "members do not share the total time"));
    }
    Ok(out)
}

fn fits_grid<T: Real>(seq: &ModulationSequence<T>, dt: T) -> bool {
    let steps = (seq.total_time() / dt).round().to_usize().unwrap_or(0);
    sign_grid(seq, dt, steps).is_ok()
}

/// Monte Carlo estimates for several sequences sharing `T`, driven by the
/// same trajectories. Phases use midpoint samples `ω((i+½)dt)`.
pub fn chi_monte_carlo_many<T: Real, M: NoiseCorrelation<T> + ?Sized>(
    seqs: &[ModulationSequence<T>],
    model: &M,
    reps: usize,
    dt: T,
    seed: u64,
) -> Result<Vec<McEstimate<T>>> {
    if reps < 2 {
        return Err(invalid("reps", "need at least two trajectories"));
    }
    if !(dt > T::zero()) {
        return Err(invalid("dt", format!("must be > 0, got {dt}")));
    }
    let Some(first) = seqs.first() else {
        return Ok(Vec::new());
    };
    let steps = (first.total_time() / dt).round().to_usize().unwrap_or(0);
    let grids = seqs
        .iter()
        .map(|s| sign_grid(s, dt, steps))
        .collect::<Result<Vec<_>>>()?;
    let comps = model.components();
    let half = dt / T::lit(2.0);
    let phases: Vec<Vec<T>> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = trajectory_rng(seed, rep);
            let mut sampler = OuSampler::new(comps, dt, half, &mut rng);
            let mut phi = vec![T::zero(); grids.len()];
            for i in 0..steps {
                if i > 0 {
                    sampler.advance(&mut rng);
                }
                let w = sampler.value();
                for (p, g) in phi.iter_mut().zip(&grids) {
                    if g[i] > 0 {
                        *p += w;
                    } else {
                        *p -= w;
                    }
                }
            }
            phi.into_iter().map(|p| p * dt).collect()
        })
        .collect();
    let two = T::lit(2.0);
    Ok((0..grids.len())
        .map(|s| {
            let phi: Vec<T> = phases.iter().map(|p| p[s]).collect();
            let sq: Vec<T> = phi.iter().map(|&p| p * p / two).collect();
            let cs: Vec<T> = phi.iter().map(|&p| p.cos()).collect();
            let (chi, sigma) = jackknife_of_mean(&sq, |m| m).expect("reps >= 2");
            let (mean_phase, sigma_mean_phase) = jackknife_of_mean(&phi, |m| m).expect("reps >= 2");
            let (signal_chi, signal_sigma) =
                jackknife_of_mean(&cs, |m| if m > T::zero() { -m.ln() } else { T::nan() })
                    .expect("reps >= 2");
            McEstimate {
                chi,
                sigma,
                mean_phase,
                sigma_mean_phase,
                signal_chi,
                signal_sigma,
            }
        })
        .collect())
}

/// Monte Carlo estimate for a single sequence; `dt` must divide every
/// segment.
pub fn chi_monte_carlo<T: Real, M: NoiseCorrelation<T> + ?Sized>(
    seq: &ModulationSequence<T>,
    model: &M,
    reps: usize,
    dt: T,
    seed: u64,
) -> Result<McEstimate<T>> {
    Ok(
        chi_monte_carlo_many(std::slice::from_ref(seq), model, reps, dt, seed)?
            .pop()
            .expect("one estimate"),
    )
}

/// How to evaluate a whole decay set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChiRequest {
    Bilinear,
    Quadrature,
    MonteCarlo {
        reps: usize,
        oversample: usize,
        seed: u64,
    },
}

/// `χ` for every member of `set`.
pub fn decay_set<T: Real, M: NoiseCorrelation<T> + ?Sized>(
    set: &SequenceSet<T>,
    model: &M,
    request: ChiRequest,
) -> Result<DecaySet<T>> {
    let t = set.total_time;
    match request {
        ChiRequest::Bilinear => {
            if set.scheme != Scheme::Walsh {
                return Err(Error::SchemeMismatch {
                    expected: "walsh",
                    got: set.scheme.name(),
                });
            }
            let basis = WalshBasis::new(set.order_exponent)?;
            let tau = t / T::from_usize_lossy(basis.len());
            let gbar = model.discretized_autocorrelation_vec(tau, basis.len())?;
            let chis = chi_bilinear_all(&basis, &gbar, t)?;
            Ok(DecaySet::new(set.scheme, t, chis, ChiMethod::Bilinear))
        }
        ChiRequest::Quadrature => {
            let chis = set
                .sequences
                .par_iter()
                .map(|s| chi_quadrature(s, model))
                .collect::<Result<Vec<_>>>()?;
            Ok(DecaySet::new(set.scheme, t, chis, ChiMethod::Quadrature))
        }
        ChiRequest::MonteCarlo {
            reps,
            oversample,
            seed,
        } => {
            let dt = mc_time_step(&set.sequences, oversample)?;
            let est = if set.sequences.iter().all(|s| fits_grid(s, dt)) {
                chi_monte_carlo_many(&set.sequences, model, reps, dt, seed)?
            } else {
                // no common grid (CPMG orders): each member gets its own step
                set.sequences
                    .iter()
                    .map(|s| {
                        chi_monte_carlo(
                            s,
                            model,
                            reps,
                            mc_time_step(std::slice::from_ref(s), oversample)?,
                            seed,
                        )
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            let chis = est.iter().map(|e| e.chi).collect();
            let sig = est.iter().map(|e| e.sigma).collect();
            let mut d =
                DecaySet::new(set.scheme, t, chis, ChiMethod::MonteCarlo).with_sigma(sig)?;
            d.seed = Some(seed);
            Ok(d)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::MixtureModel;
    use crate::sequences::{cpmg, ramsey, walsh_sequence, SequenceKind};
    use num_rational::Ratio;

    fn ou(b2: f64, tau_c: f64, omega_s: f64) -> OuModel<f64> {
        OuModel::new(b2, tau_c, omega_s).unwrap()
    }

    #[test]
    fn white_noise_is_modulation_independent() {
        for n in 0..=5 {
            let w = WalshBasis::new(n).unwrap();
            let len = w.len();
            let mut g = vec![0.0; len];
            g[0] = 0.7;
            for m in 0..len {
                let chi = chi_bilinear(&w, &g, 3.0, m).unwrap();
                assert!((chi - 0.7 * 9.0 / (2.0 * len as f64)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn double_sum_matches_logical_route() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for n in 0..=7 {
            let w = WalshBasis::new(n).unwrap();
            let g: Vec<f64> = (0..w.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let all = chi_bilinear_all(&w, &g, 2.5).unwrap();
            for (m, &c) in all.iter().enumerate() {
                let d = chi_bilinear(&w, &g, 2.5, m).unwrap();
                assert!((c - d).abs() < 1e-12, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn rational_bilinear_routes_agree_exactly() {
        let w = WalshBasis::new(4).unwrap();
        let g: Vec<Ratio<i64>> = (0..16).map(|k| Ratio::new(5 - k, 3 + k)).collect();
        let t = Ratio::new(7, 2);
        let all = chi_bilinear_all(&w, &g, t).unwrap();
        for (m, c) in all.iter().enumerate() {
            assert_eq!(*c, chi_bilinear(&w, &g, t, m).unwrap());
        }
    }

    #[test]
    fn closed_form_matches_numerical_pairs() {
        let models = [ou(0.3, 2.0, 0.0), ou(0.1, 5.0, 1.3)];
        let seqs = [
            ramsey(6.0).unwrap(),
            cpmg(3, 6.0).unwrap(),
            walsh_sequence(5, 3, 6.0).unwrap(),
        ];
        for m in &models {
            for s in &seqs {
                let a = chi_quadrature(s, m).unwrap();
                let b = chi_numerical(s, |u| m.autocorrelation(u), 1e-13);
                assert!((a - b).abs() <= 1e-10 * a.abs(), "{} {a} vs {b}", s.kind());
            }
        }
    }

    #[test]
    fn long_ramsey_limit() {
        let m = ou(0.2, 1.0, 0.0);
        let t = 50.0;
        let chi = chi_quadrature(&ramsey(t).unwrap(), &m).unwrap();
        let limit = t * m.b2 * m.tau_c;
        assert!((chi - limit).abs() < 0.02 * limit);
    }

    #[test]
    fn sign_flip_and_scaling() {
        let m = ou(0.2, 3.0, 0.8);
        let s = walsh_sequence(11, 4, 8.0).unwrap();
        let a = chi_quadrature(&s, &m).unwrap();
        let b = chi_quadrature(&s.negated(), &m).unwrap();
        assert!((a - b).abs() < 1e-15 * a.max(1.0));
        let c = chi_quadrature(&s, &m.scaled(3.0)).unwrap();
        assert!((c - 3.0 * a).abs() < 1e-13 * c);
    }

    #[test]
    fn silent_model_gives_zero() {
        let m = MixtureModel::<f64>::default();
        assert_eq!(chi_quadrature(&cpmg(4, 2.0).unwrap(), &m).unwrap(), 0.0);
        let mc = chi_monte_carlo(&cpmg(4, 2.0).unwrap(), &ou(0.0, 1.0, 0.0), 8, 0.25, 1).unwrap();
        assert_eq!(mc.chi, 0.0);
    }

    #[test]
    fn mc_rejects_bad_inputs() {
        let s = cpmg(4, 2.0).unwrap();
        let m = ou(1.0, 1.0, 0.0);
        assert!(chi_monte_carlo(&s, &m, 1, 0.25, 1).is_err());
        assert!(chi_monte_carlo(&s, &m, 10, 0.3, 1).is_err());
    }

    #[test]
    fn mc_is_reproducible() {
        let s = cpmg(2, 4.0).unwrap();
        let m = ou(0.5, 2.0, 0.4);
        let a = chi_monte_carlo(&s, &m, 64, 0.125, 9).unwrap();
        let b = chi_monte_carlo(&s, &m, 64, 0.125, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn frame_identity_small() {
        let w = WalshBasis::new(3).unwrap();
        let m = ou(0.003125, 4.0, 2.0 * std::f64::consts::PI * 0.3);
        for s in 0..8 {
            let f = frame_diagonal_check(&w, s, 16.0, &m, 1e-13).unwrap();
            assert!((f.chi - f.t2_sbar()).abs() <= 1e-9 * f.chi.max(1e-12));
        }
    }

    #[test]
    fn ramsey_frame_is_half_double_integral() {
        let w = WalshBasis::new(2).unwrap();
        let m = ou(1.0, 2.0, 0.0);
        let f = frame_diagonal_check(&w, 0, 4.0, &m, 1e-13).unwrap();
        let full = chi_numerical(&ramsey(4.0).unwrap(), |u| m.autocorrelation(u), 1e-13) * 2.0;
        assert!((f.sbar - 0.5 * full / 16.0).abs() < 1e-12);
    }

    #[test]
    fn bilinear_rejects_cpmg_sets() {
        let set = crate::sequences::cpmg_comparison_set(2, 4.0).unwrap();
        let r = decay_set(&set, &ou(1.0, 1.0, 0.0), ChiRequest::Bilinear);
        assert!(matches!(r, Err(Error::SchemeMismatch { .. })));
    }

    #[test]
    fn custom_sequence_with_odd_segments() {
        let s = ModulationSequence::new(
            vec![
                Segment {
                    duration: 0.7,
                    sign: 1,
                },
                Segment {
                    duration: 1.9,
                    sign: -1,
                },
                Segment {
                    duration: 0.4,
                    sign: 1,
                },
            ],
            SequenceKind::Custom,
        )
        .unwrap();
        let m = ou(0.4, 0.9, 2.2);
        let a = chi_quadrature(&s, &m).unwrap();
        let b = chi_numerical(&s, |u| m.autocorrelation(u), 1e-13);
        assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn single_precision_quadrature() {
        let m = OuModel::<f32>::new(0.2, 3.0, 0.0).unwrap();
        let s = walsh_sequence::<f32>(3, 3, 8.0).unwrap();
        let a = chi_quadrature(&s, &m).unwrap();
        let md = ou(0.2, 3.0, 0.0);
        let b = chi_quadrature(&walsh_sequence::<f64>(3, 3, 8.0).unwrap(), &md).unwrap();
        assert!((f64::from(a) - b).abs() < 1e-5 * b);
    }

    #[test]
    fn monte_carlo_on_cpmg_set_uses_own_grids() {
        let md = ou(1.0, 4.0, 0.0);
        let set = crate::sequences::cpmg_comparison_set(3, 16.0).unwrap();
        let req = ChiRequest::MonteCarlo {
            reps: 4000,
            oversample: 8,
            seed: 9,
        };
        let mc = decay_set(&set, &md, req).unwrap();
        let q = decay_set(&set, &md, ChiRequest::Quadrature).unwrap();
        let sig = mc.sigma.as_ref().unwrap();
        for k in 0..set.len() {
            assert!((mc.values[k] - q.values[k]).abs() < 5.0 * sig[k], "k={k}");
        }
        assert_eq!(decay_set(&set, &md, req).unwrap(), mc);
    }
}
