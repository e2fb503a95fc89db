//! Ornstein–Uhlenbeck dephasing noise.
//!
//! Units: times in µs, angular frequencies in rad/µs, noise power `b2` in
//! rad²/µs², spectra in rad²/µs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::quadrature::integrate_adaptive;
use crate::scalar::Real;

/// Anything with a stationary autocorrelation built from OU components.
pub trait NoiseCorrelation<T: Real>: Sync {
    /// `G(t)`; even in `t`.
    fn autocorrelation(&self, t: T) -> T;

    /// `S(ω) = ∫ G(t) e^{-iωt} dt`; even in `ω`.
    fn spectrum(&self, omega: T) -> T;

    /// The OU components whose correlations sum to `G`.
    fn components(&self) -> &[OuModel<T>];

    /// Bin-averaged autocorrelation `Ḡ[j]` for bin width `tau`.
    fn discretized_autocorrelation(&self, tau: T, lag: usize) -> Result<T> {
        let mut acc = T::zero();
        for c in self.components() {
            acc += c.discretized_autocorrelation(tau, lag)?;
        }
        Ok(acc)
    }

    /// `Ḡ[0..len]`.
    fn discretized_autocorrelation_vec(&self, tau: T, len: usize) -> Result<Vec<T>> {
        (0..len)
            .map(|j| self.discretized_autocorrelation(tau, j))
            .collect()
    }
}

/// `G(t) = b² e^{-|t|/τ_c} cos(ω_s t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuModel<T> {
    pub b2: T,
    pub tau_c: T,
    pub omega_s: T,
}

impl<T: Real> OuModel<T> {
    pub fn new(b2: T, tau_c: T, omega_s: T) -> Result<Self> {
        if !(b2 >= T::zero()) || !b2.is_finite() {
            return Err(invalid("b2", format!("must be finite and >= 0, got {b2}")));
        }
        if !(tau_c > T::zero()) {
            return Err(invalid("tau_c", format!("must be > 0, got {tau_c}")));
        }
        if !(omega_s >= T::zero()) || !omega_s.is_finite() {
            return Err(invalid(
                "omega_s",
                format!("must be finite and >= 0, got {omega_s}"),
            ));
        }
        Ok(Self { b2, tau_c, omega_s })
    }

    /// Same model with noise power scaled by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            b2: self.b2 * factor,
            ..*self
        }
    }

    /// Closed form for `ω_s = 0`; otherwise numerical integration of the bin
    /// average `(1/τ²) ∫∫ G(jτ + s₁ - s₂)`.
    pub fn discretized_autocorrelation(&self, tau: T, lag: usize) -> Result<T> {
        if !(tau > T::zero()) {
            return Err(invalid("tau", format!("bin width must be > 0, got {tau}")));
        }
        if self.omega_s == T::zero() {
            Ok(self.discretized_closed_form(tau, lag))
        } else {
            Ok(self.discretized_by_quadrature(tau, lag))
        }
    }

    fn discretized_closed_form(&self, tau: T, lag: usize) -> T {
        let x = tau / self.tau_c;
        if lag == 0 {
            self.b2 * ramp_factor(x)
        } else {
            let half = x / T::lit(2.0);
            let r = if half == T::zero() {
                T::one()
            } else {
                half.sinh() / half
            };
            self.autocorrelation(T::from_usize_lossy(lag) * tau) * r * r
        }
    }

    /// Reduces the bin-pair integral to one dimension with the triangular
    /// weight `τ - |s|` and integrates each half with Gauss–Legendre.
    pub fn discretized_by_quadrature(&self, tau: T, lag: usize) -> T {
        let centre = T::from_usize_lossy(lag) * tau;
        let tol = T::lit(1e-13).max(T::epsilon() * T::lit(64.0));
        let right = integrate_adaptive(T::zero(), tau, 16, 4096, tol, |s| {
            (tau - s) * self.autocorrelation(centre + s)
        });
        let left = if lag == 0 {
            right
        } else {
            integrate_adaptive(T::zero(), tau, 16, 4096, tol, |s| {
                (tau - s) * self.autocorrelation(centre - s)
            })
        };
        (left + right) / (tau * tau)
    }
}

/// `(2/x²)(x - 1 + e^{-x})` with a series near zero.
fn ramp_factor<T: Real>(x: T) -> T {
    if x < T::lit(1e-2) {
        let mut term = T::one();
        let mut acc = T::zero();
        // 2 Σ_{k>=0} (-x)^k / (k+2)!
        let mut fact = T::lit(2.0);
        for k in 0..10 {
            acc += term / fact;
            term *= -x;
            fact *= T::from_usize_lossy(k + 3);
        }
        acc * T::lit(2.0)
    } else {
        T::lit(2.0) * (x + (-x).exp_m1()) / (x * x)
    }
}

impl<T: Real> NoiseCorrelation<T> for OuModel<T> {
    fn autocorrelation(&self, t: T) -> T {
        if self.b2 == T::zero() {
            return T::zero();
        }
        let t = t.abs();
        let c = if self.omega_s == T::zero() {
            T::one()
        } else {
            (self.omega_s * t).cos()
        };
        self.b2 * (-t / self.tau_c).exp() * c
    }

    fn spectrum(&self, omega: T) -> T {
        let lor = |d: T| {
            let y = d * self.tau_c;
            self.b2 * self.tau_c / (T::one() + y * y)
        };
        lor(omega - self.omega_s) + lor(omega + self.omega_s)
    }

    fn components(&self) -> &[OuModel<T>] {
        std::slice::from_ref(self)
    }

    fn discretized_autocorrelation(&self, tau: T, lag: usize) -> Result<T> {
        OuModel::discretized_autocorrelation(self, tau, lag)
    }
}

/// Sum of independent OU components.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MixtureModel<T> {
    pub components: Vec<OuModel<T>>,
}

impl<T: Real> MixtureModel<T> {
    pub fn new(components: Vec<OuModel<T>>) -> Self {
        Self { components }
    }

    pub fn is_silent(&self) -> bool {
        self.components.iter().all(|c| c.b2 == T::zero())
    }
}

impl<T: Real> From<OuModel<T>> for MixtureModel<T> {
    fn from(m: OuModel<T>) -> Self {
        Self::new(vec![m])
    }
}

impl<T: Real> NoiseCorrelation<T> for MixtureModel<T> {
    fn autocorrelation(&self, t: T) -> T {
        self.components.iter().map(|c| c.autocorrelation(t)).sum()
    }

    fn spectrum(&self, omega: T) -> T {
        self.components.iter().map(|c| c.spectrum(omega)).sum()
    }

    fn components(&self) -> &[OuModel<T>] {
        &self.components
    }
}

/// Sampled noise realization `ω(i·dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrajectory<T> {
    pub dt: T,
    pub samples: Vec<T>,
    pub seed: u64,
    pub stream: u64,
}

impl<T: Real> NoiseTrajectory<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> T {
        T::from_usize_lossy(i) * self.dt
    }
}

/// Generator for trajectory `stream` of a seeded ensemble.
///
/// ChaCha8 keyed by the 64-bit seed, with the ensemble member selecting the
/// stream, so every member is reproducible in isolation and on any platform.
pub fn trajectory_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone)]
struct Component<T> {
    decay: T,
    kick: T,
    omega_s: T,
    x: T,
    y: T,
}

/// Exact-in-distribution OU update for a set of components.
///
/// Shifted components carry two independent zero-frequency processes and
/// emit `x cos(ω_s t) + y sin(ω_s t)`.
#[derive(Debug, Clone)]
pub struct OuSampler<T> {
    comps: Vec<Component<T>>,
    dt: T,
    t0: T,
    step: usize,
}

fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let v: f64 = rng.sample(StandardNormal);
    T::lit(v)
}

impl<T: Real> OuSampler<T> {
    /// Starts from the stationary distribution at time `t0`.
    pub fn new<R: Rng + ?Sized>(models: &[OuModel<T>], dt: T, t0: T, rng: &mut R) -> Self {
        let comps = models
            .iter()
            .map(|m| {
                let b = m.b2.sqrt();
                let decay = (-dt / m.tau_c).exp();
                let kick = b * (-(T::lit(-2.0) * dt / m.tau_c).exp_m1()).sqrt();
                let x = b * normal::<T, R>(rng);
                let y = if m.omega_s == T::zero() {
                    T::zero()
                } else {
                    b * normal::<T, R>(rng)
                };
                Component {
                    decay,
                    kick,
                    omega_s: m.omega_s,
                    x,
                    y,
                }
            })
            .collect();
        Self {
            comps,
            dt,
            t0,
            step: 0,
        }
    }

    /// Current value `ω(t0 + step·dt)`.
    pub fn value(&self) -> T {
        let t = self.t0 + T::from_usize_lossy(self.step) * self.dt;
        self.comps
            .iter()
            .map(|c| {
                if c.omega_s == T::zero() {
                    c.x
                } else {
                    let (s, co) = (c.omega_s * t).sin_cos();
                    c.x * co + c.y * s
                }
            })
            .sum()
    }

    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for c in &mut self.comps {
            c.x = c.x * c.decay + c.kick * normal::<T, R>(rng);
            if c.omega_s != T::zero() {
                c.y = c.y * c.decay + c.kick * normal::<T, R>(rng);
            }
        }
        self.step += 1;
    }
}

fn check_sampling<T: Real>(dt: T, steps: usize) -> Result<()> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(invalid("dt", format!("must be > 0, got {dt}")));
    }
    if steps == 0 {
        return Err(invalid("steps", "need at least one step"));
    }
    Ok(())
}

fn generate<T: Real, M: NoiseCorrelation<T> + ?Sized>(
    model: &M,
    dt: T,
    steps: usize,
    seed: u64,
    stream: u64,
) -> NoiseTrajectory<T> {
    let mut rng = trajectory_rng(seed, stream);
    let mut s = OuSampler::new(model.components(), dt, T::zero(), &mut rng);
    let mut samples = Vec::with_capacity(steps);
    for i in 0..steps {
        if i > 0 {
            s.advance(&mut rng);
        }
        samples.push(s.value());
    }
    NoiseTrajectory {
        dt,
        samples,
        seed,
        stream,
    }
}

/// `steps` samples at `t = 0, dt, ...`; member 0 of [`sample_ensemble`].
pub fn sample_trajectory<T: Real, M: NoiseCorrelation<T> + ?Sized>(
    model: &M,
    dt: T,
    steps: usize,
    seed: u64,
) -> Result<NoiseTrajectory<T>> {
    check_sampling(dt, steps)?;
    Ok(generate(model, dt, steps, seed, 0))
}

/// `reps` independent trajectories, generated in parallel.
pub fn sample_ensemble<T: Real, M: NoiseCorrelation<T> + ?Sized>(
    model: &M,
    dt: T,
    steps: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<NoiseTrajectory<T>>> {
    check_sampling(dt, steps)?;
    Ok((0..reps as u64)
        .into_par_iter()
        .map(|r| generate(model, dt, steps, seed, r))
        .collect())
}

/// Variance of the mean of `group` products `ω(t)ω(0)` for a zero-frequency
/// OU process: `b⁴(1 + e^{-2t/τ_c}) / N_g`.
pub fn correlation_estimator_variance<T: Real>(model: &OuModel<T>, t: T, group: usize) -> T {
    model.b2 * model.b2 * (T::one() + (T::lit(-2.0) * t.abs() / model.tau_c).exp())
        / T::from_usize_lossy(group)
}

/// Relative standard deviation of the finite-ensemble correlation estimate:
/// `sqrt((1 + e^{2|Δt|/τ_c}) / N)`.
pub fn correlation_relative_std<T: Real>(model: &OuModel<T>, lag: T, count: usize) -> T {
    ((T::one() + (T::lit(2.0) * lag.abs() / model.tau_c).exp()) / T::from_usize_lossy(count)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ou(b2: f64, tau_c: f64, omega_s: f64) -> OuModel<f64> {
        OuModel::new(b2, tau_c, omega_s).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(OuModel::new(-1.0, 1.0, 0.0).is_err());
        assert!(OuModel::new(1.0, 0.0, 0.0).is_err());
        assert!(OuModel::new(1.0, 1.0, -0.1).is_err());
        assert!(OuModel::new(f64::NAN, 1.0, 0.0).is_err());
        assert!(ou(1.0, 1.0, 0.0)
            .discretized_autocorrelation(0.0, 0)
            .is_err());
    }

    #[test]
    fn correlation_at_origin_and_symmetry() {
        let m = ou(0.003125, 4.0, 2.0 * std::f64::consts::PI * 0.3);
        assert_eq!(m.autocorrelation(0.0), 0.003125);
        for t in [0.1, 1.7, 5.0, 31.0] {
            assert_eq!(m.autocorrelation(t), m.autocorrelation(-t));
            assert_eq!(m.spectrum(t), m.spectrum(-t));
        }
    }

    #[test]
    fn lorentzian_peak() {
        let m = ou(0.5, 3.0, 0.0);
        assert!((m.spectrum(0.0) - 2.0 * 0.5 * 3.0).abs() < 1e-15);
    }

    #[test]
    fn bin_average_at_unit_ratio() {
        let m = ou(1.0, 2.0, 0.0);
        let g0 = m.discretized_autocorrelation(2.0, 0).unwrap();
        assert!((g0 - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((g0 - 0.735_758_882_342_884_6).abs() < 1e-12);
    }

    #[test]
    fn ramp_factor_series_matches_direct() {
        for x in [1e-2f64, 9.99e-3, 5e-3] {
            let direct = 2.0 * (x + (-x).exp_m1()) / (x * x);
            assert!((ramp_factor(x) - direct).abs() < 1e-11, "x={x}");
        }
        assert_eq!(ramp_factor(0.0f64), 1.0);
    }

    #[test]
    fn mixture_is_linear() {
        let a = ou(0.125, 80.0, 0.0);
        let b = ou(0.25, 16.0, 3.0);
        let mix = MixtureModel::new(vec![a, b]);
        for t in [0.0, 0.3, 2.0, 9.0] {
            assert_eq!(
                mix.autocorrelation(t),
                a.autocorrelation(t) + b.autocorrelation(t)
            );
            assert_eq!(mix.spectrum(t), a.spectrum(t) + b.spectrum(t));
        }
    }

    #[test]
    fn trajectories_are_reproducible() {
        let m = ou(1.0, 4.0, 1.0);
        let a = sample_trajectory(&m, 0.1, 50, 7).unwrap();
        let b = sample_trajectory(&m, 0.1, 50, 7).unwrap();
        let c = sample_trajectory(&m, 0.1, 50, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples, c.samples);
        let ens = sample_ensemble(&m, 0.1, 50, 3, 7).unwrap();
        assert_eq!(ens[0], a);
        assert_ne!(ens[1].samples, a.samples);
    }

    #[test]
    fn frozen_limit() {
        let m = ou(1.0, 1e9, 0.0);
        let tr = sample_trajectory(&m, 0.01, 1000, 3).unwrap();
        let w0 = tr.samples[0];
        assert!(tr
            .samples
            .iter()
            .all(|w| (w - w0).abs() < 1e-2 * w0.abs().max(1.0)));
    }

    #[test]
    fn silent_model_gives_zero_trajectory() {
        let m = ou(0.0, 1.0, 0.5);
        let tr = sample_trajectory(&m, 0.1, 20, 1).unwrap();
        assert!(tr.samples.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn invalid_sampling() {
        let m = ou(1.0, 1.0, 0.0);
        assert!(sample_trajectory(&m, 0.0, 10, 1).is_err());
        assert!(sample_trajectory(&m, 0.1, 0, 1).is_err());
    }

    #[test]
    fn single_precision_model() {
        let m = OuModel::<f32>::new(1.0, 2.0, 0.0).unwrap();
        let g = m.discretized_autocorrelation(2.0, 0).unwrap();
        assert!((g - 2.0 * (-1.0f32).exp()).abs() < 1e-6);
        let tr = sample_trajectory(&m, 0.1f32, 10, 1).unwrap();
        assert_eq!(tr.len(), 10);
    }
}
