//! Qubit coupled to independent nuclear spins through conditional evolution,
//! on top of a classical OU mixture.
//!
//! With the qubit in `|0⟩` a nuclear spin precesses under
//! `H₀ = ω_L I_z`; in `|1⟩` under `H₁ = (ω_L - A_∥) I_z - A_⊥ I_x`. Each π pulse
//! swaps the two branches. The spin's contribution to the coherence is
//! `M = ½ Tr(U₀ U₁†)`.

use num_complex::Complex;

use crate::decoherence::{chi_quadrature, ChiMethod, DecaySet};
use crate::error::{invalid, Result};
use crate::noise::MixtureModel;
use crate::scalar::Real;
use crate::sequences::{ModulationSequence, SequenceSet};

/// 2×2 complex matrix, row-major.
pub type Mat2<T> = [[Complex<T>; 2]; 2];

fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

pub fn identity<T: Real>() -> Mat2<T> {
    [
        [c(T::one(), T::zero()), c(T::zero(), T::zero())],
        [c(T::zero(), T::zero()), c(T::one(), T::zero())],
    ]
}

pub fn mat_mul<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat2<T> {
    let mut out = [[c(T::zero(), T::zero()); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn dagger<T: Real>(a: &Mat2<T>) -> Mat2<T> {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

/// `exp(-i t h·σ/2)` for a spin-½ generator `h·I`, by the axis-angle form.
pub fn spin_rotation<T: Real>(h: [T; 3], t: T) -> Mat2<T> {
    let norm = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
    if norm == T::zero() {
        return identity();
    }
    let (s, co) = (norm * t / T::lit(2.0)).sin_cos();
    let (nx, ny, nz) = (h[0] / norm, h[1] / norm, h[2] / norm);
    // cos·I - i sin (n·σ)
    [
        [c(co, -s * nz), c(-s * ny, -s * nx)],
        [c(s * ny, -s * nx), c(co, s * nz)],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuclearSpin<T> {
    /// Larmor angular frequency (rad/µs), sign allowed.
    pub omega_l: T,
    pub a_par: T,
    pub a_perp: T,
}

impl<T: Real> NuclearSpin<T> {
    pub fn new(omega_l: T, a_par: T, a_perp: T) -> Result<Self> {
        if !(a_perp >= T::zero()) {
            return Err(invalid("a_perp", format!("must be >= 0, got {a_perp}")));
        }
        let s = Self {
            omega_l,
            a_par,
            a_perp,
        };
        if !(s.omega_tilde() > T::zero()) || !s.omega_tilde().is_finite() {
            return Err(invalid(
                "nuclear spin",
                "conditional precession frequency must be > 0",
            ));
        }
        Ok(s)
    }

    /// `ω̃ = sqrt((ω_L - A_∥)² + A_⊥²)`.
    pub fn omega_tilde(&self) -> T {
        let d = self.omega_l - self.a_par;
        (d * d + self.a_perp * self.a_perp).sqrt()
    }

    fn h0(&self) -> [T; 3] {
        [T::zero(), T::zero(), self.omega_l]
    }

    fn h1(&self) -> [T; 3] {
        [-self.a_perp, T::zero(), self.omega_l - self.a_par]
    }

    /// Spacing `τ = 2π / (|ω_L| + ω̃)` at which CPMG pulses resonate with
    /// this spin.
    pub fn resonant_spacing(&self) -> T {
        T::lit(2.0) * T::PI() / (self.omega_l.abs() + self.omega_tilde())
    }
}

/// Branch propagators `(U₀, U₁)`: `U₀` starts with the qubit in `|0⟩`, so it
/// sees `H₀` on `+1` segments and `H₁` on `-1` segments; `U₁` the reverse.
pub fn conditional_propagators<T: Real>(
    spin: &NuclearSpin<T>,
    seq: &ModulationSequence<T>,
) -> (Mat2<T>, Mat2<T>) {
    let mut u0 = identity();
    let mut u1 = identity();
    for s in seq.merged().segments() {
        let r0 = spin_rotation(spin.h0(), s.duration);
        let r1 = spin_rotation(spin.h1(), s.duration);
        if s.sign > 0 {
            u0 = mat_mul(&r0, &u0);
            u1 = mat_mul(&r1, &u1);
        } else {
            u0 = mat_mul(&r1, &u0);
            u1 = mat_mul(&r0, &u1);
        }
    }
    (u0, u1)
}

/// `M = ½ Tr(U₀ U₁†)`.
pub fn coherence_factor<T: Real>(spin: &NuclearSpin<T>, seq: &ModulationSequence<T>) -> Complex<T> {
    let (u0, u1) = conditional_propagators(spin, seq);
    let p = mat_mul(&u0, &dagger(&u1));
    (p[0][0] + p[1][1]) / T::lit(2.0)
}

/// Closed form of `M` for CPMG with an even number of pulses spaced `tau`.
pub fn cpmg_coherence_closed_form<T: Real>(
    spin: &NuclearSpin<T>,
    pulses: usize,
    tau: T,
) -> Result<T> {
    if !pulses.is_multiple_of(2) {
        return Err(invalid(
            "pulses",
            "closed form requires an even pulse count",
        ));
    }
    let two = T::lit(2.0);
    let wt = spin.omega_tilde();
    let phi0 = spin.omega_l * tau / two;
    let phi1 = wt * tau / two;
    let cos_v = (phi0.cos() * phi1.cos()
        - (spin.omega_l - spin.a_par) / wt * phi0.sin() * phi1.sin())
    .max(-T::one())
    .min(T::one());
    let varphi = cos_v.acos();
    let ratio = spin.a_perp / wt;
    let half_v = (varphi / two).cos();
    let n = T::from_usize_lossy(pulses);
    let core = (n * varphi / two).sin();
    let s0 = (phi0 / two).sin();
    let s1 = (phi1 / two).sin();
    Ok(T::one() - two * ratio * ratio * s0 * s0 * s1 * s1 * core * core / (half_v * half_v))
}

/// Independent nuclear spins plus a classical OU mixture.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QcBathModel<T> {
    pub spins: Vec<NuclearSpin<T>>,
    pub classical: MixtureModel<T>,
}

impl<T: Real> QcBathModel<T> {
    /// `Π_j M_j` over all spins.
    pub fn coherence_product(&self, seq: &ModulationSequence<T>) -> Complex<T> {
        self.spins
            .iter()
            .map(|s| coherence_factor(s, seq))
            .fold(c(T::one(), T::zero()), |a, b| a * b)
    }
}

/// `S = ½[1 + e^{-χ} Re Π_j M_j]` for a given classical `χ`.
pub fn qc_signal_with_chi<T: Real>(
    bath: &QcBathModel<T>,
    seq: &ModulationSequence<T>,
    chi: T,
) -> T {
    let m = bath.coherence_product(seq);
    (T::one() + (-chi).exp() * m.re) / T::lit(2.0)
}

/// Signal with the classical `χ` from exact quadrature.
pub fn qc_signal<T: Real>(bath: &QcBathModel<T>, seq: &ModulationSequence<T>) -> Result<T> {
    let chi = chi_quadrature(seq, &bath.classical)?;
    Ok(qc_signal_with_chi(bath, seq, chi))
}

/// `χ̂ = -ln(2S - 1)`, or `None` once the signal has collapsed.
pub fn chi_from_signal<T: Real>(signal: T) -> Option<T> {
    let arg = T::lit(2.0) * signal - T::one();
    if arg > T::zero() {
        Some(-arg.ln())
    } else {
        None
    }
}

/// Signals and effective exponents for every member of a set.
#[derive(Debug, Clone, PartialEq)]
pub struct QcSignals<T> {
    pub signals: Vec<T>,
    pub chis: DecaySet<T>,
}

pub fn qc_signals<T: Real>(bath: &QcBathModel<T>, set: &SequenceSet<T>) -> Result<QcSignals<T>> {
    let signals = set
        .sequences
        .iter()
        .map(|s| qc_signal(bath, s))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<T> = signals
        .iter()
        .map(|&s| chi_from_signal(s).unwrap_or(T::nan()))
        .collect();
    let chis = DecaySet::new(set.scheme, set.total_time, values, ChiMethod::Signal);
    Ok(QcSignals { signals, chis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::OuModel;
    use crate::sequences::{cpmg, ramsey, walsh_sequence, Segment, SequenceKind};

    fn unitarity_defect(u: &Mat2<f64>) -> f64 {
        let p = mat_mul(u, &dagger(u));
        let id = identity::<f64>();
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((p[i][j] - id[i][j]).norm());
            }
        }
        worst
    }

    #[test]
    fn propagators_are_unitary() {
        let spin = NuclearSpin::new(-3.1, 0.3, 0.6).unwrap();
        for m in [0, 3, 7, 12] {
            let s = walsh_sequence(m, 4, 9.0).unwrap();
            let (u0, u1) = conditional_propagators(&spin, &s);
            assert!(unitarity_defect(&u0) < 1e-12);
            assert!(unitarity_defect(&u1) < 1e-12);
        }
    }

    #[test]
    fn commuting_limit() {
        let spin = NuclearSpin::new(2.0, 0.0, 0.0).unwrap();
        let m = coherence_factor(&spin, &cpmg(6, 5.0).unwrap());
        assert!((m - c(1.0, 0.0)).norm() < 1e-14);
        let spin = NuclearSpin::new(2.0, 0.4, 0.0).unwrap();
        let (u0, u1) = conditional_propagators(&spin, &cpmg(3, 5.0).unwrap());
        for u in [u0, u1] {
            assert!(u[0][1].norm() < 1e-15 && u[1][0].norm() < 1e-15);
        }
    }

    #[test]
    fn zero_duration_is_identity() {
        let spin = NuclearSpin::new(1.0, 0.1, 0.2).unwrap();
        let (u0, u1) = conditional_propagators(&spin, &ModulationSequence::empty());
        assert_eq!(u0, identity());
        assert_eq!(u1, identity());
    }

    #[test]
    fn single_pulse_branch_assignment() {
        let spin = NuclearSpin::new(1.7, 0.2, 0.5).unwrap();
        let s = ModulationSequence::new(
            vec![
                Segment {
                    duration: 0.8,
                    sign: 1,
                },
                Segment {
                    duration: 1.3,
                    sign: -1,
                },
            ],
            SequenceKind::Custom,
        )
        .unwrap();
        let (u0, u1) = conditional_propagators(&spin, &s);
        let e0 = mat_mul(
            &spin_rotation(spin.h1(), 1.3),
            &spin_rotation(spin.h0(), 0.8),
        );
        let e1 = mat_mul(
            &spin_rotation(spin.h0(), 1.3),
            &spin_rotation(spin.h1(), 0.8),
        );
        for i in 0..2 {
            for j in 0..2 {
                assert!((u0[i][j] - e0[i][j]).norm() < 1e-15);
                assert!((u1[i][j] - e1[i][j]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn two_spin_factorization() {
        let a = NuclearSpin::new(2.0, 0.1, 0.3).unwrap();
        let b = NuclearSpin::new(-1.5, -0.2, 0.1).unwrap();
        let s = walsh_sequence(5, 3, 4.0).unwrap();
        let bath = QcBathModel {
            spins: vec![a, b],
            classical: MixtureModel::default(),
        };
        let p = bath.coherence_product(&s);
        let q = coherence_factor(&a, &s) * coherence_factor(&b, &s);
        assert_eq!(p, q);
    }

    #[test]
    fn coherence_is_bounded() {
        let spin = NuclearSpin::new(-0.7, 0.3, 0.9).unwrap();
        for m in 0..16 {
            let v = coherence_factor(&spin, &walsh_sequence(m, 4, 11.0).unwrap());
            assert!(v.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_products() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let tp = 2.0 * std::f64::consts::PI;
        for _ in 0..200 {
            let wl =
                tp * rng.random_range(0.2..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let spin =
                NuclearSpin::new(wl, rng.random_range(-0.3..0.3), rng.random_range(0.0..0.5))
                    .unwrap();
            let pulses = 2 * rng.random_range(1..20usize);
            let t = rng.random_range(0.5..30.0);
            let direct = coherence_factor(&spin, &cpmg(pulses, t).unwrap());
            let closed = cpmg_coherence_closed_form(&spin, pulses, t / pulses as f64).unwrap();
            assert!(
                (direct.re - closed).abs() < 1e-10,
                "{} vs {closed}",
                direct.re
            );
            assert!(direct.im.abs() < 1e-10);
        }
    }

    // Rotation axes of one CPMG period, read off the numerical product and
    // compared with the closed-form inner product.
    #[test]
    fn period_axes_inner_product() {
        let spin = NuclearSpin::new(-2.7, 0.35, 0.8).unwrap();
        for &tau in &[0.3, 1.1, 2.9] {
            let half = spin_rotation(spin.h0(), tau / 2.0);
            let mid = spin_rotation(spin.h1(), tau);
            let v0 = mat_mul(&half, &mat_mul(&mid, &half));
            let half1 = spin_rotation(spin.h1(), tau / 2.0);
            let mid1 = spin_rotation(spin.h0(), tau);
            let v1 = mat_mul(&half1, &mat_mul(&mid1, &half1));
            let axis = |v: &Mat2<f64>| [v[0][1].im, v[0][1].re, v[0][0].im];
            let (a, b) = (axis(&v0), axis(&v1));
            let cos_v = v0[0][0].re;
            assert!((cos_v - v1[0][0].re).abs() < 1e-14);
            let sin2 = 1.0 - cos_v * cos_v;
            let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / sin2;

            let wt = spin.omega_tilde();
            let (p0, p1) = (spin.omega_l * tau / 2.0, wt * tau / 2.0);
            let r = spin.a_perp / wt;
            let expect = 1.0
                - r * r * (1.0 - p0.cos()) * (1.0 - p1.cos())
                    / (1.0 + p0.cos() * p1.cos()
                        - (spin.omega_l - spin.a_par) / wt * p0.sin() * p1.sin());
            assert!((dot - expect).abs() < 1e-10, "tau={tau}: {dot} vs {expect}");
        }
    }

    #[test]
    fn resonant_cpmg_rotates_conditionally() {
        let tp = 2.0 * std::f64::consts::PI;
        let spin = NuclearSpin::new(-tp * 0.5, tp * 0.004, tp * 0.003).unwrap();
        let tau = spin.resonant_spacing();
        let wt = spin.omega_tilde();
        for pulses in [8usize, 16, 32, 64] {
            let m = coherence_factor(&spin, &cpmg(pulses, tau * pulses as f64).unwrap()).re;
            let approx = (pulses as f64 * spin.a_perp / wt).cos();
            assert!((m - approx).abs() < 5e-3, "N={pulses}: {m} vs {approx}");
        }
    }

    #[test]
    fn closed_form_rejects_odd() {
        let spin = NuclearSpin::new(1.0, 0.0, 0.1).unwrap();
        assert!(cpmg_coherence_closed_form(&spin, 3, 1.0).is_err());
    }

    #[test]
    fn classical_only_signal_inverts() {
        let bath = QcBathModel {
            spins: vec![],
            classical: OuModel::new(0.2f64, 3.0, 0.0).unwrap().into(),
        };
        let s = ramsey(2.0).unwrap();
        let chi: f64 = chi_quadrature(&s, &bath.classical).unwrap();
        let sig = qc_signal(&bath, &s).unwrap();
        assert!((sig - (1.0 + (-chi).exp()) / 2.0).abs() < 1e-15);
        assert!((chi_from_signal(sig).unwrap() - chi).abs() < 1e-12);
        let empty = QcBathModel::<f64>::default();
        assert_eq!(qc_signal(&empty, &s).unwrap(), 1.0);
    }

    #[test]
    fn collapsed_signal_is_invalid() {
        assert!(chi_from_signal(0.5f64).is_none());
        assert!(chi_from_signal(0.3f64).is_none());
    }

    #[test]
    fn rejects_bad_spin() {
        assert!(NuclearSpin::new(1.0, 0.0, -0.1).is_err());
        assert!(NuclearSpin::new(1.0, 1.0, 0.0).is_err());
    }
}
