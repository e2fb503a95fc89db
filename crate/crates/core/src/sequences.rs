//! Piecewise ±1 modulation functions produced by instantaneous π pulses.

use std::fmt;

use crate::error::{invalid, out_of_range, Result};
use crate::scalar::Real;
use crate::walsh::WalshBasis;

/// One free-evolution interval with a fixed toggling-frame sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub duration: T,
    pub sign: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SequenceKind {
    Ramsey,
    Walsh { m: usize, n: u32 },
    Cpmg { pulses: usize },
    Pdd { pulses: usize },
    Custom,
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceKind::Ramsey => write!(f, "ramsey"),
            SequenceKind::Walsh { m, n } => write!(f, "walsh({m},{n})"),
            SequenceKind::Cpmg { pulses } => write!(f, "cpmg({pulses})"),
            SequenceKind::Pdd { pulses } => write!(f, "pdd({pulses})"),
            SequenceKind::Custom => write!(f, "custom"),
        }
    }
}

/// `f(t)` on `[0, T]` as ordered signed segments.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationSequence<T> {
    total_time: T,
    segments: Vec<Segment<T>>,
    kind: SequenceKind,
}

impl<T: Real> ModulationSequence<T> {
    pub fn new(segments: Vec<Segment<T>>, kind: SequenceKind) -> Result<Self> {
        let mut total = T::zero();
        for s in &segments {
            if !(s.duration > T::zero()) || !s.duration.is_finite() {
                return Err(invalid(
                    "segment duration",
                    format!("must be > 0, got {}", s.duration),
                ));
            }
            if s.sign != 1 && s.sign != -1 {
                return Err(invalid(
                    "segment sign",
                    format!("must be +1 or -1, got {}", s.sign),
                ));
            }
            total += s.duration;
        }
        Ok(Self {
            total_time: total,
            segments,
            kind,
        })
    }

    /// Zero-length sequence (identity evolution).
    pub fn empty() -> Self {
        Self {
            total_time: T::zero(),
            segments: Vec::new(),
            kind: SequenceKind::Custom,
        }
    }

    pub fn total_time(&self) -> T {
        self.total_time
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    /// Number of sign flips between adjacent segments.
    pub fn pulse_count(&self) -> usize {
        self.segments
            .windows(2)
            .filter(|w| w[0].sign != w[1].sign)
            .count()
    }

    /// Segment start times plus the final end time.
    pub fn boundaries(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        let mut t = T::zero();
        out.push(t);
        for s in &self.segments {
            t += s.duration;
            out.push(t);
        }
        out
    }

    /// Pulse times (boundaries where the sign flips).
    pub fn pulse_times(&self) -> Vec<T> {
        let b = self.boundaries();
        self.segments
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0].sign != w[1].sign)
            .map(|(i, _)| b[i + 1])
            .collect()
    }

    /// Adjacent segments with equal sign fused.
    pub fn merged(&self) -> Self {
        let mut out: Vec<Segment<T>> = Vec::with_capacity(self.segments.len());
        for s in &self.segments {
            match out.last_mut() {
                Some(last) if last.sign == s.sign => last.duration += s.duration,
                _ => out.push(*s),
            }
        }
        Self {
            total_time: self.total_time,
            segments: out,
            kind: self.kind,
        }
    }

    /// Sequence with every sign reversed.
    pub fn negated(&self) -> Self {
        Self {
            total_time: self.total_time,
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    duration: s.duration,
                    sign: -s.sign,
                })
                .collect(),
            kind: SequenceKind::Custom,
        }
    }

    /// `f(t)`; right-continuous, `0` outside `[0, T)`.
    pub fn sign_at(&self, t: T) -> i8 {
        if t < T::zero() {
            return 0;
        }
        let mut start = T::zero();
        for s in &self.segments {
            if t < start + s.duration {
                return s.sign;
            }
            start += s.duration;
        }
        0
    }

    /// Shortest segment duration.
    pub fn min_duration(&self) -> Option<T> {
        self.segments
            .iter()
            .map(|s| s.duration)
            .fold(None, |acc, d| Some(acc.map_or(d, |a: T| a.min(d))))
    }

    /// `∫ f(t) dt`.
    pub fn area(&self) -> T {
        self.segments
            .iter()
            .map(|s| s.duration * sign_value::<T>(s.sign))
            .sum()
    }

    /// Complex finite-time transform `F(ω) = ∫_0^T f(t) e^{iωt} dt` as
    /// `(re, im)`.
    pub fn fourier(&self, omega: T) -> (T, T) {
        let two = T::lit(2.0);
        let mut re = T::zero();
        let mut im = T::zero();
        let mut start = T::zero();
        for s in &self.segments {
            let d = s.duration;
            let centre = start + d / two;
            let x = omega * d / two;
            let sinc = if x.abs() < T::lit(1e-4) {
                T::one() - x * x / T::lit(6.0)
            } else {
                x.sin() / x
            };
            let amp = sign_value::<T>(s.sign) * d * sinc;
            let (sn, cs) = (omega * centre).sin_cos();
            re += amp * cs;
            im += amp * sn;
            start += d;
        }
        (re, im)
    }

    /// `|F(ω)|²` in µs².
    pub fn filter_function(&self, omega: T) -> T {
        let (re, im) = self.fourier(omega);
        re * re + im * im
    }
}

pub(crate) fn sign_value<T: Real>(sign: i8) -> T {
    if sign < 0 {
        -T::one()
    } else {
        T::one()
    }
}

fn check_time<T: Real>(total_time: T) -> Result<()> {
    if !(total_time > T::zero()) || !total_time.is_finite() {
        return Err(invalid(
            "T",
            format!("total time must be > 0, got {total_time}"),
        ));
    }
    Ok(())
}

/// Free evolution for `T`.
pub fn ramsey<T: Real>(total_time: T) -> Result<ModulationSequence<T>> {
    check_time(total_time)?;
    ModulationSequence::new(
        vec![Segment {
            duration: total_time,
            sign: 1,
        }],
        SequenceKind::Ramsey,
    )
}

/// Sequency-`m` Walsh modulation: `N` bins of `T/N` with signs `W[m, j]`.
pub fn walsh_sequence<T: Real>(m: usize, n: u32, total_time: T) -> Result<ModulationSequence<T>> {
    let basis = WalshBasis::new(n)?;
    walsh_sequence_from(&basis, m, total_time)
}

pub fn walsh_sequence_from<T: Real>(
    basis: &WalshBasis,
    m: usize,
    total_time: T,
) -> Result<ModulationSequence<T>> {
    check_time(total_time)?;
    if m >= basis.len() {
        return Err(out_of_range("sequency m", m, "0..2^n"));
    }
    let len = basis.len();
    let d = total_time / T::from_usize_lossy(len);
    let segments = (0..len)
        .map(|j| Segment {
            duration: d,
            sign: basis.entry(m, j),
        })
        .collect();
    ModulationSequence::new(
        segments,
        SequenceKind::Walsh {
            m,
            n: basis.order_exponent(),
        },
    )
}

/// CPMG with `pulses` equally spaced pulses filling `T`: interval
/// `τ = T/pulses`, half intervals at both ends.
pub fn cpmg<T: Real>(pulses: usize, total_time: T) -> Result<ModulationSequence<T>> {
    check_time(total_time)?;
    if pulses == 0 {
        return ramsey(total_time);
    }
    let tau = total_time / T::from_usize_lossy(pulses);
    let half = tau / T::lit(2.0);
    let mut segments = Vec::with_capacity(pulses + 1);
    let mut sign = 1i8;
    segments.push(Segment {
        duration: half,
        sign,
    });
    for _ in 1..pulses {
        sign = -sign;
        segments.push(Segment {
            duration: tau,
            sign,
        });
    }
    sign = -sign;
    segments.push(Segment {
        duration: half,
        sign,
    });
    ModulationSequence::new(segments, SequenceKind::Cpmg { pulses })
}

/// Periodic dynamical decoupling: `pulses + 1` equal intervals.
pub fn pdd<T: Real>(pulses: usize, total_time: T) -> Result<ModulationSequence<T>> {
    check_time(total_time)?;
    let d = total_time / T::from_usize_lossy(pulses + 1);
    let segments = (0..=pulses)
        .map(|i| Segment {
            duration: d,
            sign: if i % 2 == 0 { 1 } else { -1 },
        })
        .collect();
    ModulationSequence::new(segments, SequenceKind::Pdd { pulses })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Walsh,
    CpmgComparison,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Walsh => "walsh",
            Scheme::CpmgComparison => "cpmg",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "walsh" => Ok(Scheme::Walsh),
            "cpmg" | "cpmg-comparison" => Ok(Scheme::CpmgComparison),
            other => Err(invalid("scheme", format!("unknown scheme {other:?}"))),
        }
    }
}

/// A family of sequences sharing `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSet<T> {
    pub scheme: Scheme,
    pub order_exponent: u32,
    pub total_time: T,
    pub sequences: Vec<ModulationSequence<T>>,
}

impl<T: Real> SequenceSet<T> {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// `N = 2^n`.
    pub fn order(&self) -> usize {
        1usize << self.order_exponent
    }

    /// Sum of all sequence durations.
    pub fn experiment_time(&self) -> T {
        self.sequences.iter().map(|s| s.total_time()).sum()
    }

    /// Frequencies sampled by the comparison set, `ω_k = kπ/T`.
    pub fn sampled_frequencies(&self) -> Vec<T> {
        (0..self.len())
            .map(|k| T::from_usize_lossy(k) * T::PI() / self.total_time)
            .collect()
    }
}

/// All `N` Walsh sequences of order `n`, in sequency order.
pub fn walsh_set<T: Real>(n: u32, total_time: T) -> Result<SequenceSet<T>> {
    let basis = WalshBasis::new(n)?;
    let sequences = (0..basis.len())
        .map(|m| walsh_sequence_from(&basis, m, total_time))
        .collect::<Result<_>>()?;
    Ok(SequenceSet {
        scheme: Scheme::Walsh,
        order_exponent: n,
        total_time,
        sequences,
    })
}

/// Ramsey plus CPMG sequences with `k = 1..N` pulses spaced `T/k`, so that
/// member `k` has its first filter peak at `ω_k = kπ/T`.
pub fn cpmg_comparison_set<T: Real>(n: u32, total_time: T) -> Result<SequenceSet<T>> {
    if n < 1 {
        return Err(out_of_range("order exponent n", n, ">= 1"));
    }
    if n > crate::walsh::MAX_ORDER_EXPONENT {
        return Err(out_of_range("order exponent n", n, "1..=16"));
    }
    let len = 1usize << n;
    let sequences = (0..=len)
        .map(|k| cpmg(k, total_time))
        .collect::<Result<_>>()?;
    Ok(SequenceSet {
        scheme: Scheme::CpmgComparison,
        order_exponent: n,
        total_time,
        sequences,
    })
}

/// Closed-form Ramsey filter `4 sin²(ωT/2)/ω²`.
pub fn ramsey_filter<T: Real>(omega: T, total_time: T) -> T {
    if omega == T::zero() {
        return total_time * total_time;
    }
    let s = (omega * total_time / T::lit(2.0)).sin();
    T::lit(4.0) * s * s / (omega * omega)
}

/// Closed-form CPMG filter for `pulses` pulses and interval `tau`:
/// `16 sin²(Nωτ/2) sin⁴(ωτ/4) / (ω² cos²(ωτ/2))` for even `N`, with the
/// first sine replaced by a cosine for odd `N`.
pub fn cpmg_filter<T: Real>(omega: T, pulses: usize, tau: T) -> T {
    let two = T::lit(2.0);
    let n = T::from_usize_lossy(pulses);
    let phase = n * omega * tau / two;
    let a = if pulses.is_multiple_of(2) {
        phase.sin()
    } else {
        phase.cos()
    };
    let b = (omega * tau / T::lit(4.0)).sin();
    let c = (omega * tau / two).cos();
    T::lit(16.0) * a * a * b.powi(4) / (omega * omega * c * c)
}
