//! Least-squares fit of `b² e^{-t/τ_c} cos(ω_s t)` to an autocorrelation.

use crate::error::{check_len, Error, Result};
use crate::noise::OuModel;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop once the relative cost decrease falls below this.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuFit<T> {
    pub model: OuModel<T>,
    /// Sum of squared residuals.
    pub cost: T,
    pub iterations: usize,
}

// parameters: b², ln τ_c, ω_s
fn eval<T: Real>(p: &[T; 3], t: T) -> (T, [T; 3]) {
    let tau = p[1].exp();
    let e = (-t / tau).exp();
    let (s, c) = (p[2] * t).sin_cos();
    let y = p[0] * e * c;
    (y, [e * c, y * t / tau, -p[0] * e * t * s])
}

fn cost<T: Real>(p: &[T; 3], t: &[T], y: &[T]) -> T {
    t.iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let r = eval(p, ti).0 - yi;
            r * r
        })
        .sum()
}

fn solve3<T: Real>(mut a: [[T; 3]; 3], mut b: [T; 3]) -> Option<[T; 3]> {
    for col in 0..3 {
        let piv =
            (col..3).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() <= T::min_positive_value() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..3 {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
    }
    let mut x = [T::zero(); 3];
    for r in (0..3).rev() {
        let mut s = b[r];
        for c in r + 1..3 {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}

fn levenberg_marquardt<T: Real>(
    mut p: [T; 3],
    t: &[T],
    y: &[T],
    opts: FitOptions,
) -> ([T; 3], T, usize) {
    let mut lambda = T::lit(1e-3);
    let mut current = cost(&p, t, y);
    let mut iter = 0;
    while iter < opts.max_iterations {
        iter += 1;
        let mut jtj = [[T::zero(); 3]; 3];
        let mut jtr = [T::zero(); 3];
        for (&ti, &yi) in t.iter().zip(y) {
            let (v, g) = eval(&p, ti);
            let r = v - yi;
            for a in 0..3 {
                jtr[a] += g[a] * r;
                for b in 0..3 {
                    jtj[a][b] += g[a] * g[b];
                }
            }
        }
        let mut improved = false;
        while lambda < T::lit(1e12) {
            let mut a = jtj;
            for (d, row) in a.iter_mut().enumerate() {
                row[d] += lambda * jtj[d][d].max(T::lit(1e-300));
            }
            let Some(step) = solve3(a, [-jtr[0], -jtr[1], -jtr[2]]) else {
                lambda *= T::lit(10.0);
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
            let c = cost(&trial, t, y);
            if c.is_finite() && c < current {
                let rel = (current - c) / current.max(T::min_positive_value());
                p = trial;
                current = c;
                lambda = (lambda / T::lit(10.0)).max(T::lit(1e-12));
                improved = true;
                if rel < T::lit(opts.tolerance) {
                    return (p, current, iter);
                }
                break;
            }
            lambda *= T::lit(10.0);
        }
        if !improved {
            break;
        }
    }
    (p, current, iter)
}

/// Initial guesses from the data: `b² = y₀`, `ω_s` from zero crossings,
/// `τ_c` from the log-slope of the envelope peaks.
fn initial_guess<T: Real>(t: &[T], y: &[T]) -> [T; 3] {
    let span = *t.last().expect("non-empty");
    let crossings = y
        .windows(2)
        .filter(|w| w[0].signum() != w[1].signum() && w[1] != T::zero())
        .count();
    let omega = T::PI() * T::from_usize_lossy(crossings) / span;
    let floor = y[0].abs() * T::lit(1e-3);
    let pts: Vec<(T, T)> = (0..y.len())
        .filter(|&i| {
            let a = y[i].abs();
            if a <= floor {
                return false;
            }
            if crossings == 0 {
                return y[i] > T::zero();
            }
            let left = if i == 0 { T::zero() } else { y[i - 1].abs() };
            let right = if i + 1 == y.len() {
                T::zero()
            } else {
                y[i + 1].abs()
            };
            a >= left && a >= right
        })
        .map(|i| (t[i], y[i].abs().ln()))
        .collect();
    let mut tau = span / T::lit(4.0);
    if pts.len() >= 2 {
        let n = T::from_usize_lossy(pts.len());
        let mt = pts.iter().map(|p| p.0).sum::<T>() / n;
        let ml = pts.iter().map(|p| p.1).sum::<T>() / n;
        let sxy: T = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
        let sxx: T = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
        if sxx > T::zero() && sxy < T::zero() {
            tau = -sxx / sxy;
        }
    }
    [y[0], tau.ln(), omega]
}

/// Damped Gauss–Newton fit of the OU form to `(t, y)`.
pub fn fit_ou<T: Real>(times: &[T], values: &[T], opts: FitOptions) -> Result<OuFit<T>> {
    check_len("fit values", times.len(), values.len())?;
    if times.len() < 3 {
        return Err(Error::FitFailed("need at least three points".into()));
    }
    if !(values[0] > T::zero()) {
        return Err(Error::FitFailed("zero-lag value must be positive".into()));
    }
    let guess = initial_guess(times, values);
    let mut best = levenberg_marquardt(guess, times, values, opts);
    if guess[2] != T::zero() {
        let alt = levenberg_marquardt([guess[0], guess[1], T::zero()], times, values, opts);
        if alt.1 < best.1 {
            best = alt;
        }
    }
    let (p, c, iterations) = best;
    let model = OuModel::new(p[0], p[1].exp(), p[2].abs())
        .map_err(|e| Error::FitFailed(format!("fitted parameters invalid: {e}")))?;
    Ok(OuFit {
        model,
        cost: c,
        iterations,
    })
}
