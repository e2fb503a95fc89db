//! Gauss–Legendre rules, computed once per order and cached.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::scalar::Real;

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the Chebyshev-like initial guess.
    pub fn compute(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `∫_a^b f`.
    pub fn integrate<T: Real>(&self, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += T::lit(w) * f(mid + half * T::lit(x));
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared rule of the given order.
pub fn rule(order: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(order)
        .or_insert_with(|| Arc::new(GaussLegendre::compute(order)))
        .clone()
}

/// Integrates with doubling rule orders starting at `start` until two
/// successive estimates agree to `rel_tol` (or `max_order` is reached).
pub fn integrate_adaptive<T: Real>(
    a: T,
    b: T,
    start: usize,
    max_order: usize,
    rel_tol: T,
    f: impl Fn(T) -> T,
) -> T {
    let mut order = start.max(1);
    let mut prev = rule(order).integrate(a, b, &f);
    while order < max_order {
        order *= 2;
        let next = rule(order).integrate(a, b, &f);
        let scale = next.abs().max(T::min_positive_value());
        if (next - prev).abs() <= rel_tol * scale {
            return next;
        }
        prev = next;
    }
    prev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 64, 257, 1024] {
            let r = GaussLegendre::compute(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-12, "n={n} sum={s}");
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let r = GaussLegendre::compute(8);
        // degree 15 is integrated exactly
        let v = r.integrate(0.0f64, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
    }

    #[test]
    fn smooth_transcendental() {
        let v = integrate_adaptive(0.0f64, 3.0, 16, 1024, 1e-14, |x| {
            (-x).exp() * (2.0 * x).cos()
        });
        // ∫_0^3 e^{-x} cos 2x dx
        let exact = (1.0 + (-3.0f64).exp() * (2.0 * (6.0f64).sin() - (6.0f64).cos())) / 5.0;
        assert!((v - exact).abs() < 1e-14);
    }

    #[test]
    fn two_point_nodes() {
        let r = GaussLegendre::compute(2);
        let x = 1.0 / 3f64.sqrt();
        assert!((r.nodes[0] + x).abs() < 1e-15 && (r.nodes[1] - x).abs() < 1e-15);
    }
}
