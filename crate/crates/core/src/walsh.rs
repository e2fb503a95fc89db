//! Sequency-ordered Walsh basis and the dyadic/arithmetic change of domain.
//!
//! Row `m` of the Walsh matrix of order `N = 2^n` has exactly `m` sign
//! changes. Rows are obtained from the natural (Hadamard) ordering: sequency
//! `m` maps to Hadamard row `bitrev_n(gray(m))`, and
//! `H[a, j] = (-1)^{popcount(a & j)}`. The matrix is never stored; entries are
//! evaluated on demand so the basis stays cheap up to `n = 16`.
//!
//! The shuffling matrix `T_N` relates the arithmetic lag domain to the dyadic
//! (XOR) lag domain:
//!
//! ```text
//! L[j] = D_N[j] * sum_k T_N[j, k] * G[k]
//! L[j] = (1/N) * sum_k G[|(j ^ k) - k|]
//! ```
//!
//! `T_N` is unit lower-triangular with integer entries, so it is inverted
//! exactly by forward substitution. `D_N[k] = 2^(1 - δ(k,0) - popcount(k))`
//! is stored as a power-of-two exponent.

use num_rational::Ratio;

use crate::error::{check_len, out_of_range, Error, Result};
use crate::scalar::Field;

/// Largest order exponent accepted by [`WalshBasis::new`].
pub const MAX_ORDER_EXPONENT: u32 = 16;

/// Largest order exponent for which the dense shuffling matrix is built.
pub const MAX_SHUFFLING_EXPONENT: u32 = 12;

/// Sequency-ordered Walsh basis of order `N = 2^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalshBasis {
    order_exponent: u32,
    // sequency index -> natural (Hadamard) row index
    hadamard_row: Vec<usize>,
}

fn bit_reverse(v: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        v.reverse_bits() >> (usize::BITS - bits)
    }
}

fn gray(v: usize) -> usize {
    v ^ (v >> 1)
}

impl WalshBasis {
    pub fn new(order_exponent: u32) -> Result<Self> {
        if order_exponent > MAX_ORDER_EXPONENT {
            return Err(out_of_range("order exponent n", order_exponent, "0..=16"));
        }
        let len = 1usize << order_exponent;
        let hadamard_row = (0..len)
            .map(|m| bit_reverse(gray(m), order_exponent))
            .collect();
        Ok(Self {
            order_exponent,
            hadamard_row,
        })
    }

    /// `n` such that `N = 2^n`.
    pub fn order_exponent(&self) -> u32 {
        self.order_exponent
    }

    /// Matrix order `N`.
    pub fn len(&self) -> usize {
        self.hadamard_row.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `W[m, j]` as `±1`.
    #[inline]
    pub fn entry(&self, m: usize, j: usize) -> i8 {
        if (self.hadamard_row[m] & j).count_ones() & 1 == 0 {
            1
        } else {
            -1
        }
    }

    /// Row `m` (the sign pattern of the sequency-`m` Walsh function).
    pub fn row(&self, m: usize) -> Vec<i8> {
        (0..self.len()).map(|j| self.entry(m, j)).collect()
    }

    /// Dense row-major copy of `W`.
    pub fn dense(&self) -> Vec<Vec<i8>> {
        (0..self.len()).map(|m| self.row(m)).collect()
    }

    /// Number of sign changes along row `m`.
    pub fn sign_changes(&self, m: usize) -> usize {
        let row = self.row(m);
        row.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// `W · v` by dense multiplication, `O(N^2)`.
    pub fn transform_dense<S: Field>(&self, v: &[S]) -> Result<Vec<S>> {
        check_len("walsh transform input", self.len(), v.len())?;
        Ok((0..self.len())
            .map(|m| {
                v.iter().enumerate().fold(S::zero(), |acc, (j, x)| {
                    if self.entry(m, j) > 0 {
                        acc + x.clone()
                    } else {
                        acc - x.clone()
                    }
                })
            })
            .collect())
    }

    /// `W · v` by an in-place butterfly in natural order followed by the
    /// sequency permutation, `O(N log N)`.
    pub fn transform<S: Field>(&self, v: &[S]) -> Result<Vec<S>> {
        check_len("walsh transform input", self.len(), v.len())?;
        let mut buf = v.to_vec();
        fwht_natural(&mut buf);
        Ok(self.hadamard_row.iter().map(|&a| buf[a].clone()).collect())
    }

    /// `W^{-1} · v = (1/N) W · v`.
    pub fn inverse_transform<S: Field>(&self, v: &[S]) -> Result<Vec<S>> {
        let scale = S::from_int(self.len() as i64);
        Ok(self
            .transform(v)?
            .into_iter()
            .map(|x| x / scale.clone())
            .collect())
    }

    /// The power-of-two diagonal `D_N` for this order.
    pub fn diagonal(&self) -> DyadicDiagonal {
        DyadicDiagonal::new(self.order_exponent)
    }
}

/// Unnormalized Walsh-Hadamard butterfly in natural (Hadamard) order.
pub fn fwht_natural<S: Field>(buf: &mut [S]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in buf.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let x = a.clone();
                let y = b.clone();
                *a = x.clone() + y.clone();
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Exact diagonal `D_N[k] = 2^(1 - δ(k,0) - popcount(k))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicDiagonal {
    order_exponent: u32,
}

impl DyadicDiagonal {
    pub fn new(order_exponent: u32) -> Self {
        Self { order_exponent }
    }

    pub fn len(&self) -> usize {
        1usize << self.order_exponent
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Base-two exponent of `D_N[k]`.
    pub fn exponent(&self, k: usize) -> i32 {
        1 - i32::from(k == 0) - k.count_ones() as i32
    }

    pub fn ratio(&self, k: usize) -> Ratio<i64> {
        pow2_ratio(self.exponent(k))
    }

    /// `D_N[k]` in the requested field.
    pub fn value<S: Field>(&self, k: usize) -> S {
        pow2(self.exponent(k))
    }

    /// `1 / D_N[k]`.
    pub fn inverse_value<S: Field>(&self, k: usize) -> S {
        pow2(-self.exponent(k))
    }
}

fn pow2_ratio(e: i32) -> Ratio<i64> {
    if e >= 0 {
        Ratio::from_integer(1i64 << e)
    } else {
        Ratio::new(1, 1i64 << (-e))
    }
}

fn pow2<S: Field>(e: i32) -> S {
    if e >= 0 {
        S::from_int(1i64 << e)
    } else {
        S::one() / S::from_int(1i64 << (-e))
    }
}

/// Dense shuffling matrix `T_N` together with its exact integer inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShufflingMatrix {
    order_exponent: u32,
    len: usize,
    forward: Vec<i32>,
    inverse: Vec<i32>,
}

impl ShufflingMatrix {
    /// Builds `T_N` by the block recursion
    /// `T_{2h} = [[T_h, 0], [T_h S_h, T_h]]`, `T_1 = [1]`, where `S_h` has
    /// unit entries on `i + j = h` (`i, j >= 1`).
    pub fn new(order_exponent: u32) -> Result<Self> {
        if order_exponent > MAX_SHUFFLING_EXPONENT {
            return Err(out_of_range(
                "shuffling order exponent n",
                order_exponent,
                "0..=12",
            ));
        }
        let len = 1usize << order_exponent;
        let mut forward = vec![0i32; len * len];
        forward[0] = 1;
        let mut h = 1;
        while h < len {
            for i in 0..h {
                for j in 0..h {
                    let v = forward[i * len + j];
                    forward[(i + h) * len + (j + h)] = v;
                }
                // (T_h S_h)[i, j] = T_h[i, h - j] for j >= 1
                for j in 1..h {
                    forward[(i + h) * len + j] = forward[i * len + (h - j)];
                }
            }
            h *= 2;
        }
        let inverse = invert_unit_lower(&forward, len).ok_or(Error::Overflow(len))?;
        Ok(Self {
            order_exponent,
            len,
            forward,
            inverse,
        })
    }

    pub fn order_exponent(&self) -> u32 {
        self.order_exponent
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i32 {
        self.forward[row * self.len + col]
    }

    /// Entry of the exact inverse `T_N^{-1}`.
    #[inline]
    pub fn inverse_get(&self, row: usize, col: usize) -> i32 {
        self.inverse[row * self.len + col]
    }

    /// `T_N · v`.
    pub fn apply<S: Field>(&self, v: &[S]) -> Result<Vec<S>> {
        check_len("shuffling input", self.len, v.len())?;
        Ok(self.mat_vec(&self.forward, v))
    }

    /// `T_N^{-1} · v`.
    pub fn apply_inverse<S: Field>(&self, v: &[S]) -> Result<Vec<S>> {
        check_len("shuffling input", self.len, v.len())?;
        Ok(self.mat_vec(&self.inverse, v))
    }

    fn mat_vec<S: Field>(&self, m: &[i32], v: &[S]) -> Vec<S> {
        (0..self.len)
            .map(|r| {
                let row = &m[r * self.len..=r * self.len + r];
                row.iter().zip(v).fold(S::zero(), |acc, (&t, x)| match t {
                    0 => acc,
                    1 => acc + x.clone(),
                    -1 => acc - x.clone(),
                    t => acc + S::from_int(i64::from(t)) * x.clone(),
                })
            })
            .collect()
    }
}

/// Forward substitution on a unit lower-triangular integer matrix.
fn invert_unit_lower(m: &[i32], len: usize) -> Option<Vec<i32>> {
    let mut inv = vec![0i32; len * len];
    for col in 0..len {
        inv[col * len + col] = 1;
        for row in col + 1..len {
            let mut acc: i32 = 0;
            for k in col..row {
                let a = m[row * len + k];
                if a != 0 {
                    acc = acc.checked_sub(a.checked_mul(inv[k * len + col])?)?;
                }
            }
            inv[row * len + col] = acc;
        }
    }
    Some(inv)
}
