//! Fibonacci numbers, the Fibonacci point set, its dual lattice, hyperbolic
//! norms, and dyadic shells.
//!
//! The point set `F_n` consists of the `b_n` rank-1 lattice points
//! `({mu/b_n}, {mu*b_{n-1}/b_n})`. Its dual lattice `L(n)` is the set of
//! integer frequencies `k` with `k1 + b_{n-1}*k2 ≡ 0 (mod b_n)`; these are
//! exactly the frequencies where the cubature weight `Phi(k)` equals one.
//! All congruences are evaluated in exact integer arithmetic.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sum::PairwiseBuffer;
use crate::Real;

/// Largest supported Fibonacci index; `fib(MAX_FIB_INDEX)` still fits in `i64`.
pub const MAX_FIB_INDEX: u32 = 90;

/// Largest index for which [`fibonacci_point_set`] will materialize points.
pub const MAX_POINT_SET_INDEX: u32 = 32;

/// Fibonacci numbers with the convention `b_0 = b_1 = 1`.
pub fn fib(n: u32) -> Result<i64> {
    if n > MAX_FIB_INDEX {
        return Err(Error::IndexOutOfRange {
            n: n as i64,
            max: MAX_FIB_INDEX,
        });
    }
    let (mut a, mut b) = (1i64, 1i64);
    for _ in 1..n {
        let next = a + b;
        a = b;
        b = next;
    }
    Ok(if n == 0 { a } else { b })
}

/// A Fibonacci index `n` with `b_n` and `b_{n-1}` cached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FibIndex {
    n: u32,
    b_n: i64,
    b_prev: i64,
}

impl FibIndex {
    /// Requires `1 <= n <= 90` so that both `b_n` and `b_{n-1}` exist in `i64`.
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 || n > MAX_FIB_INDEX {
            return Err(Error::IndexOutOfRange {
                n: n as i64,
                max: MAX_FIB_INDEX,
            });
        }
        Ok(Self {
            n,
            b_n: fib(n)?,
            b_prev: fib(n - 1)?,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `b_n`, the cardinality of the point set.
    pub fn count(&self) -> i64 {
        self.b_n
    }

    /// `b_{n-1}`, the lattice generator's second component.
    pub fn prev(&self) -> i64 {
        self.b_prev
    }
}

/// The Fibonacci point set, coordinates in `[0,1)^2`, ordered by `mu` ascending.
#[derive(Debug, Clone)]
pub struct PointSet<T> {
    index: FibIndex,
    points: Vec<[T; 2]>,
}

impl<T: Real> PointSet<T> {
    pub fn index(&self) -> FibIndex {
        self.index
    }

    pub fn points(&self) -> &[[T; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// The `n`-th Fibonacci point set: `({mu/b_n}, {mu*b_{n-1}/b_n})` for
/// `mu = 1..=b_n`. Both coordinates are reduced mod 1, so `mu = b_n` yields
/// the origin. Requires `2 <= n <= 32` (materialization limit).
pub fn fibonacci_point_set<T: Real>(index: FibIndex) -> Result<PointSet<T>> {
    if index.n < 2 {
        return Err(Error::InvalidParameter(format!(
            "fibonacci_point_set requires n >= 2, got {}",
            index.n
        )));
    }
    if index.n > MAX_POINT_SET_INDEX {
        return Err(Error::InvalidParameter(format!(
            "point set with b_{} = {} points is too large to materialize (n <= {})",
            index.n, index.b_n, MAX_POINT_SET_INDEX
        )));
    }
    let b = index.b_n;
    let bt = T::from_i64(b).unwrap();
    let mut points = Vec::with_capacity(b as usize);
    for mu in 1..=b {
        let a1 = mu % b;
        let a2 = (mu as i128 * index.b_prev as i128).rem_euclid(b as i128) as i64;
        points.push([T::from_i64(a1).unwrap() / bt, T::from_i64(a2).unwrap() / bt]);
    }
    Ok(PointSet { index, points })
}

/// An integer frequency vector in `Z^2`. `Ord` is lexicographic on `(k1, k2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FreqIndex {
    pub k1: i64,
    pub k2: i64,
}

impl FreqIndex {
    pub fn new(k1: i64, k2: i64) -> Self {
        Self { k1, k2 }
    }

    pub fn is_zero(&self) -> bool {
        self.k1 == 0 && self.k2 == 0
    }

    /// Hyperbolic norm `max(|k1|,1) * max(|k2|,1)`, saturating at `i64::MAX`.
    pub fn hyperbolic_norm(&self) -> i64 {
        let a = self.k1.unsigned_abs().max(1) as u128;
        let b = self.k2.unsigned_abs().max(1) as u128;
        (a * b).min(i64::MAX as u128) as i64
    }
}

/// Membership in the dual lattice: `k1 + b_{n-1}*k2 ≡ 0 (mod b_n)`.
pub fn in_dual_lattice(k: FreqIndex, index: FibIndex) -> bool {
    let m = index.b_n as i128;
    (k.k1 as i128 + index.b_prev as i128 * k.k2 as i128).rem_euclid(m) == 0
}

/// Cubature weight `Phi(k)`: 1 on the dual lattice, 0 off it.
pub fn dual_phase(k: FreqIndex, index: FibIndex) -> f64 {
    if in_dual_lattice(k, index) {
        1.0
    } else {
        0.0
    }
}

/// `Phi(k)` evaluated by its defining exponential sum
/// `b_n^{-1} sum_mu e^{i 2 pi (k, y^mu)}`. Diagnostic cross-check for
/// [`dual_phase`]; costs `O(b_n)`.
pub fn dual_phase_by_sum(k: FreqIndex, index: FibIndex) -> Complex64 {
    let b = index.b_n;
    let mut buf = PairwiseBuffer::new();
    for mu in 1..=b {
        let phase = (k.k1 as i128 * mu as i128
            + k.k2 as i128 * ((mu as i128 * index.b_prev as i128).rem_euclid(b as i128)))
        .rem_euclid(b as i128) as i64;
        let angle = 2.0 * std::f64::consts::PI * phase as f64 / b as f64;
        buf.push(Complex64::new(angle.cos(), angle.sin()));
    }
    buf.finish() / b as f64
}

/// Visit every nonzero dual-lattice point with `|k1| <= kmax`, `|k2| <= kmax`,
/// in (k2 ascending, k1 ascending) order. For each `k2` the admissible `k1`
/// form an arithmetic progression mod `b_n`; no 2-D scan is performed.
pub(crate) fn for_each_dual_in_box<F: FnMut(FreqIndex)>(index: FibIndex, kmax: i64, mut visit: F) {
    let b = index.b_n as i128;
    for k2 in -kmax..=kmax {
        // smallest k1 >= -kmax with k1 ≡ -b_prev*k2 (mod b_n)
        let a = (-(index.b_prev as i128) * k2 as i128).rem_euclid(b);
        let offset = (a + kmax as i128).rem_euclid(b);
        let mut k1 = -(kmax as i128) + offset;
        while k1 <= kmax as i128 {
            if !(k1 == 0 && k2 == 0) {
                visit(FreqIndex::new(k1 as i64, k2));
            }
            k1 += b;
        }
    }
}

/// All nonzero dual-lattice points in the box `max(|k1|,|k2|) <= kmax`,
/// sorted lexicographically.
pub fn enumerate_dual_in_box(index: FibIndex, kmax: i64) -> Result<Vec<FreqIndex>> {
    if kmax < 1 {
        return Err(Error::InvalidParameter(format!(
            "enumeration box bound must be >= 1, got {kmax}"
        )));
    }
    let side = 2 * kmax as i128 + 1;
    let estimate = side * (side / index.b_n as i128 + 1);
    if estimate > 100_000_000 {
        return Err(Error::InvalidParameter(format!(
            "enumeration of ~{estimate} dual points is too large to materialize"
        )));
    }
    let mut out = Vec::new();
    for_each_dual_in_box(index, kmax, |k| out.push(k));
    out.sort_unstable();
    Ok(out)
}

/// Exact minimum of the hyperbolic norm over `L(n) \ {0}`. Requires `n >= 3`.
///
/// The point `(b_n, 0)` lies in the dual lattice, so the scan is pruned at
/// norm `b_n`; the cost is `O(min norm)` iterations.
pub fn min_hyperbolic_norm(index: FibIndex) -> Result<i64> {
    if index.n < 3 {
        return Err(Error::InvalidParameter(format!(
            "min_hyperbolic_norm requires n >= 3, got {}",
            index.n
        )));
    }
    let b = index.b_n;
    let mut best = b; // attained by (b_n, 0)
    let mut k2: i64 = 1;
    while k2 < best {
        let a = (-(index.b_prev as i128) * k2 as i128).rem_euclid(b as i128) as i64;
        let nearest = a.min(b - a);
        let norm = if nearest == 0 {
            k2 // k1 = 0 is on the progression
        } else {
            let prod = nearest as i128 * k2 as i128;
            prod.min(i64::MAX as i128) as i64
        };
        best = best.min(norm);
        k2 += 1;
    }
    Ok(best)
}

/// A dyadic shell index `s ∈ N_0^d`: `k ∈ rho(s)` iff
/// `[2^{s_j - 1}] <= |k_j| < 2^{s_j}` for every axis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DyadicShell {
    s: Vec<u32>,
}

impl DyadicShell {
    /// Component bound keeps `2^{s_j}` inside `i64`.
    pub const MAX_COMPONENT: u32 = 62;

    pub fn new(s: Vec<u32>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidParameter(
                "shell index must be non-empty".into(),
            ));
        }
        if let Some(&big) = s.iter().find(|&&c| c > Self::MAX_COMPONENT) {
            return Err(Error::InvalidParameter(format!(
                "shell component {big} exceeds {}",
                Self::MAX_COMPONENT
            )));
        }
        Ok(Self { s })
    }

    pub fn components(&self) -> &[u32] {
        &self.s
    }

    pub fn dim(&self) -> usize {
        self.s.len()
    }

    /// `t = ||s||_1`.
    pub fn level(&self) -> u32 {
        self.s.iter().sum()
    }

    /// Half-open axis band of `s_j`: `{0}` for `s_j = 0`, else
    /// `[2^{s_j-1}, 2^{s_j})` in absolute value.
    pub fn axis_band(component: u32) -> (i64, i64) {
        if component == 0 {
            (0, 1)
        } else {
            (1i64 << (component - 1), 1i64 << component)
        }
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        self.s.len() == k.len()
            && self.s.iter().zip(k).all(|(&s, &kj)| {
                let (lo, hi) = Self::axis_band(s);
                let a = kj.abs();
                lo <= a && a < hi
            })
    }

    /// The unique shell containing `k` (shells partition `Z^d`).
    pub fn of(k: &[i64]) -> Self {
        let s = k
            .iter()
            .map(|&kj| {
                let a = kj.unsigned_abs();
                u64::BITS - a.leading_zeros()
            })
            .collect();
        Self { s }
    }

    /// All shells in dimension `d` with `||s||_1 = t`.
    pub fn all_at_level(d: usize, t: u32) -> Vec<Self> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; d];
        fn rec(out: &mut Vec<DyadicShell>, cur: &mut Vec<u32>, axis: usize, rest: u32) {
            if axis + 1 == cur.len() {
                cur[axis] = rest;
                out.push(DyadicShell { s: cur.clone() });
                return;
            }
            for v in 0..=rest {
                cur[axis] = v;
                rec(out, cur, axis + 1, rest - v);
            }
        }
        rec(&mut out, &mut cur, 0, t);
        out
    }
}

fn mod_inverse(a: i64, m: i64) -> i64 {
    // extended Euclid; gcd(a, m) = 1 for consecutive Fibonacci numbers
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    debug_assert_eq!(old_r.abs(), 1);
    (old_s * old_r.signum()).rem_euclid(m as i128) as i64
}

/// Members of `rho(s) ∩ L(n)` for `d = 2`, sorted lexicographically.
pub fn shell_members_in_dual(index: FibIndex, shell: &DyadicShell) -> Result<Vec<FreqIndex>> {
    if shell.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: shell.dim(),
        });
    }
    let (s1, s2) = (shell.s[0], shell.s[1]);
    let b = index.b_n;
    let mut out = Vec::new();

    // Iterate the smaller band and solve the congruence for the other axis.
    let band_size = |s: u32| -> i64 {
        let (lo, hi) = DyadicShell::axis_band(s);
        hi - lo
    };
    let progression_in = |residue: i64, lo: i64, hi: i64, out: &mut Vec<i64>| {
        // all k ≡ residue (mod b) with lo <= k < hi
        let first = lo + (residue as i128 - lo as i128).rem_euclid(b as i128) as i64;
        let mut k = first;
        while k < hi {
            out.push(k);
            k += b;
        }
    };
    let mut scratch = Vec::new();
    if band_size(s2) <= band_size(s1) {
        let (lo2, hi2) = DyadicShell::axis_band(s2);
        let signs2: &[i64] = if s2 == 0 { &[1] } else { &[-1, 1] };
        for &sign in signs2 {
            for mag in lo2..hi2 {
                let k2 = sign * mag;
                let a = (-(index.b_prev as i128) * k2 as i128).rem_euclid(b as i128) as i64;
                let (lo1, hi1) = DyadicShell::axis_band(s1);
                scratch.clear();
                progression_in(a, lo1, hi1, &mut scratch);
                if s1 > 0 {
                    progression_in(a, -hi1 + 1, -lo1 + 1, &mut scratch);
                } else if a != 0 {
                    scratch.clear(); // k1 must be 0, not on progression
                }
                for &k1 in &scratch {
                    out.push(FreqIndex::new(k1, k2));
                }
            }
        }
    } else {
        // k2 ≡ -k1 * b_prev^{-1} (mod b_n)
        let inv = mod_inverse(index.b_prev, b);
        let (lo1, hi1) = DyadicShell::axis_band(s1);
        let signs1: &[i64] = if s1 == 0 { &[1] } else { &[-1, 1] };
        for &sign in signs1 {
            for mag in lo1..hi1 {
                let k1 = sign * mag;
                let a = (-(k1 as i128) * inv as i128).rem_euclid(b as i128) as i64;
                let (lo2, hi2) = DyadicShell::axis_band(s2);
                scratch.clear();
                progression_in(a, lo2, hi2, &mut scratch);
                if s2 > 0 {
                    progression_in(a, -hi2 + 1, -lo2 + 1, &mut scratch);
                } else if a != 0 {
                    scratch.clear();
                }
                for &k2 in &scratch {
                    out.push(FreqIndex::new(k1, k2));
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Smallest `t >= 0` with `2^t > gamma * b_n`.
pub fn smallest_shell_level(index: FibIndex, gamma: f64) -> Result<u32> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive and finite, got {gamma}"
        )));
    }
    let target = gamma * index.b_n as f64;
    let mut t = 0u32;
    while (t as f64).exp2() <= target {
        t += 1;
        if t > 200 {
            return Err(Error::InvalidParameter(
                "shell level search did not terminate".into(),
            ));
        }
    }
    Ok(t)
}
