//! The cubature error functional of the Fibonacci point set and the
//! fixed-volume discrepancies built from it.
//!
//! For an admissible box `B` the error functional is
//! `E^r_B(z) = b_n^{-1} sum_mu h~^r_B(y^mu - z) - int h~^r_B`,
//! equal (by the cubature weight identity) to the dual-lattice series
//! `sum_{k in L(n)\{0}} coeff(k) e^{-i 2 pi (k, z)}`. Both routes are
//! implemented: `error_direct` evaluates the periodized spline sum exactly,
//! `error_spectral` sums the truncated dual series with a certified tail.
//!
//! Norms over the shift `z` give the periodic `L_p` discrepancy; the
//! non-periodic variant maximizes the plain (unwrapped) error over boxes
//! inside the unit square. Sup estimates over box shapes are grid maxima
//! and therefore lower estimates of the true sup; every result records the
//! grids that produced it.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{
    fibonacci_point_set, for_each_dual_in_box, shell_members_in_dual, DyadicShell, FibIndex,
    PointSet,
};
use crate::splines::{
    box_hat_integral, hat_eval, hat_fourier, periodized_fourier_coeff, HatSpec, SmoothBox,
    MAX_SMOOTHNESS,
};
use crate::sum::{pairwise_sum, PairwiseBuffer};
use crate::Real;

// crate-internal re-export so periodized evaluation stays one implementation
use crate::splines::periodized_axis_eval;

/// Exponent of the shift norm: a real `p >= 1` or the sup norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PNorm {
    Finite(f64),
    Infinity,
}

impl PNorm {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(PNorm::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(PNorm::Finite(p))
        } else {
            Err(Error::InvalidParameter(format!(
                "norm exponent must satisfy p >= 1 (or be \"inf\"), got {p}"
            )))
        }
    }

    /// Accepts a real number or the literal `inf`.
    pub fn parse(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("inf") {
            return Ok(PNorm::Infinity);
        }
        let p: f64 = s
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse norm exponent {s:?}")))?;
        Self::new(p)
    }

    pub fn is_two(&self) -> bool {
        matches!(self, PNorm::Finite(p) if *p == 2.0)
    }
}

impl fmt::Display for PNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PNorm::Finite(p) => write!(f, "{p}"),
            PNorm::Infinity => write!(f, "inf"),
        }
    }
}

/// How a discrepancy value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    DirectGrid,
    SpectralParseval,
    SpectralGrid,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::DirectGrid => "direct-grid",
            Method::SpectralParseval => "spectral-parseval",
            Method::SpectralGrid => "spectral-grid",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A discrepancy value with the parameters needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyResult<T> {
    pub value: T,
    pub method: Method,
    /// Certified truncation error for spectral methods, 0 for direct ones.
    pub tail_bound: f64,
    /// Shift- or center-grid resolution (0 if no grid was used).
    pub grid: u32,
    /// Number of aspect ratios scanned.
    pub shape_samples: u32,
    /// Base widths `u` attaining the reported value.
    pub argmax_shape: Vec<T>,
    /// Spectral cutoff `max |k_j|` (0 if no truncation was used).
    pub cutoff: i64,
}

/// A spectral cutoff together with its certified tail bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralTruncation {
    pub cutoff: i64,
    pub certified_tail: f64,
}

impl SpectralTruncation {
    /// Certify the truncation `max |k_j| <= cutoff` for the given box.
    pub fn certify<T: Real>(n: FibIndex, b: &SmoothBox<T>, cutoff: i64) -> Result<Self> {
        Ok(Self {
            cutoff,
            certified_tail: certify_tail(b, n, cutoff)?,
        })
    }
}

fn require_planar<T: Real>(b: &SmoothBox<T>) -> Result<()> {
    if b.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: b.dim(),
        });
    }
    Ok(())
}

fn require_shift<T: Real>(z: &[T]) -> Result<()> {
    if z.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: z.len(),
        });
    }
    Ok(())
}

/// `E^r_B(z)` by direct evaluation of the periodized spline sum over the
/// point set. Exact up to double-precision rounding.
pub fn error_direct<T: Real>(pts: &PointSet<T>, b: &SmoothBox<T>, z: &[T]) -> Result<T> {
    require_planar(b)?;
    require_shift(z)?;
    b.require_periodic_admissible()?;
    let s1 = b.axis_spec(0);
    let s2 = b.axis_spec(1);
    let c = b.center();
    let mut buf = PairwiseBuffer::new();
    for p in pts.points() {
        buf.push(
            periodized_axis_eval(&s1, p[0] - z[0] - c[0])
                * periodized_axis_eval(&s2, p[1] - z[1] - c[1]),
        );
    }
    let mean = buf.finish() / T::from_i64(pts.index().count()).unwrap();
    Ok(mean - box_hat_integral(b))
}

fn spectral_imag_tol<T: Real>() -> T {
    let eps = T::epsilon().to_f64().unwrap_or(2.2e-16);
    T::from_f64(1e-10f64.max(eps * 1e4)).unwrap()
}

/// `E^r_B(z)` by the truncated dual-lattice series. The result is within
/// `trunc.certified_tail` of the untruncated series for `r >= 2`; for
/// `r = 1` the certificate is an `L_2` (not pointwise) bound, see
/// [`certify_tail`]. The imaginary residue is checked against conjugate
/// symmetry and discarded.
pub fn error_spectral<T: Real>(
    n: FibIndex,
    b: &SmoothBox<T>,
    z: &[T],
    trunc: &SpectralTruncation,
) -> Result<T> {
    require_planar(b)?;
    require_shift(z)?;
    let two_pi = T::PI() + T::PI();
    let mut buf = PairwiseBuffer::new();
    for_each_dual_in_box(n, trunc.cutoff, |k| {
        let coeff = periodized_fourier_coeff(b, &[k.k1, k.k2]);
        let angle =
            -two_pi * (T::from_i64(k.k1).unwrap() * z[0] + T::from_i64(k.k2).unwrap() * z[1]);
        buf.push(coeff * Complex::new(angle.cos(), angle.sin()));
    });
    let sum: Complex<T> = buf.finish();
    assert!(
        sum.im.abs() <= spectral_imag_tol::<T>(),
        "conjugate symmetry violated: imaginary residue {}",
        sum.im
    );
    Ok(sum.re)
}

/// Exact `L_2` norm of `E^r_B` over all shifts, by Parseval.
///
/// The coefficient series `sum_{k in L(n)\{0}} |coeff(k)|^2` is summed in
/// closed form: `|coeff|` does not see the box center, and the axis factor
/// `hat_fourier(r, u; k)^2` is itself the transform of the order-2r hat
/// (self-convolution), so the cubature weight identity turns the whole
/// series into one pass of the order-2r periodized hat over the point set.
/// No truncation: `tail_bound = 0`. Requires `r <= 12`.
pub fn l2_norm_parseval<T: Real>(
    pts: &PointSet<T>,
    b: &SmoothBox<T>,
) -> Result<DiscrepancyResult<T>> {
    require_planar(b)?;
    b.require_periodic_admissible()?;
    let doubled = 2 * b.order();
    if doubled > MAX_SMOOTHNESS {
        return Err(Error::InvalidOrder {
            r: b.order(),
            max: MAX_SMOOTHNESS / 2,
        });
    }
    let d1 = HatSpec::new(doubled, b.widths()[0])?;
    let d2 = HatSpec::new(doubled, b.widths()[1])?;
    let mut buf = PairwiseBuffer::new();
    for p in pts.points() {
        buf.push(periodized_axis_eval(&d1, p[0]) * periodized_axis_eval(&d2, p[1]));
    }
    let mean = buf.finish() / T::from_i64(pts.index().count()).unwrap();
    let square = (mean - b.width_product().powi(doubled as i32)).max(T::zero());
    Ok(DiscrepancyResult {
        value: square.sqrt(),
        method: Method::SpectralParseval,
        tail_bound: 0.0,
        grid: 0,
        shape_samples: 1,
        argmax_shape: b.widths().to_vec(),
        cutoff: 0,
    })
}

/// Truncated Parseval series with a certified `L_2` tail; the exact value
/// lies within `tail_bound` of `value`. Cross-checks [`l2_norm_parseval`].
pub fn l2_norm_series<T: Real>(
    n: FibIndex,
    b: &SmoothBox<T>,
    trunc: &SpectralTruncation,
) -> Result<DiscrepancyResult<T>> {
    require_planar(b)?;
    let s1 = b.axis_spec(0);
    let s2 = b.axis_spec(1);
    let mut buf = PairwiseBuffer::new();
    for_each_dual_in_box(n, trunc.cutoff, |k| {
        let c = hat_fourier(&s1, T::from_i64(k.k1).unwrap())
            * hat_fourier(&s2, T::from_i64(k.k2).unwrap());
        buf.push(c * c);
    });
    let u = [
        b.widths()[0].to_f64().unwrap(),
        b.widths()[1].to_f64().unwrap(),
    ];
    let tail = dual_majorant_tail(n, u, 2.0 * b.order() as f64, trunc.cutoff).sqrt();
    Ok(DiscrepancyResult {
        value: buf.finish().max(T::zero()).sqrt(),
        method: Method::SpectralParseval,
        tail_bound: tail,
        grid: 0,
        shape_samples: 1,
        argmax_shape: b.widths().to_vec(),
        cutoff: trunc.cutoff,
    })
}

/// Per-axis table of the (optionally periodized) hat at every
/// `point coordinate - grid value - center`, point-major layout.
fn axis_table<T: Real>(
    coords: impl Iterator<Item = T>,
    spec: &HatSpec<T>,
    grid: &[T],
    center: T,
    periodized: bool,
) -> Vec<T> {
    let mut out = Vec::new();
    for y in coords {
        for &g in grid {
            let delta = y - g - center;
            out.push(if periodized {
                periodized_axis_eval(spec, delta)
            } else {
                hat_eval(spec, delta)
            });
        }
    }
    out
}

/// Error values on the full grid: node `(i, j)` gets
/// `sum_idx t1[idx, i] * t2[idx, j] / count - integral`. Rows are computed
/// in parallel; within a node the point order is fixed, so the output is
/// deterministic.
fn separable_error_grid<T: Real>(
    t1: &[T],
    t2: &[T],
    count: usize,
    cols: usize,
    integral: T,
) -> Vec<T> {
    let denom = T::from_usize(count).unwrap();
    let rows: Vec<Vec<T>> = (0..cols)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![T::zero(); cols];
            for idx in 0..count {
                let a = t1[idx * cols + i];
                if a == T::zero() {
                    continue;
                }
                let row = &t2[idx * cols..(idx + 1) * cols];
                for (cell, &b) in acc.iter_mut().zip(row) {
                    *cell = *cell + a * b;
                }
            }
            for cell in acc.iter_mut() {
                *cell = *cell / denom - integral;
            }
            acc
        })
        .collect();
    rows.into_iter().flatten().collect()
}

fn norm_from_values<T: Real>(values: &[T], p: PNorm) -> T {
    match p {
        PNorm::Infinity => values.iter().fold(T::zero(), |m, &v| m.max(v.abs())),
        PNorm::Finite(p) => {
            let powered: Vec<T> = if p == 2.0 {
                values.iter().map(|&v| v * v).collect()
            } else if p == 1.0 {
                values.iter().map(|&v| v.abs()).collect()
            } else {
                let pt = T::from_f64(p).unwrap();
                values.iter().map(|&v| v.abs().powf(pt)).collect()
            };
            let mean = pairwise_sum(&powered) / T::from_usize(values.len()).unwrap();
            if p == 2.0 {
                mean.sqrt()
            } else {
                mean.powf(T::from_f64(1.0 / p).unwrap())
            }
        }
    }
}

/// Rectangle-rule `L_p` norm of `E^r_B` over the `m x m` uniform shift grid
/// (max over the grid for `p = inf`), evaluating the direct error at every
/// node.
pub fn lp_norm_grid<T: Real>(
    pts: &PointSet<T>,
    b: &SmoothBox<T>,
    p: PNorm,
    m: u32,
) -> Result<DiscrepancyResult<T>> {
    require_planar(b)?;
    b.require_periodic_admissible()?;
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "shift grid must have at least 2 nodes per axis, got {m}"
        )));
    }
    let minv = (T::from_u32(m).unwrap()).recip();
    let grid: Vec<T> = (0..m).map(|i| T::from_u32(i).unwrap() * minv).collect();
    let t1 = axis_table(
        pts.points().iter().map(|p| p[0]),
        &b.axis_spec(0),
        &grid,
        b.center()[0],
        true,
    );
    let t2 = axis_table(
        pts.points().iter().map(|p| p[1]),
        &b.axis_spec(1),
        &grid,
        b.center()[1],
        true,
    );
    let values = separable_error_grid(&t1, &t2, pts.len(), m as usize, box_hat_integral(b));
    Ok(DiscrepancyResult {
        value: norm_from_values(&values, p),
        method: Method::DirectGrid,
        tail_bound: 0.0,
        grid: m,
        shape_samples: 1,
        argmax_shape: b.widths().to_vec(),
        cutoff: 0,
    })
}

/// `L_p` norm over the shift grid with every node evaluated spectrally.
/// Diagnostic: `O(m^2 * |dual points|)`; the per-node truncation error is
/// bounded by `trunc.certified_tail`.
pub fn lp_norm_grid_spectral<T: Real>(
    n: FibIndex,
    b: &SmoothBox<T>,
    p: PNorm,
    m: u32,
    trunc: &SpectralTruncation,
) -> Result<DiscrepancyResult<T>> {
    require_planar(b)?;
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "shift grid must have at least 2 nodes per axis, got {m}"
        )));
    }
    let mut modes: Vec<(i64, i64, Complex<T>)> = Vec::new();
    for_each_dual_in_box(n, trunc.cutoff, |k| {
        modes.push((k.k1, k.k2, periodized_fourier_coeff(b, &[k.k1, k.k2])));
    });
    let two_pi = T::PI() + T::PI();
    let minv = (T::from_u32(m).unwrap()).recip();
    let grid: Vec<T> = (0..m).map(|i| T::from_u32(i).unwrap() * minv).collect();
    let values: Vec<T> = grid
        .par_iter()
        .map(|&z1| {
            grid.iter()
                .map(|&z2| {
                    let mut buf = PairwiseBuffer::new();
                    for &(k1, k2, c) in &modes {
                        let angle = -two_pi
                            * (T::from_i64(k1).unwrap() * z1 + T::from_i64(k2).unwrap() * z2);
                        buf.push(c * Complex::new(angle.cos(), angle.sin()));
                    }
                    buf.finish().re
                })
                .collect::<Vec<T>>()
        })
        .flatten()
        .collect();
    Ok(DiscrepancyResult {
        value: norm_from_values(&values, p),
        method: Method::SpectralGrid,
        tail_bound: trunc.certified_tail,
        grid: m,
        shape_samples: 1,
        argmax_shape: b.widths().to_vec(),
        cutoff: trunc.cutoff,
    })
}

/// `L_2` energy of the error functional restricted to one dyadic shell:
/// `sqrt(sum_{k in rho(s) ∩ L(n), k != 0} |coeff(k)|^2)`. The mean term
/// `k = 0` is not part of the error spectrum and is excluded.
pub fn shell_l2_energy<T: Real>(n: FibIndex, b: &SmoothBox<T>, s: &DyadicShell) -> Result<T> {
    require_planar(b)?;
    let members = shell_members_in_dual(n, s)?;
    let s1 = b.axis_spec(0);
    let s2 = b.axis_spec(1);
    let mut buf = PairwiseBuffer::new();
    for k in members {
        if k.is_zero() {
            continue;
        }
        let c = hat_fourier(&s1, T::from_i64(k.k1).unwrap())
            * hat_fourier(&s2, T::from_i64(k.k2).unwrap());
        buf.push(c * c);
    }
    Ok(buf.finish().sqrt())
}

fn axis_weight(u: f64, rho: f64, k: f64) -> f64 {
    if k == 0.0 {
        u.powf(rho)
    } else {
        u.powf(rho).min((PI * k.abs()).powf(-rho))
    }
}

/// `sum_{k in Z} min(u^rho, (pi |k|)^{-rho})`, certified upper bound.
fn axis_weight_total(u: f64, rho: f64) -> f64 {
    let kstar = (((1.0 / (PI * u)).ceil() as i64) + 2).clamp(1, 5_000_000);
    let mut s = u.powf(rho);
    for k in 1..=kstar {
        s += 2.0 * axis_weight(u, rho, k as f64);
    }
    s + 2.0 * PI.powf(-rho) * (kstar as f64).powf(1.0 - rho) / (rho - 1.0)
}

/// Upper bound on `sum min(u^rho, (pi k)^{-rho})` over the progression
/// `k ≡ a (mod b), k > x` (one side). Four explicit terms, then an
/// integral-test remainder over the `(pi k)^{-rho}` branch.
fn progression_tail_above(a: i64, b: i64, x: i64, u: f64, rho: f64) -> f64 {
    let first = x + 1 + ((a as i128 - (x as i128 + 1)).rem_euclid(b as i128)) as i64;
    let mut s = 0.0;
    let mut k = first as f64;
    for _ in 0..4 {
        s += axis_weight(u, rho, k);
        k += b as f64;
    }
    s + PI.powf(-rho) * (k.powf(-rho) + k.powf(1.0 - rho) / (b as f64 * (rho - 1.0)))
}

/// Upper bound on the full progression sum `sum_{k ≡ a (mod b)} min(...)`.
fn progression_full(a: i64, b: i64, u: f64, rho: f64) -> f64 {
    let per_side = (4 + (1.0 / (PI * u * b as f64)).ceil() as i64).clamp(4, 2_000_000);
    let mut s = 0.0;
    let mut up = a as f64;
    for _ in 0..per_side {
        s += axis_weight(u, rho, up);
        up += b as f64;
    }
    let mut down = (a - b) as f64;
    for _ in 0..per_side {
        s += axis_weight(u, rho, down);
        down -= b as f64;
    }
    let remainder = |edge: f64| {
        PI.powf(-rho) * (edge.powf(-rho) + edge.powf(1.0 - rho) / (b as f64 * (rho - 1.0)))
    };
    s + remainder(up) + remainder(-down)
}

/// Certified upper bound on
/// `sum_{k in L(n), max(|k1|,|k2|) > kmax} prod_j min(u_j^rho, (pi |k_j|)^{-rho})`
/// for `rho >= 2`. Deterministic; monotone nonincreasing in `kmax` up to the
/// (conservative) remainder estimates.
fn dual_majorant_tail(index: FibIndex, u: [f64; 2], rho: f64, kmax: i64) -> f64 {
    assert!(rho >= 2.0);
    let b = index.count();
    let residue =
        |k2: i64| -> i64 { ((-(index.prev() as i128) * k2 as i128).rem_euclid(b as i128)) as i64 };

    // |k2| <= kmax, |k1| > kmax
    let mut total = 0.0;
    for k2 in -kmax..=kmax {
        let w2 = axis_weight(u[1], rho, k2 as f64);
        let a = residue(k2);
        let mirrored = if a == 0 { 0 } else { b - a };
        total += w2
            * (progression_tail_above(a, b, kmax, u[0], rho)
                + progression_tail_above(mirrored, b, kmax, u[0], rho));
    }

    // |k2| > kmax, any k1: exact sweep until the block remainder is negligible.
    // Any b consecutive k2 hit every residue once, so the remainder from k2
    // onward is at most W1 * (w2(k2) + integral tail).
    let w1_total = axis_weight_total(u[0], rho);
    let mut k2 = kmax + 1;
    let mut sweep: i64 = 0;
    loop {
        let stop_bound = 2.0
            * w1_total
            * (axis_weight(u[1], rho, k2 as f64)
                + PI.powf(-rho) * (k2 as f64).powf(1.0 - rho) / (b as f64 * (rho - 1.0)));
        if stop_bound <= 1e-3 * total.max(1e-300) || sweep >= 2_000_000 {
            total += stop_bound;
            break;
        }
        let chunk = b.clamp(1, 65_536);
        for _ in 0..chunk {
            let w2 = axis_weight(u[1], rho, k2 as f64);
            total += 2.0 * w2 * progression_full(residue(k2), b, u[0], rho);
            k2 += 1;
        }
        sweep += chunk;
    }
    total
}

/// Certified bound on the omitted dual-lattice coefficient mass beyond the
/// box `max(|k_j|) <= kmax`, from the decay `|coeff| <= min(u^r, (pi|k|)^{-r})`
/// per axis.
///
/// For `r >= 2` this bounds the absolute (pointwise) truncation error of the
/// spectral series. For `r = 1` the pointwise series is not absolutely
/// convergent; the returned value is then the `L_2`-norm certificate
/// `sqrt(sum of squared bounds)` — finite but possibly large, and an RMS
/// (not sup) statement over the shift.
pub fn certify_tail<T: Real>(b: &SmoothBox<T>, n: FibIndex, kmax: i64) -> Result<f64> {
    require_planar(b)?;
    if kmax < 1 {
        return Err(Error::InvalidParameter(format!(
            "spectral cutoff must be >= 1, got {kmax}"
        )));
    }
    let u = [
        b.widths()[0].to_f64().unwrap(),
        b.widths()[1].to_f64().unwrap(),
    ];
    let r = b.order();
    if r >= 2 {
        Ok(dual_majorant_tail(n, u, r as f64, kmax))
    } else {
        Ok(dual_majorant_tail(n, u, 2.0, kmax).sqrt())
    }
}

/// Log-spaced aspect-ratio grid `u_1 in [v/r, 1/r]` used by the sup scans;
/// a single sample sits at the log-midpoint, the square shape `sqrt(v)/r`.
/// The companion width is `u_2 = v / (r^2 u_1)`.
pub fn shape_grid<T: Real>(r: u32, v: T, shapes: u32) -> Vec<T> {
    let rt = T::from_u32(r).unwrap();
    let lo = v / rt;
    let hi = rt.recip();
    if shapes == 1 {
        return vec![(lo * hi).sqrt()];
    }
    let llo = lo.ln();
    let lhi = hi.ln();
    let denom = T::from_u32(shapes - 1).unwrap();
    (0..shapes)
        .map(|i| {
            let f = T::from_u32(i).unwrap() / denom;
            (llo + (lhi - llo) * f).exp().max(lo).min(hi)
        })
        .collect()
}

fn validate_volume<T: Real>(v: T) -> Result<()> {
    if !(v > T::zero() && v <= T::one()) {
        return Err(Error::InfeasibleVolume {
            v: v.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

fn pick_max<T: Real>(results: Vec<DiscrepancyResult<T>>, shapes: u32) -> DiscrepancyResult<T> {
    let mut best = 0usize;
    for (i, r) in results.iter().enumerate() {
        if r.value > results[best].value {
            best = i;
        }
    }
    let mut winner = results.into_iter().nth(best).unwrap();
    winner.shape_samples = shapes;
    winner
}

/// Periodic fixed-volume `L_p` discrepancy `D~^r_p(F_n, v)`: sup over
/// `shapes` log-spaced aspect ratios of the shift norm. The norm over all
/// shifts makes the box center immaterial, so only the shape is scanned
/// (center fixed at `(r u_1/2, r u_2/2)`). `p = 2` is summed exactly by
/// Parseval; other `p` use the `shift_grid x shift_grid` rectangle rule and
/// are lower estimates of the true sup.
pub fn fixed_volume_discrepancy_periodic<T: Real>(
    n: FibIndex,
    r: u32,
    v: T,
    p: PNorm,
    shapes: u32,
    shift_grid: u32,
) -> Result<DiscrepancyResult<T>> {
    validate_volume(v)?;
    if shapes == 0 {
        return Err(Error::InvalidParameter(
            "shape grid must be non-empty".into(),
        ));
    }
    let pts = fibonacci_point_set::<T>(n)?;
    let rt = T::from_u32(r).unwrap();
    let half = T::from_f64(0.5).unwrap();
    let results: Vec<DiscrepancyResult<T>> = shape_grid(r, v, shapes)
        .into_par_iter()
        .map(|u1| {
            let u2 = v / (rt * rt * u1);
            let b = SmoothBox::new(r, vec![rt * u1 * half, rt * u2 * half], vec![u1, u2])?;
            if p.is_two() {
                l2_norm_parseval(&pts, &b)
            } else {
                lp_norm_grid(&pts, &b, p, shift_grid)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pick_max(results, shapes))
}

/// Non-periodic fixed-volume discrepancy `D^r(F_n, v)`: max over shapes and
/// a `center_grid x center_grid` grid of admissible centers (box inside the
/// unit square) of the plain cubature error. A lower estimate of the true
/// sup; refining nested grids never decreases it.
pub fn fixed_volume_discrepancy_nonperiodic<T: Real>(
    n: FibIndex,
    r: u32,
    v: T,
    shapes: u32,
    center_grid: u32,
) -> Result<DiscrepancyResult<T>> {
    validate_volume(v)?;
    if shapes == 0 || center_grid == 0 {
        return Err(Error::InvalidParameter(
            "shape and center grids must be non-empty".into(),
        ));
    }
    let pts = fibonacci_point_set::<T>(n)?;
    let rt = T::from_u32(r).unwrap();
    let half = T::from_f64(0.5).unwrap();
    let centers = |u: T| -> Vec<T> {
        let hw = rt * u * half;
        let lo = hw;
        let hi = T::one() - hw;
        if center_grid == 1 {
            vec![(lo + hi) * half]
        } else {
            let denom = T::from_u32(center_grid - 1).unwrap();
            (0..center_grid)
                .map(|i| lo + (hi - lo) * T::from_u32(i).unwrap() / denom)
                .collect()
        }
    };
    let results: Vec<DiscrepancyResult<T>> = shape_grid(r, v, shapes)
        .into_par_iter()
        .map(|u1| {
            let u2 = v / (rt * rt * u1);
            let b = SmoothBox::new(r, vec![half, half], vec![u1, u2])?;
            let (g1, g2) = (centers(u1), centers(u2));
            let t1 = axis_table(
                pts.points().iter().map(|p| p[0]),
                &b.axis_spec(0),
                &g1,
                T::zero(),
                false,
            );
            let t2 = axis_table(
                pts.points().iter().map(|p| p[1]),
                &b.axis_spec(1),
                &g2,
                T::zero(),
                false,
            );
            let values = separable_error_grid(
                &t1,
                &t2,
                pts.len(),
                center_grid as usize,
                box_hat_integral(&b),
            );
            let worst = values.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
            Ok(DiscrepancyResult {
                value: worst,
                method: Method::DirectGrid,
                tail_bound: 0.0,
                grid: center_grid,
                shape_samples: 1,
                argmax_shape: b.widths().to_vec(),
                cutoff: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pick_max(results, shapes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::fib;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn idx(n: u32) -> FibIndex {
        FibIndex::new(n).unwrap()
    }

    fn random_admissible_box(rng: &mut ChaCha8Rng, r: u32) -> SmoothBox<f64> {
        let cap = 1.0 / r as f64;
        let u = vec![rng.gen_range(0.04..cap), rng.gen_range(0.04..cap)];
        let z = vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        SmoothBox::new(r, z, u).unwrap()
    }

    #[test]
    fn error_direct_desk_value() {
        // two points; the shifted square of volume 1/4 catches exactly one
        let pts = fibonacci_point_set::<f64>(idx(2)).unwrap();
        let b = SmoothBox::new(1, vec![0.5, 0.5], vec![0.5, 0.5]).unwrap();
        let e = error_direct(&pts, &b, &[0.0, 0.0]).unwrap();
        assert_eq!(e, 0.25);
    }

    #[test]
    fn error_direct_full_torus_indicator_is_exact() {
        let pts = fibonacci_point_set::<f64>(idx(5)).unwrap();
        let b = SmoothBox::new(1, vec![0.3, 0.8], vec![1.0, 1.0]).unwrap();
        for z in [[0.0, 0.0], [0.37, 0.91], [0.5, 0.124]] {
            assert_eq!(error_direct(&pts, &b, &z).unwrap(), 0.0);
        }
    }

    #[test]
    fn error_direct_mean_over_shifts_vanishes() {
        let pts = fibonacci_point_set::<f64>(idx(8)).unwrap();
        let b = SmoothBox::new(2, vec![0.4, 0.7], vec![0.3, 0.25]).unwrap();
        let m = 64;
        let mut buf = PairwiseBuffer::new();
        for i in 0..m {
            for j in 0..m {
                let z = [i as f64 / m as f64, j as f64 / m as f64];
                buf.push(error_direct(&pts, &b, &z).unwrap());
            }
        }
        // residual is grid aliasing onto dual frequencies divisible by m
        let mean = buf.finish() / (m * m) as f64;
        assert!(mean.abs() <= 1e-8, "grid mean {mean}");
    }

    #[test]
    fn error_direct_is_shift_periodic() {
        let pts = fibonacci_point_set::<f64>(idx(6)).unwrap();
        let b = SmoothBox::new(2, vec![0.2, 0.6], vec![0.3, 0.2]).unwrap();
        let e0 = error_direct(&pts, &b, &[0.31, 0.77]).unwrap();
        let e1 = error_direct(&pts, &b, &[1.31, 0.77]).unwrap();
        let e2 = error_direct(&pts, &b, &[0.31, -0.23]).unwrap();
        assert_relative_eq!(e0, e1, max_relative = 1e-12);
        assert_relative_eq!(e0, e2, max_relative = 1e-12);
    }

    #[test]
    fn spectral_empty_box_is_zero_with_positive_tail() {
        // no nonzero dual points with |k_j| <= 1 at n = 4
        let b = SmoothBox::new(2, vec![0.3, 0.3], vec![0.2, 0.2]).unwrap();
        let trunc = SpectralTruncation::certify(idx(4), &b, 1).unwrap();
        assert!(trunc.certified_tail > 0.0);
        let e = error_spectral(idx(4), &b, &[0.1, 0.9], &trunc).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn spectral_matches_direct_within_certified_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for n in [8u32, 10] {
            let index = idx(n);
            let pts = fibonacci_point_set::<f64>(index).unwrap();
            for r in [2u32, 3] {
                for _ in 0..5 {
                    let b = random_admissible_box(&mut rng, r);
                    let z = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
                    let trunc = SpectralTruncation::certify(index, &b, 2048).unwrap();
                    let direct = error_direct(&pts, &b, &z).unwrap();
                    let spectral = error_spectral(index, &b, &z, &trunc).unwrap();
                    assert!(
                        (direct - spectral).abs() <= trunc.certified_tail + 1e-9,
                        "n={n} r={r}: |{direct} - {spectral}| > tail {}",
                        trunc.certified_tail
                    );
                }
            }
        }
    }

    #[test]
    fn spectral_close_agreement_at_large_cutoff() {
        // tight truncation: |spectral - direct| within 1e-7
        let index = idx(10);
        let pts = fibonacci_point_set::<f64>(index).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let b = random_admissible_box(&mut rng, 2);
            let z = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let trunc = SpectralTruncation::certify(index, &b, 16384).unwrap();
            assert!(
                trunc.certified_tail <= 2e-7,
                "tail {}",
                trunc.certified_tail
            );
            let gap = (error_direct(&pts, &b, &z).unwrap()
                - error_spectral(index, &b, &z, &trunc).unwrap())
            .abs();
            assert!(gap <= trunc.certified_tail + 1e-9);
            worst = worst.max(gap);
        }
        assert!(worst <= 1e-7, "worst gap {worst}");
    }

    #[test]
    fn parseval_desk_value() {
        let pts = fibonacci_point_set::<f64>(idx(2)).unwrap();
        let b = SmoothBox::new(1, vec![0.25, 0.25], vec![0.5, 0.5]).unwrap();
        let res = l2_norm_parseval(&pts, &b).unwrap();
        assert!((res.value - 0.25).abs() <= 1e-15);
        assert_eq!(res.tail_bound, 0.0);
        assert_eq!(res.method, Method::SpectralParseval);
    }

    #[test]
    fn parseval_is_center_independent() {
        let pts = fibonacci_point_set::<f64>(idx(9)).unwrap();
        let a = SmoothBox::new(2, vec![0.17, 0.62], vec![0.3, 0.21]).unwrap();
        let b = SmoothBox::new(2, vec![0.91, 0.05], vec![0.3, 0.21]).unwrap();
        assert_eq!(
            l2_norm_parseval(&pts, &a).unwrap().value,
            l2_norm_parseval(&pts, &b).unwrap().value
        );
    }

    #[test]
    fn truncated_series_approaches_exact_within_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for n in [6u32, 9, 11] {
            let index = idx(n);
            let pts = fibonacci_point_set::<f64>(index).unwrap();
            for r in [1u32, 2] {
                let b = random_admissible_box(&mut rng, r);
                let exact = l2_norm_parseval(&pts, &b).unwrap().value;
                let mut prev_tail = f64::INFINITY;
                for k in [64i64, 256, 1024] {
                    let trunc = SpectralTruncation {
                        cutoff: k,
                        certified_tail: 0.0,
                    };
                    let series = l2_norm_series(index, &b, &trunc).unwrap();
                    assert!(
                        (series.value - exact).abs() <= series.tail_bound + 1e-12,
                        "n={n} r={r} k={k}: |{} - {exact}| > {}",
                        series.value,
                        series.tail_bound
                    );
                    assert!(series.value <= exact + 1e-12); // partial sums increase
                    assert!(series.tail_bound <= prev_tail);
                    prev_tail = series.tail_bound;
                }
            }
        }
    }

    #[test]
    fn grid_l2_matches_parseval_within_one_percent() {
        let index = idx(10);
        let pts = fibonacci_point_set::<f64>(index).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..5 {
            let b = random_admissible_box(&mut rng, 2);
            let exact = l2_norm_parseval(&pts, &b).unwrap().value;
            let grid = lp_norm_grid(&pts, &b, PNorm::Finite(2.0), 256)
                .unwrap()
                .value;
            assert!(
                (grid - exact).abs() <= 0.01 * exact,
                "grid {grid} vs parseval {exact}"
            );
        }
    }

    #[test]
    fn grid_norms_are_monotone_in_p() {
        let index = idx(9);
        let pts = fibonacci_point_set::<f64>(index).unwrap();
        let b = SmoothBox::new(2, vec![0.35, 0.2], vec![0.28, 0.17]).unwrap();
        let ps = [
            PNorm::Finite(1.0),
            PNorm::Finite(2.0),
            PNorm::Finite(4.0),
            PNorm::Infinity,
        ];
        let norms: Vec<f64> = ps
            .iter()
            .map(|&p| lp_norm_grid(&pts, &b, p, 128).unwrap().value)
            .collect();
        for w in norms.windows(2) {
            assert!(w[0] <= w[1] + 1e-14, "{norms:?} not monotone");
        }
    }

    #[test]
    fn sup_norm_grid_attains_desk_value() {
        // the n=2 quarter square: |E| max is 1/4, attained at z = 0
        let pts = fibonacci_point_set::<f64>(idx(2)).unwrap();
        let b = SmoothBox::new(1, vec![0.5, 0.5], vec![0.5, 0.5]).unwrap();
        let res = lp_norm_grid(&pts, &b, PNorm::Infinity, 16).unwrap();
        assert_eq!(res.value, 0.25);
    }

    #[test]
    fn spectral_grid_agrees_with_direct_grid() {
        let index = idx(8);
        let pts = fibonacci_point_set::<f64>(index).unwrap();
        let b = SmoothBox::new(2, vec![0.3, 0.55], vec![0.22, 0.31]).unwrap();
        let trunc = SpectralTruncation::certify(index, &b, 4096).unwrap();
        for p in [PNorm::Finite(2.0), PNorm::Infinity] {
            let d = lp_norm_grid(&pts, &b, p, 16).unwrap();
            let s = lp_norm_grid_spectral(index, &b, p, 16, &trunc).unwrap();
            assert!(
                (d.value - s.value).abs() <= trunc.certified_tail + 1e-9,
                "{:?}: {} vs {}",
                p,
                d.value,
                s.value
            );
            assert_eq!(s.method, Method::SpectralGrid);
        }
    }

    #[test]
    fn certified_tail_monotone_and_small_at_desk_point() {
        let b = SmoothBox::new(2, vec![0.5, 0.5], vec![0.5, 0.5]).unwrap();
        let index = idx(10);
        let mut prev = f64::INFINITY;
        for k in [256i64, 512, 1024, 2048, 4096, 8192] {
            let tail = certify_tail(&b, index, k).unwrap();
            assert!(tail > 0.0 && tail <= prev, "k={k}: {tail} vs prev {prev}");
            prev = tail;
        }
        // the honest bound at K=2048 sits just above 1e-6; it drops below at 8192
        assert!(certify_tail(&b, index, 2048).unwrap() <= 2e-6);
        assert!(certify_tail(&b, index, 8192).unwrap() <= 1e-6);
    }

    #[test]
    fn certified_tail_r1_is_finite() {
        let b = SmoothBox::new(1, vec![0.5, 0.5], vec![0.4, 0.4]).unwrap();
        for n in [4u32, 10, 20, 40] {
            let tail = certify_tail(&b, idx(n), 100).unwrap();
            assert!(tail.is_finite() && tail > 0.0);
        }
    }

    #[test]
    fn shell_energy_vanishes_below_min_norm() {
        let index = idx(12);
        let min_norm = crate::lattice::min_hyperbolic_norm(index).unwrap();
        let b = SmoothBox::new(2, vec![0.5, 0.5], vec![0.3, 0.14]).unwrap();
        for t in 0..=10u32 {
            for s in DyadicShell::all_at_level(2, t) {
                let e = shell_l2_energy(index, &b, &s).unwrap();
                if (t as f64).exp2() <= min_norm as f64 {
                    assert_eq!(e, 0.0, "shell {s:?} should be silent");
                }
            }
        }
    }

    #[test]
    fn shell_energies_recompose_the_series() {
        // sum over the (T+1)^2 low shells == truncated series over the box 2^T - 1
        let index = idx(7);
        let b: SmoothBox<f64> = SmoothBox::new(2, vec![0.4, 0.6], vec![0.21, 0.33]).unwrap();
        let t_cap = 7u32;
        let mut total = 0.0f64;
        for s1 in 0..=t_cap {
            for s2 in 0..=t_cap {
                let s = DyadicShell::new(vec![s1, s2]).unwrap();
                total += shell_l2_energy(index, &b, &s).unwrap().powi(2);
            }
        }
        let trunc = SpectralTruncation {
            cutoff: (1i64 << t_cap) - 1,
            certified_tail: 0.0,
        };
        let series = l2_norm_series(index, &b, &trunc).unwrap().value;
        assert_relative_eq!(total.sqrt(), series, max_relative = 1e-12);
    }

    #[test]
    fn shell_energy_bounded_by_counted_majorant() {
        use crate::splines::shell_majorant;
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for n in [8u32, 11] {
            let index = idx(n);
            for _ in 0..20 {
                let r = rng.gen_range(1..=3);
                let b = random_admissible_box(&mut rng, r);
                let t = rng.gen_range(0..=12u32);
                for s in DyadicShell::all_at_level(2, t) {
                    let members = shell_members_in_dual(index, &s)
                        .unwrap()
                        .iter()
                        .filter(|k| !k.is_zero())
                        .count();
                    let e = shell_l2_energy(index, &b, &s).unwrap();
                    let bound = (members as f64).sqrt() * shell_majorant(&b, &s);
                    assert!(e <= bound + 1e-12, "n={n} s={s:?}: {e} > {bound}");
                }
            }
        }
    }

    #[test]
    fn periodic_sup_desk_value_and_square_membership() {
        let res =
            fixed_volume_discrepancy_periodic::<f64>(idx(2), 1, 0.25, PNorm::Finite(2.0), 1, 0)
                .unwrap();
        assert!((res.value - 0.25).abs() <= 1e-12);
        assert_eq!(res.argmax_shape, vec![0.5, 0.5]); // the square shape

        // the sup over more shapes dominates the square-only value
        let wide =
            fixed_volume_discrepancy_periodic::<f64>(idx(8), 2, 0.25, PNorm::Finite(2.0), 9, 0)
                .unwrap();
        let square =
            fixed_volume_discrepancy_periodic::<f64>(idx(8), 2, 0.25, PNorm::Finite(2.0), 1, 0)
                .unwrap();
        assert!(wide.value >= square.value - 1e-15);
        assert_eq!(wide.shape_samples, 9);
    }

    #[test]
    fn periodic_sup_rejects_infeasible_volume() {
        let err =
            fixed_volume_discrepancy_periodic::<f64>(idx(8), 2, 1.5, PNorm::Finite(2.0), 3, 0);
        assert!(matches!(err, Err(Error::InfeasibleVolume { .. })));
        let err0 =
            fixed_volume_discrepancy_periodic::<f64>(idx(8), 2, 0.0, PNorm::Finite(2.0), 3, 0);
        assert!(matches!(err0, Err(Error::InfeasibleVolume { .. })));
    }

    #[test]
    fn nonperiodic_desk_lower_bound_and_nesting() {
        // the interior box [0.25, 0.75)^2 is among the candidates
        let res = fixed_volume_discrepancy_nonperiodic::<f64>(idx(2), 1, 0.25, 1, 3).unwrap();
        assert!(res.value >= 0.25 - 1e-12);

        // nested grids never lose mass
        let coarse = fixed_volume_discrepancy_nonperiodic::<f64>(idx(8), 2, 0.25, 5, 9).unwrap();
        let fine = fixed_volume_discrepancy_nonperiodic::<f64>(idx(8), 2, 0.25, 9, 17).unwrap();
        assert!(fine.value >= coarse.value - 1e-15);
    }

    #[test]
    fn discrepancy_decreases_with_n_at_fixed_shape() {
        // empirical regression guard: one inversion allowed
        let values: Vec<f64> = (8..=16)
            .map(|n| {
                fixed_volume_discrepancy_periodic::<f64>(idx(n), 2, 0.25, PNorm::Finite(2.0), 1, 0)
                    .unwrap()
                    .value
            })
            .collect();
        let inversions = values.windows(2).filter(|w| w[1] >= w[0]).count();
        assert!(inversions <= 1, "values {values:?}");
    }

    #[test]
    fn pnorm_parsing() {
        assert_eq!(PNorm::parse("inf").unwrap(), PNorm::Infinity);
        assert_eq!(PNorm::parse("2").unwrap(), PNorm::Finite(2.0));
        assert!(PNorm::parse("0.5").is_err());
        assert!(PNorm::parse("nope").is_err());
        assert_eq!(PNorm::Infinity.to_string(), "inf");
        assert_eq!(PNorm::Finite(2.0).to_string(), "2");
    }

    #[test]
    fn fib_reexport_sanity() {
        // spot check that the module wiring matches the lattice constants
        assert_eq!(fib(10).unwrap(), 89);
    }
}
