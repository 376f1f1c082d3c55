//! Smooth hat test functions and their Fourier analysis.
//!
//! The order-r hat `h^r_u` is the r-fold self-convolution of the indicator
//! of `[-u/2, u/2)`: equivalently `u^{r-1} M_r(x/u)` with `M_r` the centered
//! cardinal B-spline. It is nonnegative, supported on `(-ru/2, ru/2)`, has
//! integral `u^r`, smoothness `r` in `L_1`, and the closed-form transform
//! `(sin(pi y u)/(pi y))^r`. Tensor products over a box `B` with center `z`
//! and base widths `u` make the test functions whose cubature error defines
//! the fixed-volume discrepancy.
//!
//! The shell majorant `H^r_B(s)` bounds every Fourier coefficient of the
//! periodized hat over the dyadic shell `rho(s)`; `sigma_sum` aggregates the
//! axis factors over all shells of a fixed level, which is what the
//! upper-bound bookkeeping needs.

mod table;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::lattice::DyadicShell;
use crate::sum::PairwiseBuffer;
use crate::Real;

/// Largest supported smoothness order for exact piece tables.
pub const MAX_SMOOTHNESS: u32 = 24;

/// A univariate hat function `h^r_u`: smoothness order `r`, base width `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatSpec<T> {
    r: u32,
    u: T,
}

impl<T: Real> HatSpec<T> {
    pub fn new(r: u32, u: T) -> Result<Self> {
        if r == 0 || r > MAX_SMOOTHNESS {
            return Err(Error::InvalidOrder {
                r,
                max: MAX_SMOOTHNESS,
            });
        }
        if !u.is_finite() || u <= T::zero() {
            return Err(Error::InvalidWidth {
                u: u.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { r, u })
    }

    pub fn order(&self) -> u32 {
        self.r
    }

    pub fn width(&self) -> T {
        self.u
    }

    /// Support is `(-r*u/2, r*u/2)`.
    pub fn support_halfwidth(&self) -> T {
        T::from_u32(self.r).unwrap() * self.u * T::from_f64(0.5).unwrap()
    }
}

/// Exact value of `h^r_u(x)`.
///
/// Evaluates the piecewise polynomial `u^{r-1} M_r(x/u)` as a sum of
/// monomials `c_i * x_local^i * u^{r-1-i}` with exact rational `c_i`, so the
/// order-2 case reproduces `max(u - |x|, 0)` to the last bit. The `r = 1`
/// indicator keeps the half-open convention `[-u/2, u/2)`.
pub fn hat_eval<T: Real>(spec: &HatSpec<T>, x: T) -> T {
    let r = spec.r as usize;
    let u = spec.u;
    let half = T::from_f64(0.5).unwrap();
    let y = x / u + T::from_u32(spec.r).unwrap() * half;
    if y < T::zero() || y.is_nan() {
        return T::zero();
    }
    let j = match y.floor().to_usize() {
        Some(j) if j < r => j,
        _ => return T::zero(),
    };
    let knot = T::from_i64(2 * j as i64 - r as i64).unwrap() * half;
    let x_local = x - u * knot;

    let table = table::spline_table(spec.r);
    let coeffs = &table.pieces[j];
    let mut upows = [T::one(); MAX_SMOOTHNESS as usize];
    for i in 1..r {
        upows[i] = upows[i - 1] * u;
    }
    let mut acc = T::zero();
    let mut xpow = T::one();
    for (i, &c) in coeffs.iter().enumerate() {
        acc = acc + T::from_f64(c).unwrap() * xpow * upows[r - 1 - i];
        xpow = xpow * x_local;
    }
    acc.max(T::zero())
}

/// Fourier transform of `h^r_u`: `(sin(pi y u)/(pi y))^r` for `y != 0`,
/// `u^r` at `y = 0`. Real for all `y` by evenness.
pub fn hat_fourier<T: Real>(spec: &HatSpec<T>, y: T) -> T {
    if y == T::zero() {
        spec.u.powi(spec.r as i32)
    } else {
        let pi_y = T::PI() * y;
        ((pi_y * spec.u).sin() / pi_y).powi(spec.r as i32)
    }
}

/// Periodization of `h^r_u` (period 1), evaluated at any real offset.
/// Valid for side lengths `r*u <= 2`, where at most the translates
/// `m in {-1, 0, 1}` of the wrapped offset contribute.
pub(crate) fn periodized_axis_eval<T: Real>(spec: &HatSpec<T>, delta: T) -> T {
    let d = delta - delta.floor();
    hat_eval(spec, d - T::one()) + hat_eval(spec, d) + hat_eval(spec, d + T::one())
}

/// An axis-parallel box of order `r`: center `z`, base widths `u`, side
/// lengths `r*u_j`, carrying the tensor-product hat `h^r_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothBox<T> {
    r: u32,
    z: Vec<T>,
    u: Vec<T>,
}

/// Slack for admissibility checks: shape grids hit `u = 1/r` only up to one
/// rounding of `exp(ln(1/r))`.
const ADMISSIBILITY_SLACK: f64 = 1e-12;

impl<T: Real> SmoothBox<T> {
    pub fn new(r: u32, z: Vec<T>, u: Vec<T>) -> Result<Self> {
        if r == 0 || r > MAX_SMOOTHNESS {
            return Err(Error::InvalidOrder {
                r,
                max: MAX_SMOOTHNESS,
            });
        }
        if z.is_empty() || z.len() != u.len() {
            return Err(Error::DimensionMismatch {
                expected: z.len().max(1),
                got: u.len(),
            });
        }
        for &uj in &u {
            if !uj.is_finite() || uj <= T::zero() {
                return Err(Error::InvalidWidth {
                    u: uj.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self { r, z, u })
    }

    pub fn order(&self) -> u32 {
        self.r
    }

    pub fn center(&self) -> &[T] {
        &self.z
    }

    pub fn widths(&self) -> &[T] {
        &self.u
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn axis_spec(&self, axis: usize) -> HatSpec<T> {
        HatSpec {
            r: self.r,
            u: self.u[axis],
        }
    }

    /// `prod_j u_j`.
    pub fn width_product(&self) -> T {
        self.u.iter().fold(T::one(), |acc, &u| acc * u)
    }

    /// Volume of the support box: `prod_j r*u_j`.
    pub fn volume(&self) -> T {
        let r = T::from_u32(self.r).unwrap();
        self.u.iter().fold(T::one(), |acc, &u| acc * r * u)
    }

    /// Periodic admissibility: every side `r*u_j <= 1`.
    pub fn is_periodic_admissible(&self) -> bool {
        let bound = T::one() + T::from_f64(ADMISSIBILITY_SLACK).unwrap();
        let r = T::from_u32(self.r).unwrap();
        self.u.iter().all(|&u| r * u <= bound)
    }

    pub(crate) fn require_periodic_admissible(&self) -> Result<()> {
        let bound = T::one() + T::from_f64(ADMISSIBILITY_SLACK).unwrap();
        let r = T::from_u32(self.r).unwrap();
        for (axis, &u) in self.u.iter().enumerate() {
            let width = r * u;
            if width > bound {
                return Err(Error::NotPeriodicAdmissible {
                    axis,
                    width: width.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(())
    }

    /// Whether the support box lies inside `[0,1)^d`.
    pub fn is_inside_unit_cube(&self) -> bool {
        let r = T::from_u32(self.r).unwrap();
        let half = T::from_f64(0.5).unwrap();
        self.z.iter().zip(&self.u).all(|(&z, &u)| {
            let hw = r * u * half;
            z - hw >= T::zero() && z + hw <= T::one()
        })
    }
}

/// `h^r_B(x) = prod_j h^r_{u_j}(x_j - z_j)`.
pub fn box_hat_eval<T: Real>(b: &SmoothBox<T>, x: &[T]) -> T {
    assert_eq!(b.dim(), x.len(), "dimension mismatch");
    let mut acc = T::one();
    for (j, &xj) in x.iter().enumerate() {
        acc = acc * hat_eval(&b.axis_spec(j), xj - b.z[j]);
        if acc == T::zero() {
            return T::zero();
        }
    }
    acc
}

/// `int h^r_B = prod_j u_j^r`, the transform at frequency zero.
pub fn box_hat_integral<T: Real>(b: &SmoothBox<T>) -> T {
    b.width_product().powi(b.r as i32)
}

/// Periodized tensor hat evaluated at `x` on the torus. Requires periodic
/// admissibility `r*u_j <= 1`, so at most one wrap per axis contributes.
pub fn periodized_box_hat_eval<T: Real>(b: &SmoothBox<T>, x: &[T]) -> Result<T> {
    if x.len() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            got: x.len(),
        });
    }
    b.require_periodic_admissible()?;
    let mut acc = T::one();
    for (j, &xj) in x.iter().enumerate() {
        acc = acc * periodized_axis_eval(&b.axis_spec(j), xj - b.z[j]);
        if acc == T::zero() {
            return Ok(T::zero());
        }
    }
    Ok(acc)
}

/// Fourier coefficient of the periodized box hat:
/// `e^{-i 2 pi (k, z)} * prod_j hat_fourier(r, u_j; k_j)`.
pub fn periodized_fourier_coeff<T: Real>(b: &SmoothBox<T>, k: &[i64]) -> Complex<T> {
    assert_eq!(b.dim(), k.len(), "dimension mismatch");
    let mut magnitude = T::one();
    let mut dot = T::zero();
    for (j, &kj) in k.iter().enumerate() {
        let kj = T::from_i64(kj).unwrap();
        magnitude = magnitude * hat_fourier(&b.axis_spec(j), kj);
        dot = dot + kj * b.z[j];
    }
    let angle = -(T::PI() + T::PI()) * dot;
    Complex::new(angle.cos() * magnitude, angle.sin() * magnitude)
}

/// Shell majorant `H^r_B(s)`: uniform bound on `|coefficient|` over the
/// dyadic shell `rho(s)` for admissible boxes,
/// `(pr(u)/2^t)^{r/2} * prod_j min((2^{s_j} u_j)^{r/2}, (2^{s_j} u_j)^{-r/2})`
/// with `t = ||s||_1`.
pub fn shell_majorant<T: Real>(b: &SmoothBox<T>, s: &DyadicShell) -> T {
    assert_eq!(b.dim(), s.dim(), "dimension mismatch");
    let half_r = T::from_u32(b.r).unwrap() * T::from_f64(0.5).unwrap();
    let level = T::from_f64((s.level() as f64).exp2()).unwrap();
    let lead = (b.width_product() / level).powf(half_r);
    let mut prod = T::one();
    for (j, &sj) in s.components().iter().enumerate() {
        let w = T::from_f64((sj as f64).exp2()).unwrap() * b.u[j];
        let p = w.powf(half_r);
        prod = prod * p.min(p.recip());
    }
    lead * prod
}

/// `sigma^r_u(t)`: sum over all shells `s` with `||s||_1 = t` of
/// `prod_j min((2^{s_j} u_j)^{r/2}, (2^{s_j} u_j)^{-r/2})`.
/// The smoothness exponent `r` may be any positive real.
pub fn sigma_sum<T: Real>(r: T, u: &[T], t: u32) -> T {
    assert!(!u.is_empty(), "sigma_sum needs d >= 1");
    assert!(r > T::zero(), "sigma_sum needs r > 0");
    let half_r = r * T::from_f64(0.5).unwrap();
    // per-axis factor for each admissible component value
    let factors: Vec<Vec<T>> = u
        .iter()
        .map(|&uj| {
            (0..=t)
                .map(|s| {
                    let w = T::from_f64((s as f64).exp2()).unwrap() * uj;
                    let p = w.powf(half_r);
                    p.min(p.recip())
                })
                .collect()
        })
        .collect();

    let mut total = PairwiseBuffer::new();
    let d = u.len();
    // walk compositions of t into d parts
    let mut parts = vec![0u32; d];
    fn walk<T: Real>(
        factors: &[Vec<T>],
        parts: &mut [u32],
        axis: usize,
        rest: u32,
        prefix: T,
        total: &mut PairwiseBuffer<T>,
    ) {
        if axis + 1 == parts.len() {
            total.push(prefix * factors[axis][rest as usize]);
            return;
        }
        for v in 0..=rest {
            walk(
                factors,
                parts,
                axis + 1,
                rest - v,
                prefix * factors[axis][v as usize],
                total,
            );
        }
    }
    walk(&factors, &mut parts, 0, t, T::one(), &mut total);
    total.finish()
}
