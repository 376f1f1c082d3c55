//! Piecewise-polynomial tables for cardinal B-splines.
//!
//! The order-r spline is built once by symbolic convolution with the unit
//! indicator, in exact rational arithmetic, then frozen to `f64`
//! coefficients. Tables are immutable after construction and shared across
//! threads.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num::rational::BigRational;
use num::{BigInt, One, ToPrimitive, Zero};

/// Uncentered cardinal B-spline of order `r`: support `[0, r]`, integer
/// knots. Piece `j` covers `[j, j+1)` with coefficients in the local
/// variable `xi = x - j`.
pub(crate) struct SplineTable {
    pub(crate) pieces: Vec<Vec<f64>>,
}

fn integrate_pieces(pieces: &[Vec<BigRational>]) -> (Vec<Vec<BigRational>>, BigRational) {
    // antiderivative with A(0) = 0, continuous across knots
    let mut anti = Vec::with_capacity(pieces.len());
    let mut carry = BigRational::zero();
    for q in pieces {
        let mut a = vec![BigRational::zero(); q.len() + 1];
        a[0] = carry.clone();
        for (i, qi) in q.iter().enumerate() {
            a[i + 1] = qi / BigRational::from_integer(BigInt::from(i as i64 + 1));
        }
        carry = a.iter().fold(BigRational::zero(), |s, v| s + v); // A_j(1)
        anti.push(a);
    }
    (anti, carry)
}

/// One convolution step: `B_{r}(x) = A(x) - A(x-1)` for `A' = B_{r-1}`.
fn convolve_with_indicator(pieces: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let m = pieces.len();
    let (anti, total) = integrate_pieces(pieces);
    let mut out = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let upper: &[BigRational] = if j < m {
            &anti[j]
        } else {
            std::slice::from_ref(&total)
        };
        let lower: &[BigRational] = if j == 0 { &[] } else { &anti[j - 1] };
        let len = upper.len().max(lower.len());
        let mut p = vec![BigRational::zero(); len];
        for (i, pi) in p.iter_mut().enumerate() {
            let hi = upper.get(i).cloned().unwrap_or_else(BigRational::zero);
            let lo = lower.get(i).cloned().unwrap_or_else(BigRational::zero);
            *pi = hi - lo;
        }
        out.push(p);
    }
    out
}

fn build(order: u32) -> SplineTable {
    let mut exact: Vec<Vec<BigRational>> = vec![vec![BigRational::one()]];
    for _ in 2..=order {
        exact = convolve_with_indicator(&exact);
    }
    SplineTable {
        pieces: exact
            .into_iter()
            .map(|p| p.into_iter().map(|c| c.to_f64().unwrap()).collect())
            .collect(),
    }
}

static TABLES: OnceLock<Mutex<HashMap<u32, Arc<SplineTable>>>> = OnceLock::new();

pub(crate) fn spline_table(order: u32) -> Arc<SplineTable> {
    let cache = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(order)
        .or_insert_with(|| Arc::new(build(order)))
        .clone()
}
