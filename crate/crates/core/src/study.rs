//! Numerical scaling studies: discrepancy values against their expected
//! normalizers, worst-box profiles over the volume, and the measured
//! constants behind the shell bounds.
//!
//! The theory predicts `D~^r_p <= C sqrt(log(b_n v)) / b_n^r` for finite `p`
//! and a `log(b_n v)` normalizer for the sup norm and the non-periodic
//! case, with unspecified constants. The tables report the empirical ratio
//! `value * b_n^r / normalizer` per `(n, v)`; bounded ratio spread across
//! `n` is the testable surrogate of those laws. Natural logs throughout
//! (spread criteria are base-invariant); rows with `b_n * v <= e` are
//! rejected so normalizers stay away from zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::discrepancy::{
    fixed_volume_discrepancy_nonperiodic, fixed_volume_discrepancy_periodic, Method, PNorm,
};
use crate::error::{Error, Result};
use crate::lattice::{
    min_hyperbolic_norm, shell_members_in_dual, smallest_shell_level, DyadicShell, FibIndex,
};
use crate::splines::{shell_majorant, sigma_sum, SmoothBox};
use crate::Scalar;

/// Which discrepancy a study row measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Setting {
    Periodic(PNorm),
    NonPeriodic,
}

impl Setting {
    /// Label for the `p` column: the exponent, `inf`, or `sup` for the
    /// non-periodic (shift-free) discrepancy.
    pub fn p_label(&self) -> String {
        match self {
            Setting::Periodic(p) => p.to_string(),
            Setting::NonPeriodic => "sup".to_string(),
        }
    }

    fn normalizer(&self, log_bv: f64) -> f64 {
        match self {
            Setting::Periodic(PNorm::Finite(_)) => log_bv.sqrt(),
            Setting::Periodic(PNorm::Infinity) | Setting::NonPeriodic => log_bv,
        }
    }
}

/// Volume selection for scaling tables.
#[derive(Debug, Clone, PartialEq)]
pub enum VolumePolicy {
    Fixed(f64),
    /// `v = min(1, c0 / b_n)`; requires `c0 >= 16` so `b_n * v` keeps a
    /// healthy margin over `e`.
    Proportional(f64),
    List(Vec<f64>),
}

impl VolumePolicy {
    fn volumes(&self, b_n: i64) -> Result<Vec<f64>> {
        match self {
            VolumePolicy::Fixed(v) => Ok(vec![*v]),
            VolumePolicy::Proportional(c0) => {
                if *c0 < 16.0 {
                    return Err(Error::InvalidParameter(format!(
                        "proportional volume factor must be >= 16, got {c0}"
                    )));
                }
                Ok(vec![(c0 / b_n as f64).min(1.0)])
            }
            VolumePolicy::List(vs) => {
                let mut vs = vs.clone();
                vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                vs.dedup();
                Ok(vs)
            }
        }
    }
}

/// Grid resolutions used by the study pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyGrids {
    /// Aspect ratios scanned per volume.
    pub shapes: u32,
    /// Shift grid per axis for `p != 2`.
    pub shifts: u32,
    /// Center grid per axis for the non-periodic discrepancy.
    pub centers: u32,
}

impl Default for StudyGrids {
    fn default() -> Self {
        Self {
            shapes: 33,
            shifts: 256,
            centers: 64,
        }
    }
}

/// One scaling-table row: the discrepancy at `(n, v)` with its normalizer
/// and the empirical constant `ratio = value * b_n^r / normalizer`.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub n: u32,
    pub b_n: i64,
    pub r: u32,
    pub setting: Setting,
    pub v: f64,
    pub value: f64,
    pub normalizer: f64,
    pub ratio: f64,
    pub method: Method,
    pub shapes: u32,
    pub grid: u32,
    pub cutoff: i64,
    pub tail: f64,
}

fn make_row(
    index: FibIndex,
    r: u32,
    setting: Setting,
    v: f64,
    grids: StudyGrids,
) -> Result<Option<StudyRow>> {
    let log_bv = (index.count() as f64 * v).ln();
    if log_bv <= 1.0 {
        return Ok(None); // normalizer too close to zero; row rejected
    }
    let res = match setting {
        Setting::Periodic(p) => {
            let shifts = grids.shifts;
            fixed_volume_discrepancy_periodic::<Scalar>(index, r, v, p, grids.shapes, shifts)?
        }
        Setting::NonPeriodic => fixed_volume_discrepancy_nonperiodic::<Scalar>(
            index,
            r,
            v,
            grids.shapes,
            grids.centers,
        )?,
    };
    let normalizer = setting.normalizer(log_bv);
    let ratio = res.value * (index.count() as f64).powi(r as i32) / normalizer;
    Ok(Some(StudyRow {
        n: index.n(),
        b_n: index.count(),
        r,
        setting,
        v,
        value: res.value,
        normalizer,
        ratio,
        method: res.method,
        shapes: res.shape_samples,
        grid: res.grid,
        cutoff: res.cutoff,
        tail: res.tail_bound,
    }))
}

/// One row per admissible `(n, v)`, n ascending then v ascending.
pub fn scaling_table(
    r: u32,
    setting: Setting,
    n_range: (u32, u32),
    policy: &VolumePolicy,
    grids: StudyGrids,
) -> Result<Vec<StudyRow>> {
    let (lo, hi) = n_range;
    if lo < 2 || hi < lo {
        return Err(Error::InvalidParameter(format!(
            "index range must satisfy 2 <= lo <= hi, got {lo}..{hi}"
        )));
    }
    let mut jobs = Vec::new();
    for n in lo..=hi {
        let index = FibIndex::new(n)?;
        for v in policy.volumes(index.count())? {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InfeasibleVolume { v });
            }
            jobs.push((index, v));
        }
    }
    let rows: Vec<Option<StudyRow>> = jobs
        .par_iter()
        .map(|&(index, v)| make_row(index, r, setting, v, grids))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<StudyRow> = rows.into_iter().flatten().collect();
    if rows.is_empty() {
        return Err(Error::EmptyStudyGrid);
    }
    Ok(rows)
}

/// One row of a worst-box profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub v: f64,
    pub value: f64,
    pub argmax_shape: [f64; 2],
    pub normalizer: f64,
    pub ratio: f64,
}

/// Per-volume worst discrepancy and the shape attaining it: where the large
/// normalized discrepancy lives across `v`.
pub fn worst_box_profile(
    index: FibIndex,
    r: u32,
    setting: Setting,
    v_grid: &[f64],
    grids: StudyGrids,
) -> Result<Vec<ProfileRow>> {
    if v_grid.is_empty() {
        return Err(Error::InvalidParameter("empty volume grid".into()));
    }
    let mut vs = v_grid.to_vec();
    vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vs.dedup();
    let rows: Vec<Option<ProfileRow>> = vs
        .par_iter()
        .map(|&v| -> Result<Option<ProfileRow>> {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InfeasibleVolume { v });
            }
            let log_bv = (index.count() as f64 * v).ln();
            if log_bv <= 1.0 {
                return Ok(None);
            }
            let res = match setting {
                Setting::Periodic(p) => fixed_volume_discrepancy_periodic::<Scalar>(
                    index,
                    r,
                    v,
                    p,
                    grids.shapes,
                    grids.shifts,
                )?,
                Setting::NonPeriodic => fixed_volume_discrepancy_nonperiodic::<Scalar>(
                    index,
                    r,
                    v,
                    grids.shapes,
                    grids.centers,
                )?,
            };
            let normalizer = setting.normalizer(log_bv);
            Ok(Some(ProfileRow {
                v,
                value: res.value,
                argmax_shape: [res.argmax_shape[0], res.argmax_shape[1]],
                normalizer,
                ratio: res.value * (index.count() as f64).powi(r as i32) / normalizer,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<ProfileRow> = rows.into_iter().flatten().collect();
    if rows.is_empty() {
        return Err(Error::EmptyStudyGrid);
    }
    Ok(rows)
}

/// One row of the minimal-hyperbolic-norm table.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaRow {
    pub n: u32,
    pub b_n: i64,
    pub min_norm: i64,
    pub ratio: f64,
}

/// Exact minimal hyperbolic norms over the dual lattice and their ratios to
/// `b_n`. Exhaustive search; capped at `n <= 20`.
pub fn gamma_table(n_range: (u32, u32)) -> Result<Vec<GammaRow>> {
    let (lo, hi) = n_range;
    if lo < 3 || hi < lo || hi > 20 {
        return Err(Error::InvalidParameter(format!(
            "gamma table needs 3 <= lo <= hi <= 20, got {lo}..{hi}"
        )));
    }
    (lo..=hi)
        .map(|n| {
            let index = FibIndex::new(n)?;
            let min_norm = min_hyperbolic_norm(index)?;
            Ok(GammaRow {
                n,
                b_n: index.count(),
                min_norm,
                ratio: min_norm as f64 / index.count() as f64,
            })
        })
        .collect()
}

/// Measured lower bound for the lemma constant: min over `n in 5..=10` of
/// `min_hyperbolic_norm(n)/b_n`.
pub fn gamma_hat() -> f64 {
    (5..=10u32)
        .map(|n| {
            let index = FibIndex::new(n).unwrap();
            min_hyperbolic_norm(index).unwrap() as f64 / index.count() as f64
        })
        .fold(f64::INFINITY, f64::min)
}

/// Measured constants behind the shell bounds, with the inputs attaining
/// each maximum. Deterministic for a fixed seed; samples are drawn from one
/// stream, so a larger `samples` extends a smaller run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub seed: u64,
    pub samples: u32,
    pub r: u32,
    pub d: usize,
    /// Max of `sigma^r_u(t) (2^t pr(u))^{r/2} / log2(2^{t+1} pr(u))^{d-1}`.
    pub sigma_c: f64,
    pub sigma_argmax: (Vec<f64>, u32),
    /// Max of `sum_{|s|=t} H^2 / (2^{-2rt} log2(2^t v)^{d-1})`, d = 2.
    pub majorant_sum_c1: f64,
    pub majorant_sum_argmax: (Vec<f64>, u32),
    /// Max of `#(rho(s) ∩ L(n)) / 2^{t - t0}` at the reference index n = 8.
    pub shell_count_c2: f64,
    pub shell_count_ref_n: u32,
    pub shell_count_argmax: Vec<u32>,
    /// The measured lemma ratio floor used to place `t0`.
    pub gamma_hat: f64,
}

/// Draw `u in (0, 1/2]^d` with `pr(u) >= 2^{-t}` (log-uniform components,
/// rejection with a deterministic fallback).
fn draw_sigma_input(rng: &mut ChaCha8Rng, d: usize, t: u32) -> Vec<f64> {
    for _ in 0..500 {
        let u: Vec<f64> = (0..d)
            .map(|_| (rng.gen_range(-(t as f64)..=-1.0)).exp2())
            .collect();
        if u.iter().product::<f64>() >= (-(t as f64)).exp2() {
            return u;
        }
    }
    vec![(-(t as f64) / d as f64).exp2().min(0.5); d]
}

/// Measure the constants over `samples` randomized admissible inputs.
pub fn bound_constants_report(
    r: u32,
    d: usize,
    samples: u32,
    seed: u64,
) -> Result<ConstantsReport> {
    if r == 0 {
        return Err(Error::InvalidOrder { r, max: 12 });
    }
    if !(1..=4).contains(&d) {
        return Err(Error::InvalidParameter(format!(
            "sigma dimension must be in 1..=4, got {d}"
        )));
    }
    if samples < 50 {
        return Err(Error::InvalidParameter(format!(
            "need at least 50 samples, got {samples}"
        )));
    }

    // sigma-sum constant, dimension d
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sigma_c = 0.0f64;
    let mut sigma_argmax = (vec![], 0u32);
    for _ in 0..samples {
        let t = rng.gen_range(d as u32..=18);
        let u = draw_sigma_input(&mut rng, d, t);
        let pr: f64 = u.iter().product();
        let sigma = sigma_sum(r as f64, &u, t);
        let ratio = sigma * ((t as f64).exp2() * pr).powf(r as f64 / 2.0)
            / (((t + 1) as f64).exp2() * pr).log2().powi(d as i32 - 1);
        if ratio > sigma_c {
            sigma_c = ratio;
            sigma_argmax = (u, t);
        }
    }

    // squared-majorant shell-sum constant, d = 2
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut c1 = 0.0f64;
    let mut c1_argmax = (vec![], 0u32);
    for _ in 0..samples {
        let u = vec![
            (rng.gen_range(-9.0..-(r as f64).log2() - 0.01)).exp2(),
            (rng.gen_range(-9.0..-(r as f64).log2() - 0.01)).exp2(),
        ];
        let b = SmoothBox::new(r, vec![0.5, 0.5], u.clone())?;
        let v: f64 = b.volume();
        let t_min = (((r * r) as f64 / v).log2() + 1.0).ceil().max(1.0) as u32;
        let t = t_min + rng.gen_range(0..=8);
        let sum: f64 = DyadicShell::all_at_level(2, t)
            .iter()
            .map(|s| shell_majorant(&b, s).powi(2))
            .sum();
        let denom = (-2.0 * r as f64 * t as f64).exp2() * ((t as f64).exp2() * v).log2().max(1.0);
        let ratio = sum / denom;
        if ratio > c1 {
            c1 = ratio;
            c1_argmax = (u, t);
        }
    }

    // shell-count constant at the reference index
    let ref_n = 8u32;
    let gamma = gamma_hat();
    let index = FibIndex::new(ref_n)?;
    let t0 = smallest_shell_level(index, gamma)?;
    let mut c2 = 0.0f64;
    let mut c2_argmax = vec![0u32, 0];
    for t in t0..=t0 + 6 {
        for s in DyadicShell::all_at_level(2, t) {
            let count = shell_members_in_dual(index, &s)?.len() as f64;
            let ratio = count / ((t - t0) as f64).exp2();
            if ratio > c2 {
                c2 = ratio;
                c2_argmax = s.components().to_vec();
            }
        }
    }

    Ok(ConstantsReport {
        seed,
        samples,
        r,
        d,
        sigma_c,
        sigma_argmax,
        majorant_sum_c1: c1,
        majorant_sum_argmax: c1_argmax,
        shell_count_c2: c2,
        shell_count_ref_n: ref_n,
        shell_count_argmax: c2_argmax,
        gamma_hat: gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(n: u32) -> FibIndex {
        FibIndex::new(n).unwrap()
    }

    fn small_grids() -> StudyGrids {
        StudyGrids {
            shapes: 9,
            shifts: 64,
            centers: 17,
        }
    }

    #[test]
    fn scaling_table_row_shape() {
        let rows = scaling_table(
            2,
            Setting::Periodic(PNorm::Finite(2.0)),
            (8, 12),
            &VolumePolicy::Fixed(0.25),
            small_grids(),
        )
        .unwrap();
        assert_eq!(rows.len(), 5);
        for w in rows.windows(2) {
            assert!(w[0].n < w[1].n);
        }
        for row in &rows {
            assert!(row.ratio.is_finite() && row.ratio > 0.0);
            assert!(row.normalizer > 0.0);
            assert_eq!(row.method, Method::SpectralParseval);
        }
        let single = scaling_table(
            2,
            Setting::Periodic(PNorm::Finite(2.0)),
            (8, 8),
            &VolumePolicy::Fixed(0.25),
            small_grids(),
        )
        .unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn scaling_table_ratio_spread_l2() {
        let rows = scaling_table(
            2,
            Setting::Periodic(PNorm::Finite(2.0)),
            (8, 14),
            &VolumePolicy::Fixed(0.25),
            StudyGrids {
                shapes: 17,
                ..small_grids()
            },
        )
        .unwrap();
        let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        assert!(
            max / min <= 3.0,
            "ratio spread {} exceeds 3: {rows:?}",
            max / min
        );
    }

    #[test]
    fn scaling_table_rejects_degenerate_rows() {
        // b_2 * 0.25 = 0.5 < e: the n = 2 row must be dropped
        let rows = scaling_table(
            1,
            Setting::Periodic(PNorm::Finite(2.0)),
            (2, 8),
            &VolumePolicy::Fixed(0.25),
            small_grids(),
        )
        .unwrap();
        assert!(rows
            .iter()
            .all(|r| r.b_n as f64 * r.v > std::f64::consts::E));
        assert!(rows.iter().all(|r| r.n >= 5));

        // all rows rejected -> domain error
        let err = scaling_table(
            1,
            Setting::Periodic(PNorm::Finite(2.0)),
            (2, 3),
            &VolumePolicy::Fixed(0.25),
            small_grids(),
        );
        assert!(matches!(err, Err(Error::EmptyStudyGrid)));
    }

    #[test]
    fn proportional_policy_keeps_margin() {
        let policy = VolumePolicy::Proportional(16.0);
        for n in [8u32, 12, 16] {
            let index = idx(n);
            let vs = policy.volumes(index.count()).unwrap();
            assert_eq!(vs.len(), 1);
            assert!(index.count() as f64 * vs[0] >= 16.0 - 1e-9);
        }
        assert!(VolumePolicy::Proportional(4.0).volumes(100).is_err());
    }

    #[test]
    fn scaling_table_is_deterministic() {
        let call = || {
            scaling_table(
                2,
                Setting::Periodic(PNorm::Infinity),
                (8, 10),
                &VolumePolicy::List(vec![0.25, 0.5]),
                StudyGrids {
                    shapes: 5,
                    shifts: 32,
                    centers: 9,
                },
            )
            .unwrap()
        };
        assert_eq!(call(), call());
    }

    #[test]
    fn profile_rows_match_scaling_values() {
        let grids = small_grids();
        let index = idx(10);
        let profile = worst_box_profile(
            index,
            2,
            Setting::Periodic(PNorm::Finite(2.0)),
            &[0.125, 0.25],
            grids,
        )
        .unwrap();
        assert_eq!(profile.len(), 2);
        let table = scaling_table(
            2,
            Setting::Periodic(PNorm::Finite(2.0)),
            (10, 10),
            &VolumePolicy::List(vec![0.125, 0.25]),
            grids,
        )
        .unwrap();
        for (p, t) in profile.iter().zip(&table) {
            assert_eq!(p.v, t.v);
            assert_eq!(p.value, t.value);
            assert_eq!(p.ratio, t.ratio);
        }
        // profile exposes a finite positive value near v = 1
        let near_one = worst_box_profile(
            index,
            2,
            Setting::Periodic(PNorm::Finite(2.0)),
            &[0.9],
            grids,
        )
        .unwrap();
        assert!(near_one[0].value > 0.0 && near_one[0].value.is_finite());
    }

    #[test]
    fn profile_ratio_stays_in_band() {
        // regression guard: normalized profile varies by <= 5x over the
        // volume range [16/b_n, 1/4] at n = 12
        let index = idx(12);
        let v_lo = 16.0 / index.count() as f64;
        let vs: Vec<f64> = (0..6)
            .map(|i| {
                let f = i as f64 / 5.0;
                (v_lo.ln() + (0.25f64.ln() - v_lo.ln()) * f).exp()
            })
            .collect();
        let profile = worst_box_profile(
            index,
            2,
            Setting::Periodic(PNorm::Finite(2.0)),
            &vs,
            StudyGrids {
                shapes: 17,
                ..small_grids()
            },
        )
        .unwrap();
        let max = profile.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let min = profile
            .iter()
            .map(|r| r.ratio)
            .fold(f64::INFINITY, f64::min);
        assert!(max / min <= 5.0, "profile spread {}", max / min);
    }

    #[test]
    fn gamma_table_desk_values() {
        let rows = gamma_table((3, 18)).unwrap();
        assert_eq!(rows.len(), 16);
        assert_eq!(rows[0].min_norm, 1); // n = 3
        assert_eq!(rows[1].min_norm, 2); // n = 4: attained at (2, 1)
        assert!((rows[1].ratio - 0.4).abs() < 1e-15);
        for w in rows.windows(2) {
            assert!(w[0].n < w[1].n);
        }
        // ratios never dip below the first three rows' floor
        let floor = rows[..3]
            .iter()
            .map(|r| r.ratio)
            .fold(f64::INFINITY, f64::min);
        for row in &rows {
            assert!(
                row.ratio >= floor - 1e-15,
                "n={} ratio {}",
                row.n,
                row.ratio
            );
        }
        assert!(gamma_table((3, 25)).is_err());
    }

    #[test]
    fn constants_report_is_deterministic_and_nested() {
        let a = bound_constants_report(2, 2, 60, 7).unwrap();
        let b = bound_constants_report(2, 2, 60, 7).unwrap();
        assert_eq!(a, b);

        let bigger = bound_constants_report(2, 2, 120, 7).unwrap();
        assert!(bigger.sigma_c >= a.sigma_c);
        assert!(bigger.majorant_sum_c1 >= a.majorant_sum_c1);
        assert_eq!(bigger.shell_count_c2, a.shell_count_c2); // not sampled

        let c = bound_constants_report(2, 3, 60, 9).unwrap();
        assert!(c.sigma_c > 0.0 && c.sigma_c.is_finite());
        assert!(a.shell_count_c2 >= 1.0);
        assert!(a.gamma_hat > 0.3);
    }

    #[test]
    fn nonperiodic_scaling_runs() {
        let rows = scaling_table(
            2,
            Setting::NonPeriodic,
            (8, 10),
            &VolumePolicy::Fixed(0.25),
            StudyGrids {
                shapes: 5,
                shifts: 16,
                centers: 9,
            },
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert_eq!(row.method, Method::DirectGrid);
            assert_eq!(row.setting.p_label(), "sup");
            assert!(row.ratio > 0.0);
        }
    }
}
