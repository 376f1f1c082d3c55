//! Cross-module invariants: spectral/direct oracle equivalence, Parseval
//! against grid quadrature, scaling-law surrogates at reduced grids, and
//! property tests for the lattice/shell/spline algebra.

use fibdisc::discrepancy::{
    error_direct, error_spectral, fixed_volume_discrepancy_nonperiodic,
    fixed_volume_discrepancy_periodic, l2_norm_parseval, lp_norm_grid, PNorm, SpectralTruncation,
};
use fibdisc::lattice::{
    enumerate_dual_in_box, fibonacci_point_set, in_dual_lattice, DyadicShell, FibIndex, FreqIndex,
};
use fibdisc::splines::{hat_fourier, sigma_sum, HatSpec, SmoothBox};
use proptest::prelude::*;
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
fn pipeline_is_scalar_generic() {
    // the whole chain (points, periodized splines, Parseval, grid norms)
    // runs in f32 and lands near the f64 values
    let n32 = FibIndex::new(8).unwrap();
    let pts32 = fibonacci_point_set::<f32>(n32).unwrap();
    let b32 = SmoothBox::new(2, vec![0.3f32, 0.6], vec![0.25, 0.2]).unwrap();
    let pts64 = fibonacci_point_set::<f64>(n32).unwrap();
    let b64 = SmoothBox::new(2, vec![0.3f64, 0.6], vec![0.25, 0.2]).unwrap();

    let e32 = error_direct(&pts32, &b32, &[0.1f32, 0.7]).unwrap();
    let e64 = error_direct(&pts64, &b64, &[0.1f64, 0.7]).unwrap();
    assert!((e32 as f64 - e64).abs() <= 1e-5, "{e32} vs {e64}");

    let p32 = l2_norm_parseval(&pts32, &b32).unwrap().value;
    let p64 = l2_norm_parseval(&pts64, &b64).unwrap().value;
    assert!(
        (p32 as f64 - p64).abs() <= 1e-5 * p64.max(1e-3),
        "{p32} vs {p64}"
    );

    let g32 = lp_norm_grid(&pts32, &b32, PNorm::Infinity, 32)
        .unwrap()
        .value;
    let g64 = lp_norm_grid(&pts64, &b64, PNorm::Infinity, 32)
        .unwrap()
        .value;
    assert!((g32 as f64 - g64).abs() <= 1e-5, "{g32} vs {g64}");

    let d32 =
        fixed_volume_discrepancy_periodic::<f32>(n32, 2, 0.25, PNorm::Finite(2.0), 5, 0).unwrap();
    let d64 =
        fixed_volume_discrepancy_periodic::<f64>(n32, 2, 0.25, PNorm::Finite(2.0), 5, 0).unwrap();
    assert!((d32.value as f64 - d64.value).abs() <= 2e-4 * d64.value.max(1e-4));
}

#[test]
fn spectral_direct_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE0);
    for n in [8u32, 10, 12, 14] {
        let index = idx(n);
        let pts = fibonacci_point_set::<f64>(index).unwrap();
        for r in [2u32, 3] {
            for _ in 0..20 {
                let b = random_admissible_box(&mut rng, r);
                let z = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
                let trunc = SpectralTruncation::certify(index, &b, 4096).unwrap();
                let direct = error_direct(&pts, &b, &z).unwrap();
                let spectral = error_spectral(index, &b, &z, &trunc).unwrap();
                assert!(
                    (direct - spectral).abs() <= trunc.certified_tail + 1e-9,
                    "n={n} r={r}: gap {} vs tail {}",
                    (direct - spectral).abs(),
                    trunc.certified_tail
                );
            }
        }
    }
}

#[test]
fn parseval_vs_grid_quadrature() {
    // p = 2 by exact Parseval against the M = 256 rectangle rule, 1%
    let index = idx(12);
    let pts = fibonacci_point_set::<f64>(index).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xE1);
    for _ in 0..20 {
        let r = rng.gen_range(2..=3);
        let b = random_admissible_box(&mut rng, r);
        let exact = l2_norm_parseval(&pts, &b).unwrap().value;
        let grid = lp_norm_grid(&pts, &b, PNorm::Finite(2.0), 256)
            .unwrap()
            .value;
        assert!(
            (grid - exact).abs() <= 0.01 * exact,
            "r={r}: grid {grid} vs exact {exact}"
        );
    }
}

#[test]
fn parseval_vs_coarse_grid_for_indicators() {
    // r = 1 integrands are rough; the rectangle rule needs a denser grid
    let index = idx(8);
    let pts = fibonacci_point_set::<f64>(index).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xE2);
    for _ in 0..5 {
        let b = random_admissible_box(&mut rng, 1);
        let exact = l2_norm_parseval(&pts, &b).unwrap().value;
        let grid = lp_norm_grid(&pts, &b, PNorm::Finite(2.0), 1024)
            .unwrap()
            .value;
        assert!(
            (grid - exact).abs() <= 0.05 * exact,
            "grid {grid} vs exact {exact}"
        );
    }
}

fn ratio_spread(rows: &[f64]) -> f64 {
    let max = rows.iter().cloned().fold(0.0f64, f64::max);
    let min = rows.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

#[test]
fn periodic_lp_scaling_surrogate() {
    // value * b_n^r / sqrt(ln(b_n v)) stays within a factor 3 across n;
    // full index range at reduced shape/shift grids
    for r in [1u32, 2] {
        for p in [PNorm::Finite(1.0), PNorm::Finite(2.0), PNorm::Finite(4.0)] {
            for v in [0.125f64, 0.25] {
                let ratios: Vec<f64> = (8..=16)
                    .map(|n| {
                        let index = idx(n);
                        let value = fixed_volume_discrepancy_periodic::<f64>(index, r, v, p, 9, 64)
                            .unwrap()
                            .value;
                        value * (index.count() as f64).powi(r as i32)
                            / (index.count() as f64 * v).ln().sqrt()
                    })
                    .collect();
                let spread = ratio_spread(&ratios);
                assert!(spread <= 3.0, "r={r} p={p:?} v={v}: spread {spread}");
            }
        }
    }
}

#[test]
fn periodic_sup_scaling_surrogate() {
    // p = inf with the log normalizer
    for r in [2u32, 3] {
        for v in [0.125f64, 0.25] {
            let ratios: Vec<f64> = (8..=16)
                .map(|n| {
                    let index = idx(n);
                    let value = fixed_volume_discrepancy_periodic::<f64>(
                        index,
                        r,
                        v,
                        PNorm::Infinity,
                        9,
                        128,
                    )
                    .unwrap()
                    .value;
                    value * (index.count() as f64).powi(r as i32) / (index.count() as f64 * v).ln()
                })
                .collect();
            let spread = ratio_spread(&ratios);
            assert!(spread <= 3.0, "r={r} v={v}: spread {spread}");
        }
    }
}

#[test]
fn nonperiodic_scaling_surrogate() {
    for r in [2u32, 3] {
        let ratios: Vec<f64> = (8..=14)
            .map(|n| {
                let index = idx(n);
                let value = fixed_volume_discrepancy_nonperiodic::<f64>(index, r, 0.25, 9, 33)
                    .unwrap()
                    .value;
                value * (index.count() as f64).powi(r as i32) / (index.count() as f64 * 0.25).ln()
            })
            .collect();
        let spread = ratio_spread(&ratios);
        assert!(spread <= 4.0, "r={r}: spread {spread}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn every_frequency_lies_in_exactly_one_shell(
        k1 in -(1i64 << 40)..(1i64 << 40),
        k2 in -(1i64 << 40)..(1i64 << 40),
    ) {
        let shell = DyadicShell::of(&[k1, k2]);
        prop_assert!(shell.contains(&[k1, k2]));
        // any shell differing in one component misses it
        for axis in 0..2 {
            let mut s = shell.components().to_vec();
            s[axis] += 1;
            prop_assert!(!DyadicShell::new(s).unwrap().contains(&[k1, k2]));
            let mut s = shell.components().to_vec();
            if s[axis] > 0 {
                s[axis] -= 1;
                prop_assert!(!DyadicShell::new(s).unwrap().contains(&[k1, k2]));
            }
        }
    }

    #[test]
    fn transform_is_even(r in 1u32..=6, u in 0.01f64..1.0, y in -30f64..30.0) {
        let spec = HatSpec::new(r, u).unwrap();
        prop_assert_eq!(hat_fourier(&spec, y), hat_fourier(&spec, -y));
    }

    #[test]
    fn dual_lattice_closure(n in 3u32..=16, a in -300i64..=300, c in -300i64..=300, m1 in -2i64..=2, m2 in -2i64..=2) {
        let index = FibIndex::new(n).unwrap();
        let b = index.count();
        let solve = |k2: i64| -> i64 {
            ((-(index.prev() as i128) * k2 as i128).rem_euclid(b as i128)) as i64
        };
        let p = FreqIndex::new(solve(a) + m1 * b, a);
        let q = FreqIndex::new(solve(c) + m2 * b, c);
        prop_assert!(in_dual_lattice(p, index));
        prop_assert!(in_dual_lattice(q, index));
        prop_assert!(in_dual_lattice(FreqIndex::new(p.k1 + q.k1, p.k2 + q.k2), index));
        prop_assert!(in_dual_lattice(FreqIndex::new(-p.k1, -p.k2), index));
    }

    #[test]
    fn enumeration_members_satisfy_the_congruence(n in 3u32..=14, kmax in 1i64..=40) {
        let index = FibIndex::new(n).unwrap();
        for k in enumerate_dual_in_box(index, kmax).unwrap() {
            prop_assert!(!k.is_zero());
            prop_assert!(k.k1.abs() <= kmax && k.k2.abs() <= kmax);
            prop_assert!(in_dual_lattice(k, index));
        }
    }

    #[test]
    fn sigma_sum_is_symmetric_in_the_axes(
        ua in 0.01f64..0.5, ub in 0.01f64..0.5, t in 0u32..=14, r in 1u32..=4,
    ) {
        let lhs = sigma_sum(r as f64, &[ua, ub], t);
        let rhs = sigma_sum(r as f64, &[ub, ua], t);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1.0));
    }
}
