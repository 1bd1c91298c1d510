#![allow(clippy::needless_range_loop)]

use std::sync::Arc;

use xi_copula::approx::{
    approximate_by_shuffle, extract_checkerboard, shuffle_from_checkerboard, sup_distance,
    sup_distance_refined, TABLE_LIMIT,
};
use xi_copula::xi::population_xi;
use xi_copula::{Copula, ShuffleOfMin};

fn three_strips() -> Copula {
    ShuffleOfMin::from_permutation(&[2, 0, 1], &[false, true, false])
        .unwrap()
        .into()
}

#[test]
fn checkerboard_masses() {
    let cb = extract_checkerboard(&Copula::Independence, 2).unwrap();
    assert_eq!(cb.rows(), vec![vec![0.25, 0.25], vec![0.25, 0.25]]);
    let cb = extract_checkerboard(&Copula::FrechetMin, 2).unwrap();
    assert_eq!(cb.rows(), vec![vec![0.5, 0.0], vec![0.0, 0.5]]);
    // FGM(1): C(1/2, 1/2) = 1/4 + 1/16
    let cb = extract_checkerboard(&Copula::fgm(1.0).unwrap(), 2).unwrap();
    let expected = [[0.3125, 0.1875], [0.1875, 0.3125]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((cb.mass(i, j) - expected[i][j]).abs() < 1e-15);
        }
    }
}

#[test]
fn extracted_margins_sum_to_one_over_m() {
    for spec in [Copula::fgm(-0.7).unwrap(), three_strips(), Copula::Independence] {
        for m in [1, 3, 10, 37] {
            let cb = extract_checkerboard(&spec, m).unwrap();
            for i in 0..m {
                let row: f64 = (0..m).map(|j| cb.mass(i, j)).sum();
                let col: f64 = (0..m).map(|j| cb.mass(j, i)).sum();
                assert!((row - 1.0 / m as f64).abs() <= 1e-12);
                assert!((col - 1.0 / m as f64).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn shuffles_from_simple_checkerboards() {
    let cb = Arc::new(extract_checkerboard(&Copula::FrechetMin, 2).unwrap());
    let s = shuffle_from_checkerboard(cb);
    let segs = s.segments();
    assert_eq!(segs.len(), 2);
    for k in 0..=20 {
        let u = k as f64 / 20.0;
        assert!((s.transport(u.min(0.999_999)) - u.min(0.999_999)).abs() < 1e-12);
    }

    let s = approximate_by_shuffle(&Copula::Independence, 1).unwrap();
    assert_eq!(s.segments().len(), 1);
    let d = sup_distance(&s.into(), &Copula::Independence, 401);
    assert!((d - 0.25).abs() < 1e-12);

    let s = approximate_by_shuffle(&Copula::Independence, 2).unwrap();
    let segs = s.segments();
    assert_eq!(segs.len(), 4);
    assert!(segs.iter().all(|g| (g.width - 0.25).abs() < 1e-15));
    for i in 0..=2 {
        for j in 0..=2 {
            let (u, v) = (i as f64 / 2.0, j as f64 / 2.0);
            assert!((s.cdf(u, v) - u * v).abs() < 1e-12);
        }
    }
}

#[test]
fn corner_agreement_and_partitions() {
    for spec in [Copula::fgm(0.9).unwrap(), three_strips(), Copula::Independence] {
        for m in [2, 5, 16, 64] {
            let cb = Arc::new(extract_checkerboard(&spec, m).unwrap());
            let s = shuffle_from_checkerboard(cb.clone());
            // materializing revalidates both partitions
            let segs = s.segments();
            assert!(segs.len() <= m * m);
            if let Err(e) = ShuffleOfMin::from_segments(segs) {
                panic!("{spec} m={m}: {e}");
            }
            for i in 0..=m {
                for j in 0..=m {
                    let (u, v) = (i as f64 / m as f64, j as f64 / m as f64);
                    assert!((s.cdf(u, v) - cb.cdf(u, v)).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn grid_aligned_shuffle_is_reproduced() {
    let spec = three_strips();
    let s = approximate_by_shuffle(&spec, 6).unwrap();
    for i in 0..=6 {
        for j in 0..=6 {
            let (u, v) = (i as f64 / 6.0, j as f64 / 6.0);
            assert!((s.cdf(u, v) - spec.cdf(u, v)).abs() <= 1e-12);
        }
    }
}

#[test]
fn min_is_reproduced_everywhere() {
    for m in [1, 2, 7, 30] {
        let s: Copula = approximate_by_shuffle(&Copula::FrechetMin, m).unwrap().into();
        for i in 0..=50 {
            for j in 0..=50 {
                let (u, v) = (i as f64 / 50.0, j as f64 / 50.0);
                assert!((s.cdf(u, v) - u.min(v)).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn distance_examples() {
    let pi = Copula::Independence;
    assert_eq!(sup_distance(&pi, &pi, 400), 0.0);
    let d = sup_distance(&Copula::FrechetMin, &pi, 400);
    assert!((d - 0.25).abs() < 0.005);
    let s8: Copula = approximate_by_shuffle(&pi, 8).unwrap().into();
    let d8 = sup_distance(&s8, &pi, 400);
    assert!(d8 <= 0.25 && d8 <= 2.0 / 8.0);
    assert!(sup_distance_refined(&s8, &pi, 50, 2) >= sup_distance(&s8, &pi, 50));
}

#[test]
fn distance_to_independence_decreases() {
    let pi = Copula::Independence;
    let dists: Vec<f64> = [2, 4, 8, 16]
        .iter()
        .map(|&m| sup_distance(&approximate_by_shuffle(&pi, m).unwrap().into(), &pi, 400))
        .collect();
    for (k, w) in dists.windows(2).enumerate() {
        assert!(w[1] < w[0], "{dists:?}");
        assert!(w[0] <= 2.0 / (2 << k) as f64);
    }
}

#[test]
fn uniform_rate_two_over_m() {
    for spec in [Copula::Independence, Copula::fgm(0.5).unwrap(), three_strips()] {
        for m in [2, 4, 8, 16, 32] {
            let s: Copula = approximate_by_shuffle(&spec, m).unwrap().into();
            let d = sup_distance(&s, &spec, 400);
            assert!(d <= 2.0 / m as f64, "{spec} m={m}: {d}");
        }
    }
}

#[test]
fn approximations_have_xi_one() {
    for spec in [Copula::Independence, Copula::fgm(-0.3).unwrap(), three_strips()] {
        for m in [1, 3, 12, 2000] {
            let s: Copula = approximate_by_shuffle(&spec, m).unwrap().into();
            assert!((population_xi(&s) - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn lazy_grid_matches_table() {
    let spec = Copula::fgm(0.6).unwrap();
    let m = TABLE_LIMIT;
    let table = approximate_by_shuffle(&spec, m).unwrap();
    let lazy = ShuffleOfMin::from_copula_grid(spec.clone(), m).unwrap();
    for k in 0..997 {
        let u = (k as f64 + 0.31) / 997.0;
        assert!((table.transport(u) - lazy.transport(u)).abs() < 1e-12);
        assert!((table.cdf(u, 1.0 - u) - lazy.cdf(u, 1.0 - u)).abs() < 1e-12);
    }
    let big: Copula = approximate_by_shuffle(&spec, 10_000).unwrap().into();
    assert!(sup_distance(&big, &spec, 400) <= 2e-4);
}
