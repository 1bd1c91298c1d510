use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xi_copula::approx::{approximate_by_shuffle, extract_checkerboard};
use xi_copula::xi::{
    norm_partial1_sq, population_xi, xi_eq1_copula_quadrature, xi_eq1_discrete, xi_hat,
    xi_hat_from_ranks, xi_hat_naive, DiscreteBivariate,
};
use xi_copula::{Checkerboard, Copula, Error, PairedSample, ShuffleOfMin};

fn pairs(p: &[(f64, f64)]) -> PairedSample {
    PairedSample::from_pairs(p).unwrap()
}

#[test]
fn hand_examples() {
    let id3 = pairs(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]);
    assert!((xi_hat(&id3, 0).unwrap() - 0.25).abs() < 1e-15);
    assert!((xi_hat_naive(&id3, 0).unwrap() - 0.25).abs() < 1e-15);
    let cyc = pairs(&[(1.0, 3.0), (2.0, 1.0), (3.0, 2.0)]);
    assert!((xi_hat(&cyc, 0).unwrap() + 0.125).abs() < 1e-15);
    let id4 = pairs(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 4.0)]);
    assert!((xi_hat(&id4, 0).unwrap() - 0.4).abs() < 1e-15);
    assert!((xi_hat_from_ranks(&[1, 2, 3, 4]) - 0.4).abs() < 1e-15);
}

#[test]
fn degenerate_inputs() {
    let flat = pairs(&[(1.0, 2.0), (2.0, 2.0), (3.0, 2.0)]);
    assert_eq!(xi_hat(&flat, 0), Err(Error::DegenerateY));
    assert_eq!(xi_hat_naive(&flat, 0), Err(Error::DegenerateY));
    let one = pairs(&[(1.0, 2.0)]);
    assert!(matches!(xi_hat(&one, 0), Err(Error::SampleTooSmall { .. })));
    assert!(PairedSample::new(vec![1.0, 2.0], vec![1.0]).is_err());
    assert!(PairedSample::new(vec![1.0, f64::NAN], vec![1.0, 2.0]).is_err());
}

/// Tie-free closed form `1 - 3 Σ|r_{i+1} - r_i| / (n² - 1)`.
fn tie_free_oracle(s: &PairedSample) -> f64 {
    let n = s.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| s.xs()[a].total_cmp(&s.xs()[b]));
    let rank = |y: f64| s.ys().iter().filter(|&&t| t <= y).count() as f64;
    let total: f64 = idx
        .windows(2)
        .map(|w| (rank(s.ys()[w[1]]) - rank(s.ys()[w[0]])).abs())
        .sum();
    1.0 - 3.0 * total / ((n * n) as f64 - 1.0)
}

fn random_sample(rng: &mut ChaCha8Rng, n: usize, levels: Option<u32>) -> PairedSample {
    let draw = |rng: &mut ChaCha8Rng| match levels {
        Some(k) => rng.random_range(0..k) as f64,
        None => rng.random::<f64>(),
    };
    let xs: Vec<f64> = (0..n).map(|_| draw(rng)).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| 0.5 * x + draw(rng)).collect();
    PairedSample::new(xs, ys).unwrap()
}

#[test]
fn tie_free_formula_agrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 2..80 {
        let s = random_sample(&mut rng, n, None);
        assert!((xi_hat(&s, 5).unwrap() - tie_free_oracle(&s)).abs() < 1e-12);
    }
}

#[test]
fn fast_and_naive_agree_with_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..300 {
        let n = rng.random_range(2..=50);
        let s = random_sample(&mut rng, n, Some(1 + k % 6));
        match (xi_hat(&s, k as u64), xi_hat_naive(&s, k as u64)) {
            (Ok(a), Ok(b)) => assert!((a - b).abs() < 1e-12),
            (a, b) => assert_eq!(a, b),
        }
    }
}

#[test]
fn shuffle_data_brute_force() {
    let s: Copula = ShuffleOfMin::from_permutation(&[3, 1, 4, 0, 2], &[]).unwrap().into();
    let data = s.sample(1000, 9);
    let fast = xi_hat(&data, 0).unwrap();
    assert!((fast - xi_hat_naive(&data, 0).unwrap()).abs() < 1e-12);
    assert!(fast > 0.98);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn invariant_under_increasing_maps(seed in any::<u64>(), n in 2usize..60, levels in 0u32..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_sample(&mut rng, n, if levels == 0 { None } else { Some(levels + 1) });
        let t = s.map(|x| (3.0 * x).exp(), |y| y.powi(3) + y.atan()).unwrap();
        match (xi_hat(&s, seed), xi_hat(&t, seed)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn estimator_range(seed in any::<u64>(), n in 2usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_sample(&mut rng, n, None);
        let x = xi_hat(&s, seed).unwrap();
        prop_assert!((-1.0..=1.0).contains(&x));
    }
}

/// `∫∫ (v + θ(1-2u)v(1-v))² du dv` by composite Simpson on a 400 x 400 grid.
fn fgm_norm_simpson(theta: f64) -> f64 {
    let k = 400;
    let h = 1.0 / k as f64;
    let w = |i: usize| match i {
        0 => 1.0,
        i if i == k => 1.0,
        i if i % 2 == 1 => 4.0,
        _ => 2.0,
    };
    let mut total = 0.0;
    for i in 0..=k {
        for j in 0..=k {
            let (u, v) = (i as f64 * h, j as f64 * h);
            let d = v + theta * (1.0 - 2.0 * u) * v * (1.0 - v);
            total += w(i) * w(j) * d * d;
        }
    }
    total * h * h / 9.0
}

#[test]
fn analytic_values() {
    assert!((norm_partial1_sq(&Copula::Independence) - 1.0 / 3.0).abs() < 1e-15);
    assert!((norm_partial1_sq(&Copula::FrechetMin) - 0.5).abs() < 1e-15);
    assert_eq!(population_xi(&Copula::Independence), 0.0);
    assert_eq!(population_xi(&Copula::FrechetMin), 1.0);
    for theta in [-1.0, -0.5, 0.3, 1.0] {
        let c = Copula::fgm(theta).unwrap();
        assert!((norm_partial1_sq(&c) - fgm_norm_simpson(theta)).abs() < 1e-10);
        assert!((population_xi(&c) - theta * theta / 15.0).abs() < 1e-12);
    }
    let s: Copula = approximate_by_shuffle(&Copula::Independence, 4).unwrap().into();
    let mix = Copula::mixture(0.5, s, Copula::Independence).unwrap();
    assert!((population_xi(&mix) - 0.25).abs() < 1e-12);
}

fn random_checkerboard(m: usize, seed: u64) -> Checkerboard {
    // Sinkhorn scaling of a positive random matrix
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a: Vec<f64> = (0..m * m).map(|_| rng.random::<f64>() + 0.01).collect();
    for _ in 0..500 {
        for i in 0..m {
            let s: f64 = a[i * m..(i + 1) * m].iter().sum();
            a[i * m..(i + 1) * m].iter_mut().for_each(|x| *x /= s * m as f64);
        }
        for j in 0..m {
            let s: f64 = (0..m).map(|i| a[i * m + j]).sum();
            (0..m).for_each(|i| a[i * m + j] /= s * m as f64);
        }
    }
    Checkerboard::new(m, a).unwrap()
}

#[test]
fn population_matches_quadrature() {
    let cb = |m, seed| Copula::Checkerboard(Arc::new(random_checkerboard(m, seed)));
    let s4: Copula = approximate_by_shuffle(&Copula::Independence, 4).unwrap().into();
    let specs = vec![
        Copula::Independence,
        Copula::fgm(0.5).unwrap(),
        Copula::fgm(-1.0).unwrap(),
        cb(3, 1),
        cb(6, 2),
        Copula::mixture(0.7, s4.clone(), Copula::Independence).unwrap(),
        Copula::mixture(0.3, Copula::fgm(0.9).unwrap(), cb(4, 3)).unwrap(),
        Copula::mixture(0.6, s4, Copula::fgm(-0.4).unwrap()).unwrap(),
    ];
    for c in &specs {
        let q = xi_eq1_copula_quadrature(c, 64).unwrap();
        assert!((q - population_xi(c)).abs() < 1e-6, "{c}: {q} vs {}", population_xi(c));
    }
    assert!(xi_eq1_copula_quadrature(&Copula::Independence, 8).is_err());
}

/// Same ratio by enumerating `(X, Y, Y')` with `Y, Y'` independent given `X`:
/// `Var(E[1(Y>=y)|X]) = P(Y>=y, Y'>=y) - P(Y>=y)²`.
fn eq1_by_enumeration(ys: &[f64], p: &[Vec<f64>]) -> f64 {
    let px: Vec<f64> = p.iter().map(|r| r.iter().sum()).collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, &y) in ys.iter().enumerate() {
        let py_t: f64 = p.iter().map(|r| r[t]).sum();
        let mut tail = 0.0;
        let mut joint = 0.0;
        for (i, row) in p.iter().enumerate() {
            for (a, &ya) in ys.iter().enumerate() {
                tail += row[a] * (ya >= y) as u8 as f64;
                if px[i] == 0.0 {
                    continue;
                }
                for (b, &yb) in ys.iter().enumerate() {
                    joint += row[a] * row[b] / px[i] * ((ya >= y) && (yb >= y)) as u8 as f64;
                }
            }
        }
        num += py_t * (joint - tail * tail);
        den += py_t * tail * (1.0 - tail);
    }
    num / den
}

#[test]
fn discrete_values() {
    let p = vec![vec![0.4, 0.1], vec![0.1, 0.4]];
    let d = DiscreteBivariate::new(vec![0.0, 1.0], vec![0.0, 1.0], p.clone()).unwrap();
    let x = xi_eq1_discrete(&d).unwrap();
    assert!((x - 0.36).abs() < 1e-12);
    assert!((x - eq1_by_enumeration(&[0.0, 1.0], &p)).abs() < 1e-12);

    let a = [0.2, 0.5, 0.3];
    let b = [0.1, 0.6, 0.3];
    let prod: Vec<Vec<f64>> = a.iter().map(|&x| b.iter().map(|&y| x * y).collect()).collect();
    let d = DiscreteBivariate::new(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0], prod).unwrap();
    assert!(xi_eq1_discrete(&d).unwrap().abs() < 1e-12);

    for k in 2..6 {
        let diag: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 / k as f64 } else { 0.0 }).collect())
            .collect();
        let pts: Vec<f64> = (0..k).map(|i| i as f64).collect();
        let d = DiscreteBivariate::new(pts.clone(), pts, diag).unwrap();
        assert!((xi_eq1_discrete(&d).unwrap() - 1.0).abs() < 1e-12);
    }

    let flat = DiscreteBivariate::new(vec![0.0, 1.0], vec![5.0], vec![vec![0.5], vec![0.5]]).unwrap();
    assert_eq!(xi_eq1_discrete(&flat), Err(Error::DegenerateY));
    assert!(DiscreteBivariate::new(vec![0.0], vec![0.0], vec![vec![0.7]]).is_err());
}

#[test]
fn discrete_matches_enumeration_on_random_laws() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let (nx, ny) = (rng.random_range(1..5), rng.random_range(2..5));
        let mut p: Vec<Vec<f64>> = (0..nx).map(|_| (0..ny).map(|_| rng.random::<f64>()).collect()).collect();
        let total: f64 = p.iter().flatten().sum();
        p.iter_mut().flatten().for_each(|w| *w /= total);
        let ys: Vec<f64> = (0..ny).map(|j| j as f64).collect();
        let xs: Vec<f64> = (0..nx).map(|i| i as f64).collect();
        let d = DiscreteBivariate::new(xs, ys.clone(), p.clone()).unwrap();
        assert!((xi_eq1_discrete(&d).unwrap() - eq1_by_enumeration(&ys, &p)).abs() < 1e-12);
    }
}

#[test]
fn discretizations_approach_population_value() {
    let base = Copula::Checkerboard(Arc::new(random_checkerboard(2, 8)));
    let target = population_xi(&base);
    let gaps: Vec<f64> = [4, 8, 16]
        .iter()
        .map(|&k| (xi_eq1_discrete(&DiscreteBivariate::discretize(&base, k).unwrap()).unwrap() - target).abs())
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}

#[test]
fn population_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for k in 0..30 {
        let w: f64 = rng.random();
        let theta: f64 = rng.random_range(-1.0..=1.0);
        let cb = extract_checkerboard(&Copula::fgm(theta).unwrap(), 3 + k % 4).unwrap();
        let c = Copula::mixture(w, Copula::Checkerboard(Arc::new(cb)), Copula::fgm(-theta).unwrap()).unwrap();
        let x = population_xi(&c);
        assert!((0.0..=1.0).contains(&x));
    }
}
