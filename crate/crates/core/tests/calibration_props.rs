use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xi_copula::approx::{approximate_by_shuffle, sup_distance};
use xi_copula::calibration::{calibrate_alpha, cross_term, f_alpha, weak_convergence_family};
use xi_copula::xi::{norm_partial1_sq, population_xi, xi_eq1_copula_quadrature};
use xi_copula::{Copula, Error, ShuffleOfMin};

fn fgm(t: f64) -> Copula {
    Copula::fgm(t).unwrap()
}

fn shuffles() -> Vec<ShuffleOfMin> {
    vec![
        ShuffleOfMin::identity(),
        ShuffleOfMin::from_permutation(&[1, 0], &[]).unwrap(),
        ShuffleOfMin::from_permutation(&[2, 0, 3, 1], &[true, false, true, false]).unwrap(),
        approximate_by_shuffle(&fgm(0.5), 9).unwrap(),
        approximate_by_shuffle(&Copula::Independence, 3000).unwrap(),
    ]
}

#[test]
fn cross_term_with_independence() {
    for s in shuffles() {
        let c = Copula::Shuffle(s);
        assert!((cross_term(&c, &Copula::Independence) - 1.0 / 3.0).abs() < 1e-12);
        assert!((cross_term(&Copula::Independence, &c) - 1.0 / 3.0).abs() < 1e-12);
    }
    assert!((cross_term(&Copula::Independence, &Copula::Independence) - 1.0 / 3.0).abs() < 1e-15);
    let f = fgm(0.5);
    assert!((cross_term(&f, &f) - norm_partial1_sq(&f)).abs() < 1e-12);
}

#[test]
fn cross_term_is_symmetric_and_checked_by_quadrature() {
    let bases = [fgm(0.5), fgm(-1.0), Copula::mixture(0.4, fgm(1.0), Copula::FrechetMin).unwrap()];
    for s in shuffles().into_iter().take(4) {
        let a = Copula::Shuffle(s);
        for b in &bases {
            let ab = cross_term(&a, b);
            assert!((ab - cross_term(b, &a)).abs() < 1e-12);
            // the mixture norm expands through the cross term; the quadrature
            // route integrates the mixture partial directly
            let mix = Copula::mixture(0.5, a.clone(), b.clone()).unwrap();
            let q = xi_eq1_copula_quadrature(&mix, 64).unwrap();
            assert!((q - population_xi(&mix)).abs() < 1e-6, "{a} x {b}");
        }
    }
}

#[test]
fn f_endpoints_and_quadratic_form() {
    for base in [Copula::Independence, fgm(0.5), fgm(-1.0)] {
        for s in shuffles() {
            let base_xi = population_xi(&base);
            assert!((f_alpha(0.0, &s, &base) - (base_xi + 2.0) / 6.0).abs() < 1e-12);
            assert!((f_alpha(1.0, &s, &base) - 0.5).abs() < 1e-12);
        }
    }
    let s = &shuffles()[2];
    assert!((f_alpha(0.5, s, &Copula::Independence) - 0.375).abs() < 1e-15);
}

#[test]
fn f_matches_mixture_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = approximate_by_shuffle(&fgm(0.5), 7).unwrap();
    for base in [fgm(0.5), fgm(-0.8)] {
        for _ in 0..20 {
            let a: f64 = rng.random();
            let mix = Copula::mixture(a, Copula::Shuffle(s.clone()), base.clone()).unwrap();
            assert!((f_alpha(a, &s, &base) - norm_partial1_sq(&mix)).abs() < 1e-8);
        }
    }
}

#[test]
fn bracketing_and_continuity() {
    // f_alpha recomputes the cross term, so the 3000-strip shuffle is left out
    for base in [Copula::Independence, fgm(0.5), fgm(-0.5), fgm(1.0)] {
        for s in shuffles().into_iter().take(4) {
            let f0 = f_alpha(0.0, &s, &base);
            assert!(f0 <= 0.5 + 1e-15);
            let values: Vec<f64> = (0..=1000).map(|k| f_alpha(k as f64 / 1000.0, &s, &base)).collect();
            let jump = values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
            assert!(jump < 1e-2);
        }
    }
}

#[test]
fn calibration_hits_targets() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let bases = [Copula::Independence, fgm(0.5), fgm(-0.5)];
    for k in 0..25 {
        let base = &bases[k % 3];
        let m = rng.random_range(1..40);
        let s = approximate_by_shuffle(base, m).unwrap();
        let lo = population_xi(base);
        let target = lo + (1.0 - lo) * rng.random::<f64>();
        let r = calibrate_alpha(target, &s, base).unwrap();
        assert!((0.0..=1.0).contains(&r.alpha));
        assert!(r.residual.abs() <= 1e-10);
        let mix = Copula::mixture(r.alpha, Copula::Shuffle(s), base.clone()).unwrap();
        assert!((population_xi(&mix) - target).abs() < 1e-8);
        assert!((r.achieved_xi - target).abs() < 1e-8);
    }
}

#[test]
fn bisection_reproduces_square_root() {
    // the same law as independence, written so that the closed form is not used
    let base = Copula::mixture(0.5, Copula::Independence, Copula::Independence).unwrap();
    let s = approximate_by_shuffle(&Copula::Independence, 8).unwrap();
    for target in [0.0, 0.01, 0.25, 0.49, 0.7, 0.999, 1.0] {
        let bisected = calibrate_alpha(target, &s, &base).unwrap().alpha;
        let closed = calibrate_alpha(target, &s, &Copula::Independence).unwrap().alpha;
        assert_eq!(closed, f64::sqrt(target));
        assert!((bisected - closed).abs() < 1e-10, "{target}: {bisected} vs {closed}");
    }
}

#[test]
fn calibration_examples() {
    let s = approximate_by_shuffle(&Copula::Independence, 4).unwrap();
    assert_eq!(calibrate_alpha(0.25, &s, &Copula::Independence).unwrap().alpha, 0.5);
    assert_eq!(calibrate_alpha(0.0, &s, &Copula::Independence).unwrap().alpha, 0.0);
    for base in [Copula::Independence, fgm(0.5), fgm(-1.0)] {
        let s = approximate_by_shuffle(&base, 5).unwrap();
        assert_eq!(calibrate_alpha(1.0, &s, &base).unwrap().alpha, 1.0);
    }
    let base = fgm(1.0);
    let s = approximate_by_shuffle(&base, 5).unwrap();
    match calibrate_alpha(0.01, &s, &base) {
        Err(Error::TargetOutOfRange { lower, .. }) => assert!((lower - 1.0 / 15.0).abs() < 1e-12),
        other => panic!("expected a range error, got {other:?}"),
    }
}

#[test]
fn family_examples() {
    let pi = Copula::Independence;
    let fam = weak_convergence_family(&pi, 1.0, &[4, 16, 64]).unwrap();
    for (member, bound) in fam.iter().zip([0.5, 0.125, 0.03125]) {
        assert_eq!(member.alpha, 1.0);
        assert!((population_xi(&member.copula) - 1.0).abs() < 1e-12);
        assert!(sup_distance(&member.copula, &pi, 400) <= bound);
    }
    let fam = weak_convergence_family(&pi, 0.0, &[2, 8]).unwrap();
    for member in &fam {
        assert_eq!(member.alpha, 0.0);
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            assert!((member.copula.cdf(t, 0.3) - 0.3 * t).abs() < 1e-15);
        }
    }
    let base = fgm(0.5);
    let fam = weak_convergence_family(&base, 0.5, &[3, 12, 48]).unwrap();
    let mut last = f64::INFINITY;
    for member in &fam {
        let q = xi_eq1_copula_quadrature(&member.copula, 64).unwrap();
        assert!((q - 0.5).abs() < 1e-6);
        assert!(member.sup_distance <= last);
        last = member.sup_distance;
    }
    assert!(weak_convergence_family(&base, 0.0, &[4]).is_err());
}
