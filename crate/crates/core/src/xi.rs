//! Chatterjee's coefficient: population value of a copula, the defining
//! variance ratio for discrete laws, and the rank estimator.

use rand::Rng;

use crate::calibration::cross_term;
use crate::copula::Copula;
use crate::error::{Error, Result};
use crate::quadrature::PanelRule;
use crate::rng;
use crate::sample::PairedSample;

/// `∫∫ (∂₁C)² du dv`.
///
/// Closed forms for independence (1/3), FGM (1/3 + θ²/90) and the Fréchet
/// bound (1/2); exact cell and strip integration for checkerboards and
/// shuffles; mixtures expand into component norms and cross terms.
pub fn norm_partial1_sq(spec: &Copula) -> f64 {
    match spec {
        Copula::Independence => 1.0 / 3.0,
        Copula::FrechetMin => 0.5,
        Copula::Fgm(f) => 1.0 / 3.0 + f.theta() * f.theta() / 90.0,
        Copula::Checkerboard(cb) => cb.norm_partial1_sq(),
        Copula::Shuffle(s) => s.norm_partial1_sq(),
        Copula::Mixture(m) => {
            let w = m.weight();
            let mut total = 0.0;
            if w > 0.0 {
                total += w * w * norm_partial1_sq(m.first());
            }
            if w < 1.0 {
                total += (1.0 - w) * (1.0 - w) * norm_partial1_sq(m.second());
            }
            if w > 0.0 && w < 1.0 {
                total += 2.0 * w * (1.0 - w) * cross_term(m.first(), m.second());
            }
            total
        }
    }
}

/// Population xi of a copula, `6 ‖∂₁C‖² - 2`.
pub fn population_xi(spec: &Copula) -> f64 {
    (6.0 * norm_partial1_sq(spec) - 2.0).clamp(0.0, 1.0)
}

/// Xi from the variance ratio with `E[1(V >= v) | U = u] = 1 - ∂₁C(u, v)`:
/// `6 ∫∫ [(1 - ∂₁C)² - (1 - v)²] du dv`, by Gauss-Legendre panels split at
/// the jumps and kinks of `∂₁C`.
pub fn xi_eq1_copula_quadrature(spec: &Copula, nodes: usize) -> Result<f64> {
    if nodes < 16 {
        return Err(Error::InvalidArgument(format!(
            "quadrature needs at least 16 nodes, got {nodes}"
        )));
    }
    let rule = PanelRule::new(nodes);
    let numerator = rule.integrate_panels(0.0, 1.0, &spec.u_breaks(), |u| {
        let breaks = spec.v_breaks_at(u);
        rule.integrate_panels(0.0, 1.0, &breaks, |v| {
            let cond = 1.0 - spec.partial1(u, v);
            cond * cond - (1.0 - v) * (1.0 - v)
        })
    });
    Ok(numerator / (1.0 / 6.0))
}

/// Finitely supported bivariate law: `p[i][j] = P(X = xs[i], Y = ys[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBivariate {
    xs: Vec<f64>,
    ys: Vec<f64>,
    p: Vec<Vec<f64>>,
}

impl DiscreteBivariate {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, p: Vec<Vec<f64>>) -> Result<Self> {
        if p.len() != xs.len() || p.iter().any(|row| row.len() != ys.len()) {
            return Err(Error::InvalidArgument(format!(
                "probability matrix must be {} x {}",
                xs.len(),
                ys.len()
            )));
        }
        if p.iter().flatten().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidArgument("probabilities must be nonnegative".into()));
        }
        let total: f64 = p.iter().flatten().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(DiscreteBivariate { xs, ys, p })
    }

    /// Law with `P(X = i/k, Y = j/k)` given by the `k x k` cell volumes of `spec`.
    pub fn discretize(spec: &Copula, k: usize) -> Result<Self> {
        let cb = crate::approx::extract_checkerboard(spec, k)?;
        let support: Vec<f64> = (1..=k).map(|i| i as f64 / k as f64).collect();
        DiscreteBivariate::new(support.clone(), support, cb.rows())
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn p(&self) -> &[Vec<f64>] {
        &self.p
    }
}

/// Exact evaluation of
/// `∫ Var(E[1(Y >= y) | X]) dP_Y(y) / ∫ Var(1(Y >= y)) dP_Y(y)`
/// for a discrete law.
pub fn xi_eq1_discrete(d: &DiscreteBivariate) -> Result<f64> {
    let (nx, ny) = (d.xs.len(), d.ys.len());
    let px: Vec<f64> = d.p.iter().map(|row| row.iter().sum()).collect();
    let py: Vec<f64> = (0..ny).map(|j| (0..nx).map(|i| d.p[i][j]).sum()).collect();

    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for j in 0..ny {
        if py[j] == 0.0 {
            continue;
        }
        let at_least = |k: usize| d.ys[k] >= d.ys[j];
        let tail: f64 = (0..ny).filter(|&k| at_least(k)).map(|k| py[k]).sum();
        // E[g(X)^2] with g(x) = P(Y >= y | X = x)
        let second_moment: f64 = (0..nx)
            .filter(|&i| px[i] > 0.0)
            .map(|i| {
                let joint: f64 = (0..ny).filter(|&k| at_least(k)).map(|k| d.p[i][k]).sum();
                joint * joint / px[i]
            })
            .sum();
        numerator += py[j] * (second_moment - tail * tail);
        denominator += py[j] * tail * (1.0 - tail);
    }
    if denominator <= 1e-15 {
        return Err(Error::DegenerateY);
    }
    Ok(numerator / denominator)
}

fn check_sample(sample: &PairedSample) -> Result<()> {
    if sample.len() < 2 {
        return Err(Error::SampleTooSmall {
            needed: 2,
            got: sample.len(),
        });
    }
    Ok(())
}

/// Random keys used to order observations with equal `x`.
fn tie_keys(n: usize, tie_seed: u64) -> Vec<u64> {
    let mut rng = rng::stream(tie_seed, &[0]);
    (0..n).map(|_| rng.random()).collect()
}

/// Indices sorted by `x`, ties in `x` broken by seeded random keys.
fn order_by_x(xs: &[f64], tie_seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    if order.windows(2).any(|w| xs[w[0]] == xs[w[1]]) {
        let keys = tie_keys(xs.len(), tie_seed);
        order.sort_by(|&a, &b| {
            xs[a]
                .total_cmp(&xs[b])
                .then(keys[a].cmp(&keys[b]))
                .then(a.cmp(&b))
        });
    }
    order
}

fn finish(n: usize, rank_jumps: u128, spread: u128) -> Result<f64> {
    if spread == 0 {
        return Err(Error::DegenerateY);
    }
    Ok(1.0 - (n as u128 * rank_jumps) as f64 / (2 * spread) as f64)
}

/// Rank estimator
/// `1 - n Σ|r_{i+1} - r_i| / (2 Σ l_i (n - l_i))`
/// where the data are sorted by `x`, `r_i = #{j : y_j <= y_(i)}` and
/// `l_i = #{j : y_j >= y_(i)}`. Ties in `x` are broken at random using
/// `tie_seed`; without ties in `y` this is `1 - 3 Σ|r_{i+1} - r_i| / (n² - 1)`.
pub fn xi_hat(sample: &PairedSample, tie_seed: u64) -> Result<f64> {
    check_sample(sample)?;
    let n = sample.len();
    let (xs, ys) = (sample.xs(), sample.ys());
    let mut sorted_y = ys.to_vec();
    sorted_y.sort_by(f64::total_cmp);
    let rank = |y: f64| sorted_y.partition_point(|&z| z <= y) as u128;
    let at_least = |y: f64| (n - sorted_y.partition_point(|&z| z < y)) as u128;

    let order = order_by_x(xs, tie_seed);
    let ranks: Vec<u128> = order.iter().map(|&i| rank(ys[i])).collect();
    let jumps: u128 = ranks.windows(2).map(|w| w[0].abs_diff(w[1])).sum();
    let spread: u128 = ys
        .iter()
        .map(|&y| {
            let l = at_least(y);
            l * (n as u128 - l)
        })
        .sum();
    finish(n, jumps, spread)
}

/// Same statistic as [`xi_hat`], computed by direct `O(n²)` counting.
pub fn xi_hat_naive(sample: &PairedSample, tie_seed: u64) -> Result<f64> {
    check_sample(sample)?;
    let n = sample.len();
    let (xs, ys) = (sample.xs(), sample.ys());
    let tied = (0..n).any(|a| (a + 1..n).any(|b| xs[a] == xs[b]));
    let keys = if tied { tie_keys(n, tie_seed) } else { vec![0; n] };

    // selection order: smallest (x, key, index) first
    let mut used = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<usize> = None;
        for c in 0..n {
            if used[c] {
                continue;
            }
            best = match best {
                None => Some(c),
                Some(b) => {
                    let before = xs[c] < xs[b] || (xs[c] == xs[b] && keys[c] < keys[b]);
                    Some(if before { c } else { b })
                }
            };
        }
        let b = best.expect("unused index remains");
        used[b] = true;
        order.push(b);
    }

    let count = |pred: &dyn Fn(f64) -> bool| ys.iter().filter(|&&y| pred(y)).count() as u128;
    let mut jumps = 0u128;
    for k in 0..n - 1 {
        let (a, b) = (ys[order[k]], ys[order[k + 1]]);
        let ra = count(&|y| y <= a);
        let rb = count(&|y| y <= b);
        jumps += ra.abs_diff(rb);
    }
    let mut spread = 0u128;
    for &y0 in ys {
        let l = count(&|y| y >= y0);
        spread += l * (n as u128 - l);
    }
    finish(n, jumps, spread)
}

/// Tie-free form `1 - 3 Σ|π_{i+1} - π_i| / (n² - 1)` for a permutation `ranks`
/// of `1..=n` listed in `x` order.
pub fn xi_hat_from_ranks(ranks: &[usize]) -> f64 {
    let n = ranks.len() as f64;
    let jumps: usize = ranks.windows(2).map(|w| w[0].abs_diff(w[1])).sum();
    1.0 - 3.0 * jumps as f64 / (n * n - 1.0)
}
