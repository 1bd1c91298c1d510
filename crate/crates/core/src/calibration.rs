//! Mixtures `α S + (1 - α) C` of a shuffle `S` with a base copula `C` and the
//! choice of `α` that gives the mixture a prescribed xi.
//!
//! For such a mixture
//!
//! ```text
//! f(α) = ‖∂₁(αS + (1-α)C)‖² = α²/2 + (1-α)²(ξ(C)+2)/6 + 2α(1-α) ∫∫ ∂₁S ∂₁C
//! ```
//!
//! with `f(0) = (ξ(C)+2)/6` and `f(1) = 1/2`, so every target in `[ξ(C), 1]`
//! is reached for some `α ∈ [0, 1]`.

use serde::Serialize;

use crate::approx::{approximate_by_shuffle, sup_distance, DEFAULT_GRID};
use crate::copula::{Copula, Orientation, Segment, ShuffleOfMin};
use crate::error::{Error, Result};
use crate::quadrature::PanelRule;
use crate::xi::population_xi;

/// Iteration cap for the bisection.
pub const MAX_BISECTIONS: usize = 200;
/// Required accuracy of `f(α)` against `(ξ₀ + 2)/6`.
pub const CALIBRATION_TOL: f64 = 1e-10;
/// Accuracy demanded of each family member's xi.
pub const FAMILY_XI_TOL: f64 = 1e-8;

/// `∫∫ ∂₁A(u, v) ∂₁B(u, v) du dv`.
pub fn cross_term(a: &Copula, b: &Copula) -> f64 {
    match (a, b) {
        (Copula::Mixture(m), _) => {
            let w = m.weight();
            let mut total = 0.0;
            if w > 0.0 {
                total += w * cross_term(m.first(), b);
            }
            if w < 1.0 {
                total += (1.0 - w) * cross_term(m.second(), b);
            }
            total
        }
        (_, Copula::Mixture(_)) => cross_term(b, a),
        // ∂₁Π = v and ∫ ∂₁C(u, v) du = v for every copula
        (Copula::Independence, _) | (_, Copula::Independence) => 1.0 / 3.0,
        (Copula::Fgm(f), Copula::Fgm(g)) => 1.0 / 3.0 + f.theta() * g.theta() / 90.0,
        _ => match (strips(a), strips(b)) {
            (Some(sa), Some(sb)) => functional_cross(&sa, &sb),
            (Some(sa), None) => strip_cross(&sa, b),
            (None, Some(sb)) => strip_cross(&sb, a),
            (None, None) => panel_cross(a, b),
        },
    }
}

/// Strips of copulas supported on the graph of a map.
fn strips(c: &Copula) -> Option<Vec<Segment>> {
    match c {
        Copula::FrechetMin => Some(vec![Segment::increasing(0.0, 1.0, 0.0)]),
        Copula::Shuffle(s) => Some(s.segments()),
        _ => None,
    }
}

/// `∫ (1 - max(S_a(u), S_b(u))) du` for two piecewise linear maps.
fn functional_cross(sa: &[Segment], sb: &[Segment]) -> f64 {
    let mut cuts: Vec<f64> = sa.iter().chain(sb).map(|s| s.x_lo).collect();
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (mut ia, mut ib) = (0, 0);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        while ia + 1 < sa.len() && sa[ia + 1].x_lo <= p {
            ia += 1;
        }
        while ib + 1 < sb.len() && sb[ib + 1].x_lo <= p {
            ib += 1;
        }
        let h = q - p;
        let upper = integral_of_max(
            sa[ia].map(p),
            sa[ia].slope(),
            sb[ib].map(p),
            sb[ib].slope(),
            h,
        );
        total += h - upper;
    }
    total
}

/// `∫_0^h max(ya + sa t, yb + sb t) dt`.
fn integral_of_max(ya: f64, sa: f64, yb: f64, sb: f64, h: f64) -> f64 {
    let line = |y: f64, s: f64, t0: f64, t1: f64| (t1 - t0) * (y + s * (t0 + t1) / 2.0);
    let d0 = ya - yb;
    let d1 = d0 + (sa - sb) * h;
    if d0 >= 0.0 && d1 >= 0.0 {
        line(ya, sa, 0.0, h)
    } else if d0 <= 0.0 && d1 <= 0.0 {
        line(yb, sb, 0.0, h)
    } else {
        let t = d0 / (sb - sa);
        if d0 > 0.0 {
            line(ya, sa, 0.0, t) + line(yb, sb, t, h)
        } else {
            line(yb, sb, 0.0, t) + line(ya, sa, t, h)
        }
    }
}

/// `∫ du ∫_{S(u)}^1 ∂₁C(u, v) dv`, strip by strip, for `C` without strips.
fn strip_cross(segments: &[Segment], other: &Copula) -> f64 {
    let rule = PanelRule::new(4);
    let u_breaks = other.u_breaks();
    let v_kinks = other.v_breaks_at(0.5);
    segments
        .iter()
        .map(|seg| {
            let (x0, x1) = (seg.x_lo, seg.x_hi());
            let lo = u_breaks.partition_point(|&b| b <= x0);
            let hi = u_breaks.partition_point(|&b| b < x1);
            let mut breaks: Vec<f64> = u_breaks[lo..hi].to_vec();
            for &k in &v_kinks {
                if k > seg.y_lo && k < seg.y_lo + seg.width {
                    breaks.push(match seg.orientation {
                        Orientation::Increasing => x0 + (k - seg.y_lo),
                        Orientation::Decreasing => x0 + (seg.y_lo + seg.width - k),
                    });
                }
            }
            rule.integrate_panels(x0, x1, &breaks, |u| {
                other.upper_partial_integral(u, seg.map(u))
            })
        })
        .sum()
}

/// Tensor Gauss-Legendre on the common cell grid of two piecewise smooth copulas.
fn panel_cross(a: &Copula, b: &Copula) -> f64 {
    let rule = PanelRule::new(4);
    let mut u_breaks = a.u_breaks();
    u_breaks.extend(b.u_breaks());
    let mut v_breaks = a.v_breaks_at(0.5);
    v_breaks.extend(b.v_breaks_at(0.5));
    rule.integrate_panels(0.0, 1.0, &u_breaks, |u| {
        rule.integrate_panels(0.0, 1.0, &v_breaks, |v| a.partial1(u, v) * b.partial1(u, v))
    })
}

/// `f(α)` as a quadratic in `α` with precomputed base norm and cross term.
#[derive(Debug, Clone, Copy)]
struct MixtureNorm {
    base_norm: f64,
    cross: f64,
}

impl MixtureNorm {
    fn new(shuffle: &ShuffleOfMin, base: &Copula) -> Self {
        let base_xi = population_xi(base);
        MixtureNorm {
            base_norm: (base_xi + 2.0) / 6.0,
            cross: cross_term(&Copula::Shuffle(shuffle.clone()), base),
        }
    }

    fn eval(&self, alpha: f64) -> f64 {
        let beta = 1.0 - alpha;
        alpha * alpha / 2.0 + beta * beta * self.base_norm + 2.0 * alpha * beta * self.cross
    }
}

/// `‖∂₁(αS + (1-α)C)‖²` via the base xi and the cross term.
pub fn f_alpha(alpha: f64, shuffle: &ShuffleOfMin, base: &Copula) -> f64 {
    MixtureNorm::new(shuffle, base).eval(alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub alpha: f64,
    pub target_xi: f64,
    pub achieved_xi: f64,
    pub base_xi: f64,
    pub cross_term: f64,
    /// `f(α) - (ξ₀ + 2)/6`.
    pub residual: f64,
}

/// Smallest `α ∈ [0, 1]` with `f(α) = (target_xi + 2)/6`.
///
/// Bisection on the bracket `f(0) <= (ξ₀+2)/6 <= f(1)`; for an independence
/// base `f(α) = (α² + 2)/6` and `α = √ξ₀` directly.
pub fn calibrate_alpha(
    target_xi: f64,
    shuffle: &ShuffleOfMin,
    base: &Copula,
) -> Result<CalibrationResult> {
    let base_xi = population_xi(base);
    if !target_xi.is_finite() || target_xi > 1.0 || target_xi < base_xi - 1e-12 {
        return Err(Error::TargetOutOfRange {
            target: target_xi,
            lower: base_xi,
        });
    }
    let f = MixtureNorm::new(shuffle, base);
    let goal = (target_xi + 2.0) / 6.0;
    let h = |a: f64| f.eval(a) - goal;

    let alpha = if matches!(base, Copula::Independence) {
        target_xi.max(0.0).sqrt()
    } else if h(0.0) >= 0.0 {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if h(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };

    let residual = h(alpha);
    if residual.abs() > CALIBRATION_TOL {
        return Err(Error::Postcondition(format!(
            "calibration residual {residual:e} exceeds {CALIBRATION_TOL:e}"
        )));
    }
    let mixture = Copula::mixture(alpha, Copula::Shuffle(shuffle.clone()), base.clone())?;
    Ok(CalibrationResult {
        alpha,
        target_xi,
        achieved_xi: population_xi(&mixture),
        base_xi,
        cross_term: f.cross,
        residual,
    })
}

/// One member `α_m S_m + (1 - α_m) C` of a family converging to `C`.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub m: usize,
    pub alpha: f64,
    pub copula: Copula,
    pub xi: f64,
    pub sup_distance: f64,
}

/// For each `m`, mixes the `m`-strip shuffle approximation of `base` with
/// `base` so that xi equals `target_xi`. Members converge uniformly to `base`
/// at rate `2/m` while xi stays fixed.
pub fn weak_convergence_family(
    base: &Copula,
    target_xi: f64,
    m_list: &[usize],
) -> Result<Vec<FamilyMember>> {
    m_list
        .iter()
        .map(|&m| {
            let shuffle = approximate_by_shuffle(base, m)?;
            let cal = calibrate_alpha(target_xi, &shuffle, base)?;
            let copula = Copula::mixture(cal.alpha, Copula::Shuffle(shuffle), base.clone())?;
            let xi = population_xi(&copula);
            if (xi - target_xi).abs() > FAMILY_XI_TOL {
                return Err(Error::Postcondition(format!(
                    "member m={m} has xi {xi}, target {target_xi}"
                )));
            }
            let dist = sup_distance(&copula, base, DEFAULT_GRID);
            if dist > 2.0 / m as f64 + 1e-12 {
                return Err(Error::Postcondition(format!(
                    "member m={m} is at distance {dist} > 2/m from the base"
                )));
            }
            Ok(FamilyMember {
                m,
                alpha: cal.alpha,
                copula,
                xi,
                sup_distance: dist,
            })
        })
        .collect()
}
