//! Bivariate copulas: independence, the Fréchet upper bound, FGM,
//! checkerboards, shuffles of Min and finite mixtures of these.
//!
//! Every value is validated at construction and immutable afterwards, so all
//! evaluation methods are infallible and can be shared across threads.

mod checkerboard;
pub mod parse;
mod shuffle;

use std::fmt;
use std::sync::Arc;

use rand::Rng;

pub use checkerboard::{Checkerboard, MASS_TOL};
pub use shuffle::{Orientation, Segment, ShuffleOfMin};

use crate::error::{Error, Result};
use crate::rng;
use crate::sample::PairedSample;

/// Farlie-Gumbel-Morgenstern copula `uv(1 + θ(1-u)(1-v))`, `θ ∈ [-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fgm {
    theta: f64,
}

impl Fgm {
    pub fn new(theta: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&theta) {
            return Err(Error::invalid(
                "FGM parameter in [-1, 1]",
                format!("theta = {theta}"),
            ));
        }
        Ok(Fgm { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// `weight * first + (1 - weight) * second`.
#[derive(Debug, Clone)]
pub struct Mixture {
    weight: f64,
    first: Box<Copula>,
    second: Box<Copula>,
}

impl Mixture {
    pub fn new(weight: f64, first: Copula, second: Copula) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::invalid(
                "mixture weight in [0, 1]",
                format!("weight = {weight}"),
            ));
        }
        Ok(Mixture {
            weight,
            first: Box::new(first),
            second: Box::new(second),
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn first(&self) -> &Copula {
        &self.first
    }

    pub fn second(&self) -> &Copula {
        &self.second
    }
}

#[derive(Debug, Clone)]
pub enum Copula {
    /// `Π(u, v) = uv`.
    Independence,
    /// `min(u, v)`, the uniform law on the diagonal.
    FrechetMin,
    Fgm(Fgm),
    Checkerboard(Arc<Checkerboard>),
    Shuffle(ShuffleOfMin),
    Mixture(Mixture),
}

impl From<ShuffleOfMin> for Copula {
    fn from(s: ShuffleOfMin) -> Self {
        Copula::Shuffle(s)
    }
}

impl From<Checkerboard> for Copula {
    fn from(c: Checkerboard) -> Self {
        Copula::Checkerboard(Arc::new(c))
    }
}

// substream tags for sampling
const COMPONENT_CHOICE: u64 = 1;
const FIRST_COMPONENT: u64 = 2;
const SECOND_COMPONENT: u64 = 3;

impl Copula {
    pub fn fgm(theta: f64) -> Result<Self> {
        Fgm::new(theta).map(Copula::Fgm)
    }

    pub fn mixture(weight: f64, first: Copula, second: Copula) -> Result<Self> {
        Mixture::new(weight, first, second).map(Copula::Mixture)
    }

    /// `C(u, v)`; arguments are clamped to the unit square.
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let v = v.clamp(0.0, 1.0);
        match self {
            Copula::Independence => u * v,
            Copula::FrechetMin => u.min(v),
            Copula::Fgm(f) => u * v * (1.0 + f.theta * (1.0 - u) * (1.0 - v)),
            Copula::Checkerboard(cb) => cb.cdf(u, v),
            Copula::Shuffle(s) => s.cdf(u, v),
            Copula::Mixture(m) => {
                m.weight * m.first.cdf(u, v) + (1.0 - m.weight) * m.second.cdf(u, v)
            }
        }
    }

    /// `∂C/∂u (u, v)`, right-continuous in `u` at strip and cell edges.
    pub fn partial1(&self, u: f64, v: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let v = v.clamp(0.0, 1.0);
        match self {
            Copula::Independence => v,
            Copula::FrechetMin => {
                if u <= v {
                    1.0
                } else {
                    0.0
                }
            }
            Copula::Fgm(f) => v + f.theta * (1.0 - 2.0 * u) * v * (1.0 - v),
            Copula::Checkerboard(cb) => cb.partial1(u, v),
            Copula::Shuffle(s) => s.partial1(u, v),
            Copula::Mixture(m) => {
                m.weight * m.first.partial1(u, v) + (1.0 - m.weight) * m.second.partial1(u, v)
            }
        }
    }

    /// `∫_s^1 ∂₁C(u, v) dv` in closed form.
    pub fn upper_partial_integral(&self, u: f64, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match self {
            Copula::Independence => (1.0 - s * s) / 2.0,
            Copula::FrechetMin => 1.0 - s.max(u),
            Copula::Fgm(f) => {
                (1.0 - s * s) / 2.0
                    + f.theta * (1.0 - 2.0 * u) * (1.0 / 6.0 - s * s / 2.0 + s * s * s / 3.0)
            }
            Copula::Checkerboard(cb) => cb.upper_partial_integral(u, s),
            Copula::Shuffle(sh) => sh.upper_partial_integral(u, s),
            Copula::Mixture(m) => {
                m.weight * m.first.upper_partial_integral(u, s)
                    + (1.0 - m.weight) * m.second.upper_partial_integral(u, s)
            }
        }
    }

    /// Points in `u` where `∂₁C` may jump (strip and cell edges).
    pub fn u_breaks(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_u_breaks(&mut out);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn collect_u_breaks(&self, out: &mut Vec<f64>) {
        match self {
            Copula::Checkerboard(cb) => out.extend(cb.edges()),
            Copula::Shuffle(s) => {
                for seg in s.segments() {
                    out.push(seg.x_lo);
                    out.push(seg.x_hi());
                }
            }
            Copula::Mixture(m) => {
                m.first.collect_u_breaks(out);
                m.second.collect_u_breaks(out);
            }
            _ => {}
        }
    }

    /// Points in `v` where `∂₁C(u, ·)` is not smooth, for fixed `u`.
    pub fn v_breaks_at(&self, u: f64) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_v_breaks(u, &mut out);
        out
    }

    fn collect_v_breaks(&self, u: f64, out: &mut Vec<f64>) {
        match self {
            Copula::FrechetMin => out.push(u),
            Copula::Checkerboard(cb) => out.extend(cb.edges()),
            Copula::Shuffle(s) => out.push(s.transport(u)),
            Copula::Mixture(m) => {
                m.first.collect_v_breaks(u, out);
                m.second.collect_v_breaks(u, out);
            }
            _ => {}
        }
    }

    /// `n` i.i.d. draws, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> PairedSample {
        let pairs = self.sample_pairs(n, seed);
        let (xs, ys) = pairs.into_iter().unzip();
        PairedSample::new(xs, ys).expect("copula draws are finite and paired")
    }

    pub(crate) fn sample_pairs(&self, n: usize, seed: u64) -> Vec<(f64, f64)> {
        let mut rng = rng::stream(seed, &[0]);
        match self {
            Copula::Independence => (0..n).map(|_| (rng.random(), rng.random())).collect(),
            Copula::FrechetMin => (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    (u, u)
                })
                .collect(),
            Copula::Fgm(f) => (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    let w: f64 = rng.random();
                    (u, fgm_conditional_quantile(f.theta, u, w))
                })
                .collect(),
            Copula::Checkerboard(cb) => {
                let m = cb.m() as f64;
                (0..n)
                    .map(|_| {
                        let (i, j) = cb.cell_at(rng.random());
                        let a: f64 = rng.random();
                        let b: f64 = rng.random();
                        ((i as f64 + a) / m, (j as f64 + b) / m)
                    })
                    .collect()
            }
            Copula::Shuffle(s) => (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    (u, s.transport(u))
                })
                .collect(),
            Copula::Mixture(m) => {
                let mut choice = rng::stream(seed, &[COMPONENT_CHOICE]);
                let from_first: Vec<bool> =
                    (0..n).map(|_| choice.random::<f64>() < m.weight).collect();
                let k = from_first.iter().filter(|&&b| b).count();
                let mut first = m
                    .first
                    .sample_pairs(k, rng::derive(seed, FIRST_COMPONENT))
                    .into_iter();
                let mut second = m
                    .second
                    .sample_pairs(n - k, rng::derive(seed, SECOND_COMPONENT))
                    .into_iter();
                from_first
                    .into_iter()
                    .map(|b| {
                        if b {
                            first.next().expect("k draws")
                        } else {
                            second.next().expect("n - k draws")
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Solves `∂₁C(u, v) = w` for the FGM copula.
fn fgm_conditional_quantile(theta: f64, u: f64, w: f64) -> f64 {
    let a = theta * (1.0 - 2.0 * u);
    let disc = ((1.0 + a) * (1.0 + a) - 4.0 * a * w).max(0.0);
    (2.0 * w / ((1.0 + a) + disc.sqrt())).clamp(0.0, 1.0)
}

impl fmt::Display for Copula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Copula::Independence => write!(f, "pi"),
            Copula::FrechetMin => write!(f, "min"),
            Copula::Fgm(g) => write!(f, "fgm:{}", g.theta),
            Copula::Checkerboard(cb) => write!(f, "checkerboard[{}x{}]", cb.m(), cb.m()),
            Copula::Shuffle(s) => match s.grid_size() {
                Some(m) => write!(f, "shuffle[grid {m}]"),
                None => write!(f, "shuffle[{} segments]", s.segments().len()),
            },
            Copula::Mixture(m) => write!(f, "mix:{},{},{}", m.weight, m.first, m.second),
        }
    }
}
