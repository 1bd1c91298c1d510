//! Independence tests and confidence intervals built on the rank estimator.
//!
//! Both tests reject for large `|ξ̂ₙ|`. The asymptotic test compares
//! `√(5n/2)|ξ̂ₙ|` with a normal quantile. The exact test compares `|ξ̂ₙ|` with
//! a Monte-Carlo quantile of its null law, which for continuous margins is
//! the law of the statistic for a uniformly random permutation of ranks.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng;
use crate::sample::PairedSample;
use crate::xi::{xi_hat, xi_hat_from_ranks};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Asymptotic,
    ExactMc,
}

impl TestMethod {
    pub fn name(self) -> &'static str {
        match self {
            TestMethod::Asymptotic => "asymptotic",
            TestMethod::ExactMc => "exact_mc",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "asymptotic" => Ok(TestMethod::Asymptotic),
            "exact" | "exact_mc" => Ok(TestMethod::ExactMc),
            _ => Err(Error::InvalidArgument(format!("unknown test method '{text}'"))),
        }
    }
}

/// Direction of the rejection region. The default is two-sided, on `|ξ̂ₙ|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    Greater,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub threshold: f64,
    pub p_value: f64,
    pub reject: bool,
    pub n: usize,
    pub alpha: f64,
    pub method: TestMethod,
    pub alternative: Alternative,
    pub xi_hat: f64,
    pub mc_b: Option<usize>,
    pub seed: Option<u64>,
    /// Ties in the data leave the regime where the exact null law is pivotal.
    pub ties_present: bool,
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Two-sided asymptotic test: reject when `√(5n/2)|ξ̂ₙ| >= u_{1-α/2}`.
pub fn asymptotic_test(sample: &PairedSample, alpha: f64, tie_seed: u64) -> Result<TestResult> {
    asymptotic_test_with(sample, alpha, tie_seed, Alternative::TwoSided)
}

pub fn asymptotic_test_with(
    sample: &PairedSample,
    alpha: f64,
    tie_seed: u64,
    alternative: Alternative,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    let xi = xi_hat(sample, tie_seed)?;
    let mut result = asymptotic_test_from_xi(xi, sample.len(), alpha, alternative)?;
    result.ties_present = sample.has_x_ties() || sample.has_y_ties();
    Ok(result)
}

/// Asymptotic test for a given value of the estimator.
pub fn asymptotic_test_from_xi(
    xi: f64,
    n: usize,
    alpha: f64,
    alternative: Alternative,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    let scale = (5.0 * n as f64 / 2.0).sqrt();
    let normal = std_normal();
    let (statistic, threshold, p_value) = match alternative {
        Alternative::TwoSided => {
            let s = scale * xi.abs();
            (s, normal_quantile(1.0 - alpha / 2.0), 2.0 * (1.0 - normal.cdf(s)))
        }
        Alternative::Greater => {
            let s = scale * xi;
            (s, normal_quantile(1.0 - alpha), 1.0 - normal.cdf(s))
        }
    };
    Ok(TestResult {
        statistic,
        threshold,
        p_value: p_value.clamp(0.0, 1.0),
        reject: statistic >= threshold,
        n,
        alpha,
        method: TestMethod::Asymptotic,
        alternative,
        xi_hat: xi,
        mc_b: None,
        seed: None,
        ties_present: false,
    })
}

/// Monte-Carlo draws of `ξ̂ₙ` under independence with continuous margins.
#[derive(Debug, Clone, PartialEq)]
pub struct NullDistribution {
    n: usize,
    seed: u64,
    signed: Vec<f64>,
    absolute: Vec<f64>,
}

impl NullDistribution {
    /// `b` draws; draw `k` uses its own substream, so the result does not
    /// depend on how draws are spread over threads.
    pub fn simulate(n: usize, b: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::SampleTooSmall { needed: 2, got: n });
        }
        if b == 0 {
            return Err(Error::InvalidArgument("need at least one null draw".into()));
        }
        let mut signed: Vec<f64> = (0..b as u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = rng::stream(seed, &[k]);
                let mut ranks: Vec<usize> = (1..=n).collect();
                ranks.shuffle(&mut rng);
                xi_hat_from_ranks(&ranks)
            })
            .collect();
        let mut absolute: Vec<f64> = signed.iter().map(|x| x.abs()).collect();
        signed.sort_by(f64::total_cmp);
        absolute.sort_by(f64::total_cmp);
        Ok(NullDistribution {
            n,
            seed,
            signed,
            absolute,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn draws(&self) -> usize {
        self.signed.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn sorted(&self, alternative: Alternative) -> &[f64] {
        match alternative {
            Alternative::TwoSided => &self.absolute,
            Alternative::Greater => &self.signed,
        }
    }

    /// The `⌈level · B⌉`-th order statistic (of `|ξ̂ₙ|` for two-sided tests).
    pub fn quantile(&self, level: f64, alternative: Alternative) -> f64 {
        let sorted = self.sorted(alternative);
        let b = sorted.len();
        // guard against 0.95 * 2000 = 1900.0000000000002
        let k = ((level * b as f64) - 1e-9).ceil().clamp(1.0, b as f64) as usize;
        sorted[k - 1]
    }

    /// Number of draws at least as extreme as `statistic`.
    pub fn exceedances(&self, statistic: f64, alternative: Alternative) -> usize {
        let sorted = self.sorted(alternative);
        sorted.len() - sorted.partition_point(|&x| x < statistic)
    }
}

// substream tags below the exact test's seed
const NULL_DRAWS: u64 = 1;
const OBSERVED_TIES: u64 = 2;

/// Exact Monte-Carlo test with `b` null draws: reject when `|ξ̂ₙ|` reaches the
/// `⌈(1-α)B⌉`-th order statistic of the simulated `|ξ̂ₙ|`; p-value
/// `(1 + #{draws >= observed}) / (B + 1)`.
pub fn exact_mc_test(sample: &PairedSample, alpha: f64, b: usize, seed: u64) -> Result<TestResult> {
    exact_mc_test_with(sample, alpha, b, seed, Alternative::TwoSided)
}

pub fn exact_mc_test_with(
    sample: &PairedSample,
    alpha: f64,
    b: usize,
    seed: u64,
    alternative: Alternative,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    if b < 100 {
        return Err(Error::InvalidArgument(format!("exact test needs B >= 100, got {b}")));
    }
    let xi = xi_hat(sample, rng::derive(seed, OBSERVED_TIES))?;
    let null = NullDistribution::simulate(sample.len(), b, rng::derive(seed, NULL_DRAWS))?;
    let mut result = test_against_null(xi, &null, alpha, alternative);
    result.seed = Some(seed);
    result.ties_present = sample.has_x_ties() || sample.has_y_ties();
    Ok(result)
}

fn test_against_null(
    xi: f64,
    null: &NullDistribution,
    alpha: f64,
    alternative: Alternative,
) -> TestResult {
    let statistic = match alternative {
        Alternative::TwoSided => xi.abs(),
        Alternative::Greater => xi,
    };
    let threshold = null.quantile(1.0 - alpha, alternative);
    let b = null.draws();
    let p_value = (1 + null.exceedances(statistic, alternative)) as f64 / (b + 1) as f64;
    TestResult {
        statistic,
        threshold,
        p_value,
        reject: statistic >= threshold,
        n: null.n(),
        alpha,
        method: TestMethod::ExactMc,
        alternative,
        xi_hat: xi,
        mc_b: Some(b),
        seed: None,
        ties_present: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullQuantileTable {
    pub n: usize,
    pub b: usize,
    pub seed: u64,
    /// `(alpha, u_{n,1-alpha})` pairs.
    pub rows: Vec<(f64, f64)>,
}

impl NullQuantileTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,quantile\n");
        for (a, q) in &self.rows {
            out.push_str(&format!("{a},{q}\n"));
        }
        out
    }
}

/// Null quantiles `u_{n,1-α}` of `|ξ̂ₙ|` for each level in `alphas`.
pub fn null_quantile_table(
    n: usize,
    alphas: &[f64],
    b: usize,
    seed: u64,
) -> Result<NullQuantileTable> {
    if b < 1000 {
        return Err(Error::InvalidArgument(format!("null table needs B >= 1000, got {b}")));
    }
    for &a in alphas {
        check_alpha(a)?;
    }
    let null = NullDistribution::simulate(n, b, seed)?;
    Ok(NullQuantileTable {
        n,
        b,
        seed,
        rows: alphas
            .iter()
            .map(|&a| (a, null.quantile(1.0 - a, Alternative::TwoSided)))
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// `ξ̂ₙ ± u_{1-α/2} √(2/(5n))`.
    Normal,
    /// The trivial interval `[-1, 1]`.
    Full,
}

impl CiMethod {
    pub fn name(self) -> &'static str {
        match self {
            CiMethod::Normal => "normal",
            CiMethod::Full => "full",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "normal" => Ok(CiMethod::Normal),
            "full" => Ok(CiMethod::Full),
            _ => Err(Error::InvalidArgument(format!("unknown CI method '{text}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CiResult {
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
    pub alpha: f64,
    pub method: CiMethod,
    pub xi_hat: f64,
}

impl CiResult {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// `[ξ̂ₙ - q√(2/(5n)), ξ̂ₙ + q√(2/(5n))] ∩ [-1, 1]` with `q = u_{1-α/2}`.
pub fn normal_ci(sample: &PairedSample, alpha: f64, tie_seed: u64) -> Result<CiResult> {
    check_alpha(alpha)?;
    let xi = xi_hat(sample, tie_seed)?;
    normal_ci_from_xi(xi, sample.len(), alpha)
}

pub fn normal_ci_from_xi(xi: f64, n: usize, alpha: f64) -> Result<CiResult> {
    check_alpha(alpha)?;
    let half = normal_quantile(1.0 - alpha / 2.0) * (2.0 / (5.0 * n as f64)).sqrt();
    Ok(CiResult {
        lower: (xi - half).clamp(-1.0, 1.0),
        upper: (xi + half).clamp(-1.0, 1.0),
        n,
        alpha,
        method: CiMethod::Normal,
        xi_hat: xi,
    })
}

/// Dispatches on `method`; the `Full` interval ignores the data.
pub fn confidence_interval(
    method: CiMethod,
    sample: &PairedSample,
    alpha: f64,
    tie_seed: u64,
) -> Result<CiResult> {
    match method {
        CiMethod::Normal => normal_ci(sample, alpha, tie_seed),
        CiMethod::Full => {
            check_alpha(alpha)?;
            Ok(CiResult {
                lower: -1.0,
                upper: 1.0,
                n: sample.len(),
                alpha,
                method,
                xi_hat: xi_hat(sample, tie_seed)?,
            })
        }
    }
}
