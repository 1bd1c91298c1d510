//! Monte-Carlo studies: rejection rates of independence tests along families
//! with constant xi that converge to the base copula, and coverage of
//! confidence intervals for xi.
//!
//! Replicate `r` of the row keyed `key` draws everything from the substream
//! `(seed, study, key, r)`, where `key` is the strip count `m` of a family
//! member and [`BASE_KEY`] for the base copula. Rates are sums of per
//! replicate indicators, so tables do not depend on the worker count.

mod config;

use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use crate::approx::{sup_distance, DEFAULT_GRID};
use crate::calibration::weak_convergence_family;
use crate::copula::Copula;
use crate::error::{Error, Result};
use crate::inference::{asymptotic_test, confidence_interval, exact_mc_test, CiMethod, TestMethod};
use crate::rng;
use crate::xi::population_xi;

pub use config::ExperimentConfig;

/// Row key of the base copula.
pub const BASE_KEY: u64 = 0;

const POWER_STUDY: u64 = 1;
const COVERAGE_STUDY: u64 = 2;

const SAMPLE_TAG: u64 = 0;
const TIE_TAG: u64 = 1;
const TEST_TAG: u64 = 2;

pub const POWER_HEADER: [&str; 10] = [
    "m",
    "alpha_mix",
    "true_xi",
    "sup_dist_to_base",
    "rejection_rate",
    "mc_se",
    "R",
    "n",
    "method",
    "seed",
];

pub const COVERAGE_HEADER: [&str; 7] = [
    "distribution",
    "target_xi",
    "coverage",
    "contains_interval",
    "R",
    "n",
    "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    /// `None` for the base copula (written as `inf`).
    pub m: Option<usize>,
    pub alpha_mix: f64,
    pub true_xi: f64,
    pub sup_dist_to_base: f64,
    pub rejection_rate: f64,
    pub mc_se: f64,
    pub replicates: usize,
    pub n: usize,
    pub method: TestMethod,
    pub seed: u64,
}

impl PowerRow {
    pub fn rejections(&self) -> usize {
        (self.rejection_rate * self.replicates as f64).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerCurve {
    pub rows: Vec<PowerRow>,
}

impl PowerCurve {
    pub fn size_row(&self) -> Option<&PowerRow> {
        self.rows.iter().find(|r| r.m.is_none())
    }

    pub fn row(&self, m: usize) -> Option<&PowerRow> {
        self.rows.iter().find(|r| r.m == Some(m))
    }

    pub fn to_csv(&self) -> Result<String> {
        let records = self.rows.iter().map(|r| {
            vec![
                r.m.map_or_else(|| "inf".to_string(), |m| m.to_string()),
                r.alpha_mix.to_string(),
                r.true_xi.to_string(),
                r.sup_dist_to_base.to_string(),
                r.rejection_rate.to_string(),
                r.mc_se.to_string(),
                r.replicates.to_string(),
                r.n.to_string(),
                r.method.name().to_string(),
                r.seed.to_string(),
            ]
        });
        csv_string(&POWER_HEADER, records)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub distribution: String,
    pub target_xi: f64,
    pub coverage: f64,
    pub contains_interval: f64,
    pub replicates: usize,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageTable {
    pub method: CiMethod,
    pub rows: Vec<CoverageRow>,
}

impl CoverageTable {
    pub fn row(&self, distribution: &str, target_xi: f64) -> Option<&CoverageRow> {
        self.rows
            .iter()
            .find(|r| r.distribution == distribution && r.target_xi == target_xi)
    }

    pub fn to_csv(&self) -> Result<String> {
        let records = self.rows.iter().map(|r| {
            vec![
                r.distribution.clone(),
                r.target_xi.to_string(),
                r.coverage.to_string(),
                r.contains_interval.to_string(),
                r.replicates.to_string(),
                r.n.to_string(),
                r.seed.to_string(),
            ]
        });
        csv_string(&COVERAGE_HEADER, records)
    }
}

fn csv_string<I>(header: &[&str], records: I) -> Result<String>
where
    I: Iterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(header).map_err(fail)?;
    for rec in records {
        w.write_record(&rec).map_err(fail)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `√(p(1-p)/R)`.
pub fn mc_se(rate: f64, replicates: usize) -> f64 {
    (rate * (1.0 - rate) / replicates as f64).sqrt()
}

/// Standard error of the difference of two rates from `R` replicates each,
/// under the pooled rate.
pub fn pooled_se(rate_a: f64, rate_b: f64, replicates: usize) -> f64 {
    let p = 0.5 * (rate_a + rate_b);
    (p * (1.0 - p) * 2.0 / replicates as f64).sqrt()
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

fn rejection_count(cfg: &ExperimentConfig, copula: &Copula, key: u64, method: TestMethod) -> Result<usize> {
    let outcomes: Vec<bool> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let seed = rng::derive_path(cfg.seed, &[POWER_STUDY, key, r]);
            let sample = copula.sample(cfg.n, rng::derive(seed, SAMPLE_TAG));
            let result = match method {
                TestMethod::Asymptotic => {
                    asymptotic_test(&sample, cfg.alpha, rng::derive(seed, TIE_TAG))?
                }
                TestMethod::ExactMc => {
                    exact_mc_test(&sample, cfg.alpha, cfg.mc_b, rng::derive(seed, TEST_TAG))?
                }
            };
            Ok(result.reject)
        })
        .collect::<Result<_>>()?;
    Ok(outcomes.into_iter().filter(|&x| x).count())
}

fn power_row(
    cfg: &ExperimentConfig,
    m: Option<usize>,
    alpha_mix: f64,
    copula: &Copula,
    method: TestMethod,
) -> Result<PowerRow> {
    let key = m.map_or(BASE_KEY, |m| m as u64);
    let rejections = rejection_count(cfg, copula, key, method)?;
    let rate = rejections as f64 / cfg.replicates as f64;
    Ok(PowerRow {
        m,
        alpha_mix,
        true_xi: population_xi(copula),
        sup_dist_to_base: sup_distance(copula, &cfg.base, DEFAULT_GRID),
        rejection_rate: rate,
        mc_se: mc_se(rate, cfg.replicates),
        replicates: cfg.replicates,
        n: cfg.n,
        method,
        seed: cfg.seed,
    })
}

/// Rejection rate of `method` when the data come from the base copula.
pub fn size_study(cfg: &ExperimentConfig, method: TestMethod) -> Result<PowerRow> {
    cfg.validate()?;
    pool(cfg.workers)?.install(|| power_row(cfg, None, 0.0, &cfg.base, method))
}

/// Rejection rates along the family with xi `cfg.target_xi` converging to the
/// base, one row per strip count plus a final base row (`m = inf`).
pub fn power_study(cfg: &ExperimentConfig, method: TestMethod) -> Result<PowerCurve> {
    cfg.validate()?;
    let family = weak_convergence_family(&cfg.base, cfg.target_xi, &cfg.m_list)?;
    let pool = pool(cfg.workers)?;
    pool.install(|| {
        let mut rows = Vec::with_capacity(family.len() + 1);
        for member in &family {
            let row = power_row(cfg, Some(member.m), member.alpha, &member.copula, method)?;
            if (row.true_xi - cfg.target_xi).abs() > 1e-8 {
                return Err(Error::Postcondition(format!(
                    "row m={} has xi {}, target {}",
                    member.m, row.true_xi, cfg.target_xi
                )));
            }
            rows.push(row);
        }
        rows.push(power_row(cfg, None, 0.0, &cfg.base, method)?);
        Ok(PowerCurve { rows })
    })
}

/// Label of the family member with `m` strips in coverage tables.
pub fn member_label(m: usize) -> String {
    format!("family_m{m}")
}

pub const BASE_LABEL: &str = "base";

/// Interval coverage under the base copula and under each family member.
///
/// Base rows: one with the true xi of the base and one with `target_xi`,
/// whose coverage estimates `P(target ∈ Cₙ)` under the base. Member rows use
/// their own (true) xi. `contains_interval` estimates `P([ξ(P), 1] ⊂ Cₙ)`.
pub fn coverage_study(cfg: &ExperimentConfig, method: CiMethod) -> Result<CoverageTable> {
    cfg.validate()?;
    let family = weak_convergence_family(&cfg.base, cfg.target_xi, &cfg.m_list)?;
    let pool = pool(cfg.workers)?;
    pool.install(|| {
        let mut rows = Vec::new();
        let base_xi = population_xi(&cfg.base);
        let mut base_targets = vec![base_xi];
        if cfg.target_xi != base_xi {
            base_targets.push(cfg.target_xi);
        }
        rows.extend(coverage_rows(cfg, method, BASE_LABEL, &cfg.base, BASE_KEY, base_xi, &base_targets)?);
        for member in &family {
            rows.extend(coverage_rows(
                cfg,
                method,
                &member_label(member.m),
                &member.copula,
                member.m as u64,
                member.xi,
                &[member.xi],
            )?);
        }
        Ok(CoverageTable { method, rows })
    })
}

fn coverage_rows(
    cfg: &ExperimentConfig,
    method: CiMethod,
    label: &str,
    copula: &Copula,
    key: u64,
    true_xi: f64,
    targets: &[f64],
) -> Result<Vec<CoverageRow>> {
    // per replicate: hit count for each target, then the interval indicator
    let counts: Vec<Vec<usize>> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let seed = rng::derive_path(cfg.seed, &[COVERAGE_STUDY, key, r]);
            let sample = copula.sample(cfg.n, rng::derive(seed, SAMPLE_TAG));
            let ci = confidence_interval(method, &sample, cfg.alpha, rng::derive(seed, TIE_TAG))?;
            let mut hits: Vec<usize> = targets.iter().map(|&t| ci.contains(t) as usize).collect();
            hits.push((ci.lower <= true_xi && ci.upper >= 1.0) as usize);
            Ok(hits)
        })
        .collect::<Result<_>>()?;
    let total = |k: usize| counts.iter().map(|c| c[k]).sum::<usize>() as f64 / cfg.replicates as f64;
    let contains = total(targets.len());
    Ok(targets
        .iter()
        .enumerate()
        .map(|(k, &t)| CoverageRow {
            distribution: label.to_string(),
            target_xi: t,
            coverage: total(k),
            contains_interval: contains,
            replicates: cfg.replicates,
            n: cfg.n,
            seed: cfg.seed,
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub study: String,
    pub seed: u64,
    pub output: Option<String>,
    pub wall_time_seconds: f64,
    config: config::ConfigEcho,
}

impl RunManifest {
    pub fn new(study: &str, cfg: &ExperimentConfig, output: Option<&Path>, wall: Duration) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            study: study.to_string(),
            seed: cfg.seed,
            output: output.map(|p| p.display().to_string()),
            wall_time_seconds: wall.as_secs_f64(),
            config: cfg.echo(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
