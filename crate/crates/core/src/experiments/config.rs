use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::copula::parse::parse_copula_spec_in;
use crate::copula::Copula;
use crate::error::{Error, Result};
use crate::inference::{CiMethod, TestMethod};
use crate::rng::DEFAULT_SEED;

/// Settings shared by the Monte-Carlo studies.
///
/// Text form is one `key = value` per line; `#` starts a comment. Keys:
/// `n`, `R`, `B`, `m_list`, `base`, `target_xi`, `alpha`, `seed`, `workers`,
/// `test_method`, `ci_method`, `out`, `manifest`.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub n: usize,
    pub replicates: usize,
    pub mc_b: usize,
    pub m_list: Vec<usize>,
    pub base: Copula,
    /// Spec text `base` was parsed from; echoed verbatim.
    pub base_text: String,
    pub target_xi: f64,
    pub alpha: f64,
    pub seed: u64,
    pub workers: usize,
    pub test_method: TestMethod,
    pub ci_method: CiMethod,
    pub out: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 100,
            replicates: 2000,
            mc_b: 2000,
            m_list: vec![1, 10, 100, 1000, 10_000],
            base: Copula::Independence,
            base_text: "pi".into(),
            target_xi: 1.0,
            alpha: 0.05,
            seed: DEFAULT_SEED,
            workers: 1,
            test_method: TestMethod::ExactMc,
            ci_method: CiMethod::Normal,
            out: None,
            manifest: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value for {key}: '{value}'")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|s| parse_num(key, s.trim()))
        .collect()
}

fn resolve(base_dir: &Path, value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| base_dir.join(value))
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, dir)
    }

    /// Parses the text form; `@FILE` references and relative output paths
    /// resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                position: lineno + 1,
                message: format!("expected key=value, got '{line}'"),
            })?;
            cfg.set(key.trim(), value.trim(), base_dir)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key, as in the text form.
    pub fn set(&mut self, key: &str, value: &str, base_dir: &Path) -> Result<()> {
        match key {
            "n" => self.n = parse_num(key, value)?,
            "R" => self.replicates = parse_num(key, value)?,
            "B" => self.mc_b = parse_num(key, value)?,
            "m_list" => self.m_list = parse_list(key, value)?,
            "base" => {
                self.base = parse_copula_spec_in(value, Some(base_dir))?;
                self.base_text = value.to_string();
            }
            "target_xi" => self.target_xi = parse_num(key, value)?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "workers" => self.workers = parse_num(key, value)?,
            "test_method" => self.test_method = TestMethod::parse(value)?,
            "ci_method" => self.ci_method = CiMethod::parse(value)?,
            "out" => self.out = resolve(base_dir, value),
            "manifest" => self.manifest = resolve(base_dir, value),
            _ => return Err(Error::InvalidArgument(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n", self.n),
            ("R", self.replicates),
            ("B", self.mc_b),
            ("workers", self.workers),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
            }
        }
        if self.m_list.is_empty() || self.m_list.contains(&0) {
            return Err(Error::InvalidArgument("m_list needs positive strip counts".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !self.target_xi.is_finite() {
            return Err(Error::InvalidArgument("target_xi must be finite".into()));
        }
        Ok(())
    }

    /// Fully resolved configuration, in the text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let list: Vec<String> = self.m_list.iter().map(|m| m.to_string()).collect();
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        vec![
            ("n", self.n.to_string()),
            ("R", self.replicates.to_string()),
            ("B", self.mc_b.to_string()),
            ("m_list", list.join(",")),
            ("base", self.base_text.clone()),
            ("target_xi", self.target_xi.to_string()),
            ("alpha", self.alpha.to_string()),
            ("seed", self.seed.to_string()),
            ("workers", self.workers.to_string()),
            ("test_method", self.test_method.name().to_string()),
            ("ci_method", self.ci_method.name().to_string()),
            ("out", path(&self.out)),
            ("manifest", path(&self.manifest)),
        ]
    }

    pub(crate) fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            entries: self
                .entries()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
pub(crate) struct ConfigEcho {
    entries: std::collections::BTreeMap<String, String>,
}
