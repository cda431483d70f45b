//! Run configuration: one JSON document with strict keys.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rcm_core::{ConductanceField, TailLaw};

use crate::error::{LabError, Result};

/// Conductance law and field kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawConfig {
    pub d: usize,
    #[serde(default)]
    pub rho: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    /// Open-bond threshold for the percolation clusters.
    #[serde(default = "ten")]
    pub a_p: f64,
    /// Replace the random field by `mu == value`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homogeneous: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn ten() -> f64 {
    10.0
}

impl LawConfig {
    pub fn cauchy(d: usize) -> Self {
        LawConfig { d, rho: 0.0, alpha: 1.0, a_p: 10.0, homogeneous: None }
    }

    /// Parse `d=3,rho=0,a_p=10` (also `alpha=..`, `homogeneous=..`).
    pub fn parse(text: &str) -> Result<Self> {
        let mut d = None;
        let mut law = LawConfig::cauchy(0);
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| LabError::config(format!("law: expected key=value, got `{part}`")))?;
            let num = |v: &str| -> Result<f64> {
                v.trim().parse::<f64>().map_err(|_| LabError::config(format!("law: `{k}` needs a number, got `{v}`")))
            };
            match k.trim() {
                "d" => {
                    d = Some(v.trim().parse::<usize>().map_err(|_| LabError::config(format!("law: bad dimension `{v}`")))?)
                }
                "rho" => law.rho = num(v)?,
                "alpha" => law.alpha = num(v)?,
                "a_p" => law.a_p = num(v)?,
                "homogeneous" => law.homogeneous = Some(num(v)?),
                other => return Err(LabError::config(format!("law: unknown key `{other}`"))),
            }
        }
        law.d = d.ok_or_else(|| LabError::config("law: `d` is required"))?;
        Ok(law)
    }

    pub fn tail_law(&self) -> Result<TailLaw> {
        Ok(TailLaw::new(self.d, self.rho, self.alpha)?)
    }

    /// The environment with the given seed (lazy evaluation).
    pub fn field(&self, seed: u64) -> Result<ConductanceField> {
        match self.homogeneous {
            Some(c) => Ok(ConductanceField::homogeneous(self.d, c)?),
            None => Ok(ConductanceField::lazy(self.tail_law()?, seed)),
        }
    }
}

/// Everything an experiment run depends on. Two equal configs give
/// byte-identical outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub law: LawConfig,
    /// Scale ladder.
    pub n: Vec<u32>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Environment seed; derived from `seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env_seed: Option<u64>,
    #[serde(default = "default_walkers")]
    pub walkers: u64,
    #[serde(default = "default_environments")]
    pub environments: u32,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Final rescaled time `T`.
    #[serde(default = "one")]
    pub t: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_theta1")]
    pub theta1: f64,
    #[serde(default = "default_b_n")]
    pub b_n: u32,
    /// Half-side of solver boxes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_half: Option<u32>,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Ball radius (lattice units) for ball-averaged kernels.
    #[serde(default = "default_ball")]
    pub ball_radius: f64,
    /// Overrides for the per-experiment pass thresholds.
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
    /// Output directory; not part of the hash or the echoed parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_seed() -> u64 {
    1
}
fn default_walkers() -> u64 {
    10_000
}
fn default_environments() -> u32 {
    1
}
fn default_k() -> f64 {
    2.0
}
fn default_delta() -> f64 {
    0.1
}
fn default_beta() -> f64 {
    1.5
}
fn default_theta1() -> f64 {
    0.8
}
fn default_b_n() -> u32 {
    6
}
fn default_times() -> Vec<f64> {
    vec![1.0]
}
fn default_tol() -> f64 {
    1e-10
}
fn default_ball() -> f64 {
    2.0
}

impl RunConfig {
    /// Config with defaults for everything but the law and the ladder.
    pub fn new(law: LawConfig, n: Vec<u32>) -> Self {
        RunConfig {
            law,
            n,
            seed: default_seed(),
            env_seed: None,
            walkers: default_walkers(),
            environments: default_environments(),
            k: default_k(),
            a: 1.0,
            delta: default_delta(),
            t: 1.0,
            beta: default_beta(),
            theta1: default_theta1(),
            b_n: default_b_n(),
            box_half: None,
            times: default_times(),
            tol: default_tol(),
            ball_radius: default_ball(),
            thresholds: BTreeMap::new(),
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| LabError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(LabError::config(m.to_string()));
        if self.law.d < 1 || self.law.d > rcm_core::MAX_DIM {
            return bad("law.d out of range");
        }
        if self.n.is_empty() || self.n.iter().any(|&n| n < 2) {
            return bad("n: need a nonempty ladder of scales >= 2");
        }
        if self.walkers == 0 {
            return bad("walkers must be positive");
        }
        if self.environments == 0 {
            return bad("environments must be positive");
        }
        if !(self.k > 0.0 && self.a > 0.0 && self.t > 0.0) {
            return bad("k, a and t must be positive");
        }
        if !(self.delta > 0.0 && self.delta < self.t) {
            return bad("delta must lie in (0, t)");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.times.iter().any(|t| !(*t >= 0.0)) {
            return bad("times must be nonnegative");
        }
        Ok(())
    }

    /// Threshold `key`, falling back to the experiment's default.
    pub fn threshold(&self, key: &str, default: f64) -> f64 {
        self.thresholds.get(key).copied().unwrap_or(default)
    }

    pub fn env_seed(&self) -> u64 {
        self.env_seed.unwrap_or_else(|| rcm_core::rng::derive_seed(self.seed, rcm_core::rng::Namespace::Environment, 0))
    }

    /// Seed of environment `i` of a multi-environment experiment.
    pub fn env_seed_at(&self, i: u64) -> u64 {
        if i == 0 {
            self.env_seed()
        } else {
            rcm_core::rng::derive_seed(self.env_seed(), rcm_core::rng::Namespace::Environment, i)
        }
    }

    /// Master seed for the walks run in environment `i`.
    pub fn walk_seed_at(&self, i: u64) -> u64 {
        rcm_core::rng::derive_seed(self.seed, rcm_core::rng::Namespace::Walk, i)
    }

    /// The config as echoed into outputs (no output directory).
    pub fn params(&self) -> serde_json::Value {
        let mut c = self.clone();
        c.out = None;
        serde_json::to_value(&c).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(&self.params()).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub law: Option<LawConfig>,
    pub n: Option<Vec<u32>>,
    pub seed: Option<u64>,
    pub env_seed: Option<u64>,
    pub walkers: Option<u64>,
    pub environments: Option<u32>,
    pub box_half: Option<u32>,
    pub times: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// Merge onto `base` (or build from scratch when there is no file).
    pub fn apply(&self, base: Option<RunConfig>) -> Result<RunConfig> {
        let mut cfg = match base {
            Some(c) => c,
            None => {
                let law = self.law.clone().ok_or_else(|| LabError::config("`--law` is required without --config"))?;
                let n = self.n.clone().ok_or_else(|| LabError::config("`--n` is required without --config"))?;
                RunConfig::new(law, n)
            }
        };
        if let Some(l) = &self.law {
            cfg.law = l.clone();
        }
        if let Some(n) = &self.n {
            cfg.n = n.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.env_seed.is_some() {
            cfg.env_seed = self.env_seed;
        }
        if let Some(w) = self.walkers {
            cfg.walkers = w;
        }
        if let Some(e) = self.environments {
            cfg.environments = e;
        }
        if self.box_half.is_some() {
            cfg.box_half = self.box_half;
        }
        if let Some(t) = &self.times {
            cfg.times = t.clone();
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_json(r#"{"law": {"d": 3}, "n": [8], "walkerz": 5}"#).unwrap_err();
        assert!(err.to_string().contains("walkerz"), "{err}");
    }

    #[test]
    fn law_and_ladder_are_required() {
        assert!(RunConfig::from_json(r#"{"n": [8]}"#).is_err());
        assert!(RunConfig::from_json(r#"{"law": {"d": 3}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"law": {"rho": 0}, "n": [8]}"#).is_err());
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::from_json(r#"{"law": {"d": 3}, "n": [8, 16]}"#).unwrap();
        assert_eq!(cfg.k, 2.0);
        assert_eq!(cfg.delta, 0.1);
        assert_eq!(cfg.b_n, 6);
        assert_eq!(cfg.beta, 1.5);
        let again = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
        assert_eq!(cfg.hash().len(), 16);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::new(LawConfig::cauchy(3), vec![8]);
        let mut b = a.clone();
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn law_strings() {
        let l = LawConfig::parse("d=3,rho=0,a_p=10").unwrap();
        assert_eq!(l, LawConfig::cauchy(3));
        let h = LawConfig::parse("d=2, homogeneous=1").unwrap();
        assert_eq!(h.homogeneous, Some(1.0));
        assert!(LawConfig::parse("rho=0").is_err());
        assert!(LawConfig::parse("d=3,beta=2").is_err());
        assert!(LawConfig::parse("d=x").is_err());
    }

    #[test]
    fn overrides_merge_and_validate() {
        let o = Overrides { law: Some(LawConfig::cauchy(2)), n: Some(vec![16]), walkers: Some(5), ..Default::default() };
        let cfg = o.apply(None).unwrap();
        assert_eq!(cfg.walkers, 5);
        let o = Overrides { walkers: Some(0), ..Default::default() };
        assert!(o.apply(Some(cfg)).is_err());
        assert!(Overrides::default().apply(None).is_err());
    }
}
