//! Experiment specifications and method dispatch.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::splitmix;
use crate::config::{toml_key, ScenarioConfig};
use crate::env::PrecodingMode;
use crate::error::{Error, Result};
use crate::learner::{BufferMode, LearnerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    LlmHemarlS2dc,
    IsacS2dc,
    Isac,
    MasacS2dc,
    Masac,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::LlmHemarlS2dc, Method::IsacS2dc, Method::Isac, Method::MasacS2dc, Method::Masac];

    pub fn name(self) -> &'static str {
        match self {
            Method::LlmHemarlS2dc => "llm-hemarl-s2dc",
            Method::IsacS2dc => "isac-s2dc",
            Method::Isac => "isac",
            Method::MasacS2dc => "masac-s2dc",
            Method::Masac => "masac",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// What a method changes in the shared training pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pipeline {
    pub method: Method,
    /// Offline distillation from expert data before online training.
    pub distill: bool,
    pub buffers: BufferMode,
    pub precoding: PrecodingMode,
}

/// Methods without the inner precoding solver act on mobility × common/
/// private power-split level instead.
pub fn baseline_dispatch(method: Method, power_split_levels: usize) -> Pipeline {
    let split = PrecodingMode::PowerSplit {
        levels: power_split_levels,
    };
    let (distill, buffers, precoding) = match method {
        Method::LlmHemarlS2dc => (true, BufferMode::PerAgent, PrecodingMode::S2dc),
        Method::IsacS2dc => (false, BufferMode::PerAgent, PrecodingMode::S2dc),
        Method::Isac => (false, BufferMode::PerAgent, split),
        Method::MasacS2dc => (false, BufferMode::Shared, PrecodingMode::S2dc),
        Method::Masac => (false, BufferMode::Shared, split),
    };
    Pipeline {
        method,
        distill,
        buffers,
        precoding,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpertKind {
    Scripted,
    /// Chat-completion endpoint configured through environment variables.
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillSettings {
    pub expert: ExpertKind,
    /// Expert episodes collected per seed.
    pub dataset_episodes: usize,
    /// Gradient updates per agent.
    pub updates: usize,
    pub start_jitter: f64,
    /// Eve repulsion gain of the scripted expert.
    pub repulsion_gain: f64,
}

impl Default for DistillSettings {
    fn default() -> Self {
        Self {
            expert: ExpertKind::Scripted,
            dataset_episodes: 500,
            updates: 500,
            start_jitter: 0.25,
            repulsion_gain: crate::expert::DEFAULT_REPULSION_GAIN,
        }
    }
}

/// Per-seed resampling of coverage ranges and service capacities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Heterogeneity {
    pub coverage_range: [f64; 2],
    pub service_capacity: [usize; 2],
}

impl Heterogeneity {
    pub fn apply(&self, cfg: &mut ScenarioConfig, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ 0x6865_7465_726f));
        let [c_lo, c_hi] = self.coverage_range;
        let [n_lo, n_hi] = self.service_capacity;
        cfg.coverage_range = (0..cfg.n_uav).map(|_| rng.gen_range(c_lo..=c_hi)).collect();
        cfg.service_capacity = (0..cfg.n_uav).map(|_| rng.gen_range(n_lo..=n_hi)).collect();
    }

    fn validate(&self) -> Result<()> {
        let [c_lo, c_hi] = self.coverage_range;
        if !(c_lo > 0.0 && c_hi >= c_lo && c_hi.is_finite()) {
            return Err(Error::config("heterogeneity.coverage_range", "need 0 < lo <= hi"));
        }
        let [n_lo, n_hi] = self.service_capacity;
        if n_lo == 0 || n_hi < n_lo {
            return Err(Error::config("heterogeneity.service_capacity", "need 1 <= lo <= hi"));
        }
        Ok(())
    }
}

/// On-disk form of an experiment.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    scenario_file: Option<PathBuf>,
    scenario: Option<toml::Value>,
    methods: Vec<String>,
    #[serde(default = "default_seeds")]
    seeds: Vec<u64>,
    episodes: usize,
    #[serde(default)]
    out_dir: Option<PathBuf>,
    #[serde(default)]
    checkpoint_every: usize,
    #[serde(default = "default_split_levels")]
    power_split_levels: usize,
    #[serde(default)]
    learner: LearnerConfig,
    #[serde(default)]
    distill: DistillSettings,
    #[serde(default)]
    heterogeneity: Option<Heterogeneity>,
}

fn default_seeds() -> Vec<u64> {
    vec![30, 40, 50, 60]
}

fn default_split_levels() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub out_dir: PathBuf,
    /// Save agents every this many episodes; 0 keeps only the final one.
    pub checkpoint_every: usize,
    pub power_split_levels: usize,
    pub learner: LearnerConfig,
    pub distill: DistillSettings,
    pub heterogeneity: Option<Heterogeneity>,
}

impl ExperimentSpec {
    pub fn new(scenario: ScenarioConfig, methods: Vec<Method>, seeds: Vec<u64>, episodes: usize, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            scenario,
            methods,
            seeds,
            episodes,
            out_dir: out_dir.into(),
            checkpoint_every: 0,
            power_split_levels: default_split_levels(),
            learner: LearnerConfig::default(),
            distill: DistillSettings::default(),
            heterogeneity: None,
        }
    }

    /// Parses a spec; a relative `scenario_file` resolves against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let file: SpecFile = toml::from_str(text).map_err(|e| Error::config(toml_key(&e), e.message().to_string()))?;
        let scenario = match (file.scenario_file, file.scenario) {
            (Some(_), Some(_)) => return Err(Error::config("scenario", "give either scenario_file or [scenario], not both")),
            (Some(p), None) => {
                let p = if p.is_relative() { base_dir.join(p) } else { p };
                ScenarioConfig::load(&p).map_err(|e| match e {
                    Error::Io(io) => Error::config("scenario_file", format!("{}: {io}", p.display())),
                    other => other,
                })?
            }
            (None, Some(v)) => ScenarioConfig::from_toml_value(v)?,
            (None, None) => ScenarioConfig::default(),
        };
        let methods = file.methods.iter().map(|m| Method::parse(m)).collect::<Result<Vec<_>>>()?;
        let spec = Self {
            scenario,
            methods,
            seeds: file.seeds,
            episodes: file.episodes,
            out_dir: file.out_dir.unwrap_or_else(|| PathBuf::from("runs")),
            checkpoint_every: file.checkpoint_every,
            power_split_levels: file.power_split_levels,
            learner: file.learner,
            distill: file.distill,
            heterogeneity: file.heterogeneity,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::config("methods", "list at least one method"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "list at least one seed"));
        }
        if self.power_split_levels < 2 {
            return Err(Error::config("power_split_levels", "need at least 2 levels"));
        }
        if !(0.0..=1.0).contains(&self.distill.start_jitter) {
            return Err(Error::config("distill.start_jitter", "must lie in [0, 1]"));
        }
        if self.methods.contains(&Method::LlmHemarlS2dc) && self.distill.dataset_episodes == 0 {
            return Err(Error::config("distill.dataset_episodes", "distillation needs at least one episode"));
        }
        if let Some(h) = &self.heterogeneity {
            h.validate()?;
        }
        self.learner.validate()?;
        self.scenario.validate()
    }

    /// The scenario a given seed runs, after per-seed heterogeneity sampling.
    pub fn scenario_for(&self, seed: u64) -> ScenarioConfig {
        let mut cfg = self.scenario.clone();
        if let Some(h) = &self.heterogeneity {
            h.apply(&mut cfg, seed);
        }
        cfg
    }
}

/// Seeds of the independent random streams of one (method, seed) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSeeds {
    pub layout: u64,
    pub online_fading: u64,
    pub dataset_fading: u64,
    pub agents: u64,
}

impl CellSeeds {
    pub fn new(seed: u64) -> Self {
        Self {
            layout: seed,
            online_fading: splitmix(seed ^ 0x6f6e_6c69_6e65),
            dataset_fading: splitmix(seed ^ 0x6461_7461),
            agents: seed,
        }
    }
}
