use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{self, tiger_spec, uav_spec, DomainSpec, TigerParams, UavParams};
use crate::error::{Error, Result};
use crate::policy_tree::PolicyTree;
use crate::selection::{MetricKind, SelectionMode};
use crate::vae::{TrainConfig, TreeShape};

/// Opponent-model sources compared in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// The `m` reconstructed trees, EMPTY nodes filled with the history's
    /// most frequent action.
    IdidKnownModels,
    /// `K` of the `M` generated trees, uniformly at random.
    Random,
    VaeMdf,
    VaeIcd,
    /// Generation with a plain (unweighted) BCE-trained network, top-K by the
    /// configured metric.
    VaeBceloss,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::IdidKnownModels,
        Method::Random,
        Method::VaeMdf,
        Method::VaeIcd,
        Method::VaeBceloss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::IdidKnownModels => "idid-known-models",
            Method::Random => "random",
            Method::VaeMdf => "vae-mdf",
            Method::VaeIcd => "vae-icd",
            Method::VaeBceloss => "vae-bceloss",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which tree plays the opponent during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthMode {
    /// The noiseless tree that generated the history; not necessarily in any
    /// candidate set.
    #[default]
    Generator,
    /// One of the reconstructed trees (completed), picked by seed.
    Reconstructed,
}

/// What happens to generated trees that still contain EMPTY nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncompletePolicy {
    /// Fill EMPTY nodes with the history's most frequent action.
    #[default]
    Fill,
    /// Drop them from the candidate set.
    Exclude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainName {
    #[default]
    Tiger,
    Uav,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub name: DomainName,
    pub tiger: TigerParams,
    pub uav: UavParams,
}

impl DomainConfig {
    pub fn spec(&self) -> Result<DomainSpec> {
        match self.name {
            DomainName::Tiger => tiger_spec(&self.tiger),
            DomainName::Uav => uav_spec(&self.uav),
        }
    }

    /// The opponent policy that produces the interaction history.
    pub fn generator_tree(&self, depth: usize) -> PolicyTree {
        match self.name {
            DomainName::Tiger => domain::tiger::default_opponent_tree(depth),
            DomainName::Uav => domain::uav::default_opponent_tree(depth),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Fill the `solve_seconds`/`eval_seconds` columns. Off by default so
    /// reports are byte-reproducible; timings always go to `timings.csv`.
    pub wall_times: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub domain: DomainConfig,
    /// History length `L`.
    pub history_length: usize,
    /// Planning horizon and tree depth `T`.
    pub horizon: usize,
    /// Probability the history generator replaces its action with a random one.
    pub history_noise: f64,
    /// Number of reconstructed trees `m`.
    pub reconstructed: usize,
    /// Number of generated trees `M`.
    pub generated: usize,
    pub k: usize,
    pub metric: MetricKind,
    pub selection: SelectionMode,
    pub methods: Vec<Method>,
    pub truth: TruthMode,
    pub incomplete: IncompletePolicy,
    /// Evaluation episodes per method.
    pub runs: usize,
    /// Relative prior weights over the selected trees; uniform when empty.
    pub prior_weights: Vec<f64>,
    pub train: TrainConfig,
    pub report: ReportConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("veb-out"),
            domain: DomainConfig::default(),
            history_length: 1000,
            horizon: 3,
            history_noise: 0.1,
            reconstructed: 6,
            generated: 100,
            k: 10,
            metric: MetricKind::Icd,
            selection: SelectionMode::Greedy,
            methods: Method::ALL.to_vec(),
            truth: TruthMode::Generator,
            incomplete: IncompletePolicy::Fill,
            runs: 50,
            prior_weights: Vec::new(),
            train: TrainConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::parse("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.history_length == 0 || self.horizon == 0 {
            return Err(Error::Config("history_length and horizon must be at least 1".into()));
        }
        if self.history_length < self.horizon {
            return Err(Error::Config(format!(
                "history_length {} is shorter than the horizon {}",
                self.history_length, self.horizon
            )));
        }
        if !(0.0..=1.0).contains(&self.history_noise) {
            return Err(Error::Config(format!("history_noise {} outside [0, 1]", self.history_noise)));
        }
        if self.reconstructed == 0 || self.generated == 0 || self.runs == 0 {
            return Err(Error::Config("reconstructed, generated and runs must be at least 1".into()));
        }
        if self.k == 0 || self.k > self.generated {
            return Err(Error::KOutOfRange {
                k: self.k,
                n: self.generated,
            });
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if !self.prior_weights.is_empty() {
            if self.prior_weights.len() != self.k {
                return Err(Error::LengthMismatch {
                    expected: self.k,
                    actual: self.prior_weights.len(),
                });
            }
            if self.prior_weights.iter().any(|&w| !(w >= 0.0 && w.is_finite()))
                || self.prior_weights.iter().sum::<f64>() <= 0.0
            {
                return Err(Error::Config("prior_weights must be non-negative with a positive sum".into()));
            }
        }
        self.train.validate()?;
        self.domain.spec()?;
        Ok(())
    }

    /// Shape of the opponent's trees in this experiment.
    pub fn shape(&self, spec: &DomainSpec) -> TreeShape {
        TreeShape {
            depth: self.horizon,
            branching: spec.n_observations_j(),
            n_actions: spec.n_actions_j(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// The configuration as stamped into artifacts: everything that can
    /// change a result, so the output location is left out.
    pub fn stamp_value(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("out_dir");
        }
        v
    }

    pub fn stamp(&self) -> String {
        self.stamp_value().to_string()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
