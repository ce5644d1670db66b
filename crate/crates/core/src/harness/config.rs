use std::path::Path;

use serde::{Deserialize, Serialize};

use super::environments::{builtin_environment, load_mdp_file, BuiltinEnv, InitKind};
use crate::error::{Error, Result};
use crate::mdp::{PolicyParams, TabularMdp};
use crate::optimizers::{Hyperparameters, OptimizerKind};
use crate::table::Table;

/// Iteration budget for MDP files.
pub const DEFAULT_FILE_ITERATIONS: usize = 5000;

/// Initial logits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitSpec {
    Uniform,
    Hard,
    Logits(Table),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum GradientMode {
    #[default]
    Exact,
    Sampled {
        batch: usize,
        horizon: usize,
        #[serde(default)]
        baseline: bool,
    },
}

fn default_stride() -> usize {
    1
}

fn default_true() -> bool {
    true
}

/// One optimizer run on one environment.
///
/// `environment` is a built-in name or a path to an MDP file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSpec>,
    pub optimizer: OptimizerKind,
    #[serde(default)]
    pub hyper: Hyperparameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discount: Option<f64>,
    #[serde(default = "default_stride")]
    pub record_every: usize,
    /// Only used by sampled gradients.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub gradient: GradientMode,
    #[serde(default = "default_true")]
    pub compute_gap: bool,
    /// Record wall-clock milliseconds; makes traces non-reproducible.
    #[serde(default)]
    pub timing: bool,
}

/// The MDP and starting logits a config refers to.
#[derive(Clone, Debug)]
pub struct LoadedEnvironment {
    pub mdp: TabularMdp,
    pub init: PolicyParams,
}

impl ExperimentConfig {
    pub fn new(environment: impl Into<String>, optimizer: OptimizerKind) -> Self {
        ExperimentConfig {
            environment: environment.into(),
            init: None,
            optimizer,
            hyper: Hyperparameters::default(),
            iterations: None,
            discount: None,
            record_every: 1,
            seed: 0,
            gradient: GradientMode::Exact,
            compute_gap: true,
            timing: false,
        }
    }

    pub fn with_hyper(mut self, hyper: Hyperparameters) -> Self {
        self.hyper = hyper;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = Some(iterations);
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads a config file: JSON when the extension is `.json`, TOML otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Ok(serde_json::from_str(&text)?)
        } else {
            Self::from_toml_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn builtin(&self) -> Option<BuiltinEnv> {
        self.environment.parse().ok()
    }

    /// Loads the environment, applies the discount override and picks the
    /// initial logits.
    pub fn load_environment(&self) -> Result<LoadedEnvironment> {
        let (mut mdp, uniform, hard, default_kind) = match self.builtin() {
            Some(env) => {
                let b = builtin_environment(env.name())?;
                (b.mdp, b.uniform_init, Some(b.hard_init), env.default_init())
            }
            None => {
                let path = Path::new(&self.environment);
                if !path.exists() {
                    return Err(Error::Unknown {
                        kind: "environment",
                        name: self.environment.clone(),
                        valid: format!("{}, or a path to an MDP file", BuiltinEnv::valid_names()),
                    });
                }
                let mdp = load_mdp_file(path)?;
                let uniform = PolicyParams::zeros(mdp.n_states(), mdp.n_actions());
                (mdp, uniform, None, InitKind::Uniform)
            }
        };
        if let Some(gamma) = self.discount {
            mdp = mdp.with_discount(gamma)?;
        }
        let init = match &self.init {
            None if default_kind == InitKind::Hard => hard.expect("built-in hard init"),
            None | Some(InitSpec::Uniform) => uniform,
            Some(InitSpec::Hard) => hard.ok_or_else(|| {
                Error::Config(format!("environment `{}` has no hard initialization", self.environment))
            })?,
            Some(InitSpec::Logits(table)) => {
                if table.shape() != (mdp.n_states(), mdp.n_actions()) {
                    return Err(Error::shape(
                        "initial logits",
                        format!("{}x{}", mdp.n_states(), mdp.n_actions()),
                        format!("{}x{}", table.n_rows(), table.n_cols()),
                    ));
                }
                if !table.is_finite() {
                    return Err(Error::Config("initial logits must be finite".into()));
                }
                PolicyParams(table.clone())
            }
        };
        Ok(LoadedEnvironment { mdp, init })
    }

    /// Copy with every default made explicit; checks the config is runnable.
    pub fn resolved(&self) -> Result<ExperimentConfig> {
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        if self.iterations == Some(0) {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if let GradientMode::Sampled { batch, horizon, .. } = self.gradient {
            if batch == 0 || horizon == 0 {
                return Err(Error::Config("sampled gradient needs batch >= 1 and horizon >= 1".into()));
            }
        }
        let env = self.load_environment()?;
        let iterations = self.iterations.unwrap_or_else(|| {
            self.builtin()
                .map_or(DEFAULT_FILE_ITERATIONS, BuiltinEnv::default_iterations)
        });
        let init = match (&self.init, self.builtin()) {
            (Some(spec), _) => spec.clone(),
            (None, Some(env)) if env.default_init() == InitKind::Hard => InitSpec::Hard,
            (None, _) => InitSpec::Uniform,
        };
        Ok(ExperimentConfig {
            environment: self.environment.clone(),
            init: Some(init),
            optimizer: self.optimizer,
            hyper: self.hyper.resolve(self.optimizer)?,
            iterations: Some(iterations),
            discount: Some(env.mdp.discount()),
            ..self.clone()
        })
    }
}
