//! Update rules for ascending `V^{π_θ}(μ)`: PG, heavy-ball, Nesterov, Adam
//! and negative-momentum SPG, behind one [`Stepper`] interface.

mod adam;
mod context;
mod heavy_ball;
mod nag;
mod pg;
mod spg_nm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use adam::AdamState;
pub use context::{GradientOracle, ObjectiveOracle, StepContext};
pub use heavy_ball::HeavyBallState;
pub use nag::{nag_momentum, NagState};
pub use pg::PgState;
pub use spg_nm::{Acceptance, SpgNmState};

use crate::error::{Error, Result};
use crate::mdp::PolicyParams;

pub const DEFAULT_ETA: f64 = 0.1;
pub const DEFAULT_BETA: f64 = 0.9;
pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;
pub const DEFAULT_LAMBDA: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OptimizerKind {
    #[serde(rename = "pg")]
    Pg,
    #[serde(rename = "pg-hb")]
    HeavyBall,
    #[serde(rename = "apg")]
    Nesterov,
    #[serde(rename = "pg-adam")]
    Adam,
    #[serde(rename = "spg-nm")]
    SpgNm,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 5] = [
        OptimizerKind::Pg,
        OptimizerKind::HeavyBall,
        OptimizerKind::Nesterov,
        OptimizerKind::Adam,
        OptimizerKind::SpgNm,
    ];

    pub fn id(self) -> &'static str {
        match self {
            OptimizerKind::Pg => "pg",
            OptimizerKind::HeavyBall => "pg-hb",
            OptimizerKind::Nesterov => "apg",
            OptimizerKind::Adam => "pg-adam",
            OptimizerKind::SpgNm => "spg-nm",
        }
    }

    pub fn valid_ids() -> String {
        Self::ALL.map(Self::id).join(", ")
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "optimizer",
                name: s.to_string(),
                valid: Self::valid_ids(),
            })
    }
}

/// Hyperparameters; unset fields take the `DEFAULT_*` constants.
/// Fields irrelevant to an optimizer are ignored by it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

fn check(name: &str, value: f64, ok: bool, bound: &str) -> Result<f64> {
    if value.is_finite() && ok {
        Ok(value)
    } else {
        Err(Error::InvalidInput(format!("{name} = {value} must satisfy {bound}")))
    }
}

impl Hyperparameters {
    /// Keeps only the fields `kind` uses, fills defaults, and checks ranges.
    pub fn resolve(&self, kind: OptimizerKind) -> Result<Hyperparameters> {
        let eta = self.eta.unwrap_or(DEFAULT_ETA);
        let mut out = Hyperparameters {
            eta: Some(check("eta", eta, eta > 0.0, "eta > 0")?),
            ..Hyperparameters::default()
        };
        let unit = |name, v: f64| check(name, v, (0.0..1.0).contains(&v), "0 <= value < 1");
        match kind {
            OptimizerKind::Pg | OptimizerKind::Nesterov => {}
            OptimizerKind::HeavyBall => {
                out.beta = Some(unit("beta", self.beta.unwrap_or(DEFAULT_BETA))?);
            }
            OptimizerKind::Adam => {
                out.beta1 = Some(unit("beta1", self.beta1.unwrap_or(DEFAULT_BETA1))?);
                out.beta2 = Some(unit("beta2", self.beta2.unwrap_or(DEFAULT_BETA2))?);
                let eps = self.epsilon.unwrap_or(DEFAULT_EPSILON);
                out.epsilon = Some(check("epsilon", eps, eps > 0.0, "epsilon > 0")?);
            }
            OptimizerKind::SpgNm => {
                let lambda = self.lambda.unwrap_or(DEFAULT_LAMBDA);
                out.lambda = Some(check("lambda", lambda, lambda > 0.0, "lambda > 0")?);
            }
        }
        Ok(out)
    }
}

/// One optimizer with its mutable state.
#[derive(Clone, Debug, PartialEq)]
pub enum Stepper {
    Pg(PgState),
    HeavyBall(HeavyBallState),
    Nesterov(NagState),
    Adam(AdamState),
    SpgNm(SpgNmState),
}

impl Stepper {
    pub fn kind(&self) -> OptimizerKind {
        match self {
            Stepper::Pg(_) => OptimizerKind::Pg,
            Stepper::HeavyBall(_) => OptimizerKind::HeavyBall,
            Stepper::Nesterov(_) => OptimizerKind::Nesterov,
            Stepper::Adam(_) => OptimizerKind::Adam,
            Stepper::SpgNm(_) => OptimizerKind::SpgNm,
        }
    }

    /// Advances one iteration. On error the state is left untouched.
    pub fn step(&mut self, ctx: &StepContext<'_>) -> Result<()> {
        *self = match self {
            Stepper::Pg(s) => Stepper::Pg(s.step(ctx)?),
            Stepper::HeavyBall(s) => Stepper::HeavyBall(s.step(ctx)?),
            Stepper::Nesterov(s) => Stepper::Nesterov(s.step(ctx)?),
            Stepper::Adam(s) => Stepper::Adam(s.step(ctx)?),
            Stepper::SpgNm(s) => Stepper::SpgNm(s.step(ctx)?),
        };
        Ok(())
    }

    /// The `θ` iterate.
    pub fn theta(&self) -> &PolicyParams {
        match self {
            Stepper::Pg(s) => &s.theta,
            Stepper::HeavyBall(s) => &s.theta,
            Stepper::Nesterov(s) => &s.theta,
            Stepper::Adam(s) => &s.theta,
            Stepper::SpgNm(s) => &s.theta,
        }
    }

    /// The iterate the method outputs: `ω` for SPG-NM, `θ` otherwise.
    pub fn output(&self) -> &PolicyParams {
        match self {
            Stepper::SpgNm(s) => &s.omega,
            other => other.theta(),
        }
    }

    /// Acceptance record of the last SPG-NM step.
    pub fn acceptance(&self) -> Option<Acceptance> {
        match self {
            Stepper::SpgNm(s) => s.last,
            _ => None,
        }
    }
}

/// Builds the stepper for `kind` starting from `init`.
pub fn make_stepper(kind: OptimizerKind, hyper: &Hyperparameters, init: PolicyParams) -> Result<Stepper> {
    if !init.is_finite() {
        return Err(Error::InvalidInput("initial logits must be finite".into()));
    }
    let h = hyper.resolve(kind)?;
    let eta = h.eta.unwrap_or(DEFAULT_ETA);
    Ok(match kind {
        OptimizerKind::Pg => Stepper::Pg(PgState::new(init, eta)),
        OptimizerKind::HeavyBall => {
            Stepper::HeavyBall(HeavyBallState::new(init, eta, h.beta.unwrap_or(DEFAULT_BETA)))
        }
        OptimizerKind::Nesterov => Stepper::Nesterov(NagState::new(init, eta)),
        OptimizerKind::Adam => Stepper::Adam(AdamState::new(
            init,
            eta,
            h.beta1.unwrap_or(DEFAULT_BETA1),
            h.beta2.unwrap_or(DEFAULT_BETA2),
            h.epsilon.unwrap_or(DEFAULT_EPSILON),
        )),
        OptimizerKind::SpgNm => {
            Stepper::SpgNm(SpgNmState::new(init, eta, h.lambda.unwrap_or(DEFAULT_LAMBDA)))
        }
    })
}
