use super::StepContext;
use crate::error::Result;
use crate::mdp::PolicyParams;

/// Plain gradient ascent, `θ ← θ + η ∇V(θ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PgState {
    pub theta: PolicyParams,
    pub eta: f64,
}

impl PgState {
    pub fn new(theta: PolicyParams, eta: f64) -> Self {
        PgState { theta, eta }
    }

    pub fn step(&self, ctx: &StepContext<'_>) -> Result<Self> {
        let g = ctx.gradient(&self.theta)?;
        let theta = ctx.finite(self.theta.0.add_scaled(&g, self.eta), "iterate")?;
        Ok(PgState { theta, eta: self.eta })
    }
}
