use super::StepContext;
use crate::error::Result;
use crate::mdp::PolicyParams;

/// Polyak heavy-ball ascent,
/// `θ' = θ + η ∇V(θ) + β (θ - θ_prev)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeavyBallState {
    pub theta: PolicyParams,
    pub theta_prev: PolicyParams,
    pub eta: f64,
    pub beta: f64,
}

impl HeavyBallState {
    pub fn new(theta: PolicyParams, eta: f64, beta: f64) -> Self {
        HeavyBallState {
            theta_prev: theta.clone(),
            theta,
            eta,
            beta,
        }
    }

    pub fn step(&self, ctx: &StepContext<'_>) -> Result<Self> {
        let g = ctx.gradient(&self.theta)?;
        let (eta, beta) = (self.eta, self.beta);
        let next = self
            .theta
            .0
            .add_scaled(&g, eta)
            .zip_map(&self.theta.0.zip_map(&self.theta_prev.0, |x, p| x - p), |y, d| {
                y + beta * d
            });
        Ok(HeavyBallState {
            theta: ctx.finite(next, "iterate")?,
            theta_prev: self.theta.clone(),
            eta,
            beta,
        })
    }
}
