use super::StepContext;
use crate::error::Result;
use crate::mdp::PolicyParams;

/// Momentum multiplier `(t-1)/(t+2)` applied at step `t`.
pub fn nag_momentum(t: usize) -> f64 {
    (t as f64 - 1.0) / (t as f64 + 2.0)
}

/// Nesterov's accelerated gradient, in ascent form:
///
/// ```text
/// x_t = y_{t-1} + s ∇V(y_{t-1})
/// y_t = x_t + (t-1)/(t+2) (x_t - x_{t-1})
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct NagState {
    /// `x`
    pub theta: PolicyParams,
    /// `y`
    pub lookahead: PolicyParams,
    pub eta: f64,
}

impl NagState {
    pub fn new(theta: PolicyParams, eta: f64) -> Self {
        NagState {
            lookahead: theta.clone(),
            theta,
            eta,
        }
    }

    pub fn step(&self, ctx: &StepContext<'_>) -> Result<Self> {
        let g = ctx.gradient(&self.lookahead)?;
        let theta = ctx.finite(self.lookahead.0.add_scaled(&g, self.eta), "iterate")?;
        let mu = nag_momentum(ctx.iteration);
        let lookahead = theta.0.zip_map(&self.theta.0, |x, prev| x + mu * (x - prev));
        Ok(NagState {
            lookahead: ctx.finite(lookahead, "lookahead")?,
            theta,
            eta: self.eta,
        })
    }
}
