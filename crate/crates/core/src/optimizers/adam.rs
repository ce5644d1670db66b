use super::StepContext;
use crate::error::Result;
use crate::mdp::PolicyParams;
use crate::table::Table;

/// Adam with bias correction, ascending the objective.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub theta: PolicyParams,
    pub first_moment: Table,
    pub second_moment: Table,
    pub eta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(theta: PolicyParams, eta: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let (ns, na) = theta.shape();
        AdamState {
            theta,
            first_moment: Table::zeros(ns, na),
            second_moment: Table::zeros(ns, na),
            eta,
            beta1,
            beta2,
            epsilon,
        }
    }

    /// Bias correction uses `ctx.iteration` as the step count.
    pub fn step(&self, ctx: &StepContext<'_>) -> Result<Self> {
        let g = ctx.gradient(&self.theta)?;
        let (b1, b2) = (self.beta1, self.beta2);
        let t = ctx.iteration as i32;
        let m = self.first_moment.zip_map(&g, |m, g| b1 * m + (1.0 - b1) * g);
        let v = self.second_moment.zip_map(&g, |v, g| b2 * v + (1.0 - b2) * g * g);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        let direction = m.zip_map(&v, |m, v| (m / c1) / ((v / c2).sqrt() + self.epsilon));
        let theta = ctx.finite(self.theta.0.add_scaled(&direction, self.eta), "iterate")?;
        Ok(AdamState {
            theta,
            first_moment: m,
            second_moment: v,
            eta: self.eta,
            beta1: b1,
            beta2: b2,
            epsilon: self.epsilon,
        })
    }
}
