//! Policy gradients of `V^{π_θ}(μ)` for tabular softmax policies.

mod sampled;

pub use sampled::{
    derive_seed, reinforce_estimate, sample_trajectories, sampled_gradient, GradientEstimate,
    SampleBatch, SamplerConfig, Transition,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{evaluate, objective_at, PolicyParams, TabularMdp};
use crate::table::Table;

/// `∂V^{π_θ}(μ)/∂θ(s,a)` for every state-action pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GradientTable(pub Table);

impl GradientTable {
    pub fn partials(&self) -> &Table {
        &self.0
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.0.get(state, action)
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.0.as_slice().iter().all(|&x| x == 0.0)
    }
}

/// Exact softmax policy gradient,
/// `∂V(μ)/∂θ(s,a) = d_μ(s) π(a|s) A(s,a) / (1-γ)`.
pub fn exact_gradient(mdp: &TabularMdp, params: &PolicyParams, start: &[f64]) -> Result<GradientTable> {
    let bundle = evaluate(mdp, params, start)?;
    let scale = 1.0 / (1.0 - mdp.discount());
    let mut grad = bundle.advantages;
    for s in 0..mdp.n_states() {
        let weight = bundle.visitation[s] * scale;
        for (a, g) in grad.row_mut(s).iter_mut().enumerate() {
            *g *= weight * bundle.policy.prob(s, a);
        }
    }
    Ok(GradientTable(grad))
}

/// Central differences of the full evaluation pipeline, one coordinate at a time.
pub fn finite_difference_gradient(
    mdp: &TabularMdp,
    params: &PolicyParams,
    start: &[f64],
    h: f64,
) -> Result<GradientTable> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidInput(format!("step h must be positive, got {h}")));
    }
    let (ns, na) = params.shape();
    let mut grad = Table::zeros(ns, na);
    let mut probe = params.clone();
    for s in 0..ns {
        for a in 0..na {
            let x = params.logits().get(s, a);
            probe.0.set(s, a, x + h);
            let up = objective_at(mdp, &probe, start)?;
            probe.0.set(s, a, x - h);
            let down = objective_at(mdp, &probe, start)?;
            probe.0.set(s, a, x);
            grad.set(s, a, (up - down) / (2.0 * h));
        }
    }
    Ok(GradientTable(grad))
}
