//! Exact evaluation of a fixed policy by dense linear solves.

use nalgebra::{DMatrix, DVector};

use super::{softmax_policy, PolicyDistribution, PolicyParams, TabularMdp};
use crate::error::{Error, Result};
use crate::table::Table;

/// Everything one gradient step needs about a single policy.
#[derive(Clone, Debug)]
pub struct EvaluationBundle {
    pub policy: PolicyDistribution,
    pub state_values: Vec<f64>,
    pub action_values: Table,
    pub advantages: Table,
    /// Discounted visitation from the start distribution used to build the bundle.
    pub visitation: Vec<f64>,
}

fn check_policy(mdp: &TabularMdp, policy: &PolicyDistribution) -> Result<()> {
    mdp.check_table("policy", policy.probs())
}

fn check_distribution(mdp: &TabularMdp, start: &[f64]) -> Result<()> {
    mdp.check_states("start distribution", start.len())?;
    if start.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidInput(
            "start distribution has a negative or non-finite entry".into(),
        ));
    }
    let sum: f64 = start.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "start distribution sums to {sum}"
        )));
    }
    Ok(())
}

/// Policy-averaged reward `r^π(s) = Σ_a π(a|s) r(s,a)`.
pub fn policy_reward(mdp: &TabularMdp, policy: &PolicyDistribution) -> Vec<f64> {
    (0..mdp.n_states())
        .map(|s| {
            policy
                .row(s)
                .iter()
                .zip(mdp.reward().row(s))
                .map(|(p, r)| p * r)
                .sum()
        })
        .collect()
}

/// Policy-averaged transition matrix, `P^π[s][s'] = Σ_a π(a|s) P(s'|s,a)`.
pub fn policy_transition(mdp: &TabularMdp, policy: &PolicyDistribution) -> DMatrix<f64> {
    let n = mdp.n_states();
    let mut p = DMatrix::zeros(n, n);
    for s in 0..n {
        for (a, &pa) in policy.row(s).iter().enumerate() {
            for (next, &q) in mdp.transition_row(s, a).iter().enumerate() {
                p[(s, next)] += pa * q;
            }
        }
    }
    p
}

/// `I - γ P^π`
fn resolvent_system(mdp: &TabularMdp, policy: &PolicyDistribution) -> DMatrix<f64> {
    let n = mdp.n_states();
    DMatrix::identity(n, n) - policy_transition(mdp, policy) * mdp.discount()
}

fn solve(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<Vec<f64>> {
    // I - γP is strictly diagonally dominant by columns for γ < 1, so LU cannot fail.
    let x = matrix.lu().solve(&rhs).ok_or_else(|| {
        Error::NumericalFailure {
            iteration: 0,
            detail: "singular Bellman system".into(),
        }
    })?;
    Ok(x.iter().copied().collect())
}

/// Solves `(I - γ P^π) V = r^π` for the state values of `policy`.
pub fn policy_evaluation(mdp: &TabularMdp, policy: &PolicyDistribution) -> Result<Vec<f64>> {
    check_policy(mdp, policy)?;
    let rhs = DVector::from_vec(policy_reward(mdp, policy));
    solve(resolvent_system(mdp, policy), rhs)
}

/// `Q(s,a) = r(s,a) + γ Σ_{s'} P(s'|s,a) V(s')`.
pub fn action_values(mdp: &TabularMdp, state_values: &[f64]) -> Result<Table> {
    mdp.check_states("state values", state_values.len())?;
    let gamma = mdp.discount();
    let mut q = mdp.reward().clone();
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            let future: f64 = mdp
                .transition_row(s, a)
                .iter()
                .zip(state_values)
                .map(|(p, v)| p * v)
                .sum();
            q.set(s, a, q.get(s, a) + gamma * future);
        }
    }
    Ok(q)
}

/// Normalized discounted visitation `d(s) = (1-γ) Σ_t γ^t Pr(s_t = s)`,
/// from `dᵀ = (1-γ) startᵀ (I - γ P^π)⁻¹`.
pub fn visitation_distribution(
    mdp: &TabularMdp,
    policy: &PolicyDistribution,
    start: &[f64],
) -> Result<Vec<f64>> {
    check_policy(mdp, policy)?;
    check_distribution(mdp, start)?;
    let occupancy = solve(
        resolvent_system(mdp, policy).transpose(),
        DVector::from_column_slice(start),
    )?;
    let scale = 1.0 - mdp.discount();
    Ok(occupancy.into_iter().map(|x| (scale * x).max(0.0)).collect())
}

/// `V(μ) = Σ_s μ(s) V(s)`.
pub fn objective(mdp: &TabularMdp, state_values: &[f64], start: &[f64]) -> Result<f64> {
    mdp.check_states("state values", state_values.len())?;
    mdp.check_states("start distribution", start.len())?;
    Ok(start.iter().zip(state_values).map(|(m, v)| m * v).sum())
}

/// Objective of the softmax policy with logits `params`; the full
/// softmax → linear solve → dot product pipeline.
pub fn objective_at(mdp: &TabularMdp, params: &PolicyParams, start: &[f64]) -> Result<f64> {
    mdp.check_table("policy logits", params.logits())?;
    let policy = softmax_policy(params)?;
    let values = policy_evaluation(mdp, &policy)?;
    objective(mdp, &values, start)
}

/// Evaluates `policy` completely: V, Q, advantages and visitation from `start`.
pub fn evaluate_policy(
    mdp: &TabularMdp,
    policy: PolicyDistribution,
    start: &[f64],
) -> Result<EvaluationBundle> {
    let state_values = policy_evaluation(mdp, &policy)?;
    let action_values = action_values(mdp, &state_values)?;
    let mut advantages = action_values.clone();
    for (s, v) in state_values.iter().enumerate() {
        for x in advantages.row_mut(s) {
            *x -= v;
        }
    }
    let visitation = visitation_distribution(mdp, &policy, start)?;
    Ok(EvaluationBundle {
        policy,
        state_values,
        action_values,
        advantages,
        visitation,
    })
}

/// [`evaluate_policy`] for the softmax policy of `params`.
pub fn evaluate(mdp: &TabularMdp, params: &PolicyParams, start: &[f64]) -> Result<EvaluationBundle> {
    mdp.check_table("policy logits", params.logits())?;
    evaluate_policy(mdp, softmax_policy(params)?, start)
}
