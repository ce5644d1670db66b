//! Finite MDPs, softmax policies, and exact Bellman solvers.

mod evaluation;
mod model;
mod optimal;
mod policy;

pub use evaluation::{
    action_values, evaluate, evaluate_policy, objective, objective_at, policy_evaluation,
    policy_reward, policy_transition, visitation_distribution, EvaluationBundle,
};
pub use model::{
    bandit_as_mdp, validate, MdpDefinition, TabularMdp, ValidationReport, Violation,
    PROBABILITY_SUM_TOL,
};
pub use optimal::{optimal_values, OptimalSolution, MAX_SWEEPS};
pub use policy::{softmax_policy, PolicyDistribution, PolicyParams};
