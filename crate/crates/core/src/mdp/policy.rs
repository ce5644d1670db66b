use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::Table;

/// Softmax logits `θ`, one row per state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolicyParams(pub Table);

impl PolicyParams {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        PolicyParams(Table::zeros(n_states, n_actions))
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Table::from_rows(rows).map(PolicyParams)
    }

    pub fn logits(&self) -> &Table {
        &self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
}

/// A stochastic policy `π(a|s)`; every row lies in the open simplex
/// (up to exp underflow for very large logit gaps).
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyDistribution(Table);

impl PolicyDistribution {
    pub fn probs(&self) -> &Table {
        &self.0
    }

    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.0.get(state, action)
    }

    pub fn row(&self, state: usize) -> &[f64] {
        self.0.row(state)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    /// Wraps an explicit probability table, checking each row is a distribution.
    pub fn from_probs(probs: Table) -> Result<Self> {
        for (s, row) in probs.rows().enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "policy row {s} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "policy row {s} sums to {sum}"
                )));
            }
        }
        Ok(PolicyDistribution(probs))
    }

    /// Deterministic policy choosing `actions[s]` in state `s`.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Result<Self> {
        let mut probs = Table::zeros(actions.len(), n_actions);
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::InvalidInput(format!(
                    "action {a} out of range for state {s}"
                )));
            }
            probs.set(s, a, 1.0);
        }
        Ok(PolicyDistribution(probs))
    }
}

/// `π(a|s) = exp θ(s,a) / Σ_b exp θ(s,b)`, computed with the row maximum
/// subtracted so large logits cannot overflow.
pub fn softmax_policy(params: &PolicyParams) -> Result<PolicyDistribution> {
    let logits = params.logits();
    if !logits.is_finite() {
        return Err(Error::InvalidInput("non-finite logit".into()));
    }
    let mut probs = logits.clone();
    for s in 0..probs.n_rows() {
        let row = probs.row_mut(s);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            total += *x;
        }
        for x in row.iter_mut() {
            *x /= total;
        }
    }
    Ok(PolicyDistribution(probs))
}
