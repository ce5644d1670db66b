use super::evaluation::action_values;
use super::TabularMdp;
use crate::error::{Error, Result};

/// Safety cap on value-iteration sweeps.
pub const MAX_SWEEPS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalSolution {
    /// `V*` within the requested tolerance.
    pub values: Vec<f64>,
    /// Greedy action per state; ties go to the lowest action index.
    pub greedy: Vec<usize>,
    pub sweeps: usize,
}

impl OptimalSolution {
    /// `V*(μ)`
    pub fn objective(&self, start: &[f64]) -> f64 {
        start.iter().zip(&self.values).map(|(m, v)| m * v).sum()
    }
}

fn backup(mdp: &TabularMdp, values: &[f64]) -> Result<Vec<f64>> {
    let q = action_values(mdp, values)?;
    Ok(q.rows()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (a, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = a;
        }
    }
    best
}

/// Value iteration on the Bellman optimality equation.
///
/// Stops once `‖V_{k+1} - V_k‖∞ ≤ tol (1-γ) / (2γ)`, which guarantees
/// `‖V_{k+1} - V*‖∞ ≤ tol`. With `γ = 0` a single sweep is exact.
pub fn optimal_values(mdp: &TabularMdp, tol: f64) -> Result<OptimalSolution> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let gamma = mdp.discount();
    let threshold = if gamma == 0.0 {
        f64::INFINITY
    } else {
        tol * (1.0 - gamma) / (2.0 * gamma)
    };

    let mut values = vec![0.0; mdp.n_states()];
    for sweep in 1..=MAX_SWEEPS {
        let next = backup(mdp, &values)?;
        let delta = next
            .iter()
            .zip(&values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        values = next;
        if delta <= threshold {
            let q = action_values(mdp, &values)?;
            let greedy = q.rows().map(argmax_lowest).collect();
            return Ok(OptimalSolution {
                values,
                greedy,
                sweeps: sweep,
            });
        }
    }
    Err(Error::NotConverged(MAX_SWEEPS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{bandit_as_mdp, MdpDefinition};

    #[test]
    fn bandit_optimum() {
        let mdp = bandit_as_mdp(&[1.0, 0.99, 0.0]).unwrap();
        let sol = optimal_values(&mdp, 1e-10).unwrap();
        assert_eq!(sol.values, vec![1.0]);
        assert_eq!(sol.greedy, vec![0]);
        assert_eq!(sol.sweeps, 1);

        let single = optimal_values(&bandit_as_mdp(&[0.5]).unwrap(), 1e-10).unwrap();
        assert_eq!(single.values, vec![0.5]);
    }

    #[test]
    fn ties_pick_lowest_action() {
        let mdp = bandit_as_mdp(&[0.3, 0.7, 0.7]).unwrap();
        assert_eq!(optimal_values(&mdp, 1e-6).unwrap().greedy, vec![1]);
    }

    #[test]
    fn zero_discount_is_max_reward() {
        let mdp = TabularMdp::try_from(MdpDefinition {
            n_states: 2,
            n_actions: 2,
            gamma: 0.0,
            rho: vec![1.0, 0.0],
            reward: vec![vec![0.2, 0.6], vec![0.9, 0.1]],
            transition: vec![
                vec![vec![0.0, 1.0], vec![1.0, 0.0]],
                vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            ],
        })
        .unwrap();
        let sol = optimal_values(&mdp, 1e-8).unwrap();
        assert_eq!(sol.values, vec![0.6, 0.9]);
        assert_eq!(sol.greedy, vec![1, 0]);
    }

    #[test]
    fn two_state_closed_form() {
        // Staying in state 1 pays 1 forever: V*(1) = 1/(1-γ), V*(0) = γ V*(1).
        let mdp = TabularMdp::try_from(MdpDefinition {
            n_states: 2,
            n_actions: 2,
            gamma: 0.9,
            rho: vec![1.0, 0.0],
            reward: vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            transition: vec![
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            ],
        })
        .unwrap();
        let tol = 1e-9;
        let sol = optimal_values(&mdp, tol).unwrap();
        assert!((sol.values[1] - 10.0).abs() <= tol);
        assert!((sol.values[0] - 9.0).abs() <= tol);
        assert_eq!(sol.greedy, vec![1, 0]);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let mdp = bandit_as_mdp(&[0.5]).unwrap();
        for tol in [0.0, -1.0, f64::NAN] {
            assert!(matches!(optimal_values(&mdp, tol), Err(Error::InvalidInput(_))));
        }
    }
}
