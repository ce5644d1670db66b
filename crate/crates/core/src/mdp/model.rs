use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::Table;

/// Tolerance for probability-vector sums.
pub const PROBABILITY_SUM_TOL: f64 = 1e-9;

/// A finite discounted MDP with rewards in `[0, 1]`.
///
/// Always valid: the only ways to build one go through [`validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    reward: Table,
    // Flattened `[state][action][next_state]`.
    transition: Vec<f64>,
    discount: f64,
    initial_dist: Vec<f64>,
}

impl TabularMdp {
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn reward(&self) -> &Table {
        &self.reward
    }

    /// Next-state distribution `P(· | state, action)`.
    pub fn transition_row(&self, state: usize, action: usize) -> &[f64] {
        let n = self.n_states;
        let start = (state * self.n_actions + action) * n;
        &self.transition[start..start + n]
    }

    /// Same MDP with a different discount factor.
    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        let mut def = self.to_definition();
        def.gamma = discount;
        TabularMdp::try_from(def)
    }

    pub fn to_definition(&self) -> MdpDefinition {
        MdpDefinition {
            n_states: self.n_states,
            n_actions: self.n_actions,
            gamma: self.discount,
            rho: self.initial_dist.clone(),
            reward: self.reward.to_rows(),
            transition: (0..self.n_states)
                .map(|s| {
                    (0..self.n_actions)
                        .map(|a| self.transition_row(s, a).to_vec())
                        .collect()
                })
                .collect(),
        }
    }

    /// Validates the MDP; always succeeds for a constructed instance.
    pub fn validate(&self) -> ValidationReport {
        validate(&self.to_definition())
    }

    pub(crate) fn check_states(&self, what: &'static str, len: usize) -> Result<()> {
        if len != self.n_states {
            return Err(Error::shape(what, self.n_states, len));
        }
        Ok(())
    }

    pub(crate) fn check_table(&self, what: &'static str, table: &Table) -> Result<()> {
        if table.shape() != (self.n_states, self.n_actions) {
            return Err(Error::shape(
                what,
                format!("{}x{}", self.n_states, self.n_actions),
                format!("{}x{}", table.n_rows(), table.n_cols()),
            ));
        }
        Ok(())
    }
}

/// Plain-data MDP description, as read from and written to MDP files.
///
/// `transition[s][a]` is the distribution over next states after taking
/// action `a` in state `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpDefinition {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub rho: Vec<f64>,
    pub reward: Vec<Vec<f64>>,
    pub transition: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<MdpDefinition> for TabularMdp {
    type Error = Error;

    fn try_from(def: MdpDefinition) -> Result<Self> {
        let report = validate(&def);
        if !report.is_valid() {
            return Err(Error::InvalidMdp(report));
        }
        let reward = Table::from_rows(def.reward)?;
        let transition = def.transition.into_iter().flatten().flatten().collect();
        Ok(TabularMdp {
            n_states: def.n_states,
            n_actions: def.n_actions,
            reward,
            transition,
            discount: def.gamma,
            initial_dist: def.rho,
        })
    }
}

/// One violated MDP invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptySpace { what: &'static str },
    Shape { what: String, expected: usize, found: usize },
    NonFinite { what: String },
    RewardOutOfRange { state: usize, action: usize, value: f64 },
    NegativeTransition { state: usize, action: usize, next_state: usize, value: f64 },
    TransitionRowSum { state: usize, action: usize, sum: f64 },
    NegativeInitial { state: usize, value: f64 },
    InitialSum { sum: f64 },
    Discount { value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptySpace { what } => write!(f, "{what} must be a positive count"),
            Violation::Shape {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected length {expected}, found {found}"),
            Violation::NonFinite { what } => write!(f, "{what} is not finite"),
            Violation::RewardOutOfRange {
                state,
                action,
                value,
            } => write!(
                f,
                "reward[{state}][{action}] = {value} lies outside [0, 1]"
            ),
            Violation::NegativeTransition {
                state,
                action,
                next_state,
                value,
            } => write!(
                f,
                "transition[{state}][{action}][{next_state}] = {value} is negative"
            ),
            Violation::TransitionRowSum { state, action, sum } => write!(
                f,
                "transition row (state {state}, action {action}) sums to {sum}, not 1"
            ),
            Violation::NegativeInitial { state, value } => {
                write!(f, "rho[{state}] = {value} is negative")
            }
            Violation::InitialSum { sum } => write!(f, "rho sums to {sum}, not 1"),
            Violation::Discount { value } => {
                write!(f, "gamma = {value} violates the discount bound 0 <= gamma < 1")
            }
        }
    }
}

/// Outcome of [`validate`]: empty means valid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Checks every MDP invariant and reports all violations with their indices.
pub fn validate(def: &MdpDefinition) -> ValidationReport {
    let mut out = Vec::new();
    let (ns, na) = (def.n_states, def.n_actions);

    if ns == 0 {
        out.push(Violation::EmptySpace { what: "n_states" });
    }
    if na == 0 {
        out.push(Violation::EmptySpace { what: "n_actions" });
    }
    if !def.gamma.is_finite() || !(0.0..1.0).contains(&def.gamma) {
        out.push(Violation::Discount { value: def.gamma });
    }

    if def.rho.len() != ns {
        out.push(Violation::Shape {
            what: "rho".into(),
            expected: ns,
            found: def.rho.len(),
        });
    } else if ns > 0 {
        check_distribution(&def.rho, &mut out);
    }

    if def.reward.len() != ns {
        out.push(Violation::Shape {
            what: "reward rows".into(),
            expected: ns,
            found: def.reward.len(),
        });
    } else {
        for (s, row) in def.reward.iter().enumerate() {
            if row.len() != na {
                out.push(Violation::Shape {
                    what: format!("reward[{s}]"),
                    expected: na,
                    found: row.len(),
                });
                continue;
            }
            for (a, &r) in row.iter().enumerate() {
                if !r.is_finite() {
                    out.push(Violation::NonFinite {
                        what: format!("reward[{s}][{a}]"),
                    });
                } else if !(0.0..=1.0).contains(&r) {
                    out.push(Violation::RewardOutOfRange {
                        state: s,
                        action: a,
                        value: r,
                    });
                }
            }
        }
    }

    if def.transition.len() != ns {
        out.push(Violation::Shape {
            what: "transition blocks".into(),
            expected: ns,
            found: def.transition.len(),
        });
    } else {
        for (s, block) in def.transition.iter().enumerate() {
            if block.len() != na {
                out.push(Violation::Shape {
                    what: format!("transition[{s}]"),
                    expected: na,
                    found: block.len(),
                });
                continue;
            }
            for (a, row) in block.iter().enumerate() {
                if row.len() != ns {
                    out.push(Violation::Shape {
                        what: format!("transition[{s}][{a}]"),
                        expected: ns,
                        found: row.len(),
                    });
                    continue;
                }
                check_transition_row(s, a, row, &mut out);
            }
        }
    }

    ValidationReport { violations: out }
}

fn check_distribution(rho: &[f64], out: &mut Vec<Violation>) {
    let mut finite = true;
    for (s, &p) in rho.iter().enumerate() {
        if !p.is_finite() {
            finite = false;
            out.push(Violation::NonFinite {
                what: format!("rho[{s}]"),
            });
        } else if p < 0.0 {
            out.push(Violation::NegativeInitial { state: s, value: p });
        }
    }
    let sum: f64 = rho.iter().sum();
    if finite && (sum - 1.0).abs() > PROBABILITY_SUM_TOL {
        out.push(Violation::InitialSum { sum });
    }
}

fn check_transition_row(s: usize, a: usize, row: &[f64], out: &mut Vec<Violation>) {
    let mut finite = true;
    for (next, &p) in row.iter().enumerate() {
        if !p.is_finite() {
            finite = false;
            out.push(Violation::NonFinite {
                what: format!("transition[{s}][{a}][{next}]"),
            });
        } else if p < 0.0 {
            out.push(Violation::NegativeTransition {
                state: s,
                action: a,
                next_state: next,
                value: p,
            });
        }
    }
    let sum: f64 = row.iter().sum();
    if finite && (sum - 1.0).abs() > PROBABILITY_SUM_TOL {
        out.push(Violation::TransitionRowSum {
            state: s,
            action: a,
            sum,
        });
    }
}

/// A multi-armed bandit as a one-state MDP with self-loops, `γ = 0` and `ρ = [1]`.
pub fn bandit_as_mdp(rewards: &[f64]) -> Result<TabularMdp> {
    if rewards.is_empty() {
        return Err(Error::InvalidInput("bandit needs at least one arm".into()));
    }
    if let Some((a, r)) = rewards
        .iter()
        .enumerate()
        .find(|(_, r)| !(0.0..=1.0).contains(*r))
    {
        return Err(Error::InvalidInput(format!(
            "bandit reward {r} for arm {a} lies outside [0, 1]"
        )));
    }
    TabularMdp::try_from(MdpDefinition {
        n_states: 1,
        n_actions: rewards.len(),
        gamma: 0.0,
        rho: vec![1.0],
        reward: vec![rewards.to_vec()],
        transition: vec![vec![vec![1.0]; rewards.len()]],
    })
}
