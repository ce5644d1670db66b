//! Monte Carlo (REINFORCE) policy-gradient estimates.
//!
//! All randomness comes from a ChaCha8 stream seeded with the caller's seed,
//! so estimates are reproducible bit for bit across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GradientTable;
use crate::error::{Error, Result};
use crate::mdp::{policy_evaluation, softmax_policy, PolicyDistribution, PolicyParams, TabularMdp};
use crate::table::Table;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
}

/// Rolled-out trajectories, each at most `horizon` long.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub trajectories: Vec<Vec<Transition>>,
    pub horizon: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    pub batch: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Subtract `V(s_t)` from the return-to-go.
    pub baseline: bool,
}

/// Sample mean of per-trajectory gradient estimates, with its standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    pub mean: GradientTable,
    pub standard_error: Table,
}

/// SplitMix64 finalizer; derives independent seeds for successive calls.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sample_index(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left the cumulative sum below u; take the last supported index.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

fn check_counts(batch: usize, horizon: usize) -> Result<()> {
    if batch == 0 || horizon == 0 {
        return Err(Error::InvalidInput(format!(
            "batch and horizon must be positive (batch={batch}, horizon={horizon})"
        )));
    }
    Ok(())
}

pub fn sample_trajectories(
    mdp: &TabularMdp,
    policy: &PolicyDistribution,
    start: &[f64],
    batch: usize,
    horizon: usize,
    seed: u64,
) -> Result<SampleBatch> {
    check_counts(batch, horizon)?;
    mdp.check_table("policy", policy.probs())?;
    mdp.check_states("start distribution", start.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trajectories = (0..batch)
        .map(|_| {
            let mut state = sample_index(start, &mut rng);
            let mut steps = Vec::with_capacity(horizon);
            for _ in 0..horizon {
                let action = sample_index(policy.row(state), &mut rng);
                steps.push(Transition {
                    state,
                    action,
                    reward: mdp.reward().get(state, action),
                });
                state = sample_index(mdp.transition_row(state, action), &mut rng);
            }
            steps
        })
        .collect();
    Ok(SampleBatch {
        trajectories,
        horizon,
        seed,
    })
}

/// REINFORCE: each trajectory contributes
/// `Σ_t γ^t (G_t - b(s_t)) ∇_θ log π(a_t|s_t)` with `G_t` the discounted
/// return-to-go from `t`.
pub fn reinforce_estimate(
    mdp: &TabularMdp,
    policy: &PolicyDistribution,
    samples: &SampleBatch,
    baseline: Option<&[f64]>,
) -> Result<GradientEstimate> {
    if let Some(b) = baseline {
        mdp.check_states("baseline", b.len())?;
    }
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let gamma = mdp.discount();
    let n = samples.trajectories.len();
    let mut sum = Table::zeros(ns, na);
    let mut sum_sq = Table::zeros(ns, na);
    let mut single = Table::zeros(ns, na);

    for traj in &samples.trajectories {
        single.as_mut_slice().fill(0.0);
        let mut to_go = 0.0;
        let mut returns = vec![0.0; traj.len()];
        for (t, step) in traj.iter().enumerate().rev() {
            to_go = step.reward + gamma * to_go;
            returns[t] = to_go;
        }
        let mut discount = 1.0;
        for (step, g) in traj.iter().zip(&returns) {
            let advantage = g - baseline.map_or(0.0, |b| b[step.state]);
            let weight = discount * advantage;
            let row = single.row_mut(step.state);
            for (a, x) in row.iter_mut().enumerate() {
                let indicator = if a == step.action { 1.0 } else { 0.0 };
                *x += weight * (indicator - policy.prob(step.state, a));
            }
            discount *= gamma;
        }
        for ((s, q), x) in sum
            .as_mut_slice()
            .iter_mut()
            .zip(sum_sq.as_mut_slice())
            .zip(single.as_slice())
        {
            *s += x;
            *q += x * x;
        }
    }

    let nf = n as f64;
    let mean = sum.map(|s| s / nf);
    let standard_error = if n > 1 {
        mean.zip_map(&sum_sq, |m, q| {
            let var = ((q - nf * m * m) / (nf - 1.0)).max(0.0);
            (var / nf).sqrt()
        })
    } else {
        Table::filled(ns, na, f64::INFINITY)
    };
    Ok(GradientEstimate {
        mean: GradientTable(mean),
        standard_error,
    })
}

/// Sampled policy gradient at `params`; deterministic in `config.seed`.
pub fn sampled_gradient(
    mdp: &TabularMdp,
    params: &PolicyParams,
    start: &[f64],
    config: &SamplerConfig,
) -> Result<GradientEstimate> {
    check_counts(config.batch, config.horizon)?;
    mdp.check_table("policy logits", params.logits())?;
    let policy = softmax_policy(params)?;
    let samples = sample_trajectories(mdp, &policy, start, config.batch, config.horizon, config.seed)?;
    let values = if config.baseline {
        Some(policy_evaluation(mdp, &policy)?)
    } else {
        None
    };
    reinforce_estimate(mdp, &policy, &samples, values.as_deref())
}
