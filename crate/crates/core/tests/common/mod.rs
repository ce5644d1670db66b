//! Independent reference computations used as test oracles. Nothing here
//! calls the library's solvers; only the MDP accessors are shared.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tabular_pg::mdp::{MdpDefinition, PolicyDistribution, PolicyParams, TabularMdp};
use tabular_pg::Table;

/// Dense `Vec<Vec<f64>>` copy of a policy.
pub fn probs(policy: &PolicyDistribution) -> Vec<Vec<f64>> {
    policy.probs().to_rows()
}

/// Plain softmax without max-subtraction, for moderate logits.
pub fn naive_softmax(logits: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = logits.iter().map(|x| x.exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|x| x / z).collect()
}

/// Bellman backup `r^π + γ P^π V` for an explicit policy table.
pub fn backup(mdp: &TabularMdp, pi: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let g = mdp.discount();
    (0..mdp.n_states())
        .map(|s| {
            (0..mdp.n_actions())
                .map(|a| {
                    let next: f64 = mdp
                        .transition_row(s, a)
                        .iter()
                        .zip(v)
                        .map(|(p, x)| p * x)
                        .sum();
                    pi[s][a] * (mdp.reward().get(s, a) + g * next)
                })
                .sum()
        })
        .collect()
}

/// Iterative policy evaluation: repeated backups until the sup-norm change
/// drops below `tol`.
pub fn iterative_evaluation(mdp: &TabularMdp, pi: &[Vec<f64>], tol: f64) -> Vec<f64> {
    let mut v = vec![0.0; mdp.n_states()];
    for _ in 0..1_000_000 {
        let next = backup(mdp, pi, &v);
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if delta < tol {
            return v;
        }
    }
    panic!("iterative evaluation did not converge");
}

/// `Q(s,a)` by explicit summation over next states.
pub fn q_by_summation(mdp: &TabularMdp, v: &[f64]) -> Vec<Vec<f64>> {
    (0..mdp.n_states())
        .map(|s| {
            (0..mdp.n_actions())
                .map(|a| {
                    let mut total = mdp.reward().get(s, a);
                    for (next, vn) in v.iter().enumerate() {
                        total += mdp.discount() * mdp.transition_row(s, a)[next] * vn;
                    }
                    total
                })
                .collect()
        })
        .collect()
}

/// Normalized truncated series `Σ_{t ≤ horizon} γ^t Pr(s_t = s)`.
pub fn truncated_visitation(mdp: &TabularMdp, pi: &[Vec<f64>], start: &[f64], horizon: usize) -> Vec<f64> {
    let n = mdp.n_states();
    let mut dist = start.to_vec();
    let mut acc = vec![0.0; n];
    let mut weight = 1.0;
    for _ in 0..=horizon {
        for s in 0..n {
            acc[s] += weight * dist[s];
        }
        let mut next = vec![0.0; n];
        for s in 0..n {
            for a in 0..mdp.n_actions() {
                for (t, p) in mdp.transition_row(s, a).iter().enumerate() {
                    next[t] += dist[s] * pi[s][a] * p;
                }
            }
        }
        dist = next;
        weight *= mdp.discount();
    }
    let z: f64 = acc.iter().sum();
    acc.iter().map(|x| x / z).collect()
}

/// Gaussian elimination with partial pivoting; independent of the
/// library's LU.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Values of the deterministic policy `actions` by a direct linear solve.
pub fn deterministic_values(mdp: &TabularMdp, actions: &[usize]) -> Vec<f64> {
    let n = mdp.n_states();
    let g = mdp.discount();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for s in 0..n {
        a[s][s] += 1.0;
        for (t, p) in mdp.transition_row(s, actions[s]).iter().enumerate() {
            a[s][t] -= g * p;
        }
        b[s] = mdp.reward().get(s, actions[s]);
    }
    gauss_solve(a, b)
}

/// `V*` as the statewise maximum over all `|A|^|S|` deterministic policies.
pub fn brute_force_optimal(mdp: &TabularMdp) -> Vec<f64> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mut best = vec![f64::NEG_INFINITY; ns];
    let mut actions = vec![0usize; ns];
    loop {
        let v = deterministic_values(mdp, &actions);
        for s in 0..ns {
            best[s] = best[s].max(v[s]);
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == ns {
                return best;
            }
            actions[i] += 1;
            if actions[i] < na {
                break;
            }
            actions[i] = 0;
            i += 1;
        }
    }
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

/// Random valid MDP with the given dimensions and discount.
pub fn random_mdp(seed: u64, n_states: usize, n_actions: usize, gamma: f64) -> TabularMdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reward = (0..n_states)
        .map(|_| (0..n_actions).map(|_| rng.random::<f64>()).collect())
        .collect();
    let transition = (0..n_states)
        .map(|_| (0..n_actions).map(|_| random_simplex(&mut rng, n_states)).collect())
        .collect();
    let rho = random_simplex(&mut rng, n_states);
    TabularMdp::try_from(MdpDefinition {
        n_states,
        n_actions,
        gamma,
        rho,
        reward,
        transition,
    })
    .expect("generated MDP is valid")
}

/// Random MDP with random dimensions in `1..=max_dim`.
pub fn random_instance(seed: u64, max_dim: usize, gammas: &[f64]) -> TabularMdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5_A5A5);
    let ns = rng.random_range(1..=max_dim);
    let na = rng.random_range(1..=max_dim);
    let gamma = gammas[rng.random_range(0..gammas.len())];
    random_mdp(seed, ns, na, gamma)
}

pub fn random_logits(seed: u64, n_states: usize, n_actions: usize, scale: f64) -> PolicyParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31).wrapping_add(7));
    let data = (0..n_states * n_actions)
        .map(|_| rng.random_range(-scale..=scale))
        .collect();
    PolicyParams(Table::from_flat(n_states, n_actions, data).unwrap())
}
