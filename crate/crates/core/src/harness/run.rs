use std::cell::Cell;
use std::time::Instant;

use super::config::{ExperimentConfig, GradientMode};
use super::trace::{RunTrace, TraceRecord};
use crate::error::{Error, Result};
use crate::gradient::{derive_seed, exact_gradient, sampled_gradient, GradientTable, SamplerConfig};
use crate::mdp::{
    objective, objective_at, optimal_values, policy_evaluation, softmax_policy, PolicyParams,
    TabularMdp,
};
use crate::optimizers::{make_stepper, OptimizerKind, StepContext, Stepper};

/// Value-iteration tolerance for the `V*` used in gaps.
pub const GAP_TOL: f64 = 1e-10;

/// Environment variable holding the worker count for [`compare`] and
/// [`lambda_sweep`] fan-out.
pub const WORKERS_ENV: &str = "TABULAR_PG_WORKERS";

/// Worker count from [`WORKERS_ENV`]; defaults to 1.
pub fn workers_from_env() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n >= 1)
        .unwrap_or(1)
}

fn record(
    mdp: &TabularMdp,
    rho: &[f64],
    stepper: &Stepper,
    t: usize,
    optimal: Option<f64>,
    wall_ms: Option<f64>,
) -> Result<TraceRecord> {
    let policy = softmax_policy(stepper.output())?;
    let state_values = policy_evaluation(mdp, &policy)?;
    let output_objective = objective(mdp, &state_values, rho)?;
    let (objective, omega_objective) = match stepper.acceptance() {
        Some(acc) => (acc.theta_objective, Some(acc.omega_objective())),
        None => (output_objective, None),
    };
    let reported = omega_objective.unwrap_or(objective);
    if !reported.is_finite() || !objective.is_finite() {
        return Err(Error::NumericalFailure {
            iteration: t,
            detail: "non-finite objective".into(),
        });
    }
    Ok(TraceRecord {
        t,
        objective,
        omega_objective,
        state_values,
        gap: optimal.map(|v| v - reported),
        wall_ms,
    })
}

/// Runs one experiment.
///
/// Configuration problems are errors; a numerical failure mid-run instead
/// yields the partial trace with `failed` set.
pub fn run(config: &ExperimentConfig) -> Result<RunTrace> {
    let config = config.resolved()?;
    let env = config.load_environment()?;
    let mdp = env.mdp;
    let rho = mdp.initial_dist().to_vec();
    let iterations = config.iterations.expect("resolved");
    let optimal = if config.compute_gap {
        Some(optimal_values(&mdp, GAP_TOL)?.objective(&rho))
    } else {
        None
    };
    let mut stepper = make_stepper(config.optimizer, &config.hyper, env.init)?;

    let calls = Cell::new(0u64);
    let gradient_at = |p: &PolicyParams| -> Result<GradientTable> {
        match config.gradient {
            GradientMode::Exact => exact_gradient(&mdp, p, &rho),
            GradientMode::Sampled {
                batch,
                horizon,
                baseline,
            } => {
                let call = calls.get();
                calls.set(call + 1);
                let sampler = SamplerConfig {
                    batch,
                    horizon,
                    seed: derive_seed(config.seed, call),
                    baseline,
                };
                sampled_gradient(&mdp, p, &rho, &sampler).map(|e| e.mean)
            }
        }
    };
    let objective_at = |p: &PolicyParams| objective_at(&mdp, p, &rho);

    let clock = config.timing.then(Instant::now);
    let mut records = Vec::with_capacity(iterations / config.record_every + 1);
    let mut failed = None;
    for t in 1..=iterations {
        let ctx = StepContext::new(&gradient_at, &objective_at, t);
        if let Err(e) = stepper.step(&ctx) {
            failed = Some(e.to_string());
            break;
        }
        if t % config.record_every == 0 || t == iterations {
            let wall_ms = clock.map(|c| c.elapsed().as_secs_f64() * 1e3);
            match record(&mdp, &rho, &stepper, t, optimal, wall_ms) {
                Ok(r) => records.push(r),
                Err(e) => {
                    failed = Some(e.to_string());
                    break;
                }
            }
        }
    }

    Ok(RunTrace {
        final_params: stepper.output().clone(),
        config,
        records,
        optimal_objective: optimal,
        failed,
    })
}

fn run_all(configs: &[ExperimentConfig], workers: usize) -> Result<Vec<RunTrace>> {
    let workers = workers.clamp(1, configs.len().max(1));
    if workers == 1 {
        return configs.iter().map(run).collect();
    }
    let mut slots: Vec<Option<Result<RunTrace>>> = (0..configs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..configs.len())
                        .step_by(workers)
                        .map(|i| (i, run(&configs[i])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("run worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every slot filled")).collect()
}

/// Runs several configs that share one environment; output order matches
/// input order regardless of `workers`.
pub fn compare(configs: &[ExperimentConfig], workers: usize) -> Result<Vec<RunTrace>> {
    let first = configs
        .first()
        .ok_or_else(|| Error::InvalidInput("compare needs at least one config".into()))?;
    if let Some(other) = configs.iter().find(|c| c.environment != first.environment) {
        return Err(Error::InvalidInput(format!(
            "mixed environments: `{}` and `{}`",
            first.environment, other.environment
        )));
    }
    run_all(configs, workers)
}

/// One SPG-NM run per `λ`, everything else fixed.
pub fn lambda_sweep(base: &ExperimentConfig, lambdas: &[f64], workers: usize) -> Result<Vec<RunTrace>> {
    if base.optimizer != OptimizerKind::SpgNm {
        return Err(Error::InvalidInput(format!(
            "lambda sweep needs spg-nm, got {}",
            base.optimizer
        )));
    }
    if lambdas.is_empty() {
        return Err(Error::InvalidInput("lambda sweep needs at least one lambda".into()));
    }
    let configs: Vec<_> = lambdas
        .iter()
        .map(|&lambda| {
            let mut c = base.clone();
            c.hyper.lambda = Some(lambda);
            c
        })
        .collect();
    run_all(&configs, workers)
}

/// Sub-optimality gap `V*(μ) - V^{π(t)}(μ)` at every recorded iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct GapSeries {
    pub iterations: Vec<usize>,
    pub gaps: Vec<f64>,
    pub optimal_objective: f64,
}

impl GapSeries {
    pub fn last(&self) -> Option<f64> {
        self.gaps.last().copied()
    }
}

pub fn gap_series(trace: &RunTrace, mdp: &TabularMdp) -> Result<GapSeries> {
    if trace.final_params.shape() != (mdp.n_states(), mdp.n_actions()) {
        return Err(Error::InvalidInput("trace does not match the MDP's shape".into()));
    }
    if let Some(r) = trace.records.iter().find(|r| r.state_values.len() != mdp.n_states()) {
        return Err(Error::InvalidInput(format!(
            "record at t={} has {} state values, MDP has {} states",
            r.t,
            r.state_values.len(),
            mdp.n_states()
        )));
    }
    let optimal = optimal_values(mdp, GAP_TOL)?.objective(mdp.initial_dist());
    Ok(GapSeries {
        iterations: trace.records.iter().map(|r| r.t).collect(),
        gaps: trace
            .records
            .iter()
            .map(|r| optimal - r.reported_objective())
            .collect(),
        optimal_objective: optimal,
    })
}
