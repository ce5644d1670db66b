mod common;

use common::{brute_force_optimal, naive_softmax};
use tabular_pg::harness::{
    builtin_environment, compare, encode_trace, gap_series, lambda_sweep, run, serialize_trace,
    trace_from_json, trace_to_csv, write_mdp_file, ExperimentConfig, InitSpec, RunTrace,
    TraceFormat, TraceRecord, BANDIT_REWARDS, MDP_RHO,
};
use tabular_pg::mdp::{objective_at, softmax_policy, PolicyParams};
use tabular_pg::optimizers::{Hyperparameters, OptimizerKind};
use tabular_pg::Table;

fn config(env: &str, opt: OptimizerKind, iterations: usize) -> ExperimentConfig {
    ExperimentConfig::new(env, opt).with_iterations(iterations)
}

fn with_lambda(mut c: ExperimentConfig, lambda: f64) -> ExperimentConfig {
    c.hyper.lambda = Some(lambda);
    c
}

fn reported(trace: &RunTrace) -> Vec<f64> {
    trace.records.iter().map(TraceRecord::reported_objective).collect()
}

#[test]
fn one_pg_step_on_uniform_bandit() {
    let trace = run(&config("bandit-uniform", OptimizerKind::Pg, 1)).unwrap();
    assert_eq!(trace.records.len(), 1);
    let v = trace.records[0].objective;
    assert!(v > 0.663333);
    // θ = 0.1 · π(a)(r(a) - π·r) from uniform logits, then π·r by hand
    let base: f64 = BANDIT_REWARDS.iter().sum::<f64>() / 3.0;
    let logits: Vec<f64> = BANDIT_REWARDS.iter().map(|r| 0.1 * (r - base) / 3.0).collect();
    let pi = naive_softmax(&logits);
    let hand: f64 = pi.iter().zip(BANDIT_REWARDS).map(|(p, r)| p * r).sum();
    assert!((v - hand).abs() <= 1e-14, "{v} vs {hand}");
}

#[test]
fn spg_nm_with_unit_lambda_tracks_pg() {
    let pg = run(&config("bandit-uniform", OptimizerKind::Pg, 50)).unwrap();
    let spg = run(&with_lambda(config("bandit-uniform", OptimizerKind::SpgNm, 50), 1.0)).unwrap();
    for (a, b) in reported(&pg).iter().zip(reported(&spg)) {
        assert!((a - b).abs() <= 1e-12);
    }
    assert!(pg.final_params.0.max_abs_diff(&spg.final_params.0) <= 1e-12);
}

#[test]
fn spg_nm_on_uniform_mdp_beats_pg() {
    let spg = run(&config("mdp-uniform", OptimizerKind::SpgNm, 2000)).unwrap();
    let pg = run(&config("mdp-uniform", OptimizerKind::Pg, 2000)).unwrap();
    assert!(!spg.is_failed());
    for r in &spg.records {
        assert!(r.objective.is_finite());
        let omega = r.omega_objective.unwrap();
        assert!(omega.is_finite() && omega >= r.objective);
    }
    let (s, p) = (
        spg.final_record().unwrap().gap.unwrap(),
        pg.final_record().unwrap().gap.unwrap(),
    );
    assert!(s < p, "spg-nm gap {s} vs pg gap {p}");
}

#[test]
fn records_follow_the_stride_and_keep_the_last_iteration() {
    let mut c = config("bandit-uniform", OptimizerKind::Adam, 23);
    c.record_every = 5;
    let trace = run(&c).unwrap();
    let ts: Vec<usize> = trace.records.iter().map(|r| r.t).collect();
    assert_eq!(ts, vec![5, 10, 15, 20, 23]);
}

#[test]
fn builtin_initial_policies() {
    let hard = builtin_environment("bandit-hard").unwrap();
    let pi = softmax_policy(hard.default_params()).unwrap();
    for (p, want) in pi.row(0).iter().zip([0.01588, 0.11731, 0.86681]) {
        assert!((p - want).abs() <= 1e-5);
    }
    let uniform = builtin_environment("mdp-uniform").unwrap();
    let pi = softmax_policy(uniform.default_params()).unwrap();
    assert!(pi.probs().as_slice().iter().all(|&p| (p - 0.2).abs() <= 1e-15));
    let mdp_hard = builtin_environment("mdp-hard").unwrap();
    assert_eq!(mdp_hard.default_params().logits().row(0), &[1.0, 2.0, 3.0, 4.0, 5.0]);
    for name in ["bandit-uniform", "bandit-hard", "mdp-uniform", "mdp-hard"] {
        assert!(builtin_environment(name).unwrap().mdp.validate().is_valid());
    }
    assert!(builtin_environment("mdp-medium").is_err());
}

fn single_record_trace(env: &str, logits: Table) -> (RunTrace, tabular_pg::mdp::TabularMdp) {
    let b = builtin_environment(env).unwrap();
    let params = PolicyParams(logits);
    let rho = b.mdp.initial_dist().to_vec();
    let objective = objective_at(&b.mdp, &params, &rho).unwrap();
    let pi = softmax_policy(&params).unwrap();
    let values = tabular_pg::mdp::policy_evaluation(&b.mdp, &pi).unwrap();
    let trace = RunTrace {
        config: ExperimentConfig::new(env, OptimizerKind::Pg).resolved().unwrap(),
        records: vec![TraceRecord {
            t: 0,
            objective,
            omega_objective: None,
            state_values: values,
            gap: None,
            wall_ms: None,
        }],
        final_params: params,
        optimal_objective: None,
        failed: None,
    };
    (trace, b.mdp)
}

#[test]
fn bandit_gap_is_one_minus_expected_reward() {
    let logits = Table::from_rows(vec![vec![0.3, -1.2, 2.0]]).unwrap();
    let pi = naive_softmax(logits.row(0));
    let (trace, mdp) = single_record_trace("bandit-uniform", logits);
    let gaps = gap_series(&trace, &mdp).unwrap();
    let expected = 1.0 - pi.iter().zip(BANDIT_REWARDS).map(|(p, r)| p * r).sum::<f64>();
    assert!((gaps.gaps[0] - expected).abs() <= 1e-12);
    assert_eq!(gaps.optimal_objective, 1.0);
}

#[test]
fn saturated_optimal_logits_have_tiny_gap() {
    let logits = Table::from_rows(vec![vec![50.0, 0.0, 0.0]]).unwrap();
    let (trace, mdp) = single_record_trace("bandit-uniform", logits);
    assert!(gap_series(&trace, &mdp).unwrap().gaps[0] <= 1e-9);
}

#[test]
fn uniform_mdp_initial_gap_matches_enumeration() {
    let (trace, mdp) = single_record_trace("mdp-uniform", Table::zeros(5, 5));
    let gap = gap_series(&trace, &mdp).unwrap().gaps[0];
    let v_star: f64 = brute_force_optimal(&mdp).iter().zip(MDP_RHO).map(|(v, m)| v * m).sum();
    assert!((gap - (v_star - trace.records[0].objective)).abs() <= 1e-8);
    assert!(gap > 0.0);
}

#[test]
fn gap_series_rejects_mismatched_mdp() {
    let trace = run(&config("bandit-uniform", OptimizerKind::Pg, 3)).unwrap();
    let mdp = builtin_environment("mdp-uniform").unwrap().mdp;
    assert!(gap_series(&trace, &mdp).is_err());
}

#[test]
fn gaps_are_nonnegative() {
    for env in ["bandit-uniform", "bandit-hard", "mdp-uniform", "mdp-hard"] {
        for opt in OptimizerKind::ALL {
            let trace = run(&config(env, opt, 300)).unwrap();
            let mdp = builtin_environment(env).unwrap().mdp;
            let series = gap_series(&trace, &mdp).unwrap();
            assert!(series.gaps.iter().all(|&g| g >= -1e-8), "{env} {opt}");
        }
    }
}

#[test]
fn compare_runs_all_five_to_high_reward() {
    let configs: Vec<_> = OptimizerKind::ALL
        .iter()
        .map(|&o| config("bandit-uniform", o, 2000))
        .collect();
    let traces = compare(&configs, 1).unwrap();
    assert_eq!(traces.len(), 5);
    for (t, o) in traces.iter().zip(OptimizerKind::ALL) {
        assert_eq!(t.config.optimizer, o);
        assert!(t.first_reaching(0.99).is_some(), "{o}");
    }
}

#[test]
fn compare_is_order_and_worker_invariant() {
    let configs: Vec<_> = OptimizerKind::ALL
        .iter()
        .map(|&o| config("mdp-hard", o, 200))
        .collect();
    let serial = compare(&configs, 1).unwrap();
    let parallel = compare(&configs, 4).unwrap();
    assert_eq!(serial, parallel);
    let mut reversed = configs.clone();
    reversed.reverse();
    let mut back = compare(&reversed, 3).unwrap();
    back.reverse();
    assert_eq!(serial, back);
    let single = compare(&configs[..1], 2).unwrap();
    assert_eq!(single, vec![run(&configs[0]).unwrap()]);
}

#[test]
fn compare_rejects_mixed_environments() {
    let configs = [
        config("bandit-uniform", OptimizerKind::Pg, 5),
        config("bandit-hard", OptimizerKind::Pg, 5),
    ];
    assert!(compare(&configs, 1).is_err());
    assert!(compare(&[], 1).is_err());
}

#[test]
fn lambda_sweep_produces_one_trace_per_lambda() {
    let base = config("mdp-uniform", OptimizerKind::SpgNm, 50);
    let lambdas = [1e3, 1e4, 1e5, 1e6];
    let traces = lambda_sweep(&base, &lambdas, 2).unwrap();
    assert_eq!(traces.len(), 4);
    for (t, l) in traces.iter().zip(lambdas) {
        assert_eq!(t.config.hyper.lambda, Some(l));
        assert_eq!(t.config.iterations, Some(50));
    }
}

#[test]
fn unit_lambda_sweep_equals_pg() {
    let base = config("bandit-hard", OptimizerKind::SpgNm, 100);
    let sweep = lambda_sweep(&base, &[1.0], 1).unwrap();
    let pg = run(&config("bandit-hard", OptimizerKind::Pg, 100)).unwrap();
    for (a, b) in reported(&sweep[0]).iter().zip(reported(&pg)) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn lambda_sweep_needs_spg_nm_and_lambdas() {
    assert!(lambda_sweep(&config("mdp-uniform", OptimizerKind::Pg, 5), &[1e3], 1).is_err());
    assert!(lambda_sweep(&config("mdp-uniform", OptimizerKind::SpgNm, 5), &[], 1).is_err());
}

#[test]
fn csv_layout_and_bandit_value_column() {
    let trace = run(&config("bandit-uniform", OptimizerKind::Pg, 3)).unwrap();
    let csv = trace_to_csv(&trace);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "t,objective,omega_objective,V_s0,gap,wall_ms");
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[1], cells[3]);
        assert_eq!(cells[2], "");
        assert_eq!(cells[5], "");
        let objective: f64 = cells[1].parse().unwrap();
        let gap: f64 = cells[4].parse().unwrap();
        assert!((objective + gap - 1.0).abs() <= 1e-15);
    }
}

#[test]
fn csv_numbers_round_trip_exactly() {
    let trace = run(&config("mdp-hard", OptimizerKind::SpgNm, 7)).unwrap();
    let csv = trace_to_csv(&trace);
    for (line, r) in csv.lines().skip(1).zip(&trace.records) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[1].parse::<f64>().unwrap(), r.objective);
        assert_eq!(cells[2].parse::<f64>().unwrap(), r.omega_objective.unwrap());
        for (s, v) in r.state_values.iter().enumerate() {
            assert_eq!(cells[3 + s].parse::<f64>().unwrap(), *v);
        }
    }
}

#[test]
fn json_round_trip_preserves_the_trace() {
    for opt in OptimizerKind::ALL {
        let trace = run(&config("mdp-hard", opt, 20)).unwrap();
        let text = encode_trace(&trace, TraceFormat::Json).unwrap();
        assert_eq!(trace_from_json(&text).unwrap(), trace);
    }
}

#[test]
fn serialized_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let c = config("mdp-hard", OptimizerKind::SpgNm, 100);
    for format in [TraceFormat::Csv, TraceFormat::Json] {
        let a = dir.path().join(format!("a.{}", format.extension()));
        let b = dir.path().join(format!("b.{}", format.extension()));
        serialize_trace(&run(&c).unwrap(), format, &a).unwrap();
        serialize_trace(&run(&c).unwrap(), format, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}

#[test]
fn sampled_runs_are_seeded() {
    let mut c = config("mdp-uniform", OptimizerKind::Pg, 5);
    c.gradient = tabular_pg::harness::GradientMode::Sampled {
        batch: 20,
        horizon: 30,
        baseline: true,
    };
    c.seed = 11;
    let a = run(&c).unwrap();
    assert_eq!(a, run(&c).unwrap());
    c.seed = 12;
    assert_ne!(a.final_params, run(&c).unwrap().final_params);
}

#[test]
fn mdp_files_run_like_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("five.toml");
    write_mdp_file(&builtin_environment("mdp-uniform").unwrap().mdp, &path).unwrap();
    let from_file = run(&config(path.to_str().unwrap(), OptimizerKind::HeavyBall, 40)).unwrap();
    let builtin = run(&config("mdp-uniform", OptimizerKind::HeavyBall, 40)).unwrap();
    assert_eq!(reported(&from_file), reported(&builtin));
}

#[test]
fn explicit_logits_and_discount_override() {
    let mut c = config("mdp-uniform", OptimizerKind::Pg, 10);
    c.init = Some(InitSpec::Logits(Table::filled(5, 5, 2.0)));
    c.discount = Some(0.5);
    let trace = run(&c).unwrap();
    assert_eq!(trace.config.discount, Some(0.5));
    let plain = run(&config("mdp-uniform", OptimizerKind::Pg, 10)).unwrap();
    assert_ne!(reported(&trace), reported(&plain));

    c.init = Some(InitSpec::Logits(Table::zeros(4, 5)));
    assert!(run(&c).is_err());
}

#[test]
fn overflowing_steps_leave_a_failed_partial_trace() {
    let mut c = config("mdp-hard", OptimizerKind::HeavyBall, 50);
    c.hyper = Hyperparameters {
        eta: Some(1e308),
        beta: Some(0.99),
        ..Hyperparameters::default()
    };
    let trace = run(&c).unwrap();
    assert!(trace.is_failed(), "{:?}", trace.failed);
    assert!(trace.records.len() < 50);
    assert!(trace.final_params.is_finite());
}

#[test]
fn invalid_configs_are_rejected_up_front() {
    assert!(run(&config("bandit-uniform", OptimizerKind::Pg, 0)).is_err());
    assert!(run(&config("no-such-env", OptimizerKind::Pg, 1)).is_err());
    let mut c = config("bandit-uniform", OptimizerKind::Pg, 1);
    c.record_every = 0;
    assert!(run(&c).is_err());
    let c = config("bandit-uniform", OptimizerKind::Pg, 1).with_hyper(Hyperparameters {
        eta: Some(-0.1),
        ..Hyperparameters::default()
    });
    assert!(run(&c).is_err());
}
