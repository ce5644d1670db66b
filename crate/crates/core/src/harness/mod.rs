//! Experiment configuration, the built-in environments, optimizer runs and
//! their traces.

mod config;
mod environments;
mod run;
mod trace;

pub use config::{ExperimentConfig, GradientMode, InitSpec, LoadedEnvironment, DEFAULT_FILE_ITERATIONS};
pub use environments::{
    builtin_environment, five_state_definition, five_state_mdp, load_mdp_file, read_mdp_definition,
    three_arm_bandit,
    write_mdp_file, BuiltinEnv, BuiltinEnvironment, InitKind, BANDIT_HARD_INIT, BANDIT_REWARDS,
    MDP_DISCOUNT, MDP_HARD_INIT, MDP_REWARD, MDP_RHO, MDP_TRANSITION_COLUMNS,
};
pub use run::{compare, gap_series, lambda_sweep, run, workers_from_env, GapSeries, GAP_TOL, WORKERS_ENV};
pub use trace::{
    csv_header, encode_trace, format_number, serialize_trace, trace_from_json, trace_to_csv,
    trace_to_json, write_atomically, RunTrace, TraceFormat, TraceRecord,
};
