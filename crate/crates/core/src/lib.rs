//! Statistical age of information over block-fading channels with
//! finite-blocklength transmission: analytic metrics, sampling-interval
//! optimizers and a Monte-Carlo checker.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod metrics;
pub mod model;
pub mod par;
pub mod sim;
pub mod solvers;
pub mod table;

pub use error::{AoiError, Result};
pub use metrics::{
    approx_error_bound, avg_peak_aoi, chernoff_tail_bound, max_peak_aoi, peak_age_pmf, stat_aoi_large_approx,
    stat_aoi_small_approx, statistical_aoi, AoIReport, PeakAgePmf, THETA_ZERO,
};
pub use model::{
    coding_rate, g_of_n, inverse_q, min_power, policy_avg_power, q_function, AoIQuery, ChannelModel, SamplingPolicy,
    SystemConfig,
};
pub use par::Execution;
pub use sim::{empirical_stats, pooled_stats, simulate, simulate_many, write_trace, EmpiricalStats, SimTrace};
pub use solvers::{
    baseline_avg_peak, baseline_max_peak, exhaustive_oracle, exhaustive_oracle_with, select_policy, solve_large_theta,
    solve_small_theta, sweep, Branch, SolveReport, SolverState,
};
