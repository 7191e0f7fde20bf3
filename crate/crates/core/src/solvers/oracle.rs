//! Brute-force ground truth over every integer slot vector.

use crate::error::{AoiError, Result};
use crate::metrics::AoIReport;
use crate::model::{ChannelModel, RateCurve, SamplingPolicy, SystemConfig, POWER_TOL};
use crate::par::Execution;

use super::{ensure_feasible, exact_objective, k_star, Branch, SolveReport, SolverState};

/// Largest number of policies the oracle will enumerate.
pub const ORACLE_LIMIT: f64 = 1e7;

/// Enumerates `{1..n_max}^K` with [`Execution::default`].
pub fn exhaustive_oracle(ch: &ChannelModel, cfg: &SystemConfig, theta: f64) -> Result<SolveReport> {
    exhaustive_oracle_with(ch, cfg, theta, Execution::default())
}

/// Enumerates `{1..n_max}^K`, prices each vector at minimal power, drops
/// those over budget and returns the one with the smallest exact statistical
/// AoI (average peak AoI below the θ → 0 threshold). Ties go to the
/// lexicographically smallest vector, independent of `exec`.
pub fn exhaustive_oracle_with(
    ch: &ChannelModel,
    cfg: &SystemConfig,
    theta: f64,
    exec: Execution,
) -> Result<SolveReport> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(AoiError::Domain(format!("theta must be finite and >= 0, got {theta}")));
    }
    let size = (cfg.max_slots as f64).powi(ch.len() as i32);
    if size > ORACLE_LIMIT {
        return Err(AoiError::SearchSpace {
            size,
            limit: ORACLE_LIMIT,
        });
    }
    ensure_feasible(ch, cfg)?;

    let curve = RateCurve::new(cfg)?;
    let radix = cfg.max_slots as u64;
    let k_len = ch.len();
    // cost[k][n - 1] = p_k (2^g(n) - 1) / γ_k
    let cost: Vec<Vec<f64>> = (0..k_len)
        .map(|k| {
            (1..=cfg.max_slots)
                .map(|n| Ok(ch.probs()[k] / ch.gammas()[k] * curve.unit_power(n as f64)?))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let decode = |mut code: u64, slots: &mut [f64]| -> f64 {
        let mut power = 0.0;
        for k in (0..k_len).rev() {
            let digit = (code % radix) as usize;
            code /= radix;
            slots[k] = (digit + 1) as f64;
            power += cost[k][digit];
        }
        power
    };

    let total = size as u64;
    let best = exec.argmin_range(total, |code| {
        let mut slots = vec![0.0; k_len];
        let power = decode(code, &mut slots);
        (power <= cfg.avg_power + POWER_TOL).then(|| exact_objective(&slots, ch, cfg, theta))
    });
    let (_, code) = best.ok_or_else(|| AoiError::Infeasible("no integer policy meets the power budget".into()))?;

    let mut slots = vec![0.0; k_len];
    decode(code, &mut slots);
    let policy = SamplingPolicy::with_min_power(slots, ch, cfg)?;
    Ok(SolveReport {
        achieved: AoIReport::evaluate(&policy, ch, cfg, theta)?,
        continuous_policy: policy.clone(),
        state: SolverState {
            aux: Vec::new(),
            alpha: 0.0,
            ln_alpha: f64::NEG_INFINITY,
            betas: vec![0.0; k_len],
            k_star: k_star(&policy.slots, cfg.n_max()),
        },
        policy,
        iterations: total as usize,
        branch: Branch::Exhaustive,
        objective_trace: Vec::new(),
        rounding_fallback: false,
    })
}
