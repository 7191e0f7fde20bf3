//! Reference policies that optimize the two limits of the statistical AoI.

use crate::error::{AoiError, Result};
use crate::model::{ChannelModel, RateCurve, SamplingPolicy, SystemConfig, POWER_TOL};

use super::{ensure_feasible, fractional, total_power};

/// Uniform policy with the smallest feasible slot count, which minimizes
/// the maximum peak age.
pub fn baseline_max_peak(ch: &ChannelModel, cfg: &SystemConfig) -> Result<SamplingPolicy> {
    ensure_feasible(ch, cfg)?;
    let curve = RateCurve::new(cfg)?;
    for m in 1..=cfg.max_slots {
        let slots = vec![m as f64; ch.len()];
        if total_power(&slots, ch, &curve)? <= cfg.avg_power + POWER_TOL {
            return SamplingPolicy::with_min_power(slots, ch, cfg);
        }
    }
    Err(AoiError::Infeasible(
        "no uniform slot count meets the power budget".into(),
    ))
}

/// The θ → 0 optimum: fractional-programming solution rounded for minimum
/// average peak AoI.
pub fn baseline_avg_peak(ch: &ChannelModel, cfg: &SystemConfig) -> Result<SamplingPolicy> {
    let sol = fractional::solve_continuous(ch, cfg)?;
    Ok(sol.report(ch, cfg, 0.0)?.policy)
}
