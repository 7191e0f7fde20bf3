//! Sampling-interval optimization.
//!
//! Two continuous engines attack the statistical-AoI minimization from
//! opposite ends of the exponent range:
//!
//! * [`solve_small_theta`] maximizes `Σ p_k/n_k` (the θ → 0 objective) by a
//!   quadratic-transform iteration whose inner step is a separable convex
//!   program solved by dual bisection.
//! * [`solve_large_theta`] minimizes `Σ p_k exp(2θ n_k T)` through its KKT
//!   system, bisecting on the power multiplier α.
//!
//! [`select_policy`] rounds both to slot counts and keeps the one with the
//! smaller exact statistical AoI. [`exhaustive_oracle`] enumerates every
//! integer policy and serves as ground truth.

mod baseline;
mod fractional;
mod kkt;
mod oracle;
mod rounding;

pub use baseline::{baseline_avg_peak, baseline_max_peak};
pub use fractional::{solve_inner_subproblem, solve_small_theta};
pub use kkt::{h_function, kkt_residuals, solve_large_theta, KktResiduals};
pub use oracle::{exhaustive_oracle, exhaustive_oracle_with, ORACLE_LIMIT};
pub use rounding::{integerize, Rounded};

use serde::{Deserialize, Serialize};

use crate::error::{AoiError, Result};
use crate::metrics::{self, AoIReport, THETA_ZERO};
use crate::model::{ChannelModel, RateCurve, SamplingPolicy, SystemConfig, POWER_TOL};
use crate::par::Execution;

/// Outer fractional-programming loop: stop when the objective moves less.
pub const FP_TOL: f64 = 1e-10;
pub const FP_MAX_ITER: usize = 100;
/// Largest slot move allowed in the last fixed-point step.
pub const FP_SLOT_TOL: f64 = 1e-9;
/// Iteration cap shared by every bisection.
pub const BISECT_MAX_ITER: usize = 200;
/// Relative precision of the power match in the dual bisections.
pub const POWER_REL_TOL: f64 = 1e-13;

/// Which engine produced a policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    SmallTheta,
    LargeTheta,
    Exhaustive,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::SmallTheta => "small-theta",
            Branch::LargeTheta => "large-theta",
            Branch::Exhaustive => "exhaustive",
        }
    }
}

/// Multipliers and auxiliaries at the end of a continuous solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    /// Quadratic-transform auxiliaries `m_k` (empty for the KKT engine).
    pub aux: Vec<f64>,
    /// Power-constraint multiplier. May be `inf` when it exceeds f64 range;
    /// `ln_alpha` is always finite unless α = 0.
    pub alpha: f64,
    pub ln_alpha: f64,
    /// Slot-cap multipliers.
    pub betas: Vec<f64>,
    /// 1-based index of the first state below the cap; `K + 1` if none.
    pub k_star: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Integer slot counts with their minimal powers.
    pub policy: SamplingPolicy,
    /// The relaxed solution before rounding.
    pub continuous_policy: SamplingPolicy,
    pub achieved: AoIReport,
    pub iterations: usize,
    pub branch: Branch,
    pub objective_trace: Vec<f64>,
    pub state: SolverState,
    /// Rounding found no feasible neighbour and fell back to all-max slots.
    pub rounding_fallback: bool,
}

/// Fails unless the all-`max_slots` policy meets the power budget, which is
/// exactly the condition for any feasible policy to exist.
pub(crate) fn ensure_feasible(ch: &ChannelModel, cfg: &SystemConfig) -> Result<()> {
    cfg.validate()?;
    let curve = RateCurve::new(cfg)?;
    let need = total_power(&vec![cfg.n_max(); ch.len()], ch, &curve)?;
    if need > cfg.avg_power + POWER_TOL {
        return Err(AoiError::Infeasible(format!(
            "average power constraint: even {} slots in every state needs {need:.6} W, budget is {} W",
            cfg.max_slots, cfg.avg_power
        )));
    }
    Ok(())
}

/// `Σ (p_k/γ_k)(2^g(n_k) - 1)`.
pub(crate) fn total_power(slots: &[f64], ch: &ChannelModel, curve: &RateCurve) -> Result<f64> {
    let mut sum = 0.0;
    for ((n, p), g) in slots.iter().zip(ch.probs()).zip(ch.gammas()) {
        sum += p / g * curve.unit_power(*n)?;
    }
    Ok(sum)
}

pub(crate) fn k_star(slots: &[f64], n_max: f64) -> usize {
    slots.iter().position(|&n| n < n_max).map_or(slots.len() + 1, |k| k + 1)
}

/// Root of a residual that increases in `n`, clamped to `[lo, hi]`.
///
/// Returns `lo` when the residual is already non-negative there and `hi`
/// when it is still non-positive at the top. A NaN during bisection or a
/// bracket with the wrong sign pattern triggers a 10^4-point scan.
pub(crate) fn increasing_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let f_lo = f(lo);
    if f_lo >= 0.0 {
        return lo;
    }
    let f_hi = f(hi);
    if f_hi <= 0.0 {
        return hi;
    }
    if f_lo.is_nan() || f_hi.is_nan() {
        return scan_root(&f, lo, hi);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..BISECT_MAX_ITER {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b || b - a <= 1e-15 * b {
            break;
        }
        let v = f(mid);
        if v.is_nan() {
            return scan_root(&f, lo, hi);
        }
        if v < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn scan_root<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> f64 {
    const POINTS: usize = 10_000;
    let step = (hi - lo) / POINTS as f64;
    (0..=POINTS)
        .map(|i| lo + step * i as f64)
        .find(|&n| f(n) >= 0.0)
        .unwrap_or(hi)
}

/// Bisection on `ln μ` for the multiplier of the power constraint.
///
/// `slots_at(ln_mu)` returns the per-state minimizers of the Lagrangian;
/// more weight on power means more slots and less power. Returns the
/// feasible-side slots, `ln μ` and the number of bisection steps.
pub(crate) struct DualSolution {
    pub slots: Vec<f64>,
    pub ln_mu: f64,
    pub iterations: usize,
    pub trace: Vec<Vec<f64>>,
}

pub(crate) fn dual_bisection<F>(
    slots_at: F,
    ch: &ChannelModel,
    cfg: &SystemConfig,
    curve: &RateCurve,
) -> Result<DualSolution>
where
    F: Fn(f64) -> Vec<f64>,
{
    let budget = cfg.avg_power;
    let ones = vec![1.0; ch.len()];
    if total_power(&ones, ch, curve)? <= budget {
        return Ok(DualSolution {
            slots: ones,
            ln_mu: f64::NEG_INFINITY,
            iterations: 0,
            trace: vec![],
        });
    }
    let power_at = |ln_mu: f64| -> Result<(Vec<f64>, f64)> {
        let slots = slots_at(ln_mu);
        let p = total_power(&slots, ch, curve)?;
        Ok((slots, p))
    };

    // Grow a bracket [lo, hi] with power(lo) > budget >= power(hi).
    let (mut lo, mut hi);
    let (start_slots, start_power) = power_at(0.0)?;
    let mut best = start_slots;
    let mut step = 1.0;
    let mut grown = false;
    if start_power > budget {
        lo = 0.0;
        hi = 0.0;
        for _ in 0..BISECT_MAX_ITER {
            hi = lo + step;
            let (s, p) = power_at(hi)?;
            if p <= budget {
                best = s;
                grown = true;
                break;
            }
            lo = hi;
            step *= 2.0;
        }
    } else {
        hi = 0.0;
        lo = 0.0;
        for _ in 0..BISECT_MAX_ITER {
            lo = hi - step;
            let (_, p) = power_at(lo)?;
            if p > budget {
                grown = true;
                break;
            }
            hi = lo;
            step *= 2.0;
        }
        if grown {
            best = power_at(hi)?.0;
        }
    }
    if !grown {
        return Err(AoiError::Numeric(
            "power multiplier bracket did not close after 200 doublings".into(),
        ));
    }

    let mut trace = vec![best.clone()];
    let mut iterations = 0;
    for _ in 0..BISECT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let (s, p) = power_at(mid)?;
        if p > budget {
            lo = mid;
        } else {
            hi = mid;
            let done = (budget - p) <= POWER_REL_TOL * budget;
            best = s;
            trace.push(best.clone());
            if done {
                break;
            }
        }
    }
    Ok(DualSolution {
        slots: best,
        ln_mu: hi,
        iterations,
        trace,
    })
}

/// Runs both engines, rounds each at `theta`, and keeps the better by exact
/// statistical AoI (average peak AoI below [`THETA_ZERO`]). Ties go to the
/// small-θ branch.
pub fn select_policy(ch: &ChannelModel, cfg: &SystemConfig, theta: f64) -> Result<SolveReport> {
    let small = fractional::solve_continuous(ch, cfg)?;
    select_with(&small, ch, cfg, theta)
}

fn select_with(
    small: &fractional::Continuous,
    ch: &ChannelModel,
    cfg: &SystemConfig,
    theta: f64,
) -> Result<SolveReport> {
    if !(theta >= 0.0) || theta.is_infinite() {
        return Err(AoiError::Domain(format!("theta must be finite and >= 0, got {theta}")));
    }
    let small_report = small.report(ch, cfg, theta)?;
    if theta < THETA_ZERO {
        return Ok(small_report);
    }
    let large_report = solve_large_theta(ch, cfg, theta)?;
    if large_report.achieved.stat_aoi < small_report.achieved.stat_aoi {
        Ok(large_report)
    } else {
        Ok(small_report)
    }
}

/// [`select_policy`] over a grid of exponents. The θ-independent small-θ
/// solve is shared; results match a sequential run exactly.
pub fn sweep(ch: &ChannelModel, cfg: &SystemConfig, thetas: &[f64], exec: Execution) -> Result<Vec<SolveReport>> {
    let small = fractional::solve_continuous(ch, cfg)?;
    exec.map(thetas, |&theta| select_with(&small, ch, cfg, theta))
        .into_iter()
        .collect()
}

/// Exact objective used to rank integer candidates.
pub(crate) fn exact_objective(slots: &[f64], ch: &ChannelModel, cfg: &SystemConfig, theta: f64) -> f64 {
    metrics::objective_of_slots(slots, ch, cfg, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;

    #[test]
    fn increasing_root_clamps_and_solves() {
        assert_eq!(increasing_root(|n| n - 0.5, 1.0, 5.0), 1.0);
        assert_eq!(increasing_root(|n| n - 7.0, 1.0, 5.0), 5.0);
        let r = increasing_root(|n| n * n - 10.0, 1.0, 5.0);
        assert!((r - 10f64.sqrt()).abs() < 1e-12);
        // NaN inside the bracket falls back to the scan.
        let r = increasing_root(|n| if (2.0..2.5).contains(&n) { f64::NAN } else { n - 3.0 }, 1.0, 5.0);
        assert!((r - 3.0).abs() <= 4.0 / 10_000.0);
    }

    #[test]
    fn infeasible_when_all_max_exceeds_budget() {
        let ch = reference_channel();
        let mut cfg = reference_config();
        cfg.avg_power = 0.1;
        let err = ensure_feasible(&ch, &cfg).unwrap_err();
        assert!(matches!(err, AoiError::Infeasible(ref m) if m.contains("average power")));
        assert!(select_policy(&ch, &cfg, 10.0).is_err());
        assert!(solve_small_theta(&ch, &cfg).is_err());
        assert!(solve_large_theta(&ch, &cfg, 10.0).is_err());
        assert!(baseline_max_peak(&ch, &cfg).is_err());
    }

    #[test]
    fn k_star_indexing() {
        assert_eq!(k_star(&[5.0, 5.0, 3.0, 2.0], 5.0), 3);
        assert_eq!(k_star(&[5.0, 5.0], 5.0), 3);
        assert_eq!(k_star(&[1.0, 1.0], 5.0), 1);
    }

    #[test]
    fn select_policy_at_zero_uses_small_branch() {
        let ch = reference_channel();
        let cfg = reference_config();
        let r = select_policy(&ch, &cfg, 0.0).unwrap();
        assert_eq!(r.branch, Branch::SmallTheta);
        r.policy.validate(&ch, &cfg).unwrap();
        assert!(select_policy(&ch, &cfg, -1.0).is_err());
    }

    #[test]
    fn select_policy_never_worse_than_either_branch() {
        let ch = reference_channel();
        let cfg = reference_config();
        for theta_t in [1e-3, 1e-2, 0.1, 1.0, 10.0] {
            let theta = theta_t / cfg.slot_duration;
            let chosen = select_policy(&ch, &cfg, theta).unwrap();
            let small = fractional::solve_continuous(&ch, &cfg)
                .unwrap()
                .report(&ch, &cfg, theta)
                .unwrap();
            let large = solve_large_theta(&ch, &cfg, theta).unwrap();
            assert!(chosen.achieved.stat_aoi <= small.achieved.stat_aoi);
            assert!(chosen.achieved.stat_aoi <= large.achieved.stat_aoi);
        }
        let chosen = select_policy(&ch, &cfg, 10.0 / cfg.slot_duration).unwrap();
        assert_eq!(chosen.branch, Branch::LargeTheta);
    }

    #[test]
    fn sweep_is_identical_across_execution_modes() {
        let ch = reference_channel();
        let cfg = reference_config();
        let thetas: Vec<f64> = (0..12)
            .map(|i| 10f64.powf(-3.0 + i as f64 * 0.4) / cfg.slot_duration)
            .collect();
        let a = sweep(&ch, &cfg, &thetas, Execution::Sequential).unwrap();
        let b = sweep(&ch, &cfg, &thetas, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        for (r, &t) in a.iter().zip(&thetas) {
            assert_eq!(r, &select_policy(&ch, &cfg, t).unwrap());
        }
    }
}
