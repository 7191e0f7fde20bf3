//! Large-exponent engine: minimize `Σ p_k exp(2θ n_k T)` under the power
//! budget by solving its KKT system.
//!
//! For a fixed power multiplier α the Lagrangian separates per state, and
//! its stationarity residual
//!
//! ```text
//! h(n, γ) = 2θT·exp(2θnT) + α·g'(n)/γ·2^g(n)·ln 2
//! ```
//!
//! increases in `n`, so each `n_k(α)` is a clamped root. α is then bisected
//! until the budget binds. Both α and `exp(2θnT)` leave f64 range at large
//! θT, so the residual is compared in log form and the bisection runs on
//! `ln α`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{AoiError, Result};
use crate::metrics::AoIReport;
use crate::model::{ChannelModel, RateCurve, SamplingPolicy, SystemConfig};

use super::{
    dual_bisection, ensure_feasible, increasing_root, integerize, k_star, total_power, Branch, SolveReport, SolverState,
};

/// Stationarity residual of the large-θ Lagrangian (with `p_k` divided out).
/// Overflows to ±inf when `2θnT` is beyond f64 range.
pub fn h_function(n: f64, gamma: f64, alpha: f64, theta: f64, cfg: &SystemConfig) -> Result<f64> {
    if !(n >= 1.0) || !(alpha >= 0.0) || !(theta > 0.0) || !(gamma > 0.0) {
        return Err(AoiError::Domain(format!(
            "h_function needs n >= 1, alpha >= 0, theta > 0, gamma > 0 (got n={n}, alpha={alpha}, theta={theta}, gamma={gamma})"
        )));
    }
    let curve = RateCurve::new(cfg)?;
    let t = cfg.slot_duration;
    let growth = 2.0 * theta * t * (2.0 * theta * n * t).exp();
    let saving = alpha * curve.g_prime(n) / gamma * curve.g(n).exp2() * LN_2;
    Ok(growth + saving)
}

/// `ln` of the two terms of `h`: the AoI growth term and the magnitude of the
/// power-saving term.
fn log_terms(n: f64, gamma: f64, ln_alpha: f64, theta: f64, t: f64, curve: &RateCurve) -> (f64, f64) {
    let growth = (2.0 * theta * t).ln() + 2.0 * theta * t * n;
    let saving = ln_alpha - gamma.ln() + curve.ln_unit_power_slope(n);
    (growth, saving)
}

fn slots_at(ln_alpha: f64, ch: &ChannelModel, theta: f64, cfg: &SystemConfig, curve: &RateCurve) -> Vec<f64> {
    let t = cfg.slot_duration;
    ch.gammas()
        .iter()
        .map(|&g| {
            increasing_root(
                |n| {
                    let (a, b) = log_terms(n, g, ln_alpha, theta, t, curve);
                    a - b
                },
                1.0,
                cfg.n_max(),
            )
        })
        .collect()
}

/// Scaled residuals of the KKT system at a continuous point.
///
/// Stationarity is `|h + β - μ| / (|growth| + |saving|)`, where μ ≥ 0 is the
/// multiplier of the `n >= 1` bound (zero unless the state sits at one slot).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub cap_slackness: f64,
    pub power_slackness: f64,
}

pub fn kkt_residuals(
    slots: &[f64],
    ch: &ChannelModel,
    cfg: &SystemConfig,
    theta: f64,
    ln_alpha: f64,
) -> Result<KktResiduals> {
    let curve = RateCurve::new(cfg)?;
    let t = cfg.slot_duration;
    let n_max = cfg.n_max();
    let mut stationarity = 0.0f64;
    let mut cap_slackness = 0.0f64;
    for (&n, &g) in slots.iter().zip(ch.gammas()) {
        let (a, b) = log_terms(n, g, ln_alpha, theta, t, &curve);
        // h / (|growth| + |saving|) = tanh((a - b) / 2)
        let h_scaled = if ln_alpha == f64::NEG_INFINITY {
            1.0
        } else {
            ((a - b) / 2.0).tanh()
        };
        let beta = if n >= n_max { (-h_scaled).max(0.0) } else { 0.0 };
        let mu = if n <= 1.0 { h_scaled.max(0.0) } else { 0.0 };
        stationarity = stationarity.max((h_scaled + beta - mu).abs());
        cap_slackness = cap_slackness.max((beta * (n - n_max)).abs());
    }
    let power = total_power(slots, ch, &curve)?;
    let power_slackness = if ln_alpha == f64::NEG_INFINITY {
        0.0
    } else {
        ((power - cfg.avg_power) / cfg.avg_power).abs()
    };
    Ok(KktResiduals {
        stationarity,
        cap_slackness,
        power_slackness,
    })
}

pub(crate) struct LargeContinuous {
    pub slots: Vec<f64>,
    pub ln_alpha: f64,
    pub iterations: usize,
    pub trace: Vec<Vec<f64>>,
}

pub(crate) fn solve_continuous(ch: &ChannelModel, cfg: &SystemConfig, theta: f64) -> Result<LargeContinuous> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(AoiError::Domain(format!(
            "large-theta solve needs finite theta > 0, got {theta}"
        )));
    }
    ensure_feasible(ch, cfg)?;
    let curve = RateCurve::new(cfg)?;
    let dual = dual_bisection(|ln_a| slots_at(ln_a, ch, theta, cfg, &curve), ch, cfg, &curve)?;
    Ok(LargeContinuous {
        slots: dual.slots,
        ln_alpha: dual.ln_mu,
        iterations: dual.iterations,
        trace: dual.trace,
    })
}

/// KKT bisection solve for exponent `theta` (1/s). The returned policy is
/// rounded for minimum exact statistical AoI at `theta`; `objective_trace`
/// holds the large-θ approximation of each feasible bisection iterate.
pub fn solve_large_theta(ch: &ChannelModel, cfg: &SystemConfig, theta: f64) -> Result<SolveReport> {
    let sol = solve_continuous(ch, cfg, theta)?;
    let curve = RateCurve::new(cfg)?;
    let t = cfg.slot_duration;
    let n_max = cfg.n_max();

    let continuous_policy = SamplingPolicy::with_min_power(sol.slots.clone(), ch, cfg)?;
    let rounded = integerize(&continuous_policy, ch, cfg, theta)?;
    let objective_trace = sol
        .trace
        .iter()
        .map(|s| {
            let peaks: Vec<f64> = s.iter().map(|n| 2.0 * n * t).collect();
            crate::metrics::normalized_lmgf(ch.probs(), &peaks, theta)
        })
        .collect();
    let betas = sol
        .slots
        .iter()
        .zip(ch.gammas())
        .map(|(&n, &g)| {
            if n < n_max {
                return 0.0;
            }
            // β = saving - growth, kept as exp(b)·(1 - exp(a - b)).
            let (a, b) = log_terms(n, g, sol.ln_alpha, theta, t, &curve);
            if a >= b {
                0.0
            } else {
                b.exp() * -(a - b).exp_m1()
            }
        })
        .collect();
    Ok(SolveReport {
        achieved: AoIReport::evaluate(&rounded.policy, ch, cfg, theta)?,
        policy: rounded.policy,
        continuous_policy,
        iterations: sol.iterations,
        branch: Branch::LargeTheta,
        objective_trace,
        state: SolverState {
            aux: Vec::new(),
            alpha: sol.ln_alpha.exp(),
            ln_alpha: sol.ln_alpha,
            betas,
            k_star: k_star(&sol.slots, n_max),
        },
        rounding_fallback: rounded.fell_back,
    })
}
