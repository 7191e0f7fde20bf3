//! Small-exponent engine: maximize `Σ p_k / n_k` under the power budget.
//!
//! The sum of ratios is replaced by its quadratic transform
//! `Σ (2 m_k sqrt(p_k) - m_k² n_k)` and solved by alternating
//! `m_k = sqrt(p_k)/n_k` with the convex inner program
//! `min Σ m_k² n_k` s.t. power and slot cap.

use crate::error::{AoiError, Result};
use crate::metrics::AoIReport;
use crate::model::{check_len, ChannelModel, RateCurve, SamplingPolicy, SystemConfig};

use super::{
    dual_bisection, ensure_feasible, increasing_root, integerize, k_star, Branch, SolveReport, SolverState,
    FP_MAX_ITER, FP_SLOT_TOL, FP_TOL,
};

/// Relaxed solution of the fractional program.
#[derive(Debug, Clone)]
pub(crate) struct Continuous {
    pub slots: Vec<f64>,
    pub aux: Vec<f64>,
    pub ln_lambda: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

fn ratio_objective(slots: &[f64], ch: &ChannelModel) -> f64 {
    ch.probs().iter().zip(slots).map(|(p, n)| p / n).sum()
}

/// Lagrangian slope of the inner program in state `k`, in log form; its
/// sign is the sign of `m_k² + λ (p_k/γ_k) d/dn 2^g(n)`.
fn inner_residual(aux: f64, ln_lambda: f64, prob: f64, gamma: f64, curve: &RateCurve, n: f64) -> f64 {
    2.0 * aux.ln() - (ln_lambda + prob.ln() - gamma.ln() + curve.ln_unit_power_slope(n))
}

fn inner_slots(aux: &[f64], ln_lambda: f64, ch: &ChannelModel, curve: &RateCurve, n_max: f64) -> Vec<f64> {
    aux.iter()
        .zip(ch.probs().iter().zip(ch.gammas()))
        .map(|(&m, (&p, &g))| increasing_root(|n| inner_residual(m, ln_lambda, p, g, curve, n), 1.0, n_max))
        .collect()
}

fn inner_solve(aux: &[f64], ch: &ChannelModel, cfg: &SystemConfig, curve: &RateCurve) -> Result<(Vec<f64>, f64)> {
    let n_max = cfg.n_max();
    let dual = dual_bisection(|ln_l| inner_slots(aux, ln_l, ch, curve, n_max), ch, cfg, curve)?;
    Ok((dual.slots, dual.ln_mu))
}

/// Solves `min Σ m_k² n_k` subject to the power budget and `1 <= n_k <= n_max`.
pub fn solve_inner_subproblem(aux: &[f64], ch: &ChannelModel, cfg: &SystemConfig) -> Result<Vec<f64>> {
    check_len("aux", aux.len(), ch.len())?;
    if let Some(k) = aux.iter().position(|&m| !(m > 0.0 && m.is_finite())) {
        return Err(AoiError::Domain(format!("aux[{k}] must be positive")));
    }
    ensure_feasible(ch, cfg)?;
    let curve = RateCurve::new(cfg)?;
    Ok(inner_solve(aux, ch, cfg, &curve)?.0)
}

pub(crate) fn solve_continuous(ch: &ChannelModel, cfg: &SystemConfig) -> Result<Continuous> {
    ensure_feasible(ch, cfg)?;
    let curve = RateCurve::new(cfg)?;

    let mut slots = vec![cfg.n_max(); ch.len()];
    let mut objective = ratio_objective(&slots, ch);
    let mut trace = vec![objective];
    let mut aux = Vec::new();
    let mut ln_lambda = f64::NEG_INFINITY;
    let mut iterations = 0;
    while iterations < FP_MAX_ITER {
        iterations += 1;
        aux = ch.probs().iter().zip(&slots).map(|(p, n)| p.sqrt() / n).collect();
        let (next, ln_l) = inner_solve(&aux, ch, cfg, &curve)?;
        let next_objective = ratio_objective(&next, ch);
        let moved = next.iter().zip(&slots).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        slots = next;
        ln_lambda = ln_l;
        trace.push(next_objective);
        let change = (next_objective - objective).abs();
        objective = next_objective;
        if change < FP_TOL && moved < FP_SLOT_TOL {
            break;
        }
    }
    Ok(Continuous {
        slots,
        aux,
        ln_lambda,
        iterations,
        trace,
    })
}

impl Continuous {
    pub(crate) fn state(&self, ch: &ChannelModel, cfg: &SystemConfig) -> Result<SolverState> {
        let curve = RateCurve::new(cfg)?;
        let n_max = cfg.n_max();
        let betas = (0..ch.len())
            .map(|k| {
                if self.slots[k] < n_max {
                    return 0.0;
                }
                // -(m² + λ (p/γ) d2^g/dn) at the cap, when positive.
                let pull = (self.ln_lambda + ch.probs()[k].ln() - ch.gammas()[k].ln()
                    + curve.ln_unit_power_slope(n_max))
                .exp();
                (pull - self.aux[k] * self.aux[k]).max(0.0)
            })
            .collect();
        Ok(SolverState {
            aux: self.aux.clone(),
            alpha: self.ln_lambda.exp(),
            ln_alpha: self.ln_lambda,
            betas,
            k_star: k_star(&self.slots, n_max),
        })
    }

    /// Rounds at `theta` and packages the result.
    pub(crate) fn report(&self, ch: &ChannelModel, cfg: &SystemConfig, theta: f64) -> Result<SolveReport> {
        let continuous_policy = SamplingPolicy::with_min_power(self.slots.clone(), ch, cfg)?;
        let rounded = integerize(&continuous_policy, ch, cfg, theta)?;
        Ok(SolveReport {
            achieved: AoIReport::evaluate(&rounded.policy, ch, cfg, theta)?,
            policy: rounded.policy,
            continuous_policy,
            iterations: self.iterations,
            branch: Branch::SmallTheta,
            objective_trace: self.trace.clone(),
            state: self.state(ch, cfg)?,
            rounding_fallback: rounded.fell_back,
        })
    }
}

/// Fractional-programming solve of the θ → 0 problem. The returned policy is
/// rounded for minimum average peak AoI; `objective_trace` holds `Σ p_k/n_k`
/// starting from the all-`max_slots` point.
pub fn solve_small_theta(ch: &ChannelModel, cfg: &SystemConfig) -> Result<SolveReport> {
    solve_continuous(ch, cfg)?.report(ch, cfg, 0.0)
}
