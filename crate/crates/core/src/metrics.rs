//! Age-of-information statistics of a sampling policy.
//!
//! Every delivered packet in state `k` ends a peak of `2·n_k·T`, and the
//! fraction of packets sent in state `k` is proportional to `p_k / n_k`.
//! The statistical AoI is the normalized log-MGF of that discrete law:
//!
//! ```text
//! Δ_sta(θ) = (1/θ) ln Σ_k Pr_k · exp(2θ n_k T)
//! ```
//!
//! All logarithms are natural. Exponential sums are accumulated with the
//! largest exponent factored out, so `θ·n·T` in the thousands is fine.

use serde::{Deserialize, Serialize};

use crate::error::{AoiError, Result};
use crate::model::{check_len, ChannelModel, SamplingPolicy, SystemConfig};

/// Below this exponent (1/s) a query is treated as the θ → 0 limit.
pub const THETA_ZERO: f64 = 1e-6;

/// Discrete law of the peak age.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakAgePmf {
    /// Probability that a delivered packet was sent in state k.
    pub mass: Vec<f64>,
    /// Peak age `2·n_k·T` in seconds.
    pub peaks: Vec<f64>,
}

/// All AoI figures of merit for one policy at one exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoIReport {
    pub theta: f64,
    pub stat_aoi: f64,
    pub small_approx: f64,
    pub large_approx: f64,
    pub avg_peak: f64,
    pub max_peak: f64,
}

impl AoIReport {
    /// Evaluates every metric; for `theta < THETA_ZERO` the exponent-dependent
    /// fields take their θ → 0 limits.
    pub fn evaluate(policy: &SamplingPolicy, ch: &ChannelModel, cfg: &SystemConfig, theta: f64) -> Result<Self> {
        let avg_peak = avg_peak_aoi(policy, ch, cfg)?;
        let (stat_aoi, large_approx) = if theta < THETA_ZERO {
            let mean_under_probs = ch
                .probs()
                .iter()
                .zip(&policy.slots)
                .map(|(p, n)| p * 2.0 * n * cfg.slot_duration)
                .sum();
            (avg_peak, mean_under_probs)
        } else {
            (
                statistical_aoi(policy, ch, cfg, theta)?,
                stat_aoi_large_approx(policy, ch, cfg, theta)?,
            )
        };
        Ok(Self {
            theta,
            stat_aoi,
            small_approx: stat_aoi_small_approx(policy, ch, cfg)?,
            large_approx,
            avg_peak,
            max_peak: max_peak_aoi(policy, cfg),
        })
    }

    /// Moment generating function of the peak age at `theta`, `exp(θ·Δ_sta)`.
    pub fn mgf(&self) -> f64 {
        (self.theta * self.stat_aoi).exp()
    }
}

/// `(1/θ) ln Σ w_k exp(θ a_k)` for weights summing to one.
pub(crate) fn normalized_lmgf(weights: &[f64], values: &[f64], theta: f64) -> f64 {
    let shift = values.iter().fold(f64::NEG_INFINITY, |m, &a| m.max(theta * a));
    let scaled: f64 = weights
        .iter()
        .zip(values)
        .map(|(w, &a)| w * (theta * a - shift).exp())
        .sum();
    let log_sum = if scaled < 0.5 {
        scaled.ln()
    } else {
        // Σw = 1, so Σ w·e^x = 1 + Σ w·(e^x - 1); keeps small-θ precision.
        weights
            .iter()
            .zip(values)
            .map(|(w, &a)| w * (theta * a - shift).exp_m1())
            .sum::<f64>()
            .ln_1p()
    };
    (shift + log_sum) / theta
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(AoiError::Domain(format!(
            "theta must be positive and finite, got {theta}; use avg_peak_aoi for θ → 0 and max_peak_aoi for θ → ∞"
        )))
    }
}

fn check_slots(policy: &SamplingPolicy, ch: &ChannelModel) -> Result<()> {
    check_len("slots", policy.slots.len(), ch.len())?;
    if let Some(k) = policy.slots.iter().position(|&n| !(n >= 1.0)) {
        return Err(AoiError::Domain(format!(
            "slots[{k}] = {} is below one slot",
            policy.slots[k]
        )));
    }
    Ok(())
}

pub fn peak_age_pmf(policy: &SamplingPolicy, ch: &ChannelModel, cfg: &SystemConfig) -> Result<PeakAgePmf> {
    check_slots(policy, ch)?;
    Ok(pmf_of_slots(&policy.slots, ch, cfg))
}

fn pmf_of_slots(slots: &[f64], ch: &ChannelModel, cfg: &SystemConfig) -> PeakAgePmf {
    let total: f64 = ch.probs().iter().zip(slots).map(|(p, n)| p / n).sum();
    let mass = ch.probs().iter().zip(slots).map(|(p, n)| (p / n) / total).collect();
    let peaks = slots.iter().map(|n| 2.0 * n * cfg.slot_duration).collect();
    PeakAgePmf { mass, peaks }
}

/// Exact statistical AoI of a slot vector, or the average peak AoI when
/// `theta < THETA_ZERO`. Same arithmetic as the public metrics.
pub(crate) fn objective_of_slots(slots: &[f64], ch: &ChannelModel, cfg: &SystemConfig, theta: f64) -> f64 {
    if theta < THETA_ZERO {
        let rate: f64 = ch.probs().iter().zip(slots).map(|(p, n)| p / n).sum();
        2.0 * cfg.slot_duration / rate
    } else {
        let pmf = pmf_of_slots(slots, ch, cfg);
        normalized_lmgf(&pmf.mass, &pmf.peaks, theta)
    }
}

/// Exact statistical AoI in seconds. Rejects `theta <= 0` and infinite θ.
pub fn statistical_aoi(policy: &SamplingPolicy, ch: &ChannelModel, cfg: &SystemConfig, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let pmf = peak_age_pmf(policy, ch, cfg)?;
    Ok(normalized_lmgf(&pmf.mass, &pmf.peaks, theta))
}

/// θ → 0 approximation `2T / Σ(p_k/n_k)`; does not depend on θ.
pub fn stat_aoi_small_approx(policy: &SamplingPolicy, ch: &ChannelModel, cfg: &SystemConfig) -> Result<f64> {
    check_slots(policy, ch)?;
    Ok(objective_of_slots(&policy.slots, ch, cfg, 0.0))
}

/// Large-θ approximation that weighs peaks by `p_k` instead of the packet law.
pub fn stat_aoi_large_approx(
    policy: &SamplingPolicy,
    ch: &ChannelModel,
    cfg: &SystemConfig,
    theta: f64,
) -> Result<f64> {
    check_theta(theta)?;
    check_slots(policy, ch)?;
    let peaks: Vec<f64> = policy.slots.iter().map(|n| 2.0 * n * cfg.slot_duration).collect();
    Ok(normalized_lmgf(ch.probs(), &peaks, theta))
}

/// Worst-case gap `ln(n_max)/θ` between the large-θ approximation and the
/// exact statistical AoI.
pub fn approx_error_bound(cfg: &SystemConfig, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(cfg.n_max().ln() / theta)
}

/// Mean peak age over delivered packets, `2T / Σ(p_k/n_k)`.
pub fn avg_peak_aoi(policy: &SamplingPolicy, ch: &ChannelModel, cfg: &SystemConfig) -> Result<f64> {
    stat_aoi_small_approx(policy, ch, cfg)
}

pub fn max_peak_aoi(policy: &SamplingPolicy, cfg: &SystemConfig) -> f64 {
    let n = policy.slots.iter().fold(f64::NEG_INFINITY, |m, &n| m.max(n));
    2.0 * n * cfg.slot_duration
}

/// Chernoff ceiling `exp(-θσ)` on `P{A >= Δ_sta(θ) + σ}`.
pub fn chernoff_tail_bound(stat_aoi: f64, theta: f64, sigma: f64) -> Result<f64> {
    check_theta(theta)?;
    if !(sigma > 0.0) {
        return Err(AoiError::Domain(format!("sigma must be positive, got {sigma}")));
    }
    debug_assert!(stat_aoi.is_finite());
    Ok((-theta * sigma).exp())
}
