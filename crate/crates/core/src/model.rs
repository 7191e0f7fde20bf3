//! Channel and system parameters, and the finite-blocklength rate/power
//! relations that every metric and solver is built on.
//!
//! Slot counts are real-valued here; integrality is imposed by
//! [`crate::solvers::integerize`].

use std::f64::consts::{LN_2, LOG2_E, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{AoiError, Result};

/// Tolerance on the average-power constraint, in watts.
pub const POWER_TOL: f64 = 1e-9;
/// Tolerance on the delivered bits per packet.
pub const BITS_TOL: f64 = 1e-6;
/// Above this many bits/symbol, `2^g` is treated as a misconfiguration.
pub const MAX_G_BITS: f64 = 1000.0;

/// K-state block-fading channel: per-state SNR at unit transmit power and
/// the stationary probability of each state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    gammas: Vec<f64>,
    probs: Vec<f64>,
}

impl ChannelModel {
    pub fn new(gammas: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(AoiError::Config("channel needs at least one state".into()));
        }
        if gammas.len() != probs.len() {
            return Err(AoiError::Shape {
                what: "probs",
                got: probs.len(),
                expected: gammas.len(),
            });
        }
        if gammas.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(AoiError::Config("every SNR must be positive and finite".into()));
        }
        if gammas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AoiError::Config("SNRs must be strictly increasing".into()));
        }
        if probs.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(AoiError::Config("every state probability must be positive".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(AoiError::Config(format!(
                "state probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { gammas, probs })
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of channel states K.
    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }
}

/// Slot, bandwidth, packet and power parameters of the link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Slot duration T in seconds.
    pub slot_duration: f64,
    /// Bandwidth B in Hz.
    pub bandwidth: f64,
    /// Packet size in bits.
    pub packet_bits: f64,
    /// Target decoding error probability.
    pub error_prob: f64,
    /// Channel dispersion V (dimensionless, constant).
    pub dispersion: f64,
    /// Largest number of slots one packet may occupy.
    pub max_slots: u32,
    /// Average transmit power budget in watts.
    pub avg_power: f64,
    /// Slots per coherence block (simulation only).
    pub coherence_slots: u64,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("slot_duration", self.slot_duration),
            ("bandwidth", self.bandwidth),
            ("packet_bits", self.packet_bits),
            ("avg_power", self.avg_power),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(AoiError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.error_prob > 0.0 && self.error_prob < 0.5) {
            return Err(AoiError::Config(format!(
                "error_prob must lie in (0, 0.5), got {}",
                self.error_prob
            )));
        }
        if !(self.dispersion >= 0.0 && self.dispersion.is_finite()) {
            return Err(AoiError::Config("dispersion must be non-negative".into()));
        }
        if self.max_slots < 1 {
            return Err(AoiError::Config("max_slots must be at least 1".into()));
        }
        if self.coherence_slots < 2 * self.max_slots as u64 {
            return Err(AoiError::Config(format!(
                "coherence_slots ({}) must be at least 2 * max_slots ({})",
                self.coherence_slots,
                2 * self.max_slots
            )));
        }
        Ok(())
    }

    pub fn n_max(&self) -> f64 {
        self.max_slots as f64
    }

    /// Channel uses per slot, T·B.
    pub fn symbols_per_slot(&self) -> f64 {
        self.slot_duration * self.bandwidth
    }
}

/// Per-state slot counts and transmit powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPolicy {
    pub slots: Vec<f64>,
    pub powers: Vec<f64>,
}

impl SamplingPolicy {
    /// Builds the policy that meets the bit constraint with equality in every
    /// state.
    pub fn with_min_power(slots: Vec<f64>, ch: &ChannelModel, cfg: &SystemConfig) -> Result<Self> {
        check_len("slots", slots.len(), ch.len())?;
        let powers = slots
            .iter()
            .zip(ch.gammas())
            .map(|(&n, &g)| min_power(n, g, cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { slots, powers })
    }

    /// The same slot count in every state.
    pub fn uniform(slots: f64, ch: &ChannelModel, cfg: &SystemConfig) -> Result<Self> {
        Self::with_min_power(vec![slots; ch.len()], ch, cfg)
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn is_integer(&self) -> bool {
        self.slots.iter().all(|n| n.fract() == 0.0)
    }

    /// Checks the slot cap, non-negative power, average power and bit
    /// constraints.
    pub fn validate(&self, ch: &ChannelModel, cfg: &SystemConfig) -> Result<()> {
        check_len("slots", self.slots.len(), ch.len())?;
        check_len("powers", self.powers.len(), ch.len())?;
        let n_max = cfg.n_max();
        for (k, &n) in self.slots.iter().enumerate() {
            if !(1.0..=n_max).contains(&n) {
                return Err(AoiError::Domain(format!("slots[{k}] = {n} outside [1, {n_max}]")));
            }
        }
        if let Some(k) = self.powers.iter().position(|&w| !(w >= 0.0)) {
            return Err(AoiError::Domain(format!("powers[{k}] is negative")));
        }
        let avg = policy_avg_power(self, ch)?;
        if avg > cfg.avg_power + POWER_TOL {
            return Err(AoiError::Infeasible(format!(
                "average power {avg} W exceeds budget {} W",
                cfg.avg_power
            )));
        }
        let tb = cfg.symbols_per_slot();
        for k in 0..ch.len() {
            let n = self.slots[k];
            let bits = coding_rate(n, self.powers[k], ch.gammas()[k], cfg) * n * tb;
            if bits < cfg.packet_bits - BITS_TOL {
                return Err(AoiError::Infeasible(format!(
                    "state {k} delivers {bits} bits, packet needs {}",
                    cfg.packet_bits
                )));
            }
        }
        Ok(())
    }
}

/// Freshness requirement: AoI exponent θ (1/s) and optional tail offset σ (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoIQuery {
    pub theta: f64,
    pub sigma: Option<f64>,
}

impl AoIQuery {
    pub fn new(theta: f64, sigma: Option<f64>) -> Result<Self> {
        if !(theta >= 0.0) {
            return Err(AoiError::Domain(format!("theta must be >= 0, got {theta}")));
        }
        if let Some(s) = sigma {
            if !(s > 0.0) {
                return Err(AoiError::Domain(format!("sigma must be > 0, got {s}")));
            }
        }
        Ok(Self { theta, sigma })
    }
}

pub(crate) fn check_len(what: &'static str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(AoiError::Shape { what, got, expected })
    }
}

/// Standard normal upper tail probability Q(x).
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Inverse of the Gaussian Q-function: the `x` with `Q(x) = eps`.
///
/// Newton iteration on the tail probability, kept inside a shrinking
/// bracket so a bad step falls back to bisection.
pub fn inverse_q(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(AoiError::Domain(format!("inverse_q needs 0 < eps < 1, got {eps}")));
    }
    if eps == 0.5 {
        return Ok(0.0);
    }
    if eps > 0.5 {
        // 1 - eps is exact on [0.5, 1).
        return inverse_q(1.0 - eps).map(|x| -x);
    }

    let mut lo = 0.0_f64;
    let mut hi = 40.0_f64;
    let mut x = (-2.0 * (2.0 * eps).ln()).sqrt().min(hi);
    for _ in 0..200 {
        let f = q_function(x) - eps;
        if f > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if f == 0.0 {
            break;
        }
        let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut next = x + f / density;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 1e-15 * x.abs().max(1.0) || hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(x)
}

/// Finite-blocklength bit requirement `g(n)` with its coefficients cached.
///
/// `g(n) = N/(nTB) + c/sqrt(n)` where `c = sqrt(V/(TB))·Q⁻¹(ε)·log2(e)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RateCurve {
    packet_bits: f64,
    tb: f64,
    dispersion_coef: f64,
}

impl RateCurve {
    pub(crate) fn new(cfg: &SystemConfig) -> Result<Self> {
        let tb = cfg.symbols_per_slot();
        let q = inverse_q(cfg.error_prob)?;
        Ok(Self {
            packet_bits: cfg.packet_bits,
            tb,
            dispersion_coef: (cfg.dispersion / tb).sqrt() * q * LOG2_E,
        })
    }

    pub(crate) fn g(&self, n: f64) -> f64 {
        self.packet_bits / (n * self.tb) + self.dispersion_coef / n.sqrt()
    }

    pub(crate) fn g_prime(&self, n: f64) -> f64 {
        -self.packet_bits / (n * n * self.tb) - 0.5 * self.dispersion_coef * n.powf(-1.5)
    }

    /// `2^g(n) - 1`, the power needed at unit SNR.
    pub(crate) fn unit_power(&self, n: f64) -> Result<f64> {
        let g = self.g(n);
        if g > MAX_G_BITS {
            return Err(AoiError::PowerOverflow { g });
        }
        Ok((g * LN_2).exp_m1())
    }

    /// `ln(-d/dn (2^g(n)))`, finite for every `n >= 1`.
    pub(crate) fn ln_unit_power_slope(&self, n: f64) -> f64 {
        (-self.g_prime(n)).ln() + self.g(n) * LN_2 + LN_2.ln()
    }

    pub(crate) fn dispersion_penalty(&self, n: f64) -> f64 {
        self.dispersion_coef / n.sqrt()
    }
}

/// Achievable coding rate in bits/symbol with `n` slots, power `w` and SNR
/// `gamma`. May be negative.
pub fn coding_rate(n: f64, w: f64, gamma: f64, cfg: &SystemConfig) -> f64 {
    debug_assert!(n >= 1.0 && w >= 0.0 && gamma > 0.0);
    let curve = RateCurve::new(cfg).expect("validated error_prob");
    (w * gamma).ln_1p() * LOG2_E - curve.dispersion_penalty(n)
}

/// `g(n)` and its analytic derivative `g'(n)`.
pub fn g_of_n(n: f64, cfg: &SystemConfig) -> Result<(f64, f64)> {
    if !(n >= 1.0) {
        return Err(AoiError::Domain(format!("slot count must be >= 1, got {n}")));
    }
    let curve = RateCurve::new(cfg)?;
    Ok((curve.g(n), curve.g_prime(n)))
}

/// Smallest power that delivers the packet in `n` slots at SNR `gamma`.
pub fn min_power(n: f64, gamma: f64, cfg: &SystemConfig) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(AoiError::Domain(format!("slot count must be >= 1, got {n}")));
    }
    if !(gamma > 0.0) {
        return Err(AoiError::Domain(format!("SNR must be positive, got {gamma}")));
    }
    Ok(RateCurve::new(cfg)?.unit_power(n)? / gamma)
}

/// Average transmit power `sum_k p_k w_k`.
pub fn policy_avg_power(policy: &SamplingPolicy, ch: &ChannelModel) -> Result<f64> {
    check_len("powers", policy.powers.len(), ch.len())?;
    Ok(policy.powers.iter().zip(ch.probs()).map(|(w, p)| w * p).sum())
}
