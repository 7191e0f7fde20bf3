//! Monte-Carlo generator of the peak-age process.
//!
//! Time is counted in slots. The channel holds one state for a coherence
//! block of `coherence_slots` slots, drawn i.i.d. from the state law.
//! Packets go out back to back; a transmission starting in state `k` lasts
//! `n_k` slots even if it runs past the block boundary, and the following
//! transmission uses whatever state is current when it starts. Each
//! delivery records the peak `(n_prev + n_cur)·T`.

use std::io::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AoiError, Result};
use crate::model::{check_len, ChannelModel, SamplingPolicy, SystemConfig};
use crate::par::Execution;
use crate::table::{fmt_f64, Table};

/// Generator used for every trace.
pub const RNG_NAME: &str = "ChaCha8";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    /// Peak age of each delivered packet, in seconds.
    pub peaks: Vec<f64>,
    /// 0-based channel state in which each packet was sent.
    pub states: Vec<usize>,
    pub seed: u64,
    pub packets: usize,
    pub num_states: usize,
    /// Channel time spent in each state up to the last delivery, in slots.
    pub state_slots: Vec<u64>,
    pub rng: String,
}

/// Sample estimates over a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalStats {
    pub state_freq: Vec<f64>,
    pub mean_peak: f64,
    /// `(θ, (1/θ) ln mean(exp(θA)))`
    pub lmgf_at: Vec<(f64, f64)>,
    /// `(threshold, fraction of peaks >= threshold)`
    pub tail_freq: Vec<(f64, f64)>,
    /// Fraction of channel time spent in each state.
    pub time_freq: Vec<f64>,
    pub samples: usize,
}

fn integer_slots(policy: &SamplingPolicy, cfg: &SystemConfig) -> Result<Vec<u64>> {
    policy
        .slots
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            if n.fract() != 0.0 || n < 1.0 || n > cfg.n_max() {
                Err(AoiError::Domain(format!(
                    "simulation needs integer slots in [1, {}], slots[{k}] = {n}",
                    cfg.max_slots
                )))
            } else {
                Ok(n as u64)
            }
        })
        .collect()
}

/// Runs the renewal process until `packets` peaks are recorded.
/// Deterministic in `seed`.
pub fn simulate(
    policy: &SamplingPolicy,
    ch: &ChannelModel,
    cfg: &SystemConfig,
    packets: usize,
    seed: u64,
) -> Result<SimTrace> {
    cfg.validate()?;
    check_len("slots", policy.slots.len(), ch.len())?;
    if packets == 0 {
        return Err(AoiError::Domain("packets must be at least 1".into()));
    }
    let slots = integer_slots(policy, cfg)?;
    let law = WeightedIndex::new(ch.probs()).map_err(|e| AoiError::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = cfg.coherence_slots;
    let t_slot = cfg.slot_duration;

    let mut state_slots = vec![0u64; ch.len()];
    let mut state = law.sample(&mut rng);
    let mut block_end = block;
    // The first transmission only opens the process; its peak is not recorded.
    let mut prev = slots[state];
    let mut now = prev;

    let mut peaks = Vec::with_capacity(packets);
    let mut states = Vec::with_capacity(packets);
    while peaks.len() < packets {
        while now >= block_end {
            state_slots[state] += block;
            state = law.sample(&mut rng);
            block_end += block;
        }
        let n = slots[state];
        peaks.push((prev + n) as f64 * t_slot);
        states.push(state);
        now += n;
        prev = n;
    }
    state_slots[state] += now.min(block_end) - (block_end - block);
    Ok(SimTrace {
        peaks,
        states,
        seed,
        packets,
        num_states: ch.len(),
        state_slots,
        rng: RNG_NAME.to_string(),
    })
}

/// One trace per seed, in seed order.
pub fn simulate_many(
    policy: &SamplingPolicy,
    ch: &ChannelModel,
    cfg: &SystemConfig,
    packets: usize,
    seeds: &[u64],
    exec: Execution,
) -> Result<Vec<SimTrace>> {
    exec.map(seeds, |&s| simulate(policy, ch, cfg, packets, s))
        .into_iter()
        .collect()
}

/// Running sums from which [`EmpiricalStats`] are formed; merging is exact
/// for counts and max-shifted for the exponential sums.
#[derive(Debug, Clone)]
struct Accumulator {
    count: usize,
    state_counts: Vec<usize>,
    state_slots: Vec<u64>,
    peak_sum: f64,
    thetas: Vec<f64>,
    /// Per θ: (shift, Σ exp(θA - shift))
    exp_sums: Vec<(f64, f64)>,
    thresholds: Vec<f64>,
    exceed: Vec<usize>,
}

impl Accumulator {
    fn new(num_states: usize, thetas: &[f64], thresholds: &[f64]) -> Self {
        Self {
            count: 0,
            state_counts: vec![0; num_states],
            state_slots: vec![0; num_states],
            peak_sum: 0.0,
            thetas: thetas.to_vec(),
            exp_sums: vec![(f64::NEG_INFINITY, 0.0); thetas.len()],
            thresholds: thresholds.to_vec(),
            exceed: vec![0; thresholds.len()],
        }
    }

    fn add_trace(&mut self, trace: &SimTrace) {
        self.count += trace.peaks.len();
        for &s in &trace.states {
            self.state_counts[s] += 1;
        }
        for (acc, &b) in self.state_slots.iter_mut().zip(&trace.state_slots) {
            *acc += b;
        }
        self.peak_sum += trace.peaks.iter().sum::<f64>();
        for (i, &theta) in self.thetas.iter().enumerate() {
            let shift = trace.peaks.iter().fold(f64::NEG_INFINITY, |m, &a| m.max(theta * a));
            let sum = trace.peaks.iter().map(|&a| (theta * a - shift).exp()).sum();
            self.exp_sums[i] = merge_exp_sum(self.exp_sums[i], (shift, sum));
        }
        for (i, &th) in self.thresholds.iter().enumerate() {
            self.exceed[i] += trace.peaks.iter().filter(|&&a| a >= th).count();
        }
    }

    fn finish(&self) -> EmpiricalStats {
        let n = self.count as f64;
        let elapsed = self.state_slots.iter().sum::<u64>().max(1) as f64;
        EmpiricalStats {
            time_freq: self.state_slots.iter().map(|&b| b as f64 / elapsed).collect(),
            state_freq: self.state_counts.iter().map(|&c| c as f64 / n).collect(),
            mean_peak: self.peak_sum / n,
            lmgf_at: self
                .thetas
                .iter()
                .zip(&self.exp_sums)
                .map(|(&theta, &(shift, sum))| (theta, (shift + (sum / n).ln()) / theta))
                .collect(),
            tail_freq: self
                .thresholds
                .iter()
                .zip(&self.exceed)
                .map(|(&th, &c)| (th, c as f64 / n))
                .collect(),
            samples: self.count,
        }
    }
}

fn merge_exp_sum(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    if a.1 == 0.0 {
        return b;
    }
    if b.1 == 0.0 {
        return a;
    }
    let shift = a.0.max(b.0);
    (shift, a.1 * (a.0 - shift).exp() + b.1 * (b.0 - shift).exp())
}

fn check_stats_args(thetas: &[f64]) -> Result<()> {
    if let Some(t) = thetas.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
        return Err(AoiError::Domain(format!("empirical LMGF needs theta > 0, got {t}")));
    }
    Ok(())
}

/// State frequencies, mean peak, empirical normalized LMGF per θ and
/// exceedance fraction per threshold.
pub fn empirical_stats(trace: &SimTrace, thetas: &[f64], thresholds: &[f64]) -> Result<EmpiricalStats> {
    pooled_stats(std::slice::from_ref(trace), thetas, thresholds)
}

/// Statistics of several traces taken together.
pub fn pooled_stats(traces: &[SimTrace], thetas: &[f64], thresholds: &[f64]) -> Result<EmpiricalStats> {
    check_stats_args(thetas)?;
    let first = traces
        .iter()
        .find(|t| !t.peaks.is_empty())
        .ok_or_else(|| AoiError::Domain("empirical statistics need a nonempty trace".into()))?;
    let mut acc = Accumulator::new(first.num_states, thetas, thresholds);
    for t in traces {
        if t.num_states != first.num_states {
            return Err(AoiError::Shape {
                what: "trace states",
                got: t.num_states,
                expected: first.num_states,
            });
        }
        acc.add_trace(t);
    }
    Ok(acc.finish())
}

/// Writes `peak_seconds,state_index` rows under a metadata line.
pub fn write_trace<W: Write>(trace: &SimTrace, config_hash: &str, w: W) -> Result<()> {
    let mut table = Table::new(["peak_seconds", "state_index"]);
    table
        .meta("seed", trace.seed)
        .meta("packets", trace.packets)
        .meta("rng", &trace.rng)
        .meta("config_hash", config_hash);
    for (a, s) in trace.peaks.iter().zip(&trace.states) {
        table.push(vec![fmt_f64(*a), s.to_string()]);
    }
    table.write_to(w)?;
    Ok(())
}
