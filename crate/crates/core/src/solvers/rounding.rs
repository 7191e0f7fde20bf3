use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{check_len, ChannelModel, RateCurve, SamplingPolicy, SystemConfig, POWER_TOL};

use super::exact_objective;

/// Outcome of rounding a relaxed policy to slot counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rounded {
    pub policy: SamplingPolicy,
    /// No floor/ceil neighbour met the power budget; `policy` is all-max.
    pub fell_back: bool,
}

/// Rounds each slot count down or up, keeping the power-feasible
/// combination with the smallest exact statistical AoI at `theta` (average
/// peak AoI below the θ → 0 threshold). Ties go to the lexicographically
/// smallest slot vector. If the relaxed slots are nonincreasing in the state
/// index, only nonincreasing combinations are considered.
///
/// The winner is then improved by single-slot decrements, steepest first,
/// while they stay feasible, keep the order and strictly lower the
/// objective. Powers are recomputed at equality.
pub fn integerize(continuous: &SamplingPolicy, ch: &ChannelModel, cfg: &SystemConfig, theta: f64) -> Result<Rounded> {
    check_len("slots", continuous.slots.len(), ch.len())?;
    let n_max = cfg.n_max();
    let curve = RateCurve::new(cfg)?;

    // Per state: sorted, deduplicated candidate slot counts with their power cost.
    let mut options: Vec<Vec<(f64, f64)>> = Vec::with_capacity(ch.len());
    for k in 0..ch.len() {
        let n = continuous.slots[k].clamp(1.0, n_max);
        let mut cands = vec![n.floor(), n.ceil()];
        cands.dedup();
        let weight = ch.probs()[k] / ch.gammas()[k];
        let opts = cands
            .into_iter()
            .map(|c| Ok((c, weight * curve.unit_power(c)?)))
            .collect::<Result<Vec<_>>>()?;
        options.push(opts);
    }

    let ordered = is_nonincreasing(&continuous.slots);
    let total: usize = options.iter().map(Vec::len).product();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut slots = vec![0.0; ch.len()];
    for code in 0..total {
        // First state most significant, so `code` order is lexicographic.
        let mut rest = code;
        let mut power = 0.0;
        for k in (0..ch.len()).rev() {
            let (n, w) = options[k][rest % options[k].len()];
            rest /= options[k].len();
            slots[k] = n;
            power += w;
        }
        if power > cfg.avg_power + POWER_TOL || (ordered && !is_nonincreasing(&slots)) {
            continue;
        }
        let value = exact_objective(&slots, ch, cfg, theta);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, slots.clone()));
        }
    }

    match best {
        Some((value, slots)) => Ok(Rounded {
            policy: SamplingPolicy::with_min_power(descend(slots, value, ordered, ch, cfg, theta, &curve)?, ch, cfg)?,
            fell_back: false,
        }),
        None => Ok(Rounded {
            policy: SamplingPolicy::uniform(n_max, ch, cfg)?,
            fell_back: true,
        }),
    }
}

fn is_nonincreasing(slots: &[f64]) -> bool {
    slots.windows(2).all(|w| w[0] >= w[1])
}

fn descend(
    mut slots: Vec<f64>,
    mut value: f64,
    ordered: bool,
    ch: &ChannelModel,
    cfg: &SystemConfig,
    theta: f64,
    curve: &RateCurve,
) -> Result<Vec<f64>> {
    loop {
        let mut step: Option<(f64, usize)> = None;
        for k in 0..slots.len() {
            if slots[k] <= 1.0 {
                continue;
            }
            let mut trial = slots.clone();
            trial[k] -= 1.0;
            if ordered && !is_nonincreasing(&trial) {
                continue;
            }
            if super::total_power(&trial, ch, curve)? > cfg.avg_power + POWER_TOL {
                continue;
            }
            let v = exact_objective(&trial, ch, cfg, theta);
            if v < value && step.is_none_or(|(b, _)| v < b) {
                step = Some((v, k));
            }
        }
        match step {
            Some((v, k)) => {
                slots[k] -= 1.0;
                value = v;
            }
            None => return Ok(slots),
        }
    }
}
