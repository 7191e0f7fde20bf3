//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::{Duration, Instant};

use aoi_core::cli::{log_grid, ConfigFile};
use aoi_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup() -> (ChannelModel, SystemConfig) {
    let file = ConfigFile::reference();
    (file.channel().unwrap(), file.system().unwrap())
}

/// 20 log-spaced exponents with θT from 1e-3 to 10.
fn theta_grid(cfg: &SystemConfig) -> Vec<f64> {
    let t = cfg.slot_duration;
    log_grid(1e-3 / t, 10.0 / t, 20).unwrap()
}

/// Random slots in `[1, n_max]`, priced at minimal power and kept only when
/// they meet the budget.
fn random_feasible_policies(ch: &ChannelModel, cfg: &SystemConfig, count: usize, seed: u64) -> Vec<SamplingPolicy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let slots: Vec<f64> = (0..ch.len()).map(|_| rng.gen_range(1.0..=cfg.n_max())).collect();
        let p = SamplingPolicy::with_min_power(slots, ch, cfg).unwrap();
        if policy_avg_power(&p, ch).unwrap() <= cfg.avg_power {
            out.push(p);
        }
    }
    out
}

type Check = fn() -> Verdict;

struct Verdict {
    pass: bool,
    detail: String,
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn convergence() -> Verdict {
    let (ch, cfg) = setup();
    let start = Instant::now();
    let r = solve_small_theta(&ch, &cfg).unwrap();
    let elapsed = start.elapsed();
    let trace = &r.objective_trace;
    let fixed = *trace.last().unwrap();
    let first_within = |tol: f64| trace.iter().position(|v| ((v - fixed) / fixed).abs() <= tol).unwrap();
    let (tight, loose) = (first_within(1e-6), first_within(1e-2));
    Verdict {
        pass: tight <= 10 && loose <= 5 && within(elapsed, 1.0),
        detail: format!(
            "1e-6 after {tight} iterations, 1% after {loose}, {} total, {:.3}s",
            r.iterations,
            elapsed.as_secs_f64()
        ),
    }
}

fn ordering() -> Verdict {
    let (ch, cfg) = setup();
    let start = Instant::now();
    let n_max = cfg.n_max();
    let mut pass = true;
    let mut notes = Vec::new();
    for theta_t in [0.01, 0.1, 1.0] {
        let r = select_policy(&ch, &cfg, theta_t / cfg.slot_duration).unwrap();
        let s = &r.continuous_policy.slots;
        let ok = s.windows(2).all(|w| w[0] >= w[1] && (w[0] >= n_max || w[0] > w[1]));
        pass &= ok;
        if !ok {
            notes.push(format!("θT={theta_t}: {s:?}"));
        }
    }
    let r = select_policy(&ch, &cfg, 1e3 / cfg.slot_duration).unwrap();
    let spread = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
    let (cont, int) = (spread(&r.continuous_policy.slots), spread(&r.policy.slots));
    pass &= cont <= 1e-3 * n_max && int <= 1.0;
    let elapsed = start.elapsed();
    pass &= within(elapsed, 5.0);
    notes.push(format!(
        "θT=1000 spread {cont:.2e} continuous, {int} integer, {:.3}s",
        elapsed.as_secs_f64()
    ));
    Verdict {
        pass,
        detail: notes.join("; "),
    }
}

fn oracle_gap() -> Verdict {
    let (ch, cfg) = setup();
    let start = Instant::now();
    let mut worst: (f64, f64) = (0.0, 0.0);
    let mut enumerated_ok = true;
    let mut dominated = true;
    for theta in theta_grid(&cfg) {
        let ours = select_policy(&ch, &cfg, theta).unwrap().achieved.stat_aoi;
        let best = exhaustive_oracle(&ch, &cfg, theta).unwrap();
        enumerated_ok &= best.iterations <= 3125;
        dominated &= best.achieved.stat_aoi <= ours * (1.0 + 1e-12);
        let gap = (ours - best.achieved.stat_aoi) / best.achieved.stat_aoi;
        if gap > worst.0 {
            worst = (gap, theta * cfg.slot_duration);
        }
    }
    let elapsed = start.elapsed();
    Verdict {
        pass: worst.0 <= 0.05 && enumerated_ok && dominated && within(elapsed, 30.0),
        detail: format!(
            "largest gap {:.3}% at θT={:.3e}, {:.3}s",
            100.0 * worst.0,
            worst.1,
            elapsed.as_secs_f64()
        ),
    }
}

fn baseline_dominance() -> Verdict {
    let (ch, cfg) = setup();
    let start = Instant::now();
    let avg_base = baseline_avg_peak(&ch, &cfg).unwrap();
    let max_base = baseline_max_peak(&ch, &cfg).unwrap();
    let mut never_worse = true;
    let mut strict_mid = false;
    let mut best_gain: f64 = 0.0;
    for theta in theta_grid(&cfg) {
        let ours = select_policy(&ch, &cfg, theta).unwrap().achieved.stat_aoi;
        let a = statistical_aoi(&avg_base, &ch, &cfg, theta).unwrap();
        let m = statistical_aoi(&max_base, &ch, &cfg, theta).unwrap();
        never_worse &= ours <= a && ours <= m;
        let theta_t = theta * cfg.slot_duration;
        if (0.01..=1.0).contains(&theta_t) && ours < a && ours < m {
            strict_mid = true;
            best_gain = best_gain.max((a.min(m) - ours) / a.min(m));
        }
    }
    let elapsed = start.elapsed();
    Verdict {
        pass: never_worse && strict_mid && within(elapsed, 10.0),
        detail: format!(
            "never worse: {never_worse}, largest mid-band gain over the better baseline {:.2}%, {:.3}s",
            100.0 * best_gain,
            elapsed.as_secs_f64()
        ),
    }
}

fn approximation_bound() -> Verdict {
    let (ch, cfg) = setup();
    let start = Instant::now();
    let policies = random_feasible_policies(&ch, &cfg, 1000, 5);
    let mut violations = 0;
    let mut tightest: f64 = f64::INFINITY;
    for theta_t in [0.01, 0.1, 1.0, 10.0] {
        let theta = theta_t / cfg.slot_duration;
        let bound = approx_error_bound(&cfg, theta).unwrap();
        for p in &policies {
            let exact = statistical_aoi(p, &ch, &cfg, theta).unwrap();
            let approx = stat_aoi_large_approx(p, &ch, &cfg, theta).unwrap();
            let gap = (approx - exact).abs();
            tightest = tightest.min(bound - gap);
            if gap > bound + 1e-12 {
                violations += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Verdict {
        pass: violations == 0 && within(elapsed, 5.0),
        detail: format!(
            "{violations} violations in 4000 cases, smallest slack {tightest:.3e}s, {:.3}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn limit_identities() -> Verdict {
    let (ch, cfg) = setup();
    let start = Instant::now();
    let (mut low, mut high): (f64, f64) = (0.0, 0.0);
    for p in random_feasible_policies(&ch, &cfg, 100, 6) {
        let avg = avg_peak_aoi(&p, &ch, &cfg).unwrap();
        let max = max_peak_aoi(&p, &cfg);
        low = low.max(((statistical_aoi(&p, &ch, &cfg, 1e-6).unwrap() - avg) / avg).abs());
        high = high.max(((statistical_aoi(&p, &ch, &cfg, 1e7).unwrap() - max) / max).abs());
    }
    let elapsed = start.elapsed();
    Verdict {
        pass: low <= 1e-5 && high <= 1e-3 && within(elapsed, 1.0),
        detail: format!(
            "worst relative error {low:.2e} at θ=1e-6, {high:.2e} at θ=1e7, {:.3}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn simulator() -> Verdict {
    let (ch, cfg) = setup();
    let start = Instant::now();
    let t = cfg.slot_duration;
    let theta = 0.1 / t;
    let policy = select_policy(&ch, &cfg, theta).unwrap().policy;
    let trace = simulate(&policy, &ch, &cfg, 1_000_000, 0).unwrap();
    let stat = statistical_aoi(&policy, &ch, &cfg, theta).unwrap();
    let sigmas: Vec<f64> = [1.0, 2.0, 5.0, 10.0].iter().map(|s| s * t).collect();
    let levels: Vec<f64> = sigmas.iter().map(|s| stat + s).collect();
    let stats = empirical_stats(&trace, &[theta], &levels).unwrap();

    let mass = peak_age_pmf(&policy, &ch, &cfg).unwrap().mass;
    let tv: f64 = 0.5
        * stats
            .state_freq
            .iter()
            .zip(&mass)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    let n = stats.samples as f64;
    let tails_ok = stats.tail_freq.iter().zip(&sigmas).all(|(&(_, freq), &sigma)| {
        let slack = 3.0 * (freq * (1.0 - freq) / n).sqrt();
        freq <= chernoff_tail_bound(stat, theta, sigma).unwrap() + slack
    });
    let avg = avg_peak_aoi(&policy, &ch, &cfg).unwrap();
    let mean_err = ((stats.mean_peak - avg) / avg).abs();
    let elapsed = start.elapsed();
    Verdict {
        pass: tv <= 0.01 && tails_ok && mean_err <= 0.01 && within(elapsed, 60.0),
        detail: format!(
            "TV {tv:.4} (limit 0.01), Chernoff {}, mean peak off by {:.3}%, {:.3}s",
            if tails_ok { "holds" } else { "violated" },
            100.0 * mean_err,
            elapsed.as_secs_f64()
        ),
    }
}

fn main() {
    // Respect `cargo test -- --list` and similar harness probes.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, Check); 7] = [
        ("convergence of the small-exponent solver", convergence),
        ("interval ordering and flattening", ordering),
        ("gap to exhaustive search", oracle_gap),
        ("dominance over both baselines", baseline_dominance),
        ("large-exponent approximation bound", approximation_bound),
        ("limits at small and large exponents", limit_identities),
        ("Monte-Carlo validation", simulator),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} {name}: {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
