use std::io::Write;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blockscan::ScanConfig;
use crate::geometry::Region;
use crate::scanmetrics::{summarize, MetricsError, MetricsSummary, TrialOutcome};
use crate::simharness::driver::TrialSpec;
use crate::simharness::user::{run_trial, UserModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub interval_ms: u64,
    pub n: u32,
    pub counts: TrialOutcome<f64>,
    pub summary: MetricsSummary<f64>,
}

/// Seed for trial `index` of a run seeded with `seed`: word `index` of a
/// ChaCha8 stream keyed on `seed`, so distinct run seeds never share trials.
pub fn trial_seed(seed: u64, index: u32) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * u128::from(index));
    rng.next_u64()
}

/// Target for trial `index`: between one and four final-block sizes per axis,
/// placed uniformly on screen. Independent of the scan interval, so every
/// point of a sweep sees the same targets.
pub fn target_for_trial(cfg: &ScanConfig, seed: u64, index: u32) -> Region {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, index));
    rng.set_stream(1);
    let div = 1u64 << cfg.max_depth.min(31);
    let block = |len: u32| (u64::from(len).div_ceil(div) as u32).max(1);
    let (bw, bh) = (block(cfg.screen.w), block(cfg.screen.h));
    let w = rng.random_range(bw..=(4 * bw).min(cfg.screen.w));
    let h = rng.random_range(bh..=(4 * bh).min(cfg.screen.h));
    let x = cfg.screen.x + rng.random_range(0..=cfg.screen.w - w);
    let y = cfg.screen.y + rng.random_range(0..=cfg.screen.h - h);
    Region::new(x, y, w, h)
}

/// Runs `n_trials` independent trials per scan interval and pools their
/// counts. Trial `i` uses [`trial_seed`] at every interval.
pub fn sweep(
    base: &ScanConfig,
    intervals: &[u64],
    user: &UserModel,
    n_trials: u32,
) -> Result<Vec<SweepRow>, MetricsError> {
    intervals
        .iter()
        .map(|&interval_ms| {
            let cfg = base.clone().with_interval(interval_ms);
            let outcomes: Vec<TrialOutcome<f64>> = (0..n_trials)
                .into_par_iter()
                .map(|i| {
                    let target = target_for_trial(&cfg, user.rng_seed, i);
                    let spec = TrialSpec::new(i % 10 + 1, target, cfg.clone());
                    run_trial(&spec, &user.with_seed(trial_seed(user.rng_seed, i)))
                        .0
                        .outcome()
                })
                .collect();
            let counts = TrialOutcome::pooled(&outcomes);
            let summary = summarize(&counts, n_trials)?;
            Ok(SweepRow {
                interval_ms,
                n: n_trials,
                counts,
                summary,
            })
        })
        .collect()
}

/// Writes `interval_ms,n,sa,far,sr,avg_time_s` rows.
pub fn write_csv(rows: &[SweepRow], out: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["interval_ms", "n", "sa", "far", "sr", "avg_time_s"])?;
    for r in rows {
        let s = &r.summary;
        w.write_record([
            r.interval_ms.to_string(),
            r.n.to_string(),
            format!("{:.4}", s.sa_pct),
            format!("{:.4}", s.far_pct),
            format!("{:.4}", s.sr_pct),
            format!("{:.4}", s.avg_selection_time_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}
