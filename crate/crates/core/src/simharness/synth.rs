use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::blinksense::SensorSample;

/// Shape of a synthesized phototransistor waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub period_ms: u64,
    pub base_level: u16,
    pub noise: u16,
    pub blink_level: u16,
    pub blink_ms: u64,
    /// Short sub-threshold dips, too brief to pass the duration gate.
    pub involuntary_rate_hz: f64,
    pub involuntary_ms: u64,
    /// Mid-band dips that never cross the blink threshold.
    pub garbage_rate_hz: f64,
    pub garbage_level: u16,
    pub garbage_ms: u64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            period_ms: 10,
            base_level: 700,
            noise: 8,
            blink_level: 200,
            blink_ms: 100,
            involuntary_rate_hz: 0.0,
            involuntary_ms: 30,
            garbage_rate_hz: 0.0,
            garbage_level: 450,
            garbage_ms: 150,
            seed: 0,
        }
    }
}

fn poisson_starts(rng: &mut ChaCha8Rng, rate_hz: f64, end_t: u64) -> Vec<u64> {
    if rate_hz <= 0.0 {
        return Vec::new();
    }
    let exp = Exp::new(rate_hz / 1000.0).expect("positive rate");
    let mut t = 0.0;
    let mut out = Vec::new();
    loop {
        t += exp.sample(rng);
        if t >= end_t as f64 {
            return out;
        }
        out.push(t.round() as u64);
    }
}

/// Renders a sample stream from `0` to `end_t` with a deliberate dip starting
/// exactly at every instant in `blink_times`. Samples fall on a regular grid
/// plus every dip edge, so a detector recovers the onsets exactly. Reflexive
/// dips are kept well clear of deliberate ones so runs never merge.
pub fn synthesize_samples(blink_times: &[u64], end_t: u64, p: &SynthParams) -> Vec<SensorSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let blinks: Vec<(u64, u64)> = blink_times.iter().map(|&t| (t, t + p.blink_ms)).collect();
    let guard = 3 * p.period_ms;
    let clear_of_blinks = |s: u64, e: u64| {
        blinks
            .iter()
            .all(|&(bs, be)| e + guard <= bs || s >= be + guard)
    };

    let mut involuntary: Vec<(u64, u64)> = Vec::new();
    for s in poisson_starts(&mut rng, p.involuntary_rate_hz, end_t) {
        let e = s + p.involuntary_ms;
        let clear_of_others = involuntary
            .iter()
            .all(|&(os, oe)| e + guard <= os || s >= oe + guard);
        if clear_of_blinks(s, e) && clear_of_others {
            involuntary.push((s, e));
        }
    }
    let garbage: Vec<(u64, u64)> = poisson_starts(&mut rng, p.garbage_rate_hz, end_t)
        .into_iter()
        .map(|s| (s, s + p.garbage_ms))
        .collect();

    let mut times: BTreeSet<u64> = (0..=end_t).step_by(p.period_ms.max(1) as usize).collect();
    for &(s, e) in blinks.iter().chain(&involuntary) {
        times.insert(s);
        times.insert(e);
    }
    let inside = |spans: &[(u64, u64)], t: u64| spans.iter().any(|&(s, e)| t >= s && t < e);
    times
        .into_iter()
        .map(|t| {
            let v = if inside(&blinks, t) || inside(&involuntary, t) {
                p.blink_level
            } else if inside(&garbage, t) {
                p.garbage_level
            } else {
                let jitter = rng.random_range(0..=2 * p.noise);
                p.base_level + jitter - p.noise
            };
            SensorSample::new(t, v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blinksense::{detect_blinks, SignalThresholds};

    #[test]
    fn onsets_survive_detection() {
        let blinks = [1000, 1733, 2500, 4001];
        let p = SynthParams {
            involuntary_rate_hz: 2.0,
            garbage_rate_hz: 1.0,
            seed: 4,
            ..Default::default()
        };
        let samples = synthesize_samples(&blinks, 6000, &p);
        let events = detect_blinks(&samples, &SignalThresholds::default()).unwrap();
        let onsets: Vec<u64> = events.iter().map(|e| e.onset_t).collect();
        assert_eq!(onsets, blinks);
        assert!(events.iter().all(|e| e.duration_ms == 100));
    }
}
