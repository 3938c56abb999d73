use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::blockscan::{intended_item, should_stop, Action, Phase, ScanState};
use crate::simharness::driver::{TrialDriver, TrialResult, TrialSpec};
use crate::simharness::trace::{config_hash, BlinkTrace, RecordKind, TraceRecord, TraceTask};

/// Parametric stand-in for a human operator.
///
/// For every highlighted item the model draws the same five random numbers,
/// whatever the scan interval, so runs that differ only in interval see
/// matching random streams until their paths diverge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserModel {
    pub reaction_mean_ms: f64,
    pub reaction_sd_ms: f64,
    /// Chance of letting the intended item pass without blinking.
    pub miss_prob: f64,
    /// Chance of blinking while a wrong item is highlighted.
    pub premature_prob: f64,
    /// Rate of short reflexive dips; only affects synthesized sensor data.
    pub involuntary_rate_hz: f64,
    pub rng_seed: u64,
    /// Chance of cancelling, rather than clicking, when the cursor ends up
    /// outside the target.
    pub recovery_prob: f64,
    /// Shortest physiologically possible spacing between two blinks.
    pub min_blink_gap_ms: u64,
}

impl UserModel {
    pub fn ideal(rng_seed: u64) -> Self {
        Self {
            reaction_mean_ms: 300.0,
            reaction_sd_ms: 0.0,
            miss_prob: 0.0,
            premature_prob: 0.0,
            involuntary_rate_hz: 0.0,
            rng_seed,
            recovery_prob: 1.0,
            min_blink_gap_ms: 300,
        }
    }

    /// A typical imperfect operator.
    pub fn typical(rng_seed: u64) -> Self {
        Self {
            reaction_mean_ms: 330.0,
            reaction_sd_ms: 70.0,
            miss_prob: 0.05,
            premature_prob: 0.01,
            involuntary_rate_hz: 0.2,
            rng_seed,
            recovery_prob: 0.5,
            min_blink_gap_ms: 300,
        }
    }

    pub fn with_seed(&self, rng_seed: u64) -> Self {
        Self {
            rng_seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !(prob(self.miss_prob) && prob(self.premature_prob) && prob(self.recovery_prob)) {
            return Err("probabilities must lie in [0, 1]");
        }
        if !(self.reaction_mean_ms >= 0.0
            && self.reaction_sd_ms >= 0.0
            && self.involuntary_rate_hz >= 0.0)
        {
            return Err("means, deviations and rates must be non-negative");
        }
        Ok(())
    }
}

struct Draws {
    miss: f64,
    premature: f64,
    reaction_z: f64,
    within: f64,
    recover: f64,
}

impl Draws {
    fn take(rng: &mut ChaCha8Rng) -> Self {
        Self {
            miss: rng.random(),
            premature: rng.random(),
            reaction_z: rng.sample(StandardNormal),
            within: rng.random(),
            recover: rng.random(),
        }
    }
}

fn menu_choice(state: &ScanState, spec: &TrialSpec, user: &UserModel, draws: &Draws) -> Action {
    let on_target = state.cursor.is_some_and(|c| spec.target.contains(c));
    if !on_target
        && draws.recover < user.recovery_prob
        && spec.cfg.action_index(Action::Cancel).is_some()
    {
        Action::Cancel
    } else {
        Action::Click
    }
}

/// Simulates the user working through `specs` back to back, starting at t = 0.
/// All specs must share one scan config.
pub fn run_script(specs: &[TrialSpec], user: &UserModel) -> (Vec<TrialResult>, BlinkTrace) {
    let cfg = &specs.first().expect("at least one trial").cfg;
    let retry = specs[0].retry_cycles;
    assert!(
        specs
            .iter()
            .all(|s| s.cfg == *cfg && s.retry_cycles == retry),
        "one config per script"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(user.rng_seed);
    let mut records: Vec<TraceRecord> = Vec::new();
    let mut results = Vec::with_capacity(specs.len());
    let mut start = 0u64;
    let mut last_blink: Option<u64> = None;

    for spec in specs {
        let mut driver = TrialDriver::new(spec, start);
        let mut choice: Option<Action> = None;
        while driver.verdict().is_none() {
            let state = driver.state().clone();
            let now = driver.now();
            let interval = spec.cfg.scan_interval_ms;
            let draws = Draws::take(&mut rng);

            if !matches!(state.phase, Phase::ActionMenu { .. }) {
                choice = None;
            }
            let intended = match state.phase {
                Phase::CursorMove { direction } => {
                    let cursor = state.cursor.expect("cursor set while moving");
                    should_stop(
                        cursor,
                        spec.cfg.directions[direction],
                        &state.active,
                        &spec.target,
                        &spec.cfg,
                    )
                }
                Phase::ActionMenu { highlight } => {
                    let c = *choice.get_or_insert_with(|| menu_choice(&state, spec, user, &draws));
                    intended_item(&state, &spec.cfg, &spec.target, c) == Some(highlight)
                }
                Phase::BlockScan { highlight, .. } | Phase::DirectionScan { highlight } => {
                    intended_item(&state, &spec.cfg, &spec.target, Action::Click) == Some(highlight)
                }
                Phase::Done { .. } => unreachable!("driver resets or decides on Done"),
            };
            let offset = if intended {
                (draws.miss >= user.miss_prob).then(|| {
                    (user.reaction_mean_ms + user.reaction_sd_ms * draws.reaction_z).max(0.0)
                })
            } else {
                (draws.premature < user.premature_prob).then_some(draws.within * interval as f64)
            };
            match offset {
                Some(off) => {
                    let mut t = now + off.round() as u64;
                    if let Some(prev) = last_blink {
                        t = t.max(prev + user.min_blink_gap_ms);
                    }
                    if driver
                        .advance_to(t, &mut |_, at| {
                            push_record(&mut records, at, RecordKind::Tick)
                        })
                        .is_some()
                    {
                        break;
                    }
                    push_record(&mut records, t, RecordKind::Blink);
                    last_blink = Some(t);
                    driver.blink_at(t, &mut |_, at| {
                        push_record(&mut records, at, RecordKind::Tick)
                    });
                }
                None => {
                    let until = now + state.until_advance(&spec.cfg);
                    driver.advance_to(until, &mut |_, at| {
                        push_record(&mut records, at, RecordKind::Tick)
                    });
                }
            }
        }
        let result = driver.result().expect("loop exits once decided");
        start = result.verdict.end_t;
        results.push(result);
    }

    let trace = BlinkTrace {
        cfg_hash: config_hash(cfg, retry),
        tasks: specs
            .iter()
            .map(|s| TraceTask {
                task_id: s.task_id,
                target: s.target,
            })
            .collect(),
        records,
    };
    (results, trace)
}

/// Tick annotations share timestamps with blinks; the blink wins.
fn push_record(records: &mut Vec<TraceRecord>, t_ms: u64, kind: RecordKind) {
    if let Some(last) = records.last_mut() {
        if last.t_ms == t_ms {
            if kind == RecordKind::Blink {
                last.kind = RecordKind::Blink;
            }
            return;
        }
    }
    records.push(TraceRecord { t_ms, kind });
}

pub fn run_trial(spec: &TrialSpec, user: &UserModel) -> (TrialResult, BlinkTrace) {
    let (mut results, trace) = run_script(std::slice::from_ref(spec), user);
    (results.remove(0), trace)
}
