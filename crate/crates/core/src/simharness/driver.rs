use serde::{Deserialize, Serialize};

use crate::blockscan::{Action, Phase, ScanConfig, ScanState};
use crate::geometry::{Point, Region};
use crate::scanmetrics::TrialOutcome;

/// Full highlight cycles a phase may sit without a blink before the target
/// counts as missed. Also the number of cancelled attempts allowed.
pub const DEFAULT_RETRY_CYCLES: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub task_id: u32,
    pub target: Region,
    pub cfg: ScanConfig,
    pub retry_cycles: u32,
}

impl TrialSpec {
    pub fn new(task_id: u32, target: Region, cfg: ScanConfig) -> Self {
        Self {
            task_id,
            target,
            cfg,
            retry_cycles: DEFAULT_RETRY_CYCLES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    /// Clicked inside the target.
    Tp,
    /// A selection completed somewhere else or with the wrong action.
    Fp,
    /// Nothing was selected before the retry budget ran out.
    Fn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub end_t: u64,
    pub action: Option<Action>,
    pub point: Option<Point>,
}

/// A scored trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub task_id: u32,
    pub start_t: u64,
    pub verdict: Verdict,
}

impl TrialResult {
    pub fn selection_time_ms(&self) -> u64 {
        self.verdict.end_t - self.start_t
    }

    pub fn outcome(&self) -> TrialOutcome<f64> {
        let secs = self.selection_time_ms() as f64 / 1000.0;
        match self.verdict.kind {
            VerdictKind::Tp => TrialOutcome::new(1, 0, 0, secs),
            VerdictKind::Fp => TrialOutcome::new(0, 1, 0, secs),
            VerdictKind::Fn => TrialOutcome::new(0, 0, 1, secs),
        }
    }
}

/// Feeds timestamped blinks into the automaton for one target and scores
/// the result. Shared by simulated users, trace replay and live sessions so
/// that all three score identically.
#[derive(Debug, Clone)]
pub struct TrialDriver {
    cfg: ScanConfig,
    target: Region,
    task_id: u32,
    retry_cycles: u32,
    state: ScanState,
    start_t: u64,
    now: u64,
    last_activity: u64,
    restarts: u32,
    verdict: Option<Verdict>,
}

impl TrialDriver {
    pub fn new(spec: &TrialSpec, start_t: u64) -> Self {
        Self {
            state: ScanState::initial(&spec.cfg),
            cfg: spec.cfg.clone(),
            target: spec.target,
            task_id: spec.task_id,
            retry_cycles: spec.retry_cycles,
            start_t,
            now: start_t,
            last_activity: start_t,
            restarts: 0,
            verdict: None,
        }
    }

    pub fn state(&self) -> &ScanState {
        &self.state
    }

    pub fn cfg(&self) -> &ScanConfig {
        &self.cfg
    }

    pub fn target(&self) -> Region {
        self.target
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn verdict(&self) -> Option<Verdict> {
        self.verdict
    }

    pub fn result(&self) -> Option<TrialResult> {
        self.verdict.map(|verdict| TrialResult {
            task_id: self.task_id,
            start_t: self.start_t,
            verdict,
        })
    }

    /// Instant at which the current phase runs out of retry cycles.
    pub fn deadline(&self) -> u64 {
        let items = self.state.items_in_phase(&self.cfg).max(1) as u64;
        self.last_activity + u64::from(self.retry_cycles) * items * self.cfg.scan_interval_ms
    }

    /// Runs the automaton forward to `t`, reporting each highlight boundary.
    /// Times at or before `now` are a no-op.
    pub fn advance_to(
        &mut self,
        t: u64,
        on_change: &mut dyn FnMut(&ScanState, u64),
    ) -> Option<Verdict> {
        while self.verdict.is_none() && t > self.now {
            let deadline = self.deadline();
            let boundary = self.now + self.state.until_advance(&self.cfg);
            let next = boundary.min(deadline);
            if next > t {
                self.state = self.state.tick(&self.cfg, t - self.now);
                self.now = t;
                break;
            }
            self.state = self.state.tick(&self.cfg, next - self.now);
            self.now = next;
            if next == deadline {
                self.verdict = Some(Verdict {
                    kind: VerdictKind::Fn,
                    end_t: next,
                    action: None,
                    point: None,
                });
            } else {
                on_change(&self.state, next);
            }
        }
        self.verdict
    }

    /// Applies a blink at `t`. A blink arriving after the trial was decided
    /// (including by a timeout reached on the way to `t`) is ignored.
    pub fn blink_at(
        &mut self,
        t: u64,
        on_change: &mut dyn FnMut(&ScanState, u64),
    ) -> Option<Verdict> {
        if self.advance_to(t, on_change).is_some() {
            return self.verdict;
        }
        let next = match self.state.blink(&self.cfg) {
            Ok(s) => s,
            Err(_) => return self.verdict,
        };
        self.state = next;
        self.last_activity = self.now;
        if let Phase::Done { action, point } = self.state.phase {
            let kind = match action {
                Action::Click if self.target.contains(point) => Some(VerdictKind::Tp),
                Action::Cancel if self.restarts < self.retry_cycles => None,
                Action::Cancel => Some(VerdictKind::Fn),
                _ => Some(VerdictKind::Fp),
            };
            match kind {
                Some(kind) => {
                    self.verdict = Some(Verdict {
                        kind,
                        end_t: self.now,
                        action: Some(action),
                        point: Some(point),
                    });
                }
                None => {
                    self.restarts += 1;
                    self.state = ScanState::initial(&self.cfg);
                }
            }
        }
        on_change(&self.state, self.now);
        self.verdict
    }

    /// Lets time run until the trial is decided (at the latest by timeout).
    pub fn run_out(&mut self, on_change: &mut dyn FnMut(&ScanState, u64)) -> Verdict {
        loop {
            let deadline = self.deadline();
            if let Some(v) = self.advance_to(deadline, on_change) {
                return v;
            }
        }
    }
}
