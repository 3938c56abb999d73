//! The session event loop core.
//!
//! [`Engine`] owns the automaton for the current task and turns a totally
//! ordered stream of inputs (blinks, samples, clock advances) into outbound
//! messages. It never reads a clock: time only moves when an input says so.

use crate::blinksense::{BlinkDetector, BlinkSenseError, SensorSample, SignalThresholds};
use crate::blockscan::ScanState;
use crate::scanmetrics::{summarize, TrialOutcome};
use crate::session::messages::{
    Flow, MessageBody, MetricsReport, SessionControl, SessionMessage, StateUpdate, TargetSet,
    TaskLogEntry,
};
use crate::simharness::{TrialDriver, TrialResult, TrialSpec, VerdictKind};

pub struct Engine {
    specs: Vec<TrialSpec>,
    next_task: usize,
    driver: Option<TrialDriver>,
    detector: BlinkDetector,
    now: u64,
    seq: u64,
    results: Vec<TrialResult>,
    outbox: Vec<SessionMessage>,
}

fn push(outbox: &mut Vec<SessionMessage>, seq: &mut u64, body: MessageBody) {
    *seq += 1;
    outbox.push(SessionMessage {
        dir: Flow::EngineToClient,
        seq: *seq,
        body,
    });
}

fn state_update(driver: &TrialDriver, state: &ScanState, t_ms: u64, task_id: u32) -> MessageBody {
    MessageBody::StateUpdate(StateUpdate {
        t_ms,
        task_id: Some(task_id),
        screen: driver.cfg().screen,
        target: Some(driver.target()),
        state: state.clone(),
        highlight: state.highlight(driver.cfg()),
    })
}

impl Engine {
    pub fn new(specs: Vec<TrialSpec>, thresholds: SignalThresholds) -> Self {
        let mut engine = Self {
            specs,
            next_task: 0,
            driver: None,
            detector: BlinkDetector::new(thresholds),
            now: 0,
            seq: 0,
            results: Vec::new(),
            outbox: Vec::new(),
        };
        engine.start_next(0);
        engine
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn is_finished(&self) -> bool {
        self.driver.is_none()
    }

    pub fn results(&self) -> &[TrialResult] {
        &self.results
    }

    pub fn take_outbox(&mut self) -> Vec<SessionMessage> {
        std::mem::take(&mut self.outbox)
    }

    fn start_next(&mut self, t: u64) {
        self.driver = None;
        let Some(spec) = self.specs.get(self.next_task) else {
            return;
        };
        let driver = TrialDriver::new(spec, t);
        push(
            &mut self.outbox,
            &mut self.seq,
            MessageBody::TargetSet(TargetSet {
                t_ms: t,
                task_id: spec.task_id,
                index: self.next_task,
                total: self.specs.len(),
                target: spec.target,
            }),
        );
        let update = state_update(&driver, driver.state(), t, spec.task_id);
        push(&mut self.outbox, &mut self.seq, update);
        self.next_task += 1;
        self.driver = Some(driver);
    }

    /// Records a decided trial and moves on to the next task.
    fn settle(&mut self) {
        let Some(result) = self.driver.as_ref().and_then(TrialDriver::result) else {
            return;
        };
        let v = result.verdict;
        push(
            &mut self.outbox,
            &mut self.seq,
            MessageBody::SessionControl(SessionControl::TrialDone {
                t_ms: v.end_t,
                task_id: result.task_id,
                verdict: v.kind,
                point: v.point,
            }),
        );
        self.results.push(result);
        self.start_next(v.end_t);
    }

    /// Lets virtual time run to `t`, closing trials that time out on the way.
    pub fn advance_to(&mut self, t: u64) {
        let t = match self.detector.pending_onset() {
            Some(onset) => t.min(onset),
            None => t,
        };
        while let Some(driver) = self.driver.as_mut() {
            let task_id = self.specs[self.next_task - 1].task_id;
            let (outbox, seq) = (&mut self.outbox, &mut self.seq);
            let cfg = driver.cfg().clone();
            let target = driver.target();
            let decided = driver
                .advance_to(t, &mut |st, at| {
                    push(
                        outbox,
                        seq,
                        MessageBody::StateUpdate(StateUpdate {
                            t_ms: at,
                            task_id: Some(task_id),
                            screen: cfg.screen,
                            target: Some(target),
                            state: st.clone(),
                            highlight: st.highlight(&cfg),
                        }),
                    )
                })
                .is_some();
            if !decided {
                break;
            }
            self.settle();
        }
        self.now = self.now.max(t);
    }

    pub fn blink(&mut self, t: u64) {
        if t < self.now {
            self.reject(t, "blink is older than the session clock");
            return;
        }
        self.advance_to(t);
        let Some(driver) = self.driver.as_mut() else {
            self.reject(t, "no task is active");
            return;
        };
        let task_id = self.specs[self.next_task - 1].task_id;
        let cfg = driver.cfg().clone();
        let target = driver.target();
        let (outbox, seq) = (&mut self.outbox, &mut self.seq);
        driver.blink_at(t, &mut |st, at| {
            push(
                outbox,
                seq,
                MessageBody::StateUpdate(StateUpdate {
                    t_ms: at,
                    task_id: Some(task_id),
                    screen: cfg.screen,
                    target: Some(target),
                    state: st.clone(),
                    highlight: st.highlight(&cfg),
                }),
            )
        });
        self.settle();
    }

    /// Feeds one sensor sample. Automaton time is held at the onset of any
    /// open candidate run so a confirmed blink lands at its falling edge.
    pub fn sample(&mut self, s: SensorSample) -> Result<(), BlinkSenseError> {
        let event = self.detector.push(s)?;
        if let Some(e) = event {
            self.blink(e.onset_t);
        }
        self.advance_to(s.t);
        Ok(())
    }

    /// Closes a candidate run left open at the end of a sample stream.
    pub fn finish_samples(&mut self) {
        if let Some(e) = self.detector.finish() {
            self.blink(e.onset_t);
        }
    }

    /// Runs every remaining task out to its verdict.
    pub fn drain(&mut self) {
        while let Some(driver) = self.driver.as_ref() {
            let deadline = driver.deadline();
            self.advance_to(deadline);
        }
    }

    fn reject(&mut self, t_ms: u64, reason: &str) {
        push(
            &mut self.outbox,
            &mut self.seq,
            MessageBody::SessionControl(SessionControl::Rejected {
                t_ms,
                reason: reason.to_string(),
            }),
        );
    }

    pub fn reject_input(&mut self, reason: &str) {
        let now = self.now;
        self.reject(now, reason);
    }

    pub fn report(&self) -> MetricsReport {
        let outcomes: Vec<TrialOutcome<f64>> =
            self.results.iter().map(TrialResult::outcome).collect();
        let counts = TrialOutcome::pooled(&outcomes);
        let unscored_from = self.results.len();
        MetricsReport {
            partial: unscored_from < self.specs.len(),
            counts,
            summary: summarize(&counts, self.results.len() as u32).ok(),
            tasks: self
                .results
                .iter()
                .map(|r| TaskLogEntry {
                    task_id: r.task_id,
                    completed: r.verdict.kind == VerdictKind::Tp,
                    time_s: r.selection_time_ms() as f64 / 1000.0,
                    wrong_selection: r.verdict.kind == VerdictKind::Fp,
                    verdict: r.verdict.kind,
                })
                .collect(),
            unscored: self.specs[unscored_from..]
                .iter()
                .map(|s| s.task_id)
                .collect(),
        }
    }

    /// Queues the final report and the end marker.
    pub fn finalize(&mut self) -> MetricsReport {
        let report = self.report();
        push(
            &mut self.outbox,
            &mut self.seq,
            MessageBody::MetricsReport(report.clone()),
        );
        push(
            &mut self.outbox,
            &mut self.seq,
            MessageBody::SessionControl(SessionControl::Ended),
        );
        report
    }
}
