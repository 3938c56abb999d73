//! Session engine: one input source, one sequence of tasks, one report.
//!
//! A session is a pure function of its config and the ordered input it
//! receives. Wall-clock operation is a transport concern
//! ([`transport::ChannelTransport::wall_clock`]); the engine itself only sees
//! timestamps.

pub mod engine;
pub mod messages;
pub mod serve;
pub mod transport;

use std::io::Write;
use std::path::PathBuf;

use thiserror::Error;

use crate::blinksense::{BlinkSenseError, SensorSample, SignalThresholds};
use crate::blockscan::ScanConfig;
use crate::geometry::Region;
use crate::linkframe::decode_stream;
use crate::simharness::{config_hash, BlinkTrace, TrialSpec, DEFAULT_RETRY_CYCLES};

pub use engine::Engine;
pub use messages::{
    BlinkIn, Flow, MessageBody, MetricsReport, SampleIn, SessionControl, SessionMessage,
    StateUpdate, TargetSet, TaskLogEntry,
};
pub use transport::{ChannelTransport, LineTransport, MemoryTransport, Transport, TransportError};

/// Where blinks come from. Exactly one source drives a session.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    /// `BlinkIn` messages from the client.
    Client,
    /// `SampleIn` messages carrying decoded sensor frames.
    LiveSamples,
    /// A recorded trace, replayed without waiting on the client.
    Trace(BlinkTrace),
    /// A raw `.blk` capture.
    Capture(Vec<u8>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskDef {
    pub task_id: u32,
    pub target: Region,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub scan: ScanConfig,
    pub thresholds: SignalThresholds,
    pub input: InputSource,
    /// May be left empty for trace input; the trace's own tasks are used.
    pub tasks: Vec<TaskDef>,
    pub retry_cycles: u32,
    /// Per-task CSV log written when the session ends.
    pub log_path: Option<PathBuf>,
}

impl SessionConfig {
    pub fn new(scan: ScanConfig, input: InputSource, tasks: Vec<TaskDef>) -> Self {
        Self {
            scan,
            thresholds: SignalThresholds::default(),
            input,
            tasks,
            retry_cycles: DEFAULT_RETRY_CYCLES,
            log_path: None,
        }
    }

    /// Checks the config and resolves the task list.
    pub fn validate(&self) -> Result<Vec<TrialSpec>, SessionError> {
        let invalid = |m: String| SessionError::ConfigInvalid(m);
        self.scan.validate().map_err(|e| invalid(e.to_string()))?;
        self.thresholds
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        let mut tasks = self.tasks.clone();
        if let InputSource::Trace(trace) = &self.input {
            let current = config_hash(&self.scan, self.retry_cycles);
            if trace.cfg_hash != current {
                return Err(invalid(format!(
                    "trace was recorded with config {}, session uses {current}",
                    trace.cfg_hash
                )));
            }
            let traced: Vec<TaskDef> = trace
                .tasks
                .iter()
                .map(|t| TaskDef {
                    task_id: t.task_id,
                    target: t.target,
                })
                .collect();
            if tasks.is_empty() {
                tasks = traced;
            } else if tasks != traced {
                return Err(invalid("task list differs from the trace".into()));
            }
        }
        if tasks.is_empty() {
            return Err(invalid("no tasks".into()));
        }
        for t in &tasks {
            if t.target.is_empty() || !self.scan.screen.contains_region(&t.target) {
                return Err(invalid(format!(
                    "task {} target {:?} is not on screen",
                    t.task_id, t.target
                )));
            }
        }
        Ok(tasks
            .iter()
            .map(|t| TrialSpec {
                task_id: t.task_id,
                target: t.target,
                cfg: self.scan.clone(),
                retry_cycles: self.retry_cycles,
            })
            .collect())
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid session config: {0}")]
    ConfigInvalid(String),
    #[error("transport closed with {} task(s) unscored", partial.unscored.len())]
    TransportClosed { partial: Box<MetricsReport> },
    #[error(transparent)]
    Signal(#[from] BlinkSenseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn flush(engine: &mut Engine, transport: &mut dyn Transport) -> Result<(), ()> {
    for msg in engine.take_outbox() {
        transport.send(&msg).map_err(|_| ())?;
    }
    Ok(())
}

fn closed(engine: &mut Engine, transport: &mut dyn Transport) -> SessionError {
    let partial = engine.finalize();
    let _ = flush(engine, transport);
    SessionError::TransportClosed {
        partial: Box::new(partial),
    }
}

/// Drives one session to completion over `transport` and returns the final
/// report, which is also sent as the last `MetricsReport` message.
///
/// Scripted sources (trace, capture) never read from the transport. For
/// client sources, `SessionControl::Stop` ends the session early with a
/// partial report; a vanished peer yields [`SessionError::TransportClosed`].
pub fn run_session(
    cfg: &SessionConfig,
    transport: &mut dyn Transport,
) -> Result<MetricsReport, SessionError> {
    let specs = cfg.validate()?;
    let mut engine = Engine::new(specs, cfg.thresholds);
    if flush(&mut engine, transport).is_err() {
        return Err(closed(&mut engine, transport));
    }

    match &cfg.input {
        InputSource::Trace(trace) => {
            for t in trace.blink_times() {
                engine.blink(t);
                if flush(&mut engine, transport).is_err() {
                    return Err(closed(&mut engine, transport));
                }
            }
            engine.drain();
        }
        InputSource::Capture(bytes) => {
            let (samples, _) = decode_stream(bytes);
            for s in samples {
                engine.sample(s)?;
                if flush(&mut engine, transport).is_err() {
                    return Err(closed(&mut engine, transport));
                }
            }
            engine.finish_samples();
            engine.drain();
        }
        InputSource::Client | InputSource::LiveSamples => {
            let wants_samples = cfg.input == InputSource::LiveSamples;
            while !engine.is_finished() {
                let msg = match transport.recv() {
                    Ok(Some(msg)) => msg,
                    Ok(None) | Err(TransportError::Io(_)) => {
                        return Err(closed(&mut engine, transport))
                    }
                    Err(TransportError::Malformed(e)) => {
                        engine.reject_input(&e);
                        let _ = flush(&mut engine, transport);
                        continue;
                    }
                };
                match msg.body {
                    MessageBody::BlinkIn(b) if !wants_samples => engine.blink(b.t_ms),
                    MessageBody::SampleIn(s) if wants_samples => {
                        if let Err(e) = engine.sample(SensorSample::new(s.t_ms, s.v)) {
                            engine.reject_input(&e.to_string());
                        }
                    }
                    MessageBody::BlinkIn(_) | MessageBody::SampleIn(_) => {
                        engine.reject_input("input does not match the session's source")
                    }
                    MessageBody::SessionControl(SessionControl::Clock { t_ms }) => {
                        engine.advance_to(t_ms)
                    }
                    MessageBody::SessionControl(SessionControl::Stop) => break,
                    MessageBody::SessionControl(SessionControl::Start) => {}
                    _ => engine.reject_input("engine-side message sent by client"),
                }
                if flush(&mut engine, transport).is_err() {
                    return Err(closed(&mut engine, transport));
                }
            }
        }
    }

    let report = engine.finalize();
    let _ = flush(&mut engine, transport);
    if let Some(path) = &cfg.log_path {
        write_task_log(&report, std::fs::File::create(path)?)?;
    }
    Ok(report)
}

/// Writes the per-task log as `task,completed,time_s,wrong_selection`.
pub fn write_task_log(report: &MetricsReport, out: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let yes_no = |b: bool| if b { "Yes" } else { "No" };
    w.write_record(["task", "completed", "time_s", "wrong_selection"])?;
    for t in &report.tasks {
        w.write_record([
            t.task_id.to_string(),
            yes_no(t.completed).to_string(),
            format!("{:.3}", t.time_s),
            yes_no(t.wrong_selection).to_string(),
        ])?;
    }
    for id in &report.unscored {
        w.write_record([id.to_string(), "-".into(), "-".into(), "-".into()])?;
    }
    w.flush()
}
