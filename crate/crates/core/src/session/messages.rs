//! Message-stream schema.
//!
//! One JSON object per line:
//!
//! ```text
//! {"dir":"engine_to_client","seq":7,"kind":"StateUpdate","payload":{...}}
//! {"dir":"client_to_engine","seq":3,"kind":"BlinkIn","payload":{"t_ms":5120}}
//! ```
//!
//! `seq` is assigned by the sender and strictly increases per direction.

use serde::{Deserialize, Serialize};

use crate::blockscan::{Highlight, ScanState};
use crate::geometry::{Point, Region};
use crate::scanmetrics::{MetricsSummary, TrialOutcome};
use crate::simharness::VerdictKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flow {
    EngineToClient,
    ClientToEngine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMessage {
    pub dir: Flow,
    pub seq: u64,
    #[serde(flatten)]
    pub body: MessageBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum MessageBody {
    StateUpdate(StateUpdate),
    TargetSet(TargetSet),
    BlinkIn(BlinkIn),
    SampleIn(SampleIn),
    MetricsReport(MetricsReport),
    SessionControl(SessionControl),
}

/// Everything a client needs to draw one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateUpdate {
    pub t_ms: u64,
    pub task_id: Option<u32>,
    pub screen: Region,
    pub target: Option<Region>,
    pub state: ScanState,
    pub highlight: Highlight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSet {
    pub t_ms: u64,
    pub task_id: u32,
    pub index: usize,
    pub total: usize,
    pub target: Region,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlinkIn {
    pub t_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleIn {
    pub t_ms: u64,
    pub v: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum SessionControl {
    Start,
    Stop,
    /// Advances virtual time without any input.
    Clock {
        t_ms: u64,
    },
    TrialDone {
        t_ms: u64,
        task_id: u32,
        verdict: VerdictKind,
        point: Option<Point>,
    },
    Rejected {
        t_ms: u64,
        reason: String,
    },
    Ended,
}

/// One line of the per-task log: did the task complete, how long did it
/// take, and was a wrong selection made.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskLogEntry {
    pub task_id: u32,
    pub completed: bool,
    pub time_s: f64,
    pub wrong_selection: bool,
    pub verdict: VerdictKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Set when the session ended before every task was scored.
    pub partial: bool,
    pub counts: TrialOutcome<f64>,
    /// Absent when a metric is undefined for the counts (e.g. nothing attempted).
    pub summary: Option<MetricsSummary<f64>>,
    pub tasks: Vec<TaskLogEntry>,
    pub unscored: Vec<u32>,
}

impl SessionMessage {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("messages serialize")
    }

    pub fn from_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }

    pub fn client(seq: u64, body: MessageBody) -> Self {
        Self {
            dir: Flow::ClientToEngine,
            seq,
            body,
        }
    }
}
