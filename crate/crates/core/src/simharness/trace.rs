//! Blink trace files.
//!
//! ```text
//! #blinktrace v1 cfg=<16 hex digits>
//! #task<TAB><id><TAB><x>,<y>,<w>,<h>
//! <t_ms><TAB>blink
//! <t_ms><TAB>tick
//! #end<TAB><number of event lines>
//! ```
//!
//! Event times are strictly increasing. `tick` lines annotate highlight
//! boundaries and are ignored on replay. The footer makes truncation
//! detectable.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::blockscan::ScanConfig;
use crate::geometry::Region;
use crate::simharness::driver::{TrialDriver, TrialResult, TrialSpec};

const MAGIC: &str = "#blinktrace v1";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("malformed trace at line {line}: {reason}")]
    MalformedTrace { line: usize, reason: String },
    #[error("trace was recorded with config {recorded}, replaying with {current}")]
    ConfigMismatch { recorded: String, current: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Blink,
    Tick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t_ms: u64,
    pub kind: RecordKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceTask {
    pub task_id: u32,
    pub target: Region,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlinkTrace {
    pub cfg_hash: String,
    pub tasks: Vec<TraceTask>,
    pub records: Vec<TraceRecord>,
}

impl BlinkTrace {
    pub fn blink_times(&self) -> Vec<u64> {
        self.records
            .iter()
            .filter(|r| r.kind == RecordKind::Blink)
            .map(|r| r.t_ms)
            .collect()
    }

    /// Trial specs for replaying under `cfg`.
    pub fn specs(&self, cfg: &ScanConfig, retry_cycles: u32) -> Vec<TrialSpec> {
        self.tasks
            .iter()
            .map(|t| TrialSpec {
                task_id: t.task_id,
                target: t.target,
                cfg: cfg.clone(),
                retry_cycles,
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} cfg={}\n", self.cfg_hash);
        for t in &self.tasks {
            let r = t.target;
            let _ = writeln!(out, "#task\t{}\t{},{},{},{}", t.task_id, r.x, r.y, r.w, r.h);
        }
        for rec in &self.records {
            let kind = match rec.kind {
                RecordKind::Blink => "blink",
                RecordKind::Tick => "tick",
            };
            let _ = writeln!(out, "{}\t{kind}", rec.t_ms);
        }
        let _ = writeln!(out, "#end\t{}", self.records.len());
        out
    }

    pub fn parse(text: &str) -> Result<Self, TraceError> {
        let bad = |line: usize, reason: &str| TraceError::MalformedTrace {
            line,
            reason: reason.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
        let cfg_hash = header
            .strip_prefix(MAGIC)
            .and_then(|rest| rest.trim().strip_prefix("cfg="))
            .filter(|h| !h.is_empty())
            .ok_or_else(|| bad(1, "missing or unrecognized header"))?
            .to_string();

        let mut tasks = Vec::new();
        let mut records: Vec<TraceRecord> = Vec::new();
        let mut footer_seen = false;
        for (n, line) in lines {
            if footer_seen {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(bad(n, "content after #end"));
            }
            if let Some(rest) = line.strip_prefix("#task\t") {
                if !records.is_empty() {
                    return Err(bad(n, "#task after events"));
                }
                let (id, rect) = rest
                    .split_once('\t')
                    .ok_or_else(|| bad(n, "expected id<TAB>x,y,w,h"))?;
                let task_id = id.parse().map_err(|_| bad(n, "bad task id"))?;
                let nums: Vec<u32> = rect
                    .split(',')
                    .map(|v| v.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad(n, "bad target rectangle"))?;
                let [x, y, w, h] = nums[..] else {
                    return Err(bad(n, "target needs four numbers"));
                };
                tasks.push(TraceTask {
                    task_id,
                    target: Region::new(x, y, w, h),
                });
            } else if let Some(rest) = line.strip_prefix("#end\t") {
                let count: usize = rest
                    .trim()
                    .parse()
                    .map_err(|_| bad(n, "bad record count"))?;
                if count != records.len() {
                    return Err(bad(n, "record count does not match"));
                }
                footer_seen = true;
            } else {
                let (t, kind) = line
                    .split_once('\t')
                    .ok_or_else(|| bad(n, "expected t_ms<TAB>kind"))?;
                let t_ms: u64 = t.parse().map_err(|_| bad(n, "bad timestamp"))?;
                let kind = match kind {
                    "blink" => RecordKind::Blink,
                    "tick" => RecordKind::Tick,
                    _ => return Err(bad(n, "unknown record kind")),
                };
                if records.last().is_some_and(|prev| prev.t_ms >= t_ms) {
                    return Err(bad(n, "timestamps must strictly increase"));
                }
                records.push(TraceRecord { t_ms, kind });
            }
        }
        if !footer_seen {
            return Err(bad(
                text.lines().count() + 1,
                "missing #end footer (truncated?)",
            ));
        }
        Ok(BlinkTrace {
            cfg_hash,
            tasks,
            records,
        })
    }
}

/// Short digest identifying the scan config and retry budget a trace was
/// recorded under.
pub fn config_hash(cfg: &ScanConfig, retry_cycles: u32) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(format!("{json}|retry={retry_cycles}").as_bytes());
    hex::encode(&digest[..8])
}

pub fn record_trace(path: impl AsRef<Path>, trace: &BlinkTrace) -> Result<(), TraceError> {
    write_trace(path, trace)
}

pub fn write_trace(path: impl AsRef<Path>, trace: &BlinkTrace) -> Result<(), TraceError> {
    std::fs::write(path, trace.to_text())?;
    Ok(())
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<BlinkTrace, TraceError> {
    BlinkTrace::parse(&std::fs::read_to_string(path)?)
}

/// Scores `specs` back to back against a list of blink instants. Blinks that
/// arrive after a trial is decided go to the next trial; trials left without
/// blinks run out their retry budget.
pub fn replay_blinks(specs: &[TrialSpec], blinks: &[u64]) -> Vec<TrialResult> {
    let mut results = Vec::with_capacity(specs.len());
    let mut pending = blinks.iter().copied().peekable();
    let mut start = 0u64;
    for spec in specs {
        let mut driver = TrialDriver::new(spec, start);
        while driver.verdict().is_none() {
            match pending.peek().copied() {
                Some(t) if t < driver.now() => {
                    pending.next();
                }
                Some(t) => {
                    if driver.advance_to(t, &mut |_, _| {}).is_none() {
                        driver.blink_at(t, &mut |_, _| {});
                        pending.next();
                    }
                }
                None => {
                    driver.run_out(&mut |_, _| {});
                }
            }
        }
        let result = driver.result().expect("decided");
        start = result.verdict.end_t;
        results.push(result);
    }
    results
}

/// Replays a trace under `cfg`, refusing traces recorded with another config.
pub fn replay_trace(
    trace: &BlinkTrace,
    cfg: &ScanConfig,
    retry_cycles: u32,
) -> Result<Vec<TrialResult>, TraceError> {
    let current = config_hash(cfg, retry_cycles);
    if current != trace.cfg_hash {
        return Err(TraceError::ConfigMismatch {
            recorded: trace.cfg_hash.clone(),
            current,
        });
    }
    Ok(replay_blinks(
        &trace.specs(cfg, retry_cycles),
        &trace.blink_times(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BlinkTrace {
        BlinkTrace {
            cfg_hash: "0123456789abcdef".into(),
            tasks: vec![TraceTask {
                task_id: 3,
                target: Region::new(1, 2, 3, 4),
            }],
            records: vec![
                TraceRecord {
                    t_ms: 300,
                    kind: RecordKind::Blink,
                },
                TraceRecord {
                    t_ms: 500,
                    kind: RecordKind::Tick,
                },
                TraceRecord {
                    t_ms: 800,
                    kind: RecordKind::Blink,
                },
            ],
        }
    }

    #[test]
    fn text_round_trip() {
        let t = sample();
        assert_eq!(BlinkTrace::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn layout() {
        let text = sample().to_text();
        assert_eq!(
            text,
            "#blinktrace v1 cfg=0123456789abcdef\n#task\t3\t1,2,3,4\n300\tblink\n500\ttick\n800\tblink\n#end\t3\n"
        );
    }

    #[test]
    fn truncation_detected() {
        let text = sample().to_text();
        let cut = &text[..text.find("800").unwrap()];
        let err = BlinkTrace::parse(cut).unwrap_err();
        assert!(matches!(err, TraceError::MalformedTrace { .. }), "{err}");
        let cut = &text[..text.len() - 10];
        assert!(BlinkTrace::parse(cut).is_err());
    }

    #[test]
    fn bad_lines_report_line_number() {
        let text = "#blinktrace v1 cfg=ab\n100\tblink\n90\tblink\n#end\t2\n";
        match BlinkTrace::parse(text) {
            Err(TraceError::MalformedTrace { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = "#blinktrace v1 cfg=ab\n100\twink\n#end\t1\n";
        assert!(matches!(
            BlinkTrace::parse(text),
            Err(TraceError::MalformedTrace { line: 2, .. })
        ));
        assert!(matches!(
            BlinkTrace::parse("hello\n"),
            Err(TraceError::MalformedTrace { line: 1, .. })
        ));
    }

    #[test]
    fn config_hash_changes_with_config() {
        let a = ScanConfig::new(Region::screen(64, 64), 500);
        let b = a.clone().with_interval(600);
        assert_eq!(config_hash(&a, 3).len(), 16);
        assert_ne!(config_hash(&a, 3), config_hash(&b, 3));
        assert_ne!(config_hash(&a, 3), config_hash(&a, 2));
    }
}
