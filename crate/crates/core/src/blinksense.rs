//! Voltage classification and voluntary-blink detection.
//!
//! The phototransistor level sits high while the eye is open ("base"), dips
//! into a middle band on reflexive blinks ("garbage") and falls to or below
//! the blink threshold on a deliberate blink. A blink event is a run of
//! sub-threshold samples long enough to pass the duration gate and far enough
//! from the previous event to clear the refractory window.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest value a 10-bit ADC can report.
pub const ADC_MAX: u16 = 1023;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BlinkSenseError {
    #[error("timestamps must be strictly increasing: {prev} ms followed by {next} ms")]
    NonMonotonicTimestamps { prev: u64, next: u64 },
    #[error("idle and blink levels overlap (min idle {min_idle}, max blink {max_blink})")]
    InseparableDistributions { min_idle: u16, max_blink: u16 },
    #[error("calibration needs at least one idle and one blink sample")]
    EmptyCalibrationSet,
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(&'static str),
}

/// One timestamped ADC reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorSample {
    pub t: u64,
    pub v: u16,
}

impl SensorSample {
    pub fn new(t: u64, v: u16) -> Self {
        Self { t, v }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalThresholds {
    /// Samples at or below this level are blink candidates.
    pub blink_threshold: u16,
    /// Lowest level still treated as the open-eye baseline.
    pub base_floor: u16,
    /// Minimum span of a candidate run before it counts as a blink.
    pub min_blink_ms: u64,
    /// Quiet time after an event's end during which new runs are ignored.
    pub refractory_ms: u64,
}

impl SignalThresholds {
    pub const DEFAULT_MIN_BLINK_MS: u64 = 60;
    pub const DEFAULT_REFRACTORY_MS: u64 = 200;

    pub fn new(blink_threshold: u16, base_floor: u16) -> Self {
        Self {
            blink_threshold,
            base_floor,
            min_blink_ms: Self::DEFAULT_MIN_BLINK_MS,
            refractory_ms: Self::DEFAULT_REFRACTORY_MS,
        }
    }

    pub fn with_timing(mut self, min_blink_ms: u64, refractory_ms: u64) -> Self {
        self.min_blink_ms = min_blink_ms;
        self.refractory_ms = refractory_ms;
        self
    }

    pub fn validate(&self) -> Result<(), BlinkSenseError> {
        if self.blink_threshold >= self.base_floor {
            return Err(BlinkSenseError::InvalidThresholds(
                "blink_threshold must be below base_floor",
            ));
        }
        if self.base_floor > ADC_MAX {
            return Err(BlinkSenseError::InvalidThresholds(
                "base_floor exceeds the ADC range",
            ));
        }
        if self.min_blink_ms == 0 {
            return Err(BlinkSenseError::InvalidThresholds(
                "min_blink_ms must be positive",
            ));
        }
        Ok(())
    }
}

impl Default for SignalThresholds {
    fn default() -> Self {
        Self::new(300, 600)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SampleClass {
    Base,
    Garbage,
    BlinkCandidate,
}

/// A detected voluntary blink. `onset_t` is the falling edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlinkEvent {
    pub onset_t: u64,
    pub duration_ms: u64,
}

pub fn classify_sample(s: SensorSample, th: &SignalThresholds) -> SampleClass {
    if s.v <= th.blink_threshold {
        SampleClass::BlinkCandidate
    } else if s.v >= th.base_floor {
        SampleClass::Base
    } else {
        SampleClass::Garbage
    }
}

/// Incremental blink detector. Feed samples in time order; events are
/// reported when the run that produced them closes.
///
/// A run's span is measured from its first candidate sample to the first
/// sample that is no longer a candidate. A run still open when the stream
/// ends is measured to its last sample and only reported by [`finish`].
///
/// [`finish`]: BlinkDetector::finish
#[derive(Debug, Clone)]
pub struct BlinkDetector {
    th: SignalThresholds,
    last_t: Option<u64>,
    run_start: Option<u64>,
    run_last: u64,
    last_event_end: Option<u64>,
}

impl BlinkDetector {
    pub fn new(th: SignalThresholds) -> Self {
        Self {
            th,
            last_t: None,
            run_start: None,
            run_last: 0,
            last_event_end: None,
        }
    }

    pub fn thresholds(&self) -> &SignalThresholds {
        &self.th
    }

    /// Onset of the candidate run currently open, if any. Nothing before this
    /// instant can still turn into an event.
    pub fn pending_onset(&self) -> Option<u64> {
        self.run_start
    }

    pub fn push(&mut self, s: SensorSample) -> Result<Option<BlinkEvent>, BlinkSenseError> {
        if let Some(prev) = self.last_t {
            if s.t <= prev {
                return Err(BlinkSenseError::NonMonotonicTimestamps { prev, next: s.t });
            }
        }
        self.last_t = Some(s.t);
        match (classify_sample(s, &self.th), self.run_start) {
            (SampleClass::BlinkCandidate, None) => {
                self.run_start = Some(s.t);
                self.run_last = s.t;
                Ok(None)
            }
            (SampleClass::BlinkCandidate, Some(_)) => {
                self.run_last = s.t;
                Ok(None)
            }
            (_, Some(start)) => {
                self.run_start = None;
                Ok(self.close_run(start, s.t))
            }
            (_, None) => Ok(None),
        }
    }

    /// Closes any open run at the last sample seen.
    pub fn finish(&mut self) -> Option<BlinkEvent> {
        let start = self.run_start.take()?;
        self.close_run(start, self.run_last)
    }

    fn close_run(&mut self, start: u64, end: u64) -> Option<BlinkEvent> {
        let duration_ms = end - start;
        if duration_ms < self.th.min_blink_ms {
            return None;
        }
        if let Some(prev_end) = self.last_event_end {
            if start < prev_end + self.th.refractory_ms {
                return None;
            }
        }
        self.last_event_end = Some(end);
        Some(BlinkEvent {
            onset_t: start,
            duration_ms,
        })
    }
}

pub fn detect_blinks(
    stream: &[SensorSample],
    th: &SignalThresholds,
) -> Result<Vec<BlinkEvent>, BlinkSenseError> {
    let mut detector = BlinkDetector::new(*th);
    let mut events = Vec::new();
    for &s in stream {
        if let Some(e) = detector.push(s)? {
            events.push(e);
        }
    }
    events.extend(detector.finish());
    Ok(events)
}

/// Derives thresholds from an idle recording and a deliberate-blink recording.
///
/// The blink threshold sits halfway between the highest blink level and the
/// lowest idle level; the base floor is the nearest-rank 10th percentile of
/// the idle levels.
pub fn calibrate_threshold(
    idle_samples: &[SensorSample],
    blink_samples: &[SensorSample],
) -> Result<SignalThresholds, BlinkSenseError> {
    let min_idle = idle_samples.iter().map(|s| s.v).min();
    let max_blink = blink_samples.iter().map(|s| s.v).max();
    let (Some(min_idle), Some(max_blink)) = (min_idle, max_blink) else {
        return Err(BlinkSenseError::EmptyCalibrationSet);
    };
    if min_idle <= max_blink {
        return Err(BlinkSenseError::InseparableDistributions {
            min_idle,
            max_blink,
        });
    }
    let blink_threshold = ((u32::from(min_idle) + u32::from(max_blink)) / 2) as u16;
    let mut idle: Vec<u16> = idle_samples.iter().map(|s| s.v).collect();
    idle.sort_unstable();
    let base_floor = nearest_rank(&idle, 10);
    let th = SignalThresholds::new(blink_threshold, base_floor);
    th.validate()?;
    Ok(th)
}

/// Nearest-rank percentile of an ascending, non-empty slice.
fn nearest_rank(sorted: &[u16], pct: usize) -> u16 {
    let rank = (pct * sorted.len()).div_ceil(100).max(1);
    sorted[rank - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn th() -> SignalThresholds {
        SignalThresholds::new(300, 600)
    }

    fn square_dip(dip_start: u64, dip_ms: u64, total_ms: u64) -> Vec<SensorSample> {
        (0..total_ms)
            .step_by(10)
            .map(|t| {
                let v = if t >= dip_start && t < dip_start + dip_ms {
                    200
                } else {
                    700
                };
                SensorSample::new(t, v)
            })
            .collect()
    }

    #[test]
    fn classify_bands() {
        assert_eq!(
            classify_sample(SensorSample::new(0, 700), &th()),
            SampleClass::Base
        );
        assert_eq!(
            classify_sample(SensorSample::new(0, 300), &th()),
            SampleClass::BlinkCandidate
        );
        assert_eq!(
            classify_sample(SensorSample::new(0, 450), &th()),
            SampleClass::Garbage
        );
        assert_eq!(
            classify_sample(SensorSample::new(0, 600), &th()),
            SampleClass::Base
        );
        assert_eq!(
            classify_sample(SensorSample::new(0, 301), &th()),
            SampleClass::Garbage
        );
    }

    #[test]
    fn flat_stream_has_no_events() {
        let stream: Vec<_> = (0..200).map(|i| SensorSample::new(i * 10, 700)).collect();
        assert!(detect_blinks(&stream, &th()).unwrap().is_empty());
    }

    #[test]
    fn square_dip_gives_one_event() {
        let stream = square_dip(500, 120, 2000);
        let events = detect_blinks(&stream, &th().with_timing(60, 200)).unwrap();
        assert_eq!(
            events,
            vec![BlinkEvent {
                onset_t: 500,
                duration_ms: 120
            }]
        );
    }

    #[test]
    fn short_dip_is_ignored() {
        let stream = square_dip(500, 40, 2000);
        assert!(detect_blinks(&stream, &th()).unwrap().is_empty());
    }

    #[test]
    fn refractory_suppresses_close_followup() {
        let mut stream = square_dip(500, 100, 2000);
        for s in stream.iter_mut() {
            if s.t >= 700 && s.t < 800 {
                s.v = 150;
            }
        }
        let events = detect_blinks(&stream, &th()).unwrap();
        assert_eq!(events.len(), 1);
        let events = detect_blinks(&stream, &th().with_timing(60, 50)).unwrap();
        assert_eq!(events.len(), 2);
    }

    #[test]
    fn open_run_at_end_is_flushed() {
        let stream: Vec<_> = (0..20)
            .map(|i| SensorSample::new(i * 10, if i >= 10 { 100 } else { 700 }))
            .collect();
        let events = detect_blinks(&stream, &th()).unwrap();
        assert_eq!(
            events,
            vec![BlinkEvent {
                onset_t: 100,
                duration_ms: 90
            }]
        );
    }

    #[test]
    fn non_monotonic_rejected() {
        let stream = [SensorSample::new(10, 700), SensorSample::new(10, 700)];
        assert_eq!(
            detect_blinks(&stream, &th()),
            Err(BlinkSenseError::NonMonotonicTimestamps { prev: 10, next: 10 })
        );
    }

    #[test]
    fn pending_onset_tracks_open_run() {
        let mut d = BlinkDetector::new(th());
        d.push(SensorSample::new(0, 700)).unwrap();
        assert_eq!(d.pending_onset(), None);
        d.push(SensorSample::new(10, 100)).unwrap();
        assert_eq!(d.pending_onset(), Some(10));
        d.push(SensorSample::new(20, 700)).unwrap();
        assert_eq!(d.pending_onset(), None);
    }

    #[test]
    fn calibrate_constant_levels() {
        let idle: Vec<_> = (0..50).map(|i| SensorSample::new(i, 700)).collect();
        let blinks: Vec<_> = (0..50).map(|i| SensorSample::new(i, 200)).collect();
        let th = calibrate_threshold(&idle, &blinks).unwrap();
        assert_eq!(th.blink_threshold, 450);
        assert_eq!(th.base_floor, 700);
    }

    #[test]
    fn calibrate_spread_levels() {
        // idle 690..=710, blinks 190..=210: 21 values each.
        let idle: Vec<_> = (690..=710).map(|v| SensorSample::new(0, v)).collect();
        let blinks: Vec<_> = (190..=210).map(|v| SensorSample::new(0, v)).collect();
        let th = calibrate_threshold(&idle, &blinks).unwrap();
        assert_eq!(th.blink_threshold, 450);
        // nearest rank: ceil(0.10 * 21) = 3 -> third smallest = 692
        assert_eq!(th.base_floor, 692);
        assert!((690..=710).contains(&th.base_floor));
        th.validate().unwrap();
    }

    #[test]
    fn calibrate_overlap_fails() {
        let idle = [SensorSample::new(0, 400)];
        let blinks = [SensorSample::new(0, 500)];
        assert_eq!(
            calibrate_threshold(&idle, &blinks),
            Err(BlinkSenseError::InseparableDistributions {
                min_idle: 400,
                max_blink: 500
            })
        );
        assert_eq!(
            calibrate_threshold(&[], &blinks),
            Err(BlinkSenseError::EmptyCalibrationSet)
        );
    }
}
