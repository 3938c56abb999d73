//! Frame codec for the sensor link.
//!
//! Each frame is six bytes:
//!
//! ```text
//! +------+-----+----------+----------+-----+----------+
//! | 0xA5 | seq | sample_hi| sample_lo|  dt | checksum |
//! +------+-----+----------+----------+-----+----------+
//! ```
//!
//! `sample` is a big-endian 10-bit ADC value, `dt` the milliseconds since the
//! previous frame and `checksum` the XOR of `seq`, both sample bytes and `dt`.
//! Capture files (`.blk`) are raw concatenated frames.

use std::path::Path;

use thiserror::Error;

use crate::blinksense::{SensorSample, ADC_MAX};

pub const SYNC: u8 = 0xA5;
pub const FRAME_LEN: usize = 6;

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("sample {0} exceeds the 10-bit ADC range")]
    SampleOutOfRange(u16),
    #[error("timestamps must be non-decreasing: {prev} ms followed by {next} ms")]
    TimeWentBackwards { prev: u64, next: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    pub seq: u8,
    pub sample: u16,
    pub dt: u8,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecodeStats {
    pub frames_ok: u64,
    pub frames_dropped: u64,
    pub resyncs: u64,
}

pub fn checksum(seq: u8, sample: u16, dt: u8) -> u8 {
    let [hi, lo] = sample.to_be_bytes();
    seq ^ hi ^ lo ^ dt
}

pub fn encode(seq: u8, sample: u16, dt: u8) -> Result<[u8; FRAME_LEN], LinkError> {
    if sample > ADC_MAX {
        return Err(LinkError::SampleOutOfRange(sample));
    }
    let [hi, lo] = sample.to_be_bytes();
    Ok([SYNC, seq, hi, lo, dt, checksum(seq, sample, dt)])
}

/// Parses one frame at the start of `bytes`, if it is complete and valid.
pub fn parse_frame(bytes: &[u8]) -> Option<Frame> {
    let b: &[u8; FRAME_LEN] = bytes.get(..FRAME_LEN)?.try_into().ok()?;
    if b[0] != SYNC {
        return None;
    }
    let sample = u16::from_be_bytes([b[2], b[3]]);
    if sample > ADC_MAX || checksum(b[1], sample, b[4]) != b[5] {
        return None;
    }
    Some(Frame {
        seq: b[1],
        sample,
        dt: b[4],
    })
}

/// Encodes a sample stream starting from t = 0. Gaps longer than 255 ms are
/// bridged with repeat frames carrying the previous sample value.
#[derive(Debug, Clone, Default)]
pub struct FrameEncoder {
    seq: u8,
    last_t: u64,
    last_v: Option<u16>,
}

impl FrameEncoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, s: SensorSample, out: &mut Vec<u8>) -> Result<(), LinkError> {
        if s.v > ADC_MAX {
            return Err(LinkError::SampleOutOfRange(s.v));
        }
        if s.t < self.last_t {
            return Err(LinkError::TimeWentBackwards {
                prev: self.last_t,
                next: s.t,
            });
        }
        let mut gap = s.t - self.last_t;
        while gap > u64::from(u8::MAX) {
            let held = self.last_v.unwrap_or(s.v);
            self.emit(held, u8::MAX, out)?;
            gap -= u64::from(u8::MAX);
        }
        self.emit(s.v, gap as u8, out)?;
        self.last_t = s.t;
        self.last_v = Some(s.v);
        Ok(())
    }

    fn emit(&mut self, v: u16, dt: u8, out: &mut Vec<u8>) -> Result<(), LinkError> {
        out.extend_from_slice(&encode(self.seq, v, dt)?);
        self.seq = self.seq.wrapping_add(1);
        Ok(())
    }
}

pub fn encode_samples(samples: &[SensorSample]) -> Result<Vec<u8>, LinkError> {
    let mut enc = FrameEncoder::new();
    let mut out = Vec::with_capacity(samples.len() * FRAME_LEN);
    for &s in samples {
        enc.push(s, &mut out)?;
    }
    Ok(out)
}

/// Streaming decoder.
///
/// A frame is taken when the next frame also checks out, or when input ends
/// right after it. While locked, a valid frame whose successor fails is held
/// back and the decoder searches from the byte after its start; the held frame
/// is emitted unless the next confirmed frame overlaps it, in which case it
/// was a checksum coincidence inside damaged data. A fresh decoder starts
/// locked.
#[derive(Debug, Clone)]
pub struct StreamDecoder {
    buf: Vec<u8>,
    locked: bool,
    searching: bool,
    /// Unconfirmed frame and the offset in `buf` just past it.
    held: Option<(Frame, usize)>,
    last_seq: Option<u8>,
    t: u64,
    stats: DecodeStats,
}

impl Default for StreamDecoder {
    fn default() -> Self {
        Self::new()
    }
}

impl StreamDecoder {
    pub fn new() -> Self {
        Self {
            buf: Vec::new(),
            locked: true,
            searching: false,
            held: None,
            last_seq: None,
            t: 0,
            stats: DecodeStats::default(),
        }
    }

    pub fn stats(&self) -> DecodeStats {
        self.stats
    }

    pub fn push(&mut self, bytes: &[u8]) -> Vec<SensorSample> {
        self.buf.extend_from_slice(bytes);
        self.drain(false)
    }

    /// Flushes whatever can still be decoded once no more input will arrive.
    pub fn finish(&mut self) -> Vec<SensorSample> {
        let mut out = self.drain(true);
        if let Some((frame, _)) = self.held.take() {
            out.push(self.accept(frame));
        }
        self.buf.clear();
        out
    }

    fn drain(&mut self, at_end: bool) -> Vec<SensorSample> {
        let mut out = Vec::new();
        let mut pos = 0;
        loop {
            let rest = &self.buf[pos..];
            if rest.len() < FRAME_LEN {
                if at_end && !rest.is_empty() {
                    self.note_failure();
                }
                break;
            }
            let Some(frame) = parse_frame(rest) else {
                self.note_failure();
                pos += 1;
                continue;
            };
            let tail = &rest[FRAME_LEN..];
            if tail.len() < FRAME_LEN && !at_end {
                // Need the following frame to confirm.
                break;
            }
            if tail.len() < FRAME_LEN || parse_frame(tail).is_some() {
                if let Some((held, held_end)) = self.held.take() {
                    if pos >= held_end {
                        out.push(self.accept(held));
                    }
                }
                out.push(self.accept(frame));
                pos += FRAME_LEN;
                continue;
            }
            if self.locked && self.held.is_none() {
                self.held = Some((frame, pos + FRAME_LEN));
            }
            self.note_failure();
            pos += 1;
        }
        self.buf.drain(..pos);
        if let Some((_, end)) = &mut self.held {
            *end = end.saturating_sub(pos);
        }
        out
    }

    fn note_failure(&mut self) {
        if !self.searching {
            self.stats.resyncs += 1;
            self.searching = true;
        }
        self.locked = false;
    }

    fn accept(&mut self, frame: Frame) -> SensorSample {
        if let Some(prev) = self.last_seq {
            let gap = frame.seq.wrapping_sub(prev.wrapping_add(1));
            self.stats.frames_dropped += u64::from(gap);
        }
        self.last_seq = Some(frame.seq);
        self.locked = true;
        self.searching = false;
        self.stats.frames_ok += 1;
        self.t += u64::from(frame.dt);
        SensorSample::new(self.t, frame.sample)
    }
}

pub fn decode_stream(bytes: &[u8]) -> (Vec<SensorSample>, DecodeStats) {
    let mut dec = StreamDecoder::new();
    let mut samples = dec.push(bytes);
    samples.extend(dec.finish());
    (samples, dec.stats())
}

pub fn write_capture(path: impl AsRef<Path>, samples: &[SensorSample]) -> Result<(), LinkError> {
    std::fs::write(path, encode_samples(samples)?)?;
    Ok(())
}

pub fn read_capture(path: impl AsRef<Path>) -> Result<(Vec<SensorSample>, DecodeStats), LinkError> {
    let bytes = std::fs::read(path)?;
    Ok(decode_stream(&bytes))
}
