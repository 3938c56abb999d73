//! Transports carry [`SessionMessage`]s between the engine and a client.

use std::collections::VecDeque;
use std::io::{BufRead, Write};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::session::messages::{MessageBody, SessionControl, SessionMessage};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub trait Transport {
    fn send(&mut self, msg: &SessionMessage) -> Result<(), TransportError>;
    /// `Ok(None)` means the peer is gone.
    fn recv(&mut self) -> Result<Option<SessionMessage>, TransportError>;
}

/// In-process transport for tests and headless runs.
#[derive(Debug, Default)]
pub struct MemoryTransport {
    pub inbound: VecDeque<SessionMessage>,
    pub sent: Vec<SessionMessage>,
}

impl MemoryTransport {
    pub fn new(inbound: impl IntoIterator<Item = SessionMessage>) -> Self {
        Self {
            inbound: inbound.into_iter().collect(),
            sent: Vec::new(),
        }
    }
}

impl Transport for MemoryTransport {
    fn send(&mut self, msg: &SessionMessage) -> Result<(), TransportError> {
        self.sent.push(msg.clone());
        Ok(())
    }

    fn recv(&mut self) -> Result<Option<SessionMessage>, TransportError> {
        Ok(self.inbound.pop_front())
    }
}

/// JSON lines over any reader/writer pair.
pub struct LineTransport<R, W> {
    reader: R,
    writer: W,
    buf: String,
}

impl<R: BufRead, W: Write> LineTransport<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        Self {
            reader,
            writer,
            buf: String::new(),
        }
    }
}

impl<R: BufRead, W: Write> Transport for LineTransport<R, W> {
    fn send(&mut self, msg: &SessionMessage) -> Result<(), TransportError> {
        writeln!(self.writer, "{}", msg.to_line())?;
        self.writer.flush()?;
        Ok(())
    }

    fn recv(&mut self) -> Result<Option<SessionMessage>, TransportError> {
        loop {
            self.buf.clear();
            if self.reader.read_line(&mut self.buf)? == 0 {
                return Ok(None);
            }
            let line = self.buf.trim();
            if line.is_empty() {
                continue;
            }
            return SessionMessage::from_line(line)
                .map(Some)
                .map_err(|e| TransportError::Malformed(e.to_string()));
        }
    }
}

/// Inbound lines arrive on a channel fed by a reader thread; outbound lines
/// go straight to `writer`. With a tick set, a quiet channel produces
/// `Clock` messages stamped with wall time since the transport was built,
/// and client blink/sample timestamps are overwritten with arrival time.
pub struct ChannelTransport<W> {
    rx: Receiver<Result<SessionMessage, String>>,
    writer: W,
    wall: Option<(Instant, Duration)>,
}

impl<W: Write> ChannelTransport<W> {
    pub fn virtual_time(rx: Receiver<Result<SessionMessage, String>>, writer: W) -> Self {
        Self {
            rx,
            writer,
            wall: None,
        }
    }

    pub fn wall_clock(
        rx: Receiver<Result<SessionMessage, String>>,
        writer: W,
        tick: Duration,
    ) -> Self {
        Self {
            rx,
            writer,
            wall: Some((Instant::now(), tick)),
        }
    }
}

impl<W: Write> Transport for ChannelTransport<W> {
    fn send(&mut self, msg: &SessionMessage) -> Result<(), TransportError> {
        writeln!(self.writer, "{}", msg.to_line())?;
        self.writer.flush()?;
        Ok(())
    }

    fn recv(&mut self) -> Result<Option<SessionMessage>, TransportError> {
        let Some((start, tick)) = self.wall else {
            return match self.rx.recv() {
                Ok(Ok(msg)) => Ok(Some(msg)),
                Ok(Err(e)) => Err(TransportError::Malformed(e)),
                Err(_) => Ok(None),
            };
        };
        let now_ms = || start.elapsed().as_millis() as u64;
        match self.rx.recv_timeout(tick) {
            Ok(Ok(mut msg)) => {
                match &mut msg.body {
                    MessageBody::BlinkIn(b) => b.t_ms = now_ms(),
                    MessageBody::SampleIn(s) => s.t_ms = now_ms(),
                    MessageBody::SessionControl(SessionControl::Clock { t_ms }) => *t_ms = now_ms(),
                    _ => {}
                }
                Ok(Some(msg))
            }
            Ok(Err(e)) => Err(TransportError::Malformed(e)),
            Err(RecvTimeoutError::Timeout) => Ok(Some(SessionMessage::client(
                0,
                MessageBody::SessionControl(SessionControl::Clock { t_ms: now_ms() }),
            ))),
            Err(RecvTimeoutError::Disconnected) => Ok(None),
        }
    }
}
