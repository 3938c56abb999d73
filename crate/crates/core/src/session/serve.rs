//! TCP endpoint: one isolated session per connection, JSON lines both ways.

use std::io::{BufRead, BufReader};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use crate::session::messages::SessionMessage;
use crate::session::transport::ChannelTransport;
use crate::session::{run_session, MetricsReport, SessionConfig, SessionError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockMode {
    /// Time moves only with client timestamps and `Clock` messages.
    Virtual,
    /// Time is wall time since the connection opened; quiet periods are
    /// filled with clock ticks at this period.
    Wall { tick: Duration },
}

/// Reads JSON lines from `stream` on a background thread.
pub fn spawn_reader(stream: TcpStream) -> mpsc::Receiver<Result<SessionMessage, String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(stream).lines() {
            let Ok(line) = line else { break };
            if line.trim().is_empty() {
                continue;
            }
            let msg = SessionMessage::from_line(line.trim()).map_err(|e| e.to_string());
            if tx.send(msg).is_err() {
                break;
            }
        }
    });
    rx
}

pub fn serve_connection(
    stream: TcpStream,
    cfg: &SessionConfig,
    mode: ClockMode,
) -> Result<MetricsReport, SessionError> {
    stream.set_nodelay(true)?;
    let rx = spawn_reader(stream.try_clone()?);
    let result = match mode {
        ClockMode::Virtual => run_session(cfg, &mut ChannelTransport::virtual_time(rx, &stream)),
        ClockMode::Wall { tick } => {
            run_session(cfg, &mut ChannelTransport::wall_clock(rx, &stream, tick))
        }
    };
    let _ = stream.shutdown(std::net::Shutdown::Both);
    result
}

/// Accepts connections until `max_sessions` have been served (forever when
/// `None`). Each connection runs on its own thread with its own engine.
pub fn serve(
    listener: TcpListener,
    cfg: SessionConfig,
    mode: ClockMode,
    max_sessions: Option<usize>,
) -> std::io::Result<()> {
    let mut handles = Vec::new();
    for (i, stream) in listener.incoming().enumerate() {
        let stream = stream?;
        let cfg = cfg.clone();
        let peer = stream
            .peer_addr()
            .map(|a| a.to_string())
            .unwrap_or_default();
        handles.push(thread::spawn(move || {
            match serve_connection(stream, &cfg, mode) {
                Ok(r) => eprintln!("session {peer}: {} task(s) scored", r.tasks.len()),
                Err(e) => eprintln!("session {peer}: {e}"),
            }
        }));
        if max_sessions.is_some_and(|m| i + 1 >= m) {
            break;
        }
    }
    for h in handles {
        let _ = h.join();
    }
    Ok(())
}
