//! Byte-stream transport for out-of-process xApps.
//!
//! The xApp drives each step: it sends `kpm_request`, receives `kpm_report`,
//! answers with `control` and reads back the `ack`. The RIC ends a session by
//! closing the stream; the xApp sees end-of-stream where it expected the
//! next report.

use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::net::TcpStream;
use std::time::Duration;

use crate::ric::action::ControlAction;
use crate::ric::control_loop::Policy;
use crate::ric::kpm::KpmReport;
use crate::ric::protocol::{
    decode_message, encode_message, Ack, Control, KpmRequest, Message, WireAction, WireReport,
};
use crate::ric::RicError;

pub struct LineChannel<R, W> {
    reader: R,
    writer: W,
    buf: String,
}

impl<R: BufRead, W: Write> LineChannel<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        LineChannel {
            reader,
            writer,
            buf: String::new(),
        }
    }

    pub fn send(&mut self, msg: &Message) -> Result<(), RicError> {
        let mut line = encode_message(msg);
        line.push('\n');
        self.writer.write_all(line.as_bytes()).map_err(io_error)?;
        self.writer.flush().map_err(io_error)
    }

    /// Next message, or `None` at a clean end of stream.
    pub fn recv(&mut self) -> Result<Option<Message>, RicError> {
        self.buf.clear();
        let n = self.reader.read_line(&mut self.buf).map_err(io_error)?;
        if n == 0 {
            return Ok(None);
        }
        if !self.buf.ends_with('\n') {
            return Err(RicError::Transport(format!(
                "stream closed mid-line after {n} bytes"
            )));
        }
        decode_message(&self.buf)
            .map(Some)
            .map_err(RicError::Decode)
    }

    fn expect(&mut self, what: &'static str) -> Result<Message, RicError> {
        self.recv()?
            .ok_or_else(|| RicError::Closed(format!("while waiting for {what}")))
    }
}

fn io_error(e: std::io::Error) -> RicError {
    match e.kind() {
        ErrorKind::WouldBlock | ErrorKind::TimedOut => RicError::Timeout,
        _ => RicError::Transport(e.to_string()),
    }
}

fn unexpected(expected: &'static str, got: &Message) -> RicError {
    RicError::UnexpectedMessage {
        expected,
        got: got.type_name().to_string(),
    }
}

/// RIC-side handle on an xApp reached over a byte stream.
pub struct RemotePolicy<R, W> {
    name: String,
    chan: LineChannel<R, W>,
}

impl<R: BufRead, W: Write> RemotePolicy<R, W> {
    pub fn new(name: impl Into<String>, reader: R, writer: W) -> Self {
        RemotePolicy {
            name: name.into(),
            chan: LineChannel::new(reader, writer),
        }
    }
}

impl RemotePolicy<BufReader<TcpStream>, TcpStream> {
    /// Wraps an accepted connection; every read waits at most `timeout`.
    pub fn tcp(
        name: impl Into<String>,
        stream: TcpStream,
        timeout: Option<Duration>,
    ) -> Result<Self, RicError> {
        stream.set_read_timeout(timeout).map_err(io_error)?;
        stream.set_nodelay(true).map_err(io_error)?;
        let reader = BufReader::new(stream.try_clone().map_err(io_error)?);
        Ok(RemotePolicy::new(name, reader, stream))
    }
}

impl<R: BufRead, W: Write> Policy for RemotePolicy<R, W> {
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(&mut self, report: &KpmReport) -> Result<Vec<ControlAction>, RicError> {
        match self.chan.expect("kpm_request")? {
            Message::KpmRequest(KpmRequest { step }) if step == report.step => {}
            Message::KpmRequest(KpmRequest { step }) => {
                return Err(RicError::StepMismatch {
                    expected: report.step,
                    got: step,
                })
            }
            other => return Err(unexpected("kpm_request", &other)),
        }
        self.chan
            .send(&Message::KpmReport(WireReport::from(report)))?;
        match self.chan.expect("control")? {
            Message::Control(Control { step, actions }) if step == report.step => {
                Ok(actions.into_iter().map(ControlAction::from).collect())
            }
            Message::Control(Control { step, .. }) => Err(RicError::StepMismatch {
                expected: report.step,
                got: step,
            }),
            other => Err(unexpected("control", &other)),
        }
    }

    fn acknowledge(&mut self, ack: &Ack) -> Result<(), RicError> {
        self.chan.send(&Message::Ack(ack.clone()))
    }
}

/// xApp-side session: serves `policy` until the RIC closes the stream.
/// Returns the number of completed steps.
pub fn run_xapp_session<R: BufRead, W: Write>(
    policy: &mut dyn Policy,
    reader: R,
    writer: W,
) -> Result<u64, RicError> {
    let mut chan = LineChannel::new(reader, writer);
    let mut step = 0u64;
    loop {
        match chan.send(&Message::KpmRequest(KpmRequest { step })) {
            Ok(()) => {}
            // The RIC may already have hung up after the last ack.
            Err(RicError::Transport(_)) if step > 0 => return Ok(step),
            Err(e) => return Err(e),
        }
        let report = match chan.recv()? {
            None => return Ok(step),
            Some(Message::KpmReport(r)) if r.step == step => KpmReport::from(&r),
            Some(Message::KpmReport(r)) => {
                return Err(RicError::StepMismatch {
                    expected: step,
                    got: r.step,
                })
            }
            Some(other) => return Err(unexpected("kpm_report", &other)),
        };
        let actions = policy.decide(&report)?;
        chan.send(&Message::Control(Control {
            step,
            actions: actions.into_iter().map(WireAction::from).collect(),
        }))?;
        match chan.expect("ack")? {
            Message::Ack(ack) if ack.step == step => policy.acknowledge(&ack)?,
            Message::Ack(ack) => {
                return Err(RicError::StepMismatch {
                    expected: step,
                    got: ack.step,
                })
            }
            other => return Err(unexpected("ack", &other)),
        }
        step += 1;
    }
}

/// Connects to a RIC at `addr` and serves `policy` over TCP.
pub fn connect_xapp(
    policy: &mut dyn Policy,
    addr: &str,
    timeout: Option<Duration>,
) -> Result<u64, RicError> {
    let stream = TcpStream::connect(addr).map_err(io_error)?;
    stream.set_read_timeout(timeout).map_err(io_error)?;
    stream.set_nodelay(true).map_err(io_error)?;
    let reader = BufReader::new(stream.try_clone().map_err(io_error)?);
    run_xapp_session(policy, reader, stream)
}
