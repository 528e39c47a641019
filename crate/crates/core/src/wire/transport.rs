//! Length-prefixed frames over byte streams and the session drivers that
//! run the protocol state machines across them.

use std::io::{self, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Arc;
use std::thread;

use log::{info, warn};
use thiserror::Error;

use super::codec::{self, DecodeError};
use crate::matrix::Conjugator;
use crate::poly::RingParams;
use crate::protocol::{
    Constants, ErrorCode, Hello, Message, PrivateKey, ProtocolError, ProverSession, PublicKey, SchemeParams,
    SessionTranscript, Verdict, VerifierSession, PROTOCOL_VERSION,
};
use crate::rng;

/// Frames longer than this are refused before any allocation.
pub const MAX_FRAME: u32 = 1 << 28;

/// Connection `i` of a prover daemon draws from this stream plus `i`.
pub const CONNECTION_STREAM_BASE: u64 = 1 << 40;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("peer closed the stream mid-session")]
    Closed,
    #[error("frame of {0} bytes exceeds the limit")]
    FrameTooLarge(u32),
    #[error("decode: {0}")]
    Decode(#[from] DecodeError),
    #[error("protocol: {0}")]
    Protocol(#[from] ProtocolError),
}

impl TransportError {
    /// Stable numeric code used in logs.
    pub fn code(&self) -> u8 {
        match self {
            TransportError::Io(_) => 10,
            TransportError::Closed => 11,
            TransportError::FrameTooLarge(_) => 12,
            TransportError::Decode(_) => 13,
            TransportError::Protocol(e) => 20 + e.code() as u8,
        }
    }
}

/// A raw frame: type byte and payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: u8,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.payload.len() + 5);
        out.push(self.msg_type);
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }
}

/// Reads one frame. `Ok(None)` means the stream ended cleanly between
/// frames.
pub fn read_frame<R: Read + ?Sized>(r: &mut R) -> Result<Option<Frame>, TransportError> {
    let mut header = [0u8; 5];
    let mut got = 0;
    while got < header.len() {
        match r.read(&mut header[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(TransportError::Closed),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_le_bytes(header[1..].try_into().unwrap());
    if len > MAX_FRAME {
        return Err(TransportError::FrameTooLarge(len));
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => TransportError::Closed,
        _ => e.into(),
    })?;
    Ok(Some(Frame { msg_type: header[0], payload }))
}

pub fn write_frame<W: Write + ?Sized>(w: &mut W, msg: &Message) -> io::Result<()> {
    w.write_all(&codec::encode(msg))?;
    w.flush()
}

/// A stream plus an optional log of every frame that crossed it, in
/// order, in both directions.
pub struct FramedStream<S> {
    inner: S,
    log: Option<Vec<u8>>,
    frames: usize,
}

impl<S: Read + Write> FramedStream<S> {
    pub fn new(inner: S) -> Self {
        Self { inner, log: None, frames: 0 }
    }

    pub fn recording(inner: S) -> Self {
        Self { inner, log: Some(Vec::new()), frames: 0 }
    }

    pub fn send(&mut self, msg: &Message) -> Result<(), TransportError> {
        let bytes = codec::encode(msg);
        self.inner.write_all(&bytes)?;
        self.inner.flush()?;
        self.note(&bytes);
        Ok(())
    }

    /// Next message, decoded against `ring`. A clean end of stream is
    /// reported as [`TransportError::Closed`].
    pub fn recv(&mut self, ring: &RingParams) -> Result<Message, TransportError> {
        let frame = read_frame(&mut self.inner)?.ok_or(TransportError::Closed)?;
        self.note(&frame.to_bytes());
        Ok(codec::decode_payload(frame.msg_type, &frame.payload, ring)?)
    }

    fn note(&mut self, bytes: &[u8]) {
        self.frames += 1;
        if let Some(log) = &mut self.log {
            log.extend_from_slice(bytes);
        }
    }

    /// Frames sent plus frames received so far.
    pub fn frame_count(&self) -> usize {
        self.frames
    }

    pub fn log(&self) -> Option<&[u8]> {
        self.log.as_deref()
    }

    pub fn into_inner(self) -> S {
        self.inner
    }
}

fn error_reply(e: &TransportError) -> Option<Message> {
    let (code, reason) = match e {
        TransportError::Io(_) | TransportError::Closed => return None,
        // the peer already knows what went wrong
        TransportError::Protocol(ProtocolError::Peer { .. }) => return None,
        TransportError::Decode(d) => (ErrorCode::Malformed, d.to_string()),
        TransportError::FrameTooLarge(_) => (ErrorCode::Malformed, e.to_string()),
        TransportError::Protocol(p) => (p.code(), p.to_string()),
    };
    Some(Message::Error { code, reason })
}

/// Serves one session on `stream`. Returns the verifier's verdict. On any
/// failure an Error frame is sent when that still makes sense.
pub fn serve_session<S, C, R>(
    stream: &mut FramedStream<S>,
    key: &C,
    a: &crate::matrix::Matrix,
    sp: &SchemeParams,
    rng: R,
) -> Result<Verdict, TransportError>
where
    S: Read + Write,
    C: Conjugator + ?Sized,
    R: rand::Rng,
{
    let mut session = ProverSession::new(key, a, sp, rng);
    let result = (|| loop {
        let msg = stream.recv(&sp.ring)?;
        if let Some(reply) = session.handle(msg)? {
            stream.send(&reply)?;
        }
        if let Some(v) = session.verdict() {
            return Ok(v);
        }
    })();
    if let Err(e) = &result {
        if let Some(reply) = error_reply(e) {
            let _ = stream.send(&reply);
        }
    }
    result
}

/// Deliberate protocol violations for exercising error paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Send Constants straight after Hello.
    ConstantsBeforeCommit,
}

/// Runs the verifier side of one session on `stream`.
pub fn run_verifier_session<S, R>(
    stream: &mut FramedStream<S>,
    public: &PublicKey,
    sp: &SchemeParams,
    rng: R,
    fault: Option<Fault>,
) -> Result<SessionTranscript, TransportError>
where
    S: Read + Write,
    R: rand::Rng,
{
    if let Some(Fault::ConstantsBeforeCommit) = fault {
        stream.send(&Message::Hello(Hello { version: PROTOCOL_VERSION, params: sp.block() }))?;
        stream.send(&Message::Constants(Constants { c: [1, 1, 1], b_prime: None }))?;
        // the prover must answer with an Error frame, never a Response
        let reply = stream.recv(&sp.ring)?;
        return Err(match reply {
            Message::Error { code, reason } => ProtocolError::Peer { code, reason }.into(),
            other => ProtocolError::InvalidMessage(format!(
                "prover answered an out-of-order Constants with {}",
                other.name()
            ))
            .into(),
        });
    }
    let mut session = VerifierSession::new(public, sp, rng);
    let result = (|| {
        for msg in session.open()? {
            stream.send(&msg)?;
        }
        while !session.is_finished() {
            let msg = stream.recv(&sp.ring)?;
            if let Some(reply) = session.handle(msg)? {
                stream.send(&reply)?;
            }
        }
        Ok(())
    })();
    if let Err(e) = &result {
        if let Some(reply) = error_reply(e) {
            let _ = stream.send(&reply);
        }
    }
    result?;
    session.into_transcript().ok_or_else(|| ProtocolError::InvalidMessage("no verdict".into()).into())
}

/// Process exit code for a verifier outcome: 0 accept, 1 reject, 2 error.
pub fn exit_code(outcome: &Result<SessionTranscript, TransportError>) -> i32 {
    match outcome {
        Ok(t) if t.verdict.is_accept() => 0,
        Ok(_) => 1,
        Err(_) => 2,
    }
}

/// Accepts connections and serves each on its own thread. Connection `i`
/// draws its randomness from `seed` and stream `CONNECTION_STREAM_BASE + i`.
/// Stops accepting after `max_sessions` connections when given, and then
/// waits for the running sessions.
pub fn run_prover_daemon(
    listener: TcpListener,
    key: Arc<(SchemeParams, PrivateKey)>,
    seed: u64,
    max_sessions: Option<usize>,
) -> io::Result<Vec<Result<Verdict, String>>> {
    let mut handles = Vec::new();
    for (i, conn) in listener.incoming().enumerate() {
        let conn = conn?;
        let peer = conn.peer_addr().ok();
        let key = Arc::clone(&key);
        handles.push(thread::spawn(move || {
            let (sp, private) = &*key;
            let mut stream = FramedStream::new(conn);
            let rng = rng::seeded(seed, CONNECTION_STREAM_BASE + i as u64);
            let result = serve_session(&mut stream, &private.x, &private.a, sp, rng);
            match &result {
                Ok(v) => info!("session {i} from {peer:?}: {v:?}"),
                Err(e) => warn!("session {i} from {peer:?} failed (code {}): {e}", e.code()),
            }
            result.map_err(|e| e.to_string())
        }));
        if max_sessions.is_some_and(|m| i + 1 >= m) {
            break;
        }
    }
    Ok(handles
        .into_iter()
        .map(|h| h.join().unwrap_or_else(|_| Err("session thread panicked".into())))
        .collect())
}

/// One end of an in-process byte pipe.
pub struct PipeEnd {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    pending: Vec<u8>,
    pos: usize,
}

/// Two connected in-process stream ends. Dropping one end makes reads on
/// the other see end of stream.
pub fn duplex() -> (PipeEnd, PipeEnd) {
    let (tx_a, rx_b) = channel();
    let (tx_b, rx_a) = channel();
    let end = |tx, rx| PipeEnd { tx, rx, pending: Vec::new(), pos: 0 };
    (end(tx_a, rx_a), end(tx_b, rx_b))
}

impl Read for PipeEnd {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if self.pos == self.pending.len() {
            match self.rx.recv() {
                Ok(chunk) => {
                    self.pending = chunk;
                    self.pos = 0;
                }
                Err(_) => return Ok(0),
            }
        }
        let n = buf.len().min(self.pending.len() - self.pos);
        buf[..n].copy_from_slice(&self.pending[self.pos..self.pos + n]);
        self.pos += n;
        Ok(n)
    }
}

impl Write for PipeEnd {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        self.tx
            .send(buf.to_vec())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "peer end dropped"))?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}
