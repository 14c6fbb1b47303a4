//! `FKP1` frames.
//!
//! ```text
//! "FKP1" | u32 LE header length | header (JSON) | payload (LE f64)
//! ```
//!
//! `payload_bytes` in the header is the number of bytes that follow it; it
//! defaults to `8 * count`. A reader always consumes exactly
//! `payload_bytes`, so a length mismatch is reported without losing sync.

use std::fmt;
use std::io::{self, BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::fkf::GridHeader;
use crate::kernel::{DriftScheme, Interpolation};

pub const MAGIC: [u8; 4] = *b"FKP1";

/// Headers longer than this are skipped and answered with `OVERSIZED`.
pub const MAX_HEADER_BYTES: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    BadMagic,
    BadHeader,
    BadLength,
    UnknownOp,
    Oversized,
    BadRequest,
    /// The library call itself failed (blow-up, normalization failure, ...).
    Failed,
}

impl ErrorCode {
    pub fn name(self) -> &'static str {
        match self {
            ErrorCode::BadMagic => "BAD_MAGIC",
            ErrorCode::BadHeader => "BAD_HEADER",
            ErrorCode::BadLength => "BAD_LENGTH",
            ErrorCode::UnknownOp => "UNKNOWN_OP",
            ErrorCode::Oversized => "OVERSIZED",
            ErrorCode::BadRequest => "BAD_REQUEST",
            ErrorCode::Failed => "FAILED",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Ping,
    Propagate,
    Drift,
    Shutdown,
    Error,
}

impl Op {
    pub fn parse(s: &str) -> Option<Op> {
        match s {
            "PING" => Some(Op::Ping),
            "PROPAGATE" => Some(Op::Propagate),
            "DRIFT" => Some(Op::Drift),
            "SHUTDOWN" => Some(Op::Shutdown),
            "ERROR" => Some(Op::Error),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Op::Ping => "PING",
            Op::Propagate => "PROPAGATE",
            Op::Drift => "DRIFT",
            Op::Shutdown => "SHUTDOWN",
            Op::Error => "ERROR",
        }
    }
}

/// Ablation switches a request may override.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_scheme: Option<DriftScheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpolation: Option<Interpolation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

impl Flags {
    pub fn is_empty(&self) -> bool {
        *self == Flags::default()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameHeader {
    pub op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pde: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridHeader>,
    #[serde(default, skip_serializing_if = "Flags::is_empty")]
    pub flags: Flags,
    /// Number of `f64` values in the payload.
    #[serde(default)]
    pub count: usize,
    /// Values per grid point (2 for a drift response in 2-D).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload_bytes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<ErrorCode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl FrameHeader {
    pub fn new(op: Op) -> Self {
        FrameHeader {
            op: op.name().into(),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub header: FrameHeader,
    pub payload: Vec<f64>,
}

impl Frame {
    /// A frame whose `count` and `payload_bytes` match `payload`.
    pub fn new(mut header: FrameHeader, payload: Vec<f64>) -> Self {
        header.count = payload.len();
        header.payload_bytes = Some(8 * payload.len());
        Frame { header, payload }
    }

    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        let mut h = FrameHeader::new(Op::Error);
        h.code = Some(code);
        h.message = Some(message.into());
        Frame::new(h, Vec::new())
    }

    pub fn op(&self) -> Option<Op> {
        Op::parse(&self.header.op)
    }

    pub fn is_error(&self) -> bool {
        self.op() == Some(Op::Error)
    }
}

/// Serialize `frame` exactly as given; `count` and `payload_bytes` are not
/// rewritten, so malformed frames can be produced on purpose.
pub fn write_frame<W: Write>(mut w: W, frame: &Frame) -> io::Result<()> {
    let header = serde_json::to_vec(&frame.header).map_err(io::Error::other)?;
    let mut buf = Vec::with_capacity(8 + header.len() + 8 * frame.payload.len());
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header);
    for v in &frame.payload {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()
}

/// A frame-level failure. `Fatal` means the stream is unusable; the others
/// leave the reader positioned at the next frame.
#[derive(Debug)]
pub enum ReadError {
    Protocol { code: ErrorCode, message: String },
    Fatal(io::Error),
}

impl ReadError {
    fn protocol(code: ErrorCode, message: impl Into<String>) -> Self {
        ReadError::Protocol {
            code,
            message: message.into(),
        }
    }
}

impl From<io::Error> for ReadError {
    fn from(e: io::Error) -> Self {
        ReadError::Fatal(e)
    }
}

/// Reads frames from a byte stream, resynchronizing on the magic after a
/// `BAD_MAGIC`.
pub struct FrameReader<R> {
    inner: R,
    max_payload_bytes: usize,
    resync: bool,
}

impl<R: BufRead> FrameReader<R> {
    pub fn new(inner: R, max_payload_bytes: usize) -> Self {
        FrameReader {
            inner,
            max_payload_bytes,
            resync: false,
        }
    }

    pub fn get_mut(&mut self) -> &mut R {
        &mut self.inner
    }

    /// The next frame; `Ok(None)` at a clean end of stream.
    pub fn read(&mut self) -> Result<Option<Frame>, ReadError> {
        let mut magic = [0u8; 4];
        if self.resync {
            if !self.scan_to_magic()? {
                return Ok(None);
            }
            self.resync = false;
        } else {
            if !read_or_eof(&mut self.inner, &mut magic)? {
                return Ok(None);
            }
            if magic != MAGIC {
                self.resync = true;
                return Err(ReadError::protocol(
                    ErrorCode::BadMagic,
                    format!("expected FKP1, found {:?}", String::from_utf8_lossy(&magic)),
                ));
            }
        }
        let mut len = [0u8; 4];
        self.inner.read_exact(&mut len)?;
        let header_len = u32::from_le_bytes(len) as usize;
        if header_len > MAX_HEADER_BYTES {
            // the payload length is unknown; resume at the next magic
            self.skip(header_len)?;
            self.resync = true;
            return Err(ReadError::protocol(
                ErrorCode::Oversized,
                format!("header of {header_len} bytes exceeds {MAX_HEADER_BYTES}"),
            ));
        }
        let mut raw = vec![0u8; header_len];
        self.inner.read_exact(&mut raw)?;
        let header: FrameHeader = match serde_json::from_slice(&raw) {
            Ok(h) => h,
            Err(e) => {
                self.resync = true;
                return Err(ReadError::protocol(
                    ErrorCode::BadHeader,
                    format!("header is not valid JSON: {e}"),
                ));
            }
        };
        let payload_bytes = header.payload_bytes.unwrap_or(8 * header.count);
        if payload_bytes > self.max_payload_bytes {
            self.skip(payload_bytes)?;
            return Err(ReadError::protocol(
                ErrorCode::Oversized,
                format!(
                    "payload of {payload_bytes} bytes exceeds the cap of {}",
                    self.max_payload_bytes
                ),
            ));
        }
        let mut bytes = vec![0u8; payload_bytes];
        self.inner.read_exact(&mut bytes)?;
        if payload_bytes != 8 * header.count {
            return Err(ReadError::protocol(
                ErrorCode::BadLength,
                format!(
                    "payload has {payload_bytes} bytes, header count {} needs {}",
                    header.count,
                    8 * header.count
                ),
            ));
        }
        let payload = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(Some(Frame { header, payload }))
    }

    fn skip(&mut self, n: usize) -> io::Result<()> {
        let copied = io::copy(&mut (&mut self.inner).take(n as u64), &mut io::sink())?;
        if copied as usize != n {
            return Err(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                "stream ended inside a frame",
            ));
        }
        Ok(())
    }

    /// Consume bytes up to and including the next magic; false at end of stream.
    fn scan_to_magic(&mut self) -> io::Result<bool> {
        let mut window = [0u8; 4];
        let mut filled = 0;
        let mut byte = [0u8; 1];
        loop {
            if self.inner.read(&mut byte)? == 0 {
                return Ok(false);
            }
            if filled < 4 {
                window[filled] = byte[0];
                filled += 1;
            } else {
                window.rotate_left(1);
                window[3] = byte[0];
            }
            if filled == 4 && window == MAGIC {
                return Ok(true);
            }
        }
    }
}

/// Fill `buf`; false if the stream ended before its first byte.
fn read_or_eof<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<bool> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) if got == 0 => return Ok(false),
            Ok(0) => {
                return Err(io::Error::new(
                    io::ErrorKind::UnexpectedEof,
                    "stream ended inside a frame",
                ))
            }
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn bytes(frames: &[Frame]) -> Vec<u8> {
        let mut out = Vec::new();
        for f in frames {
            write_frame(&mut out, f).unwrap();
        }
        out
    }

    fn ping(payload: Vec<f64>) -> Frame {
        Frame::new(FrameHeader::new(Op::Ping), payload)
    }

    #[test]
    fn frames_round_trip() {
        let a = ping(vec![1.5, -0.0, f64::MIN_POSITIVE]);
        let mut h = FrameHeader::new(Op::Propagate);
        h.t = Some(0.25);
        h.flags.drift_scheme = Some(DriftScheme::Euler);
        let b = Frame::new(h, vec![3.0; 4]);
        let data = bytes(&[a.clone(), b.clone()]);
        let mut r = FrameReader::new(Cursor::new(data), 1 << 20);
        assert_eq!(r.read().unwrap().unwrap(), a);
        assert_eq!(r.read().unwrap().unwrap(), b);
        assert!(r.read().unwrap().is_none());
    }

    #[test]
    fn layout_is_magic_length_header_payload() {
        let data = bytes(&[ping(vec![2.0])]);
        assert_eq!(&data[..4], b"FKP1");
        let len = u32::from_le_bytes(data[4..8].try_into().unwrap()) as usize;
        let header: serde_json::Value = serde_json::from_slice(&data[8..8 + len]).unwrap();
        assert_eq!(header["op"], "PING");
        assert_eq!(header["count"], 1);
        assert_eq!(&data[8 + len..], &2.0f64.to_le_bytes());
    }

    #[test]
    fn length_mismatch_keeps_sync() {
        let mut bad = ping(vec![1.0, 2.0, 3.0]);
        bad.header.count = 2;
        let good = ping(vec![7.0]);
        let mut r = FrameReader::new(Cursor::new(bytes(&[bad, good.clone()])), 1 << 20);
        match r.read() {
            Err(ReadError::Protocol { code, .. }) => assert_eq!(code, ErrorCode::BadLength),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(r.read().unwrap().unwrap(), good);
    }

    #[test]
    fn oversized_payload_is_skipped() {
        let big = ping(vec![0.0; 100]);
        let good = ping(vec![]);
        let mut r = FrameReader::new(Cursor::new(bytes(&[big, good.clone()])), 64);
        match r.read() {
            Err(ReadError::Protocol { code, .. }) => assert_eq!(code, ErrorCode::Oversized),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(r.read().unwrap().unwrap(), good);
    }

    #[test]
    fn garbage_is_skipped_up_to_the_next_magic() {
        let good = ping(vec![4.0]);
        let mut data = b"junk bytes FKP".to_vec();
        data.extend(bytes(&[good.clone()]));
        let mut r = FrameReader::new(Cursor::new(data), 1 << 20);
        match r.read() {
            Err(ReadError::Protocol { code, .. }) => assert_eq!(code, ErrorCode::BadMagic),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(r.read().unwrap().unwrap(), good);
    }

    #[test]
    fn truncated_stream_is_fatal() {
        let mut data = bytes(&[ping(vec![1.0, 2.0])]);
        data.truncate(data.len() - 3);
        let mut r = FrameReader::new(Cursor::new(data), 1 << 20);
        assert!(matches!(r.read(), Err(ReadError::Fatal(_))));
    }
}
