use std::io::{BufReader, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};

use crate::error::{Error, Result};
use crate::grid::Field;

use super::frame::{write_frame, Flags, Frame, FrameHeader, FrameReader, Op, ReadError};

/// Synchronous client: one request in flight, replies read in order.
pub struct Client<R: Read, W: Write> {
    reader: FrameReader<BufReader<R>>,
    writer: W,
}

impl Client<TcpStream, TcpStream> {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Client::new(stream.try_clone()?, stream))
    }
}

impl<R: Read, W: Write> Client<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        Client {
            reader: FrameReader::new(BufReader::new(reader), usize::MAX),
            writer,
        }
    }

    /// Send `frame` and return the reply; error frames become [`Error::Service`].
    pub fn call(&mut self, frame: &Frame) -> Result<Frame> {
        write_frame(&mut self.writer, frame)?;
        let reply = match self.reader.read() {
            Ok(Some(f)) => f,
            Ok(None) => return Err(Error::Format("service closed the connection".into())),
            Err(ReadError::Protocol { code, message }) => {
                return Err(Error::Format(format!(
                    "malformed reply ({code}): {message}"
                )))
            }
            Err(ReadError::Fatal(e)) => return Err(e.into()),
        };
        if reply.is_error() {
            return Err(Error::Service {
                code: reply
                    .header
                    .code
                    .map_or("UNKNOWN".into(), |c| c.name().to_string()),
                message: reply.header.message.unwrap_or_default(),
            });
        }
        Ok(reply)
    }

    pub fn ping(&mut self, payload: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .call(&Frame::new(FrameHeader::new(Op::Ping), payload.to_vec()))?
            .payload)
    }

    /// One step of every field in `batch` at time `t` with the registered
    /// settings overridden by `flags`.
    pub fn propagate_batch(
        &mut self,
        batch: &[Field],
        t: f64,
        dt: Option<f64>,
        flags: Flags,
    ) -> Result<Vec<Field>> {
        let Some(first) = batch.first() else {
            return Ok(Vec::new());
        };
        let grid = *first.grid();
        let mut h = FrameHeader::new(Op::Propagate);
        h.t = Some(t);
        h.dt = dt;
        h.flags = flags;
        let payload = batch
            .iter()
            .flat_map(|f| f.values().iter().copied())
            .collect();
        let reply = self.call(&Frame::new(h, payload))?;
        reply
            .payload
            .chunks(grid.len())
            .map(|c| Field::new(grid, c.to_vec()))
            .collect()
    }

    pub fn propagate(&mut self, u: &Field, t: f64) -> Result<Field> {
        let mut out = self.propagate_batch(std::slice::from_ref(u), t, None, Flags::default())?;
        out.pop()
            .ok_or_else(|| Error::Format("empty PROPAGATE reply".into()))
    }

    /// The drift field of state `u`, one component per axis.
    pub fn drift(&mut self, u: &Field) -> Result<Field> {
        let reply = self.call(&Frame::new(
            FrameHeader::new(Op::Drift),
            u.values().to_vec(),
        ))?;
        Field::with_components(
            *u.grid(),
            reply.header.components.unwrap_or(1),
            reply.payload,
        )
    }

    pub fn shutdown(&mut self) -> Result<()> {
        self.call(&Frame::new(FrameHeader::new(Op::Shutdown), Vec::new()))?;
        Ok(())
    }
}
