//! Propagation service: the propagator behind a framed request/response
//! protocol (`FKP1`) on stdio or TCP.
//!
//! Requests carry raw little-endian `f64` fields on the registered grid;
//! `PROPAGATE` answers with [`Propagator::step`](crate::kernel::Propagator::step)
//! of every field in the payload, `DRIFT` with the drift field, `PING`
//! echoes and `SHUTDOWN` stops the server. Malformed frames are answered with
//! an `ERROR` frame and the connection stays open. Linear problems can also
//! be exported once as an `FKW1` operator file, see
//! [`export_operator`](crate::kernel::export_operator).

mod client;
mod frame;
mod server;

pub use client::Client;
pub use frame::{
    write_frame, ErrorCode, Flags, Frame, FrameHeader, FrameReader, Op, ReadError, MAGIC,
    MAX_HEADER_BYTES,
};
pub use server::{
    serve, Service, ServiceConfig, Session, TcpService, Transport, DEFAULT_MAX_PAYLOAD_BYTES,
};
