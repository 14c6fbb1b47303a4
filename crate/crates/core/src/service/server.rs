use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;

use crate::bench::{CaseId, Suite};
use crate::error::{Error, Result};
use crate::fkf::GridHeader;
use crate::grid::Field;
use crate::kernel::{DriftScheme, Interpolation, Propagator, PropagatorConfig};
use crate::kv::{self, KvMap};
use crate::pde::{drift, PdeSpec};

use super::frame::{write_frame, ErrorCode, Frame, FrameHeader, FrameReader, Op, ReadError};

/// Default payload cap: 64 fields of 128 x 128 points.
pub const DEFAULT_MAX_PAYLOAD_BYTES: usize = 64 * 128 * 128 * 8;

/// Keys of a service config besides those of the PDE itself.
const SERVICE_KEYS: [&str; 7] = [
    "suite",
    "case",
    "dt",
    "eps",
    "drift_scheme",
    "interpolation",
    "max_payload_bytes",
];

/// The registered problem and the default propagator settings.
#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub pde: PdeSpec,
    pub propagator: PropagatorConfig,
    pub max_payload_bytes: usize,
}

impl ServiceConfig {
    /// Default step `T / frames`.
    pub fn new(pde: PdeSpec) -> Self {
        let dt = pde.frame_dt();
        ServiceConfig {
            pde,
            propagator: PropagatorConfig::new(dt),
            max_payload_bytes: DEFAULT_MAX_PAYLOAD_BYTES,
        }
    }

    /// Either `suite` + `case` (a benchmark case) or the PDE keys of
    /// [`PdeSpec::from_kv`], plus optional `dt`, `eps`, `drift_scheme`,
    /// `interpolation` and `max_payload_bytes`.
    pub fn from_kv(m: &KvMap) -> Result<Self> {
        let pde = match m.get("suite") {
            Some(s) => {
                let suite = Suite::parse(s)?;
                let case = CaseId::parse(&kv::require::<String>(m, "case")?)?;
                if let Some(k) = m.keys().find(|k| !SERVICE_KEYS.contains(&k.as_str())) {
                    return Err(Error::Config(format!(
                        "key `{k}` cannot be combined with `suite`"
                    )));
                }
                suite.case(case)?
            }
            None => {
                let rest: KvMap = m
                    .iter()
                    .filter(|(k, _)| !SERVICE_KEYS.contains(&k.as_str()))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                PdeSpec::from_kv(&rest)?
            }
        };
        let mut cfg = ServiceConfig::new(pde);
        if let Some(dt) = kv::get_parsed(m, "dt")? {
            cfg.propagator.dt = dt;
        }
        if let Some(eps) = kv::get_parsed(m, "eps")? {
            cfg.propagator = cfg.propagator.with_eps(eps);
        }
        if let Some(s) = m.get("drift_scheme") {
            cfg.propagator.drift_scheme = DriftScheme::parse(s)?;
        }
        if let Some(s) = m.get("interpolation") {
            cfg.propagator.interpolation = Interpolation::parse(s)?;
        }
        cfg.max_payload_bytes = kv::get_or(m, "max_payload_bytes", DEFAULT_MAX_PAYLOAD_BYTES)?;
        cfg.propagator
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(&kv::parse_kv(text)?)
    }
}

/// Where `serve` listens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Transport {
    Stdio,
    /// `host:port`; `tcp:PORT` binds to localhost.
    Tcp(String),
}

impl Transport {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "stdio" {
            return Ok(Transport::Stdio);
        }
        match s.strip_prefix("tcp:") {
            Some(port) if port.parse::<u16>().is_ok() => {
                Ok(Transport::Tcp(format!("127.0.0.1:{port}")))
            }
            Some(addr)
                if addr
                    .rsplit_once(':')
                    .is_some_and(|(_, p)| p.parse::<u16>().is_ok()) =>
            {
                Ok(Transport::Tcp(addr.to_string()))
            }
            _ => Err(Error::Config(format!(
                "transport must be `stdio` or `tcp:PORT`, got `{s}`"
            ))),
        }
    }
}

/// Immutable state shared by all connections.
#[derive(Debug)]
pub struct Service {
    config: ServiceConfig,
    default: Propagator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct PropagatorKey {
    dt: u64,
    eps: u64,
    drift_scheme: DriftScheme,
    interpolation: Interpolation,
}

impl PropagatorKey {
    fn of(c: &PropagatorConfig) -> Self {
        PropagatorKey {
            dt: c.dt.to_bits(),
            eps: c.eps.to_bits(),
            drift_scheme: c.drift_scheme,
            interpolation: c.interpolation,
        }
    }
}

impl Service {
    /// Builds the default propagator (and the operator of a linear problem).
    pub fn new(config: ServiceConfig) -> Result<Self> {
        let default = Propagator::new(config.pde.clone(), config.propagator)?;
        Ok(Service { config, default })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    /// A fresh per-connection request handler.
    pub fn session(&self) -> Session<'_> {
        Session {
            service: self,
            cache: HashMap::new(),
        }
    }

    /// Answer frames from `reader` on `writer` until end of stream or
    /// `SHUTDOWN`; returns true on `SHUTDOWN`.
    pub fn serve_stream<R: BufRead, W: Write>(&self, reader: R, mut writer: W) -> Result<bool> {
        let mut frames = FrameReader::new(reader, self.config.max_payload_bytes);
        let mut session = self.session();
        loop {
            match frames.read() {
                Ok(None) => return Ok(false),
                Ok(Some(frame)) => {
                    let (reply, stop) = session.handle(frame);
                    write_frame(&mut writer, &reply)?;
                    if stop {
                        return Ok(true);
                    }
                }
                Err(ReadError::Protocol { code, message }) => {
                    write_frame(&mut writer, &Frame::error(code, message))?
                }
                Err(ReadError::Fatal(e)) if e.kind() == io::ErrorKind::UnexpectedEof => {
                    // best effort: the peer may already be gone
                    let _ = write_frame(
                        &mut writer,
                        &Frame::error(ErrorCode::BadLength, "stream ended inside a frame"),
                    );
                    return Ok(false);
                }
                Err(ReadError::Fatal(e)) => return Err(e.into()),
            }
        }
    }
}

/// Requests of one connection, answered strictly in order. Propagators for
/// non-default `dt` or flags are built on first use and kept per session.
pub struct Session<'a> {
    service: &'a Service,
    cache: HashMap<PropagatorKey, Propagator>,
}

type Reply = std::result::Result<Frame, Frame>;

impl Session<'_> {
    /// The response to `frame` and whether the server should stop.
    pub fn handle(&mut self, frame: Frame) -> (Frame, bool) {
        match frame.op() {
            Some(Op::Ping) => (frame, false),
            Some(Op::Shutdown) => (Frame::new(FrameHeader::new(Op::Shutdown), Vec::new()), true),
            Some(op @ (Op::Propagate | Op::Drift)) => {
                (self.compute(op, frame).unwrap_or_else(|e| e), false)
            }
            Some(Op::Error) => (
                Frame::error(ErrorCode::BadRequest, "ERROR is a response-only op"),
                false,
            ),
            None => (
                Frame::error(
                    ErrorCode::UnknownOp,
                    format!("unknown op `{}`", frame.header.op),
                ),
                false,
            ),
        }
    }

    fn compute(&mut self, op: Op, frame: Frame) -> Reply {
        let pde = &self.service.config.pde;
        let h = &frame.header;
        if let Some(d) = &h.pde {
            let requested = PdeSpec::from_descriptor(d)
                .map_err(|e| bad_request(format!("bad pde descriptor: {e}")))?;
            if &requested != pde {
                return Err(bad_request(format!(
                    "this service serves {}",
                    pde.descriptor()
                )));
            }
        }
        if let Some(g) = &h.grid {
            let grid = g.to_grid().map_err(|e| bad_request(e.to_string()))?;
            if grid != pde.grid {
                return Err(bad_request("request grid differs from the registered grid"));
            }
        }
        if h.components.is_some_and(|c| c != 1) {
            return Err(bad_request("requests carry scalar fields"));
        }
        let n = pde.grid.len();
        if frame.payload.is_empty() || frame.payload.len() % n != 0 {
            return Err(Frame::error(
                ErrorCode::BadLength,
                format!(
                    "payload of {} values is not a positive multiple of {n} grid points",
                    frame.payload.len()
                ),
            ));
        }
        let t = h.t.unwrap_or(0.0);
        let mut config = self.service.config.propagator;
        if let Some(dt) = h.dt {
            config.dt = dt;
        }
        if let Some(eps) = h.flags.eps {
            config = config.with_eps(eps);
        }
        if let Some(s) = h.flags.drift_scheme {
            config.drift_scheme = s;
        }
        if let Some(i) = h.flags.interpolation {
            config.interpolation = i;
        }

        let mut out = Vec::with_capacity(
            frame.payload.len() * if op == Op::Drift { pde.grid.dim() } else { 1 },
        );
        for chunk in frame.payload.chunks(n) {
            let u = Field::new(pde.grid, chunk.to_vec()).map_err(|e| bad_request(e.to_string()))?;
            let v = match op {
                Op::Drift => drift(pde, &u),
                _ => self.propagator(&config)?.step(&u, t),
            }
            .map_err(|e| Frame::error(ErrorCode::Failed, e.to_string()))?;
            out.extend_from_slice(v.values());
        }
        let mut reply = FrameHeader::new(op);
        reply.pde = Some(pde.descriptor());
        reply.t = Some(t);
        reply.grid = Some(GridHeader::from_grid(&pde.grid));
        if op == Op::Propagate {
            reply.dt = Some(config.dt);
            reply.flags = h.flags;
        }
        reply.components = Some(if op == Op::Drift { pde.grid.dim() } else { 1 });
        Ok(Frame::new(reply, out))
    }

    fn propagator(&mut self, config: &PropagatorConfig) -> std::result::Result<&Propagator, Frame> {
        let key = PropagatorKey::of(config);
        if key == PropagatorKey::of(self.service.default.config()) {
            return Ok(&self.service.default);
        }
        if !self.cache.contains_key(&key) {
            let p = Propagator::new(self.service.config.pde.clone(), *config)
                .map_err(|e| bad_request(e.to_string()))?;
            self.cache.insert(key, p);
        }
        Ok(&self.cache[&key])
    }
}

fn bad_request(message: impl Into<String>) -> Frame {
    Frame::error(ErrorCode::BadRequest, message)
}

/// A bound TCP listener serving one thread per connection.
pub struct TcpService {
    listener: TcpListener,
    service: Arc<Service>,
}

impl TcpService {
    pub fn bind(service: Service, addr: impl ToSocketAddrs) -> Result<Self> {
        Ok(TcpService {
            listener: TcpListener::bind(addr)?,
            service: Arc::new(service),
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accept connections until one of them sends `SHUTDOWN`.
    pub fn run(self) -> Result<()> {
        let addr = self.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        for stream in self.listener.incoming() {
            if stop.load(Ordering::SeqCst) {
                break;
            }
            let stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("fk serve: accept failed: {e}");
                    continue;
                }
            };
            let service = Arc::clone(&self.service);
            let stop = Arc::clone(&stop);
            thread::spawn(move || {
                let outcome = stream
                    .try_clone()
                    .map_err(Error::from)
                    .and_then(|r| service.serve_stream(BufReader::new(r), &stream));
                match outcome {
                    Ok(true) => {
                        stop.store(true, Ordering::SeqCst);
                        // wake the accept loop so it sees the flag
                        let _ = TcpStream::connect(addr);
                    }
                    Ok(false) => {}
                    Err(e) => eprintln!("fk serve: connection closed: {e}"),
                }
            });
        }
        Ok(())
    }
}

/// Serve `config` on `transport` until `SHUTDOWN` (or end of stdin).
pub fn serve(config: ServiceConfig, transport: &Transport) -> Result<()> {
    let service = Service::new(config)?;
    match transport {
        Transport::Stdio => {
            let stdin = io::stdin();
            let stdout = io::stdout();
            service.serve_stream(stdin.lock(), stdout.lock())?;
            Ok(())
        }
        Transport::Tcp(addr) => {
            let server = TcpService::bind(service, addr.as_str())?;
            eprintln!("fk serve: listening on {}", server.local_addr()?);
            server.run()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::propagate;
    use crate::pde::NsForcing;
    use std::io::Cursor;

    fn convdiff() -> ServiceConfig {
        ServiceConfig::parse("suite = convdiff\ncase = E1\n").unwrap()
    }

    fn request(op: Op, payload: Vec<f64>) -> Frame {
        Frame::new(FrameHeader::new(op), payload)
    }

    fn field(pde: &PdeSpec, k: f64) -> Field {
        Field::from_fn(pde.grid, |x| {
            (2.0 * std::f64::consts::PI * k * x[0]).sin() + 0.3 * x[1].cos()
        })
    }

    #[test]
    fn config_accepts_cases_and_pde_keys() {
        let a = convdiff();
        assert_eq!(a.pde.grid.len(), 64);
        assert_eq!(a.propagator.dt, a.pde.horizon / a.pde.frames as f64);
        let b = ServiceConfig::parse(
            "pde = convdiff\nbeta = 0.1\nkappa = 0.01\ndt = 0.05\ndrift_scheme = euler\n",
        )
        .unwrap();
        assert_eq!(b.propagator.dt, 0.05);
        assert_eq!(b.propagator.drift_scheme, DriftScheme::Euler);
        assert!(ServiceConfig::parse("suite = convdiff\ncase = E1\nkappa = 1\n").is_err());
        assert!(ServiceConfig::parse("suite = convdiff\ncase = E1\neps = 0.7\n").is_err());
    }

    #[test]
    fn transports_parse() {
        assert_eq!(Transport::parse("stdio").unwrap(), Transport::Stdio);
        assert_eq!(
            Transport::parse("tcp:7000").unwrap(),
            Transport::Tcp("127.0.0.1:7000".into())
        );
        assert_eq!(
            Transport::parse("tcp:0.0.0.0:7000").unwrap(),
            Transport::Tcp("0.0.0.0:7000".into())
        );
        assert!(Transport::parse("udp:1").is_err());
        assert!(Transport::parse("tcp:port").is_err());
    }

    #[test]
    fn propagate_matches_library_bit_for_bit() {
        let cfg = convdiff();
        let service = Service::new(cfg.clone()).unwrap();
        let mut s = service.session();
        let u = field(&cfg.pde, 3.0);
        let mut h = FrameHeader::new(Op::Propagate);
        h.t = Some(0.4);
        let (reply, stop) = s.handle(Frame::new(h, u.values().to_vec()));
        assert!(!stop);
        let expected = propagate(&u, &cfg.pde, 0.4, &cfg.propagator).unwrap();
        let got: Vec<u64> = reply.payload.iter().map(|v| v.to_bits()).collect();
        let want: Vec<u64> = expected.values().iter().map(|v| v.to_bits()).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn batches_and_flags() {
        let cfg = convdiff();
        let service = Service::new(cfg.clone()).unwrap();
        let mut s = service.session();
        let (a, b) = (field(&cfg.pde, 1.0), field(&cfg.pde, 2.0));
        let mut h = FrameHeader::new(Op::Propagate);
        h.dt = Some(0.05);
        h.flags.drift_scheme = Some(DriftScheme::Euler);
        let payload = [a.values(), b.values()].concat();
        let (reply, _) = s.handle(Frame::new(h, payload));
        let pc = cfg.propagator.with_drift_scheme(DriftScheme::Euler);
        let pc = PropagatorConfig { dt: 0.05, ..pc };
        let want = [
            propagate(&a, &cfg.pde, 0.0, &pc).unwrap().into_values(),
            propagate(&b, &cfg.pde, 0.0, &pc).unwrap().into_values(),
        ]
        .concat();
        assert_eq!(reply.payload, want);
        assert_eq!(reply.header.dt, Some(0.05));
    }

    #[test]
    fn drift_of_vorticity_has_two_components() {
        let pde = PdeSpec::navier_stokes(1e-3, NsForcing::Li).unwrap();
        let pde = pde
            .with_grid(
                crate::grid::Grid::square(16, 1.0, crate::grid::BoundaryKind::Periodic).unwrap(),
            )
            .unwrap();
        let service = Service::new(ServiceConfig::new(pde.clone())).unwrap();
        let u = field(&pde, 1.0);
        let (reply, _) = service
            .session()
            .handle(request(Op::Drift, u.values().to_vec()));
        assert_eq!(reply.header.components, Some(2));
        assert_eq!(reply.payload, drift(&pde, &u).unwrap().into_values());
    }

    #[test]
    fn malformed_requests_get_error_frames() {
        let cfg = convdiff();
        let service = Service::new(cfg.clone()).unwrap();
        let mut s = service.session();
        let code = |f: &Frame| f.header.code;
        assert_eq!(
            code(&s.handle(request(Op::Propagate, vec![1.0; 63])).0),
            Some(ErrorCode::BadLength)
        );
        let mut unknown = request(Op::Ping, vec![]);
        unknown.header.op = "FLY".into();
        assert_eq!(code(&s.handle(unknown).0), Some(ErrorCode::UnknownOp));
        let mut wrong = request(Op::Propagate, vec![0.0; 64]);
        wrong.header.pde = Some(
            PdeSpec::convection_diffusion(0.1, 0.05, 5)
                .unwrap()
                .descriptor(),
        );
        assert_eq!(code(&s.handle(wrong).0), Some(ErrorCode::BadRequest));
        let mut nan = vec![0.0; 64];
        nan[3] = f64::NAN;
        assert_eq!(
            code(&s.handle(request(Op::Propagate, nan)).0),
            Some(ErrorCode::BadRequest)
        );
    }

    #[test]
    fn stream_survives_bad_frames_and_stops_on_shutdown() {
        let service = Service::new(convdiff()).unwrap();
        let mut input = Vec::new();
        let mut truncated = request(Op::Ping, vec![1.0, 2.0]);
        truncated.header.count = 3;
        write_frame(&mut input, &truncated).unwrap();
        write_frame(&mut input, &request(Op::Ping, vec![5.0])).unwrap();
        write_frame(&mut input, &request(Op::Shutdown, vec![])).unwrap();
        write_frame(&mut input, &request(Op::Ping, vec![6.0])).unwrap();
        let mut output = Vec::new();
        assert!(service
            .serve_stream(Cursor::new(input), &mut output)
            .unwrap());
        let mut r = FrameReader::new(Cursor::new(output), usize::MAX);
        assert_eq!(
            r.read().unwrap().unwrap().header.code,
            Some(ErrorCode::BadLength)
        );
        assert_eq!(r.read().unwrap().unwrap().payload, vec![5.0]);
        assert_eq!(r.read().unwrap().unwrap().op(), Some(Op::Shutdown));
        assert!(r.read().unwrap().is_none());
    }
}
