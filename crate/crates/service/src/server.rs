//! Localization server: shared radio map, per-connection tracking
//! sessions, one thread per connection.
//!
//! The map is an immutable snapshot behind an `Arc`. Ingestion holds the
//! record lock while it appends to the store and rebuilds the map, then
//! swaps the new snapshot in; readers clone the `Arc` current when their
//! request arrives.

use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, PoisonError, RwLock};
use std::thread;

use indoorloc::store::{append_record, load_store, read_ap_count, to_fingerprints};
use indoorloc::{
    build_radio_map, locate, Error, FingerprintRecord, LocateConfig, PdrConfig, PdrTracker, RadioMap, RssVector,
};

use crate::protocol::{parse_request, ErrorCode, Request, Response};

/// Longest accepted request line, in bytes, excluding the terminator.
pub const MAX_LINE_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct ServerConfig {
    pub ap_count: usize,
    /// Used by `LOCATE` without an explicit algorithm; its `k` and epsilon
    /// also parameterize the `TRACK_START` fix.
    pub locate: LocateConfig<f64>,
    pub pdr: PdrConfig<f64>,
    /// CSV store that ingested records are appended to. Existing records
    /// are loaded at startup.
    pub store_path: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            ap_count: 5,
            locate: LocateConfig::default(),
            pdr: PdrConfig::default(),
            store_path: None,
        }
    }
}

#[derive(Debug)]
pub struct ServerState {
    config: ServerConfig,
    records: Mutex<Vec<FingerprintRecord<f64>>>,
    map: RwLock<Option<Arc<RadioMap<f64>>>>,
    shutdown: AtomicBool,
}

impl ServerState {
    /// Validates the configuration and loads the store if it exists. A
    /// store whose header disagrees with `ap_count` is an error.
    pub fn new(config: ServerConfig) -> indoorloc::Result<Self> {
        config.locate.validate()?;
        config.pdr.validate()?;
        if config.ap_count == 0 {
            return Err(Error::Config("ap_count must be positive".into()));
        }
        let mut records = Vec::new();
        if let Some(path) = &config.store_path {
            if path.exists() && std::fs::metadata(path)?.len() > 0 {
                let declared = read_ap_count(std::fs::File::open(path)?)?;
                if declared != config.ap_count {
                    return Err(Error::Shape {
                        expected: config.ap_count,
                        got: declared,
                    });
                }
                records = load_store(path)?;
            }
        }
        let map = rebuild(&records, config.ap_count)?;
        Ok(Self {
            config,
            records: Mutex::new(records),
            map: RwLock::new(map),
            shutdown: AtomicBool::new(false),
        })
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    pub fn snapshot(&self) -> Option<Arc<RadioMap<f64>>> {
        self.map.read().unwrap_or_else(PoisonError::into_inner).clone()
    }

    pub fn record_count(&self) -> usize {
        self.records.lock().unwrap_or_else(PoisonError::into_inner).len()
    }

    pub fn is_shutting_down(&self) -> bool {
        self.shutdown.load(Ordering::SeqCst)
    }

    fn ingest(&self, record: FingerprintRecord<f64>) -> Response {
        if record.ap_rss.len() != self.config.ap_count {
            return width_error(self.config.ap_count, record.ap_rss.len());
        }
        let record = match RssVector::new(record.ap_rss.clone()) {
            Ok(rss) => FingerprintRecord::new(record.x, record.y, rss.into_vec()),
            Err(e) => return Response::error(ErrorCode::Protocol, e.to_string()),
        };
        if let Err(e) = record.to_fingerprint() {
            return Response::error(ErrorCode::Protocol, e.to_string());
        }

        let mut records = self.records.lock().unwrap_or_else(PoisonError::into_inner);
        if let Some(path) = &self.config.store_path {
            if let Err(e) = append_record(path, &record) {
                return Response::error(ErrorCode::Storage, e.to_string());
            }
        }
        records.push(record);
        match rebuild(&records, self.config.ap_count) {
            Ok(map) => {
                let points = map.as_ref().map_or(0, |m| m.len());
                *self.map.write().unwrap_or_else(PoisonError::into_inner) = map;
                Response::Ingested {
                    records: records.len(),
                    points,
                }
            }
            Err(e) => Response::error(ErrorCode::Rejected, e.to_string()),
        }
    }
}

fn rebuild(records: &[FingerprintRecord<f64>], ap_count: usize) -> indoorloc::Result<Option<Arc<RadioMap<f64>>>> {
    if records.is_empty() {
        return Ok(None);
    }
    let map = build_radio_map(&to_fingerprints(records)?, ap_count, None)?;
    Ok(Some(Arc::new(map)))
}

fn width_error(expected: usize, got: usize) -> Response {
    Response::error(
        ErrorCode::Protocol,
        format!("expected {expected} RSS values, got {got}"),
    )
}

fn library_error(e: Error) -> Response {
    match e {
        Error::EmptyMap => Response::error(ErrorCode::EmptyMap, "empty map"),
        Error::Shape { expected, got } => width_error(expected, got),
        other => Response::error(ErrorCode::Rejected, other.to_string()),
    }
}

/// Per-connection state.
#[derive(Debug, Clone, Default)]
pub struct Session {
    tracker: Option<PdrTracker<f64>>,
}

impl Session {
    pub fn is_tracking(&self) -> bool {
        self.tracker.is_some()
    }
}

/// Serves one request. Tracking state lives in `session`; everything else
/// in `state`.
pub fn handle_request(state: &ServerState, session: &mut Session, request: Request) -> Response {
    let ap_count = state.config.ap_count;
    match request {
        Request::Ingest(record) => state.ingest(record),
        Request::Locate { rss, config } => {
            if rss.len() != ap_count {
                return width_error(ap_count, rss.len());
            }
            let Some(map) = state.snapshot() else {
                return library_error(Error::EmptyMap);
            };
            let config = config.unwrap_or(state.config.locate);
            match locate(&map, &rss, &config) {
                Ok(p) => Response::Position(p),
                Err(e) => library_error(e),
            }
        }
        Request::TrackStart { rss } => {
            if rss.len() != ap_count {
                return width_error(ap_count, rss.len());
            }
            let Some(map) = state.snapshot() else {
                return library_error(Error::EmptyMap);
            };
            let config = LocateConfig {
                algorithm: indoorloc::Algorithm::Wknn,
                ..state.config.locate
            };
            match locate(&map, &rss, &config) {
                Ok(fix) => {
                    session.tracker = Some(PdrTracker::new(fix, None));
                    Response::Position(fix)
                }
                Err(e) => library_error(e),
            }
        }
        Request::TrackStep { event, step_length } => {
            let Some(tracker) = session.tracker.as_mut() else {
                return Response::error(ErrorCode::Session, "no open track; send TRACK_START first");
            };
            let d = step_length.unwrap_or(state.config.pdr.step_length);
            match tracker.step(&event, d) {
                Ok(point) => Response::Step(point),
                Err(e) => library_error(e),
            }
        }
        Request::Shutdown => {
            state.shutdown.store(true, Ordering::SeqCst);
            Response::Bye
        }
    }
}

/// Decodes and serves one raw line.
pub fn handle_line(state: &ServerState, session: &mut Session, line: &[u8]) -> Response {
    let Ok(text) = std::str::from_utf8(line) else {
        return Response::error(ErrorCode::Protocol, "request is not valid UTF-8");
    };
    match parse_request(text) {
        Ok(request) => handle_request(state, session, request),
        Err(e) => Response::error(ErrorCode::Protocol, e.to_string()),
    }
}

enum Line {
    Complete(Vec<u8>),
    TooLong,
    Eof,
}

fn read_line<R: BufRead>(reader: &mut R) -> io::Result<Line> {
    let mut buf = Vec::new();
    let n = reader
        .by_ref()
        .take(MAX_LINE_BYTES as u64 + 2)
        .read_until(b'\n', &mut buf)?;
    if n == 0 {
        return Ok(Line::Eof);
    }
    let terminated = buf.last() == Some(&b'\n');
    if terminated {
        buf.pop();
        if buf.last() == Some(&b'\r') {
            buf.pop();
        }
    }
    if buf.len() <= MAX_LINE_BYTES {
        return Ok(Line::Complete(buf));
    }
    if !terminated {
        let mut sink = Vec::new();
        while reader
            .by_ref()
            .take(MAX_LINE_BYTES as u64)
            .read_until(b'\n', &mut sink)?
            > 0
        {
            if sink.last() == Some(&b'\n') {
                break;
            }
            sink.clear();
        }
    }
    Ok(Line::TooLong)
}

/// Runs the request loop for one connection until EOF or `SHUTDOWN`.
pub fn serve_connection<R: Read, W: Write>(state: &ServerState, input: R, output: W) -> io::Result<()> {
    let mut reader = BufReader::new(input);
    let mut writer = BufWriter::new(output);
    let mut session = Session::default();
    loop {
        let response = match read_line(&mut reader)? {
            Line::Eof => return Ok(()),
            Line::TooLong => Response::error(
                ErrorCode::Protocol,
                format!("request longer than {MAX_LINE_BYTES} bytes"),
            ),
            Line::Complete(line) => handle_line(state, &mut session, &line),
        };
        writeln!(writer, "{response}")?;
        writer.flush()?;
        if response == Response::Bye {
            return Ok(());
        }
    }
}

pub struct Server {
    listener: TcpListener,
    state: Arc<ServerState>,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, state: ServerState) -> io::Result<Self> {
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            state: Arc::new(state),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn state(&self) -> Arc<ServerState> {
        Arc::clone(&self.state)
    }

    /// Accepts connections until a client sends `SHUTDOWN`. Connections
    /// still open at that point are left to finish on their own threads.
    pub fn run(self) -> io::Result<()> {
        let mut wake = self.listener.local_addr()?;
        if wake.ip().is_unspecified() {
            wake.set_ip(match wake {
                SocketAddr::V4(_) => std::net::Ipv4Addr::LOCALHOST.into(),
                SocketAddr::V6(_) => std::net::Ipv6Addr::LOCALHOST.into(),
            });
        }
        for stream in self.listener.incoming() {
            if self.state.is_shutting_down() {
                break;
            }
            let stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("accept failed: {e}");
                    continue;
                }
            };
            let state = Arc::clone(&self.state);
            thread::spawn(move || {
                if let Err(e) = connection(&state, stream) {
                    if e.kind() != io::ErrorKind::BrokenPipe && e.kind() != io::ErrorKind::ConnectionReset {
                        eprintln!("connection error: {e}");
                    }
                }
                if state.is_shutting_down() {
                    // Unblock the accept loop.
                    let _ = TcpStream::connect(wake);
                }
            });
        }
        Ok(())
    }
}

fn connection(state: &ServerState, stream: TcpStream) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let reader = stream.try_clone()?;
    serve_connection(state, reader, stream)
}
