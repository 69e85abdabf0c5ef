//! Text-over-TCP baseline transport with a per-call access pattern.
//!
//! Each frame costs one `NOTIFY`, `K` separate `GET`/`VAL` round trips that
//! each carry one base64 chunk of the encoded view, and one `ACTION`/`OK`
//! round trip. Everything is newline-terminated UTF-8:
//!
//! ```text
//! C: HELLO <1|2> <0|1 blind> <name>      S: READY <uuid> <K>   | ERR <code> <message>
//! S: NOTIFY <frame_index>
//! C: GET <field_id>                      S: VAL <field_id> <base64>
//! C: ACTION <string>                     S: OK | OK STALE
//! S: END                                 (game over, connection closes)
//! ```
//!
//! Field ids `0..K` partition the protobuf encoding of the player's view into
//! contiguous, near-equal chunks, so the reassembled view is byte-identical
//! to what the gRPC stream carries.

use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use prost::Message;
use thiserror::Error;

use crate::agent::{self, Agent};
use crate::client::{ClientError, RunSummary};
use crate::game::{ActionCommand, PlayerGameData};
use crate::lobby::{Lobby, LobbyError};
use crate::proto;

pub const DEFAULT_BASELINE_PORT: u16 = 50052;
pub const DEFAULT_ACCESSOR_CALLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaselineConfig {
    pub port: u16,
    /// `K`: separate GET round trips per frame.
    pub accessor_calls_per_frame: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            port: DEFAULT_BASELINE_PORT,
            accessor_calls_per_frame: DEFAULT_ACCESSOR_CALLS,
        }
    }
}

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("peer closed the connection")]
    Closed,
    #[error(transparent)]
    Lobby(#[from] LobbyError),
}

/// Byte range of chunk `id` when `len` bytes are split into `k` parts.
pub fn chunk_range(len: usize, k: usize, id: usize) -> std::ops::Range<usize> {
    debug_assert!(id < k);
    (id * len / k)..((id + 1) * len / k)
}

fn lobby_error_code(e: &LobbyError) -> &'static str {
    match e {
        LobbyError::SlotTaken(_) => "SLOT_TAKEN",
        LobbyError::InvalidArgument(_) => "INVALID_ARGUMENT",
        LobbyError::NotFound(_) => "NOT_FOUND",
        LobbyError::AlreadyStreaming(_) => "ALREADY_STREAMING",
        LobbyError::GameInProgress => "GAME_IN_PROGRESS",
        LobbyError::Gate(_) => "INTERNAL",
    }
}

struct LineIo {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    line: String,
    sent: u64,
    received: u64,
}

impl LineIo {
    fn new(stream: TcpStream) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        Ok(Self {
            reader: BufReader::with_capacity(256 * 1024, stream.try_clone()?),
            writer: BufWriter::with_capacity(256 * 1024, stream),
            line: String::new(),
            sent: 0,
            received: 0,
        })
    }

    /// Next line without its terminator, or `None` at EOF.
    fn read_line(&mut self) -> io::Result<Option<&str>> {
        self.line.clear();
        if self.reader.read_line(&mut self.line)? == 0 {
            return Ok(None);
        }
        if !self.line.ends_with('\n') {
            return Err(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                "truncated line",
            ));
        }
        self.received += 1;
        Ok(Some(self.line.trim_end_matches(['\n', '\r'])))
    }

    fn send(&mut self, parts: &[&str]) -> io::Result<()> {
        for (i, p) in parts.iter().enumerate() {
            if i > 0 {
                self.writer.write_all(b" ")?;
            }
            self.writer.write_all(p.as_bytes())?;
        }
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        self.sent += 1;
        Ok(())
    }
}

/// Baseline server bridging line-protocol connections to the shared lobby.
#[derive(Debug)]
pub struct BaselineServer {
    local_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl BaselineServer {
    pub fn start(addr: SocketAddr, accessor_calls: usize, lobby: Arc<Lobby>) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let local_addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let stop_flag = Arc::clone(&stop);
        let accept = thread::Builder::new()
            .name("baseline-accept".into())
            .spawn(move || {
                for conn in listener.incoming() {
                    if stop_flag.load(Ordering::SeqCst) {
                        break;
                    }
                    let stream = match conn {
                        Ok(s) => s,
                        Err(e) => {
                            log::warn!("baseline accept failed: {e}");
                            continue;
                        }
                    };
                    let lobby = Arc::clone(&lobby);
                    let spawned =
                        thread::Builder::new()
                            .name("baseline-conn".into())
                            .spawn(move || {
                                let peer = stream.peer_addr().ok();
                                if let Err(e) = serve_connection(stream, accessor_calls, &lobby) {
                                    log::warn!("baseline connection {peer:?} ended: {e}");
                                }
                            });
                    if let Err(e) = spawned {
                        log::error!("cannot spawn baseline handler: {e}");
                    }
                }
            })?;
        log::info!("baseline line protocol listening on {local_addr} (K={accessor_calls})");
        Ok(Self {
            local_addr,
            stop,
            accept: Some(accept),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn shutdown(&mut self) {
        if self.stop.swap(true, Ordering::SeqCst) {
            return;
        }
        // wake the blocking accept
        let _ = TcpStream::connect(self.local_addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    /// Block until the accept loop exits.
    pub fn wait(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for BaselineServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn serve_connection(stream: TcpStream, k: usize, lobby: &Arc<Lobby>) -> Result<(), BaselineError> {
    let mut io = LineIo::new(stream)?;
    let hello = io.read_line()?.ok_or(BaselineError::Closed)?.to_owned();
    let (player_one, blind, name) = match parse_hello(&hello) {
        Ok(h) => h,
        Err(msg) => {
            io.send(&["ERR", "PROTOCOL", &msg])?;
            return Err(BaselineError::Protocol(msg));
        }
    };
    let participation = lobby
        .initialize(player_one, &name, blind)
        .and_then(|session| lobby.participate(&session.uuid));
    let (session, mut views, _guard) = match participation {
        Ok(p) => p.into_parts(),
        Err(e) => {
            io.send(&["ERR", lobby_error_code(&e), &e.to_string()])?;
            return Err(e.into());
        }
    };
    io.send(&["READY", &session.uuid, &k.to_string()])?;

    while let Some(view) = views.blocking_recv() {
        let encoded = proto::PlayerGameData::from(&view).encode_to_vec();
        io.send(&["NOTIFY", &view.frame_index.to_string()])?;
        loop {
            let line = io.read_line()?.ok_or(BaselineError::Closed)?.to_owned();
            let line = line.as_str();
            let (cmd, arg) = line.split_once(' ').unwrap_or((line, ""));
            match cmd {
                "GET" => {
                    let id = match arg.parse::<usize>() {
                        Ok(id) if id < k => id,
                        _ => {
                            return protocol_error(&mut io, format!("bad field id {arg:?} (K={k})"))
                        }
                    };
                    let chunk = STANDARD.encode(&encoded[chunk_range(encoded.len(), k, id)]);
                    io.send(&["VAL", &id.to_string(), &chunk])?;
                }
                "ACTION" => {
                    let ack = lobby.input(&session.uuid, arg)?;
                    if ack.stale {
                        io.send(&["OK", "STALE"])?;
                    } else {
                        io.send(&["OK"])?;
                    }
                    break;
                }
                _ => {
                    let msg = format!("unexpected line {:?}", truncate(line));
                    return protocol_error(&mut io, msg);
                }
            }
        }
    }
    io.send(&["END"])?;
    let _ = io.writer.get_ref().shutdown(Shutdown::Write);
    Ok(())
}

fn truncate(line: &str) -> &str {
    match line.char_indices().nth(64) {
        Some((i, _)) => &line[..i],
        None => line,
    }
}

fn protocol_error(io: &mut LineIo, msg: String) -> Result<(), BaselineError> {
    let _ = io.send(&["ERR", "PROTOCOL", &msg]);
    Err(BaselineError::Protocol(msg))
}

fn parse_hello(line: &str) -> Result<(bool, bool, String), String> {
    let mut parts = line.splitn(4, ' ');
    if parts.next() != Some("HELLO") {
        return Err(format!("expected HELLO, got {:?}", truncate(line)));
    }
    let player_one = match parts.next() {
        Some("1") => true,
        Some("2") => false,
        other => return Err(format!("bad player number {other:?}")),
    };
    let blind = match parts.next() {
        Some("0") => false,
        Some("1") => true,
        other => return Err(format!("bad blind flag {other:?}")),
    };
    Ok((player_one, blind, parts.next().unwrap_or("").to_owned()))
}

/// Result of answering one frame over the baseline protocol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameOutcome {
    pub frame_index: u32,
    pub action: ActionCommand,
    pub raw_action: String,
    pub callback_failed: bool,
    pub stale: bool,
}

/// Client side of a baseline connection.
pub struct BaselineConnection {
    io: LineIo,
    pub uuid: String,
    pub accessor_calls: usize,
    notified: Option<u32>,
}

impl std::fmt::Debug for BaselineConnection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BaselineConnection")
            .field("uuid", &self.uuid)
            .field("accessor_calls", &self.accessor_calls)
            .field("notified", &self.notified)
            .finish()
    }
}

fn proto_err(msg: impl Into<String>) -> ClientError {
    ClientError::Protocol(msg.into())
}

impl BaselineConnection {
    pub fn connect(
        address: impl ToSocketAddrs,
        player_one: bool,
        name: &str,
        blind: bool,
    ) -> Result<Self, ClientError> {
        let stream = TcpStream::connect(address)?;
        let mut io = LineIo::new(stream)?;
        io.send(&[
            "HELLO",
            if player_one { "1" } else { "2" },
            if blind { "1" } else { "0" },
            name,
        ])?;
        let line = io
            .read_line()?
            .ok_or_else(|| proto_err("server closed during handshake"))?;
        let mut parts = line.split(' ');
        match parts.next() {
            Some("READY") => {
                let uuid = parts
                    .next()
                    .ok_or_else(|| proto_err("READY without id"))?
                    .to_owned();
                let accessor_calls = parts
                    .next()
                    .and_then(|k| k.parse().ok())
                    .ok_or_else(|| proto_err("READY without K"))?;
                Ok(Self {
                    io,
                    uuid,
                    accessor_calls,
                    notified: None,
                })
            }
            Some("ERR") => {
                let code = parts.next().unwrap_or("");
                let msg = parts.collect::<Vec<_>>().join(" ");
                if code == "SLOT_TAKEN" {
                    Err(ClientError::SlotTaken(msg))
                } else {
                    Err(proto_err(format!("{code}: {msg}")))
                }
            }
            _ => Err(proto_err(format!("unexpected handshake reply {line:?}"))),
        }
    }

    /// Wait for the next `NOTIFY`. `None` means the game ended cleanly.
    pub fn next_notify(&mut self) -> Result<Option<u32>, ClientError> {
        let line = self
            .io
            .read_line()?
            .ok_or_else(|| proto_err("server closed without END"))?;
        if line == "END" {
            return Ok(None);
        }
        let frame = line
            .strip_prefix("NOTIFY ")
            .and_then(|f| f.parse::<u32>().ok())
            .ok_or_else(|| proto_err(format!("expected NOTIFY, got {:?}", truncate(line))))?;
        self.notified = Some(frame);
        Ok(Some(frame))
    }

    /// Issue the K GETs for the notified frame and rebuild the view.
    pub fn fetch_view(&mut self) -> Result<PlayerGameData, ClientError> {
        let frame_index = self
            .notified
            .ok_or_else(|| proto_err("no frame notified"))?;
        if self.accessor_calls == 0 {
            return Ok(PlayerGameData {
                frame_index,
                audio_data: bytes::Bytes::new(),
                frame_data: None,
                screen_data: None,
            });
        }
        let mut encoded = Vec::new();
        for id in 0..self.accessor_calls {
            let id_text = id.to_string();
            self.io.send(&["GET", &id_text])?;
            let line = self
                .io
                .read_line()?
                .ok_or_else(|| proto_err("connection closed mid-frame"))?;
            let payload = line
                .strip_prefix("VAL ")
                .and_then(|rest| rest.split_once(' ').or(Some((rest, ""))))
                .filter(|(got, _)| *got == id_text)
                .map(|(_, b64)| b64)
                .ok_or_else(|| proto_err(format!("bad VAL for field {id}")))?;
            STANDARD
                .decode_vec(payload, &mut encoded)
                .map_err(|e| proto_err(format!("field {id}: {e}")))?;
        }
        let view = proto::PlayerGameData::decode(encoded.as_slice())
            .map_err(|e| proto_err(format!("undecodable view: {e}")))?;
        if view.frame_index != frame_index {
            return Err(proto_err(format!(
                "view for frame {} after NOTIFY {frame_index}",
                view.frame_index
            )));
        }
        Ok(view.into())
    }

    /// Send the action and wait for the acknowledgement. Returns true when the
    /// server discarded it as stale.
    pub fn send_action(&mut self, action: &str) -> Result<bool, ClientError> {
        if action.contains('\n') {
            return Err(proto_err("action must be a single line"));
        }
        self.io.send(&["ACTION", action])?;
        self.notified = None;
        match self
            .io
            .read_line()?
            .ok_or_else(|| proto_err("connection closed mid-frame"))?
        {
            "OK" => Ok(false),
            "OK STALE" => Ok(true),
            other => Err(proto_err(format!("expected OK, got {:?}", truncate(other)))),
        }
    }

    /// Lines written and read so far on this connection.
    pub fn line_counts(&self) -> (u64, u64) {
        (self.io.sent, self.io.received)
    }
}

/// Answer the currently notified frame: fetch, decide, send.
pub fn baseline_client_run_frame<A: Agent + ?Sized>(
    conn: &mut BaselineConnection,
    agent: &mut A,
) -> Result<FrameOutcome, ClientError> {
    let view = conn.fetch_view()?;
    let (raw_action, callback_failed) = agent::invoke(agent, &view);
    let stale = conn.send_action(&raw_action)?;
    Ok(FrameOutcome {
        frame_index: view.frame_index,
        action: raw_action.parse().unwrap_or_default(),
        raw_action,
        callback_failed,
        stale,
    })
}

/// Play frames until the server sends END.
pub fn run_baseline_agent<A: Agent + ?Sized>(
    mut conn: BaselineConnection,
    agent: &mut A,
) -> RunSummary {
    let mut summary = RunSummary::default();
    loop {
        match conn.next_notify() {
            Ok(Some(_)) => {}
            Ok(None) => break,
            Err(e) => {
                summary.error = Some(e);
                break;
            }
        }
        match baseline_client_run_frame(&mut conn, agent) {
            Ok(outcome) => {
                summary.record(outcome.frame_index, outcome.callback_failed);
                summary.stale_acks += u64::from(outcome.stale);
                summary.unknown_actions +=
                    u64::from(outcome.raw_action.parse::<ActionCommand>().is_err());
            }
            Err(e) => {
                summary.error = Some(e);
                break;
            }
        }
    }
    summary
}
