//! In-process benchmark harness: boots a transport on loopback, plays full
//! games between agents, and collects the server-side gate samples.

use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use thiserror::Error;
use tokio::runtime::Runtime;

use crate::agent::{Agent, KickAgent};
use crate::arena::{MatchError, MatchReport, MatchSettings, Pace};
use crate::baseline::{
    run_baseline_agent, BaselineConnection, BaselineServer, DEFAULT_ACCESSOR_CALLS,
};
use crate::client::{run_agent, ClientError, RpcClient, RunSummary};
use crate::game::{GameConfig, GameError};
use crate::gate::{GateMode, LatencySample, PlayerSlot};
use crate::lobby::{Lobby, ServerConfig};
use crate::rpc::RpcServer;
use crate::stats::{compute_stats, emit_csv, BenchReport, StatsError};

/// Responsible frames played, unrecorded, before measurement starts.
pub const WARMUP_FRAMES: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transport {
    #[default]
    Rpc,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Measure {
    #[default]
    PlayerOne,
    Both,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("agent {slot} failed: {source}")]
    Client {
        slot: PlayerSlot,
        #[source]
        source: ClientError,
    },
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("no game result within {0:?}")]
    Timeout(Duration),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("benchmark run failed after {} samples: {source}", partial.len())]
    Run {
        partial: Vec<LatencySample>,
        #[source]
        source: Box<BenchError>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub transport: Transport,
    pub games: u32,
    pub mode: GateMode,
    pub pace: Pace,
    /// Frame counts, budget, payload sizes and seed.
    pub game: GameConfig,
    pub accessor_calls: usize,
    /// 0 picks a free port.
    pub port: u16,
    pub csv: Option<PathBuf>,
    pub warmup: bool,
    pub solo: bool,
    pub measure: Measure,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            transport: Transport::Rpc,
            games: 1,
            mode: GateMode::Lockstep,
            pace: Pace::Unpaced,
            game: GameConfig::default(),
            accessor_calls: DEFAULT_ACCESSOR_CALLS,
            port: 0,
            csv: None,
            warmup: true,
            solo: false,
            measure: Measure::PlayerOne,
        }
    }
}

impl BenchConfig {
    fn match_settings(&self) -> MatchSettings {
        MatchSettings {
            game: self.game.clone(),
            mode: self.mode,
            pace: self.pace,
        }
    }

    fn warmup_settings(&self) -> MatchSettings {
        let mut settings = self.match_settings();
        settings.game.frames_per_game = settings.game.frame_delay + WARMUP_FRAMES;
        settings.pace = Pace::Unpaced;
        settings
    }
}

/// One agent taking part in a game.
pub struct AgentSeat {
    pub player_one: bool,
    pub name: String,
    pub blind: bool,
    pub agent: Box<dyn Agent>,
}

impl AgentSeat {
    pub fn new(player_one: bool, name: &str, blind: bool, agent: impl Agent + 'static) -> Self {
        Self {
            player_one,
            name: name.to_owned(),
            blind,
            agent: Box::new(agent),
        }
    }

    pub fn kick(player_one: bool) -> Self {
        Self::new(
            player_one,
            if player_one { "KickAI-1" } else { "KickAI-2" },
            false,
            KickAgent,
        )
    }
}

#[derive(Debug)]
pub struct GameRun {
    pub report: MatchReport,
    /// One per seat, in the order the seats were given.
    pub summaries: Vec<RunSummary>,
}

enum Server {
    Rpc(RpcServer),
    Baseline(BaselineServer),
}

/// A transport server plus the lobby behind it, ready to host games.
pub struct Harness {
    // declared first so the server is torn down before the runtime
    server: Option<Server>,
    runtime: Runtime,
    lobby: Arc<Lobby>,
    addr: SocketAddr,
    rpc_clients: [Option<RpcClient>; 2],
    report_timeout: Duration,
}

impl Harness {
    pub fn start(
        transport: Transport,
        config: ServerConfig,
        port: u16,
        accessor_calls: usize,
    ) -> Result<Self, BenchError> {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(4)
            .enable_all()
            .thread_name("framegate-rt")
            .build()?;
        let lobby = Lobby::new(config)?;
        let bind = SocketAddr::from((Ipv4Addr::LOCALHOST, port));
        let server = match transport {
            Transport::Rpc => {
                Server::Rpc(runtime.block_on(RpcServer::start(bind, Arc::clone(&lobby)))?)
            }
            Transport::Baseline => Server::Baseline(BaselineServer::start(
                bind,
                accessor_calls,
                Arc::clone(&lobby),
            )?),
        };
        let addr = match &server {
            Server::Rpc(s) => s.local_addr(),
            Server::Baseline(s) => s.local_addr(),
        };
        Ok(Self {
            server: Some(server),
            runtime,
            lobby,
            addr,
            rpc_clients: [None, None],
            report_timeout: Duration::from_secs(600),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn lobby(&self) -> &Arc<Lobby> {
        &self.lobby
    }

    pub fn runtime(&self) -> &Runtime {
        &self.runtime
    }

    pub fn set_match_settings(&self, settings: MatchSettings) -> Result<(), BenchError> {
        Ok(self.lobby.set_match_settings(settings)?)
    }

    /// Play one game with the given agents and return the server's report.
    pub fn play(&mut self, seats: Vec<AgentSeat>) -> Result<GameRun, BenchError> {
        let summaries = match self.server {
            Some(Server::Rpc(_)) => self.play_rpc(seats)?,
            Some(Server::Baseline(_)) => self.play_baseline(seats),
            None => return Err(BenchError::Config("harness already shut down".into())),
        };
        let report = self
            .lobby
            .next_report(self.report_timeout)
            .ok_or(BenchError::Timeout(self.report_timeout))??;
        Ok(GameRun { report, summaries })
    }

    fn play_rpc(&mut self, seats: Vec<AgentSeat>) -> Result<Vec<RunSummary>, BenchError> {
        let addr = self.addr.to_string();
        let rt = &self.runtime;
        let clients = &mut self.rpc_clients;
        rt.block_on(async {
            let mut sessions = Vec::with_capacity(seats.len());
            for seat in seats {
                let slot = PlayerSlot::from_player_number(seat.player_one);
                let client = match &clients[slot.index()] {
                    Some(c) => c.clone(),
                    None => {
                        let c = RpcClient::connect(&addr)
                            .await
                            .map_err(|source| BenchError::Client { slot, source })?;
                        clients[slot.index()] = Some(c.clone());
                        c
                    }
                };
                let session = client
                    .register(seat.player_one, &seat.name, seat.blind)
                    .await
                    .map_err(|source| BenchError::Client { slot, source })?;
                sessions.push((session, seat.agent));
            }
            let tasks: Vec<_> = sessions
                .into_iter()
                .map(|(session, mut agent)| {
                    tokio::spawn(async move { run_agent(session, &mut agent).await })
                })
                .collect();
            let mut summaries = Vec::with_capacity(tasks.len());
            for t in tasks {
                summaries.push(t.await.unwrap_or_else(|e| RunSummary {
                    error: Some(ClientError::Protocol(format!("agent task failed: {e}"))),
                    ..RunSummary::default()
                }));
            }
            Ok(summaries)
        })
    }

    fn play_baseline(&mut self, seats: Vec<AgentSeat>) -> Vec<RunSummary> {
        let addr = self.addr;
        let handles: Vec<_> = seats
            .into_iter()
            .map(|mut seat| {
                thread::spawn(move || {
                    match BaselineConnection::connect(addr, seat.player_one, &seat.name, seat.blind)
                    {
                        Ok(conn) => run_baseline_agent(conn, &mut seat.agent),
                        Err(e) => RunSummary {
                            error: Some(e),
                            ..RunSummary::default()
                        },
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|_| RunSummary {
                    error: Some(ClientError::Protocol("agent thread panicked".into())),
                    ..RunSummary::default()
                })
            })
            .collect()
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.rpc_clients = [None, None];
        match self.server.take() {
            Some(Server::Rpc(s)) => self.runtime.block_on(s.shutdown()),
            Some(Server::Baseline(mut s)) => s.shutdown(),
            None => {}
        }
    }
}

impl Drop for Harness {
    fn drop(&mut self) {
        self.stop();
    }
}

fn kick_seats(solo: bool) -> Vec<AgentSeat> {
    if solo {
        vec![AgentSeat::kick(true)]
    } else {
        vec![AgentSeat::kick(true), AgentSeat::kick(false)]
    }
}

fn check_clean(run: &GameRun) -> Result<(), BenchError> {
    for s in &run.summaries {
        if let Some(e) = &s.error {
            return Err(BenchError::Config(format!(
                "agent run ended with error: {e}"
            )));
        }
    }
    Ok(())
}

/// Boot the configured transport, optionally warm it up, play `games` full
/// games between kick agents and report the measured samples.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    if config.games == 0 {
        return Err(BenchError::Config("games must be at least 1".into()));
    }
    config.game.validate()?;
    let server = ServerConfig {
        settings: config.match_settings(),
        solo: config.solo,
    };
    let mut harness = Harness::start(config.transport, server, config.port, config.accessor_calls)?;

    if config.warmup {
        harness.set_match_settings(config.warmup_settings())?;
        let run = harness.play(kick_seats(config.solo))?;
        check_clean(&run)?;
        harness.set_match_settings(config.match_settings())?;
    }

    let mut samples = Vec::new();
    for game in 0..config.games {
        let run = match harness
            .play(kick_seats(config.solo))
            .and_then(|r| check_clean(&r).map(|_| r))
        {
            Ok(run) => run,
            Err(source) => {
                return Err(BenchError::Run {
                    partial: samples,
                    source: Box::new(source),
                })
            }
        };
        log::info!(
            "game {} finished: {} frames",
            game + 1,
            run.report.frames_played()
        );
        samples.extend_from_slice(run.report.samples_for(PlayerSlot::One));
        if config.measure == Measure::Both {
            samples.extend_from_slice(run.report.samples_for(PlayerSlot::Two));
        }
    }
    harness.shutdown();

    let report = compute_stats(samples)?;
    if let Some(path) = &config.csv {
        emit_csv(&report, path)?;
    }
    Ok(report)
}
