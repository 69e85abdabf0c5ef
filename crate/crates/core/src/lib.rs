//! Frame-budget game-state streaming.
//!
//! A deterministic game loop publishes one view per player per frame through
//! a single-slot producer-consumer [`gate`], and agents answer over either
//! the gRPC service in [`rpc`] or the per-call line protocol in [`baseline`].
//! The [`harness`] and [`stats`] modules measure publish-to-answer latency
//! and count frames that exceed the budget.

pub mod agent;
pub mod arena;
pub mod baseline;
pub mod client;
pub mod clock;
pub mod game;
pub mod gate;
pub mod harness;
pub mod lobby;
pub mod proto;
pub mod rpc;
pub mod stats;

pub use agent::{kick_agent, Agent, AgentError, KickAgent, ScriptedAgent};
pub use arena::{run_match, FrameRecord, MatchError, MatchReport, MatchSettings, Pace, Seat};
pub use baseline::{BaselineConfig, BaselineConnection, BaselineServer};
pub use client::{connect_and_register, run_agent, ClientError, RpcClient, RunSummary, Session};
pub use clock::{ns_to_ms, MeasurementError, MonotonicClock};
pub use game::{
    build_player_view, ActionCommand, CharacterState, Facing, FrameState, GameConfig, GameError,
    GameState, PlayerGameData, StateDigest,
};
pub use gate::{
    classify, FrameGate, GateCounters, GateError, GateMode, GateReply, LatencySample, Outcome,
    PlayerSlot,
};
pub use harness::{
    run_benchmark, AgentSeat, BenchConfig, BenchError, GameRun, Harness, Measure, Transport,
};
pub use lobby::{Lobby, LobbyError, ServerConfig};
pub use rpc::{FrameGateService, RpcServer};
pub use stats::{compute_stats, emit_csv, read_csv, BenchReport, Comparison, StatsError};
