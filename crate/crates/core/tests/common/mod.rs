#![allow(dead_code)]

use std::sync::{Arc, Mutex};

use bytes::{Buf, BufMut, Bytes};
use framegate_core::proto::frame_gate_client::FrameGateClient;
use framegate_core::proto::{InitializeRequest, ParticipateRequest, PlayerAction};
use framegate_core::{
    Agent, AgentError, BenchReport, GameConfig, LatencySample, MatchSettings, PlayerGameData,
    ServerConfig,
};
use proptest::prelude::*;
use prost::Message;
use tonic::codec::{Codec, DecodeBuf, Decoder, EncodeBuf, Encoder};
use tonic::codegen::http::uri::PathAndQuery;
use tonic::transport::Channel;
use tonic::Status;

pub fn short_game(frames_per_game: u32, frame_delay: u32) -> GameConfig {
    GameConfig {
        frames_per_game,
        frame_delay,
        ..GameConfig::default()
    }
}

pub fn server_config(game: GameConfig) -> ServerConfig {
    ServerConfig {
        settings: MatchSettings {
            game,
            ..MatchSettings::default()
        },
        solo: false,
    }
}

/// Kicks every frame and keeps a copy of each view it was shown.
pub fn recording_agent() -> (impl Agent + 'static, Arc<Mutex<Vec<PlayerGameData>>>) {
    let seen = Arc::new(Mutex::new(Vec::new()));
    let sink = Arc::clone(&seen);
    let agent = move |view: &PlayerGameData| -> Result<String, AgentError> {
        sink.lock().unwrap().push(view.clone());
        Ok("KICK".to_owned())
    };
    (agent, seen)
}

struct RawCodec;
struct RawEncoder;
struct RawDecoder;

impl Encoder for RawEncoder {
    type Item = Bytes;
    type Error = Status;
    fn encode(&mut self, item: Bytes, dst: &mut EncodeBuf<'_>) -> Result<(), Status> {
        dst.put(item);
        Ok(())
    }
}

impl Decoder for RawDecoder {
    type Item = Bytes;
    type Error = Status;
    fn decode(&mut self, src: &mut DecodeBuf<'_>) -> Result<Option<Bytes>, Status> {
        Ok(Some(src.copy_to_bytes(src.remaining())))
    }
}

impl Codec for RawCodec {
    type Encode = Bytes;
    type Decode = Bytes;
    type Encoder = RawEncoder;
    type Decoder = RawDecoder;
    fn encoder(&mut self) -> RawEncoder {
        RawEncoder
    }
    fn decoder(&mut self) -> RawDecoder {
        RawDecoder
    }
}

/// Participate through a byte-level codec and return every message exactly as
/// it arrived, answering each with KICK.
pub async fn capture_stream(addr: &str, player_one: bool, blind: bool) -> Vec<Bytes> {
    let mut client = FrameGateClient::connect(format!("http://{addr}"))
        .await
        .unwrap();
    let uuid = client
        .initialize(InitializeRequest {
            player_number: player_one,
            player_name: "cap".into(),
            blind,
        })
        .await
        .unwrap()
        .into_inner()
        .player_uuid;
    let channel = Channel::from_shared(format!("http://{addr}"))
        .unwrap()
        .connect()
        .await
        .unwrap();
    let mut grpc = tonic::client::Grpc::new(channel);
    grpc.ready().await.unwrap();
    let req = Bytes::from(
        ParticipateRequest {
            player_uuid: uuid.clone(),
        }
        .encode_to_vec(),
    );
    let mut stream = grpc
        .server_streaming(
            tonic::Request::new(req),
            PathAndQuery::from_static("/framegate.FrameGate/Participate"),
            RawCodec,
        )
        .await
        .unwrap()
        .into_inner();
    let mut captured = Vec::new();
    while let Some(msg) = stream.message().await.unwrap() {
        captured.push(msg);
        client
            .input(PlayerAction {
                player_uuid: uuid.clone(),
                action: "KICK".into(),
            })
            .await
            .unwrap();
    }
    captured
}

/// Reference statistics computed without sorting.
#[derive(Debug, PartialEq)]
pub struct OracleStats {
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    pub p50: f64,
    pub p95: f64,
    pub p99: f64,
    pub misses: u64,
    pub miss_rate_hundredths: u64,
}

/// Smallest value v such that at least ceil(p*n/100) values are <= v.
fn counting_rank(values: &[f64], p: u64) -> f64 {
    let n = values.len() as u64;
    let mut rank = 1;
    while rank * 100 < p * n {
        rank += 1;
    }
    let mut best: Option<f64> = None;
    for &v in values {
        let at_most = values.iter().filter(|&&w| w <= v).count() as u64;
        if at_most >= rank && best.is_none_or(|b| v < b) {
            best = Some(v);
        }
    }
    best.unwrap()
}

pub fn oracle_stats(latencies: &[f64], budget_ms: f64) -> OracleStats {
    let mut sum = 0.0;
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    let mut misses = 0u64;
    for &l in latencies {
        sum += l;
        if l > max {
            max = l;
        }
        if l < min {
            min = l;
        }
        if l > budget_ms {
            misses += 1;
        }
    }
    let n = latencies.len() as u64;
    OracleStats {
        mean: sum / n as f64,
        max,
        min,
        p50: counting_rank(latencies, 50),
        p95: counting_rank(latencies, 95),
        p99: counting_rank(latencies, 99),
        misses,
        // half-up rounding of misses * 100 / n to two places, in integers
        miss_rate_hundredths: (misses * 20_000 + n) / (2 * n),
    }
}

pub fn report_as_oracle(r: &BenchReport) -> OracleStats {
    OracleStats {
        mean: r.mean_ms,
        max: r.max_ms,
        min: r.min_ms,
        p50: r.p50_ms,
        p95: r.p95_ms,
        p99: r.p99_ms,
        misses: r.miss_frames,
        miss_rate_hundredths: (r.miss_rate_percent * 100.0).round() as u64,
    }
}

/// Latency lists with repeats and values sitting on the default budget.
pub fn latency_lists() -> impl Strategy<Value = Vec<f64>> {
    let value = prop_oneof![
        4 => 0.0f64..40.0,
        1 => Just(16.66),
        1 => (0u32..50).prop_map(f64::from),
        1 => 16.66f64..16.67,
    ];
    proptest::collection::vec(value, 1..400)
}

pub fn samples_from(latencies: &[f64], budget_ms: f64) -> Vec<LatencySample> {
    latencies
        .iter()
        .enumerate()
        .map(|(i, &l)| LatencySample::new(i as u32, l, budget_ms).unwrap())
        .collect()
}
