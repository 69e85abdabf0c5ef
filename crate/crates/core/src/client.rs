//! gRPC client SDK: register, consume the view stream, answer every frame.

use std::time::Duration;

use thiserror::Error;
use tonic::transport::{Channel, Endpoint};
use tonic::{Code, Status};

use crate::agent::{self, Agent};
use crate::gate::PlayerSlot;
use crate::proto::frame_gate_client::FrameGateClient;
use crate::proto::{InitializeRequest, ParticipateRequest, PlayerAction};
use crate::rpc::{CONNECTION_WINDOW, STREAM_WINDOW};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("invalid address {0:?}")]
    InvalidAddress(String),
    #[error("connection failed: {0}")]
    Connect(#[from] tonic::transport::Error),
    #[error("slot taken: {0}")]
    SlotTaken(String),
    #[error("rpc failed: {0}")]
    Rpc(Box<Status>),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl From<Status> for ClientError {
    fn from(status: Status) -> Self {
        match status.code() {
            Code::AlreadyExists => ClientError::SlotTaken(status.message().to_owned()),
            _ => ClientError::Rpc(Box::new(status)),
        }
    }
}

/// What happened during one `run_agent` call.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub frames_handled: u64,
    pub callback_errors: u64,
    pub stale_acks: u64,
    pub unknown_actions: u64,
    pub first_frame: Option<u32>,
    pub last_frame: Option<u32>,
    /// Set when the run ended on an error rather than a clean stream close.
    pub error: Option<ClientError>,
}

impl RunSummary {
    pub fn is_clean(&self) -> bool {
        self.error.is_none()
    }

    pub(crate) fn record(&mut self, frame_index: u32, callback_failed: bool) {
        self.frames_handled += 1;
        self.callback_errors += u64::from(callback_failed);
        self.first_frame.get_or_insert(frame_index);
        self.last_frame = Some(frame_index);
    }
}

fn endpoint_uri(address: &str) -> String {
    if address.contains("://") {
        address.to_owned()
    } else {
        format!("http://{address}")
    }
}

/// Connection to a FrameGate server. Cheap to clone; clones share the
/// underlying HTTP/2 connection.
#[derive(Debug, Clone)]
pub struct RpcClient {
    inner: FrameGateClient<Channel>,
}

impl RpcClient {
    pub async fn connect(address: &str) -> Result<Self, ClientError> {
        let endpoint = Endpoint::from_shared(endpoint_uri(address))
            .map_err(|_| ClientError::InvalidAddress(address.to_owned()))?
            .tcp_nodelay(true)
            .connect_timeout(Duration::from_secs(5))
            .initial_stream_window_size(STREAM_WINDOW)
            .initial_connection_window_size(CONNECTION_WINDOW);
        let channel = endpoint.connect().await?;
        Ok(Self {
            inner: FrameGateClient::new(channel),
        })
    }

    pub async fn register(
        &self,
        player_one: bool,
        name: &str,
        blind: bool,
    ) -> Result<Session, ClientError> {
        let mut client = self.inner.clone();
        let resp = client
            .initialize(InitializeRequest {
                player_number: player_one,
                player_name: name.to_owned(),
                blind,
            })
            .await?
            .into_inner();
        if resp.player_uuid.is_empty() {
            return Err(ClientError::Protocol(
                "server returned an empty player id".into(),
            ));
        }
        Ok(Session {
            client,
            uuid: resp.player_uuid,
            slot: PlayerSlot::from_player_number(player_one),
            name: name.to_owned(),
            blind,
        })
    }
}

/// A registered player, ready to participate.
#[derive(Debug, Clone)]
pub struct Session {
    client: FrameGateClient<Channel>,
    pub uuid: String,
    pub slot: PlayerSlot,
    pub name: String,
    pub blind: bool,
}

pub async fn connect_and_register(
    address: &str,
    player_one: bool,
    name: &str,
    blind: bool,
) -> Result<Session, ClientError> {
    RpcClient::connect(address)
        .await?
        .register(player_one, name, blind)
        .await
}

/// Stream views and answer each one with exactly one `Input` call until the
/// server closes the stream.
pub async fn run_agent<A: Agent + ?Sized>(session: Session, agent: &mut A) -> RunSummary {
    let mut summary = RunSummary::default();
    let mut client = session.client;
    let mut stream = match client
        .participate(ParticipateRequest {
            player_uuid: session.uuid.clone(),
        })
        .await
    {
        Ok(resp) => resp.into_inner(),
        Err(status) => {
            summary.error = Some(status.into());
            return summary;
        }
    };
    loop {
        let msg = match stream.message().await {
            Ok(Some(msg)) => msg,
            Ok(None) => break,
            Err(status) => {
                summary.error = Some(status.into());
                break;
            }
        };
        let view: crate::game::PlayerGameData = msg.into();
        let frame_index = view.frame_index;
        let (action, failed) = agent::invoke(agent, &view);
        summary.record(frame_index, failed);
        match client
            .input(PlayerAction {
                player_uuid: session.uuid.clone(),
                action,
            })
            .await
        {
            Ok(ack) => {
                let ack = ack.into_inner();
                summary.stale_acks += u64::from(ack.stale);
                summary.unknown_actions += u64::from(ack.unknown_action);
            }
            Err(status) => {
                summary.error = Some(status.into());
                break;
            }
        }
    }
    summary
}
