//! gRPC transport: unary `Initialize`, server-streaming `Participate`, unary `Input`.

use std::net::SocketAddr;
use std::pin::Pin;
use std::sync::Arc;
use std::task::{Context, Poll};

use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;
use tokio_stream::wrappers::TcpListenerStream;
use tokio_stream::{Stream, StreamExt};
use tonic::{Request, Response, Status};

use crate::gate::ViewReceiver;
use crate::lobby::{Lobby, LobbyError, StreamGuard};
use crate::proto::{
    self, frame_gate_server, InitializeRequest, InitializeResponse, InputAck, ParticipateRequest,
    PlayerAction,
};

pub const DEFAULT_PORT: u16 = 50051;

/// HTTP/2 flow-control windows large enough that a full view never waits on
/// a WINDOW_UPDATE round trip.
pub(crate) const STREAM_WINDOW: u32 = 4 * 1024 * 1024;
pub(crate) const CONNECTION_WINDOW: u32 = 16 * 1024 * 1024;

impl From<LobbyError> for Status {
    fn from(e: LobbyError) -> Self {
        let msg = e.to_string();
        match e {
            LobbyError::SlotTaken(_) => Status::already_exists(msg),
            LobbyError::InvalidArgument(_) => Status::invalid_argument(msg),
            LobbyError::NotFound(_) => Status::not_found(msg),
            LobbyError::AlreadyStreaming(_) => Status::failed_precondition(msg),
            LobbyError::GameInProgress => Status::unavailable(msg),
            LobbyError::Gate(_) => Status::internal(msg),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FrameGateService {
    lobby: Arc<Lobby>,
}

impl FrameGateService {
    pub fn new(lobby: Arc<Lobby>) -> Self {
        Self { lobby }
    }

    pub fn into_server(self) -> frame_gate_server::FrameGateServer<Self> {
        frame_gate_server::FrameGateServer::new(self)
    }
}

/// Server side of a `Participate` call. Dropping it (client went away)
/// disconnects the player's gate slot.
#[derive(Debug)]
pub struct ViewStream {
    views: ViewReceiver,
    _guard: StreamGuard,
}

impl Stream for ViewStream {
    type Item = Result<proto::PlayerGameData, Status>;

    #[allow(clippy::result_large_err)]
    fn poll_next(mut self: Pin<&mut Self>, cx: &mut Context<'_>) -> Poll<Option<Self::Item>> {
        self.views
            .poll_recv(cx)
            .map(|v| v.map(|view| Ok(proto::PlayerGameData::from(&view))))
    }
}

#[tonic::async_trait]
impl frame_gate_server::FrameGate for FrameGateService {
    async fn initialize(
        &self,
        request: Request<InitializeRequest>,
    ) -> Result<Response<InitializeResponse>, Status> {
        let req = request.into_inner();
        let session = self
            .lobby
            .initialize(req.player_number, &req.player_name, req.blind)?;
        Ok(Response::new(InitializeResponse {
            player_uuid: session.uuid,
        }))
    }

    type ParticipateStream = ViewStream;

    async fn participate(
        &self,
        request: Request<ParticipateRequest>,
    ) -> Result<Response<Self::ParticipateStream>, Status> {
        let uuid = request.into_inner().player_uuid;
        let (_, views, guard) = self.lobby.participate(&uuid)?.into_parts();
        Ok(Response::new(ViewStream {
            views,
            _guard: guard,
        }))
    }

    async fn input(&self, request: Request<PlayerAction>) -> Result<Response<InputAck>, Status> {
        let msg = request.into_inner();
        let ack = self.lobby.input(&msg.player_uuid, &msg.action)?;
        Ok(Response::new(InputAck {
            stale: ack.stale,
            unknown_action: ack.unknown_action,
        }))
    }
}

/// A running gRPC server. Dropping the handle stops it.
#[derive(Debug)]
pub struct RpcServer {
    local_addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    task: Option<JoinHandle<Result<(), tonic::transport::Error>>>,
}

impl RpcServer {
    /// Bind `addr` and serve on the current tokio runtime.
    pub async fn start(addr: SocketAddr, lobby: Arc<Lobby>) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr).await?;
        let local_addr = listener.local_addr()?;
        let incoming = TcpListenerStream::new(listener).map(|conn| {
            conn.inspect(|s| {
                let _ = s.set_nodelay(true);
            })
        });
        let (tx, rx) = oneshot::channel::<()>();
        let task = tokio::spawn(
            tonic::transport::Server::builder()
                .initial_stream_window_size(STREAM_WINDOW)
                .initial_connection_window_size(CONNECTION_WINDOW)
                .add_service(FrameGateService::new(lobby).into_server())
                .serve_with_incoming_shutdown(incoming, async {
                    let _ = rx.await;
                }),
        );
        log::info!("gRPC FrameGate listening on {local_addr}");
        Ok(Self {
            local_addr,
            shutdown: Some(tx),
            task: Some(task),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    /// Serve until the server task exits.
    pub async fn wait(mut self) -> Result<(), tonic::transport::Error> {
        match self.task.take() {
            Some(task) => task.await.unwrap_or(Ok(())),
            None => Ok(()),
        }
    }

    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(task) = self.task.take() {
            // open client channels can hold graceful shutdown; don't wait forever
            let _ = tokio::time::timeout(std::time::Duration::from_secs(2), task).await;
        }
    }
}

impl Drop for RpcServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}
