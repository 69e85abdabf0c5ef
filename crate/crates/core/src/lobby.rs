//! Session registry shared by both transports.
//!
//! Agents claim a player slot, open their view stream, and send inputs by
//! session id. The lobby starts the game loop once every seat is streaming
//! (or as soon as one is, in solo mode) and resets itself for the next game
//! when the loop finishes.

use std::collections::HashMap;
use std::sync::{mpsc, Arc, Mutex, MutexGuard, Weak};
use std::thread;
use std::time::Duration;

use thiserror::Error;
use uuid::Uuid;

use crate::arena::{run_match, MatchError, MatchReport, MatchSettings, Seat};
use crate::game::GameError;
use crate::gate::{FrameGate, GateError, PlayerSlot, ViewReceiver};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ServerConfig {
    pub settings: MatchSettings,
    /// Start as soon as one agent streams; the empty seat plays NEUTRAL.
    pub solo: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LobbyError {
    #[error("SLOT_TAKEN: {0} is already claimed")]
    SlotTaken(PlayerSlot),
    #[error("INVALID_ARGUMENT: {0}")]
    InvalidArgument(String),
    #[error("NOT_FOUND: unknown player id {0:?}")]
    NotFound(String),
    #[error("ALREADY_STREAMING: player id {0:?} already has a stream")]
    AlreadyStreaming(String),
    #[error("GAME_IN_PROGRESS: a game is running")]
    GameInProgress,
    #[error(transparent)]
    Gate(#[from] GateError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionInfo {
    pub uuid: String,
    pub slot: PlayerSlot,
    pub name: String,
    pub blind: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InputAck {
    pub stale: bool,
    pub unknown_action: bool,
}

pub type MatchOutcome = Result<MatchReport, MatchError>;

#[derive(Debug)]
struct LobbyInner {
    settings: MatchSettings,
    sessions: HashMap<String, SessionInfo>,
    slots: [Option<String>; 2],
    streaming: [bool; 2],
    gate: Arc<FrameGate>,
    running: bool,
}

impl LobbyInner {
    fn reset(&mut self) -> Arc<FrameGate> {
        self.sessions.clear();
        self.slots = [None, None];
        self.streaming = [false; 2];
        self.running = false;
        std::mem::replace(&mut self.gate, Arc::new(FrameGate::new()))
    }
}

#[derive(Debug)]
pub struct Lobby {
    solo: bool,
    inner: Mutex<LobbyInner>,
    reports_tx: Mutex<mpsc::Sender<MatchOutcome>>,
    reports_rx: Mutex<mpsc::Receiver<MatchOutcome>>,
}

/// A live view stream. Dropping it before the game ends counts as a
/// disconnect of the slot.
#[derive(Debug)]
pub struct Participation {
    pub session: SessionInfo,
    pub views: ViewReceiver,
    guard: StreamGuard,
}

impl Participation {
    pub fn into_parts(self) -> (SessionInfo, ViewReceiver, StreamGuard) {
        (self.session, self.views, self.guard)
    }
}

#[derive(Debug)]
pub struct StreamGuard {
    lobby: Weak<Lobby>,
    gate: Arc<FrameGate>,
    slot: PlayerSlot,
    uuid: String,
}

impl Drop for StreamGuard {
    fn drop(&mut self) {
        self.gate.disconnect(self.slot);
        if let Some(lobby) = self.lobby.upgrade() {
            let mut inner = lobby.lock();
            if !inner.running
                && Arc::ptr_eq(&inner.gate, &self.gate)
                && inner.sessions.contains_key(&self.uuid)
            {
                inner.streaming[self.slot.index()] = false;
            }
        }
    }
}

impl Lobby {
    pub fn new(config: ServerConfig) -> Result<Arc<Self>, GameError> {
        config.settings.game.validate()?;
        let (tx, rx) = mpsc::channel();
        Ok(Arc::new(Self {
            solo: config.solo,
            inner: Mutex::new(LobbyInner {
                settings: config.settings,
                sessions: HashMap::new(),
                slots: [None, None],
                streaming: [false; 2],
                gate: Arc::new(FrameGate::new()),
                running: false,
            }),
            reports_tx: Mutex::new(tx),
            reports_rx: Mutex::new(rx),
        }))
    }

    fn lock(&self) -> MutexGuard<'_, LobbyInner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Settings for games that start from now on.
    pub fn set_match_settings(&self, settings: MatchSettings) -> Result<(), GameError> {
        settings.game.validate()?;
        self.lock().settings = settings;
        Ok(())
    }

    pub fn match_settings(&self) -> MatchSettings {
        self.lock().settings.clone()
    }

    pub fn is_solo(&self) -> bool {
        self.solo
    }

    pub fn initialize(
        &self,
        player_one: bool,
        name: &str,
        blind: bool,
    ) -> Result<SessionInfo, LobbyError> {
        if name.trim().is_empty() {
            return Err(LobbyError::InvalidArgument(
                "player_name must be non-empty".into(),
            ));
        }
        let slot = PlayerSlot::from_player_number(player_one);
        let mut inner = self.lock();
        if inner.running {
            return Err(LobbyError::GameInProgress);
        }
        if inner.slots[slot.index()].is_some() {
            return Err(LobbyError::SlotTaken(slot));
        }
        let uuid = Uuid::new_v4().hyphenated().to_string();
        let session = SessionInfo {
            uuid: uuid.clone(),
            slot,
            name: name.to_owned(),
            blind,
        };
        inner.slots[slot.index()] = Some(uuid.clone());
        inner.sessions.insert(uuid, session.clone());
        log::info!("{} registered as {slot} (blind: {blind})", session.name);
        Ok(session)
    }

    pub fn session(&self, uuid: &str) -> Option<SessionInfo> {
        self.lock().sessions.get(uuid).cloned()
    }

    /// Open the view stream for a registered session and start the game if
    /// every required seat is now streaming.
    pub fn participate(self: &Arc<Self>, uuid: &str) -> Result<Participation, LobbyError> {
        let mut inner = self.lock();
        let session = inner
            .sessions
            .get(uuid)
            .cloned()
            .ok_or_else(|| LobbyError::NotFound(uuid.to_owned()))?;
        let idx = session.slot.index();
        if inner.running {
            return Err(if inner.streaming[idx] {
                LobbyError::AlreadyStreaming(uuid.to_owned())
            } else {
                LobbyError::GameInProgress
            });
        }
        if inner.streaming[idx] {
            return Err(LobbyError::AlreadyStreaming(uuid.to_owned()));
        }
        let views = inner.gate.subscribe(session.slot)?;
        inner.streaming[idx] = true;
        let guard = StreamGuard {
            lobby: Arc::downgrade(self),
            gate: Arc::clone(&inner.gate),
            slot: session.slot,
            uuid: uuid.to_owned(),
        };

        let ready = if self.solo {
            inner.streaming.iter().any(|s| *s)
        } else {
            inner.streaming.iter().all(|s| *s)
        };
        if ready {
            self.start_match(&mut inner);
        }
        Ok(Participation {
            session,
            views,
            guard,
        })
    }

    fn start_match(self: &Arc<Self>, inner: &mut LobbyInner) {
        inner.running = true;
        let seats = PlayerSlot::BOTH.map(|slot| {
            let i = slot.index();
            if !inner.streaming[i] {
                return None;
            }
            let uuid = inner.slots[i].as_ref()?;
            inner.sessions.get(uuid).map(|s| Seat { blind: s.blind })
        });
        let settings = inner.settings.clone();
        let gate = Arc::clone(&inner.gate);
        let lobby = Arc::clone(self);
        thread::Builder::new()
            .name("game-loop".into())
            .spawn(move || {
                log::info!(
                    "game starting: {} frames, seats {seats:?}",
                    settings.game.frames_per_game
                );
                let outcome = run_match(&settings, &gate, seats);
                let old_gate = lobby.lock().reset();
                old_gate.close();
                match &outcome {
                    Ok(r) => log::info!("game finished after {} frames", r.frames_played()),
                    Err(e) => log::error!("game failed: {e}"),
                }
                let tx = lobby.reports_tx.lock().unwrap_or_else(|e| e.into_inner());
                let _ = tx.send(outcome);
            })
            .expect("spawn game loop thread");
    }

    /// Forward an agent's action to its gate slot.
    pub fn input(&self, uuid: &str, action: &str) -> Result<InputAck, LobbyError> {
        let (slot, gate) = {
            let inner = self.lock();
            let session = inner
                .sessions
                .get(uuid)
                .ok_or_else(|| LobbyError::NotFound(uuid.to_owned()))?;
            (session.slot, Arc::clone(&inner.gate))
        };
        match gate.submit_action(slot, action) {
            Ok(parsed) => Ok(InputAck {
                stale: false,
                unknown_action: !parsed.recognized,
            }),
            Err(GateError::StaleInput { slot, reason }) => {
                log::warn!("discarding input from {slot}: {reason}");
                Ok(InputAck {
                    stale: true,
                    unknown_action: false,
                })
            }
            Err(e) => Err(e.into()),
        }
    }

    /// Wait for the next finished game.
    pub fn next_report(&self, timeout: Duration) -> Option<MatchOutcome> {
        let rx = self.reports_rx.lock().unwrap_or_else(|e| e.into_inner());
        rx.recv_timeout(timeout).ok()
    }
}
