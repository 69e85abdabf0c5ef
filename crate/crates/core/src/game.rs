//! Deterministic fixed-timestep fighting game.
//!
//! The server owns a single [`GameState`] and advances it one frame at a time
//! from the actions returned by the two agents. Everything here is pure and
//! single-threaded; views handed to other threads are immutable snapshots.

use std::fmt;
use std::str::FromStr;

use bytes::Bytes;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("invalid game configuration: {0}")]
    InvalidConfig(String),
    #[error("game is already over at frame {frame_index}")]
    GameOver { frame_index: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameConfig {
    pub frames_per_game: u32,
    /// Leading frames played with NEUTRAL on both sides and never streamed.
    pub frame_delay: u32,
    pub budget_ms: f64,
    pub arena_width: u32,
    pub start_hp: i32,
    pub kick_damage: i32,
    pub kick_range: u32,
    pub punch_damage: i32,
    pub punch_range: u32,
    pub move_step: u32,
    pub audio_payload_bytes: usize,
    pub screen_payload_bytes: usize,
    pub seed: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            frames_per_game: 3600,
            frame_delay: 15,
            budget_ms: 16.66,
            arena_width: 960,
            start_hp: 400,
            kick_damage: 10,
            kick_range: 120,
            punch_damage: 5,
            punch_range: 80,
            move_step: 10,
            audio_payload_bytes: 8000,
            screen_payload_bytes: 153_600,
            seed: 0,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), GameError> {
        if self.frames_per_game <= self.frame_delay {
            return Err(GameError::InvalidConfig(format!(
                "frames_per_game ({}) must exceed frame_delay ({})",
                self.frames_per_game, self.frame_delay
            )));
        }
        if !(self.budget_ms.is_finite() && self.budget_ms > 0.0) {
            return Err(GameError::InvalidConfig(format!(
                "budget_ms must be positive and finite, got {}",
                self.budget_ms
            )));
        }
        if self.kick_damage < 0 || self.punch_damage < 0 {
            return Err(GameError::InvalidConfig(
                "damage values must be non-negative".into(),
            ));
        }
        if self.arena_width > i32::MAX as u32 {
            return Err(GameError::InvalidConfig("arena_width out of range".into()));
        }
        Ok(())
    }

    /// Number of frames an agent has to answer in one full game.
    pub fn responsible_frames(&self) -> u32 {
        self.frames_per_game.saturating_sub(self.frame_delay)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ActionCommand {
    Kick,
    Punch,
    Guard,
    MoveLeft,
    MoveRight,
    #[default]
    Neutral,
}

impl ActionCommand {
    pub const ALL: [ActionCommand; 6] = [
        ActionCommand::Kick,
        ActionCommand::Punch,
        ActionCommand::Guard,
        ActionCommand::MoveLeft,
        ActionCommand::MoveRight,
        ActionCommand::Neutral,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionCommand::Kick => "KICK",
            ActionCommand::Punch => "PUNCH",
            ActionCommand::Guard => "GUARD",
            ActionCommand::MoveLeft => "MOVE_LEFT",
            ActionCommand::MoveRight => "MOVE_RIGHT",
            ActionCommand::Neutral => "NEUTRAL",
        }
    }

    /// Total parse: unknown strings become `Neutral` and are reported via
    /// `ParsedAction::recognized == false`.
    pub fn parse_lossy(raw: &str) -> ParsedAction {
        match raw.parse::<ActionCommand>() {
            Ok(command) => ParsedAction {
                command,
                recognized: true,
            },
            Err(_) => {
                log::warn!("unknown action {raw:?}, applying NEUTRAL");
                ParsedAction {
                    command: ActionCommand::Neutral,
                    recognized: false,
                }
            }
        }
    }

    fn code(self) -> u8 {
        match self {
            ActionCommand::Kick => 0,
            ActionCommand::Punch => 1,
            ActionCommand::Guard => 2,
            ActionCommand::MoveLeft => 3,
            ActionCommand::MoveRight => 4,
            ActionCommand::Neutral => 5,
        }
    }
}

impl fmt::Display for ActionCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownAction(pub String);

impl fmt::Display for UnknownAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown action {:?}", self.0)
    }
}

impl std::error::Error for UnknownAction {}

impl FromStr for ActionCommand {
    type Err = UnknownAction;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        ActionCommand::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(trimmed))
            .ok_or_else(|| UnknownAction(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParsedAction {
    pub command: ActionCommand,
    pub recognized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Facing {
    Left,
    Right,
}

impl Facing {
    pub fn sign(self) -> i32 {
        match self {
            Facing::Left => -1,
            Facing::Right => 1,
        }
    }

    pub fn from_sign(sign: i32) -> Facing {
        if sign < 0 {
            Facing::Left
        } else {
            Facing::Right
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CharacterState {
    pub hp: i32,
    pub x: i32,
    pub facing: Facing,
    pub last_action: ActionCommand,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FrameState {
    pub frame_index: u32,
    pub characters: [CharacterState; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateDigest(pub [u8; 32]);

impl fmt::Display for StateDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl FrameState {
    pub fn digest(&self) -> StateDigest {
        let mut hasher = Sha256::new();
        hasher.update(self.frame_index.to_le_bytes());
        for c in &self.characters {
            hasher.update(c.hp.to_le_bytes());
            hasher.update(c.x.to_le_bytes());
            hasher.update([c.facing.sign() as i8 as u8, c.last_action.code()]);
        }
        let mut out = [0u8; 32];
        out.copy_from_slice(&hasher.finalize());
        StateDigest(out)
    }
}

/// Authoritative game state, owned by the game loop.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    config: GameConfig,
    frame: FrameState,
}

impl GameState {
    pub fn new(config: GameConfig) -> Result<Self, GameError> {
        config.validate()?;
        let w = config.arena_width as i32;
        let spawn = |x: i32, facing: Facing| CharacterState {
            hp: config.start_hp,
            x,
            facing,
            last_action: ActionCommand::Neutral,
        };
        let frame = FrameState {
            frame_index: 0,
            characters: [spawn(w / 8, Facing::Right), spawn(7 * w / 8, Facing::Left)],
        };
        Ok(Self { config, frame })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn frame(&self) -> &FrameState {
        &self.frame
    }

    pub fn frame_index(&self) -> u32 {
        self.frame.frame_index
    }

    pub fn is_over(&self) -> bool {
        self.frame.frame_index >= self.config.frames_per_game
            || self.frame.characters.iter().any(|c| c.hp <= 0)
    }

    pub fn state_hash(&self) -> StateDigest {
        self.frame.digest()
    }

    /// Advance one frame. Attacks resolve against start-of-frame positions,
    /// then movement is applied and both characters turn to face each other.
    pub fn step(&mut self, p1: ActionCommand, p2: ActionCommand) -> Result<&FrameState, GameError> {
        if self.is_over() {
            return Err(GameError::GameOver {
                frame_index: self.frame.frame_index,
            });
        }
        let cfg = &self.config;
        let actions = [p1, p2];
        let [a, b] = self.frame.characters;
        let distance = a.x.abs_diff(b.x);

        let mut damage = [0i32; 2];
        for (attacker, target) in [(0usize, 1usize), (1, 0)] {
            let (dmg, range) = match actions[attacker] {
                ActionCommand::Kick => (cfg.kick_damage, cfg.kick_range),
                ActionCommand::Punch => (cfg.punch_damage, cfg.punch_range),
                _ => continue,
            };
            if distance <= range {
                damage[target] += if actions[target] == ActionCommand::Guard {
                    dmg / 2
                } else {
                    dmg
                };
            }
        }

        let width = cfg.arena_width as i32;
        let step = cfg.move_step as i32;
        for (i, c) in self.frame.characters.iter_mut().enumerate() {
            c.hp = (c.hp - damage[i]).max(0);
            c.x = match actions[i] {
                ActionCommand::MoveLeft => (c.x - step).clamp(0, width),
                ActionCommand::MoveRight => (c.x + step).clamp(0, width),
                _ => c.x,
            };
            c.last_action = actions[i];
        }
        let [x1, x2] = [self.frame.characters[0].x, self.frame.characters[1].x];
        if x1 != x2 {
            self.frame.characters[0].facing = Facing::from_sign(x2 - x1);
            self.frame.characters[1].facing = Facing::from_sign(x1 - x2);
        }
        self.frame.frame_index += 1;
        Ok(&self.frame)
    }
}

/// Per-player view of one frame as streamed to an agent.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerGameData {
    pub frame_index: u32,
    pub audio_data: Bytes,
    pub frame_data: Option<FrameState>,
    pub screen_data: Option<Bytes>,
}

impl PlayerGameData {
    pub fn is_blind_view(&self) -> bool {
        self.frame_data.is_none() && self.screen_data.is_none()
    }
}

/// Opaque audio and screen payloads for one frame. Bytes are a pure function
/// of `(seed, frame_index)`, so both players and both transports see
/// identical payloads.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePayloads {
    pub audio: Bytes,
    pub screen: Bytes,
}

impl FramePayloads {
    pub fn generate(config: &GameConfig, frame_index: u32) -> Self {
        let mut rng = payload_rng(config.seed, frame_index);
        let audio = random_bytes(&mut rng, config.audio_payload_bytes);
        let screen = random_bytes(&mut rng, config.screen_payload_bytes);
        Self { audio, screen }
    }

    pub fn view(&self, state: &FrameState, blind: bool) -> PlayerGameData {
        PlayerGameData {
            frame_index: state.frame_index,
            audio_data: self.audio.clone(),
            frame_data: (!blind).then(|| state.clone()),
            screen_data: (!blind).then(|| self.screen.clone()),
        }
    }
}

fn payload_rng(seed: u64, frame_index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(frame_index));
    rng
}

fn random_bytes(rng: &mut ChaCha8Rng, len: usize) -> Bytes {
    let mut buf = vec![0u8; len];
    rng.fill_bytes(&mut buf);
    Bytes::from(buf)
}

pub fn build_player_view(state: &FrameState, blind: bool, config: &GameConfig) -> PlayerGameData {
    let mut rng = payload_rng(config.seed, state.frame_index);
    let audio_data = random_bytes(&mut rng, config.audio_payload_bytes);
    if blind {
        return PlayerGameData {
            frame_index: state.frame_index,
            audio_data,
            frame_data: None,
            screen_data: None,
        };
    }
    let screen_data = random_bytes(&mut rng, config.screen_payload_bytes);
    PlayerGameData {
        frame_index: state.frame_index,
        audio_data,
        frame_data: Some(state.clone()),
        screen_data: Some(screen_data),
    }
}
