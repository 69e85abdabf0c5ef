//! Server-side game loop: steps the game, publishes views through the gate
//! and applies the answers.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::game::{
    ActionCommand, FramePayloads, FrameState, GameConfig, GameError, GameState, StateDigest,
};
use crate::gate::{FrameGate, GateCounters, GateError, GateMode, LatencySample, PlayerSlot};

const FRAME_PERIOD: Duration = Duration::from_nanos(1_000_000_000 / 60);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pace {
    #[default]
    Unpaced,
    /// Sleep to a 60 Hz frame grid.
    Fps60,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchSettings {
    pub game: GameConfig,
    pub mode: GateMode,
    pub pace: Pace,
}

impl Default for MatchSettings {
    fn default() -> Self {
        Self {
            game: GameConfig::default(),
            mode: GateMode::Lockstep,
            pace: Pace::Unpaced,
        }
    }
}

/// A seat occupied by a remote agent. Empty seats play NEUTRAL every frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seat {
    pub blind: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRecord {
    pub frame_index: u32,
    pub actions: [ActionCommand; 2],
    /// Action strings as received, before parsing.
    pub raw_actions: [Option<String>; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub config: GameConfig,
    pub samples: [Vec<LatencySample>; 2],
    pub action_log: Vec<FrameRecord>,
    pub final_state: FrameState,
    pub final_hash: StateDigest,
    pub counters: [GateCounters; 2],
    pub substituted_frames: [u32; 2],
}

impl MatchReport {
    pub fn frames_played(&self) -> u32 {
        self.final_state.frame_index
    }

    pub fn samples_for(&self, slot: PlayerSlot) -> &[LatencySample] {
        &self.samples[slot.index()]
    }
}

#[derive(Debug, Error)]
pub enum MatchError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("match aborted at frame {frame_index}: {source}")]
    Aborted {
        frame_index: u32,
        #[source]
        source: GateError,
        partial: Box<MatchReport>,
    },
}

struct Recorder {
    config: GameConfig,
    samples: [Vec<LatencySample>; 2],
    action_log: Vec<FrameRecord>,
    substituted: [u32; 2],
}

impl Recorder {
    fn finish(self, state: &GameState, gate: &FrameGate) -> MatchReport {
        MatchReport {
            config: self.config,
            samples: self.samples,
            action_log: self.action_log,
            final_state: state.frame().clone(),
            final_hash: state.state_hash(),
            counters: PlayerSlot::BOTH.map(|s| gate.counters(s)),
            substituted_frames: self.substituted,
        }
    }
}

/// Play one game to completion.
///
/// The first `frame_delay` frames are stepped with NEUTRAL on both sides and
/// never published. Every later frame is published to each occupied seat,
/// then both answers are awaited before the state advances.
pub fn run_match(
    settings: &MatchSettings,
    gate: &FrameGate,
    seats: [Option<Seat>; 2],
) -> Result<MatchReport, MatchError> {
    let config = settings.game.clone();
    let mut state = GameState::new(config.clone())?;
    let mut rec = Recorder {
        config: config.clone(),
        samples: Default::default(),
        action_log: Vec::with_capacity(config.frames_per_game as usize),
        substituted: [0; 2],
    };
    let started = Instant::now();

    while !state.is_over() {
        let frame_index = state.frame_index();
        if settings.pace == Pace::Fps60 {
            let due = started + FRAME_PERIOD * frame_index;
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }

        let mut record = FrameRecord {
            frame_index,
            actions: [ActionCommand::Neutral; 2],
            raw_actions: [None, None],
        };

        if frame_index >= config.frame_delay {
            let payloads = FramePayloads::generate(&config, frame_index);
            for slot in PlayerSlot::BOTH {
                if let Some(seat) = seats[slot.index()] {
                    let view = payloads.view(state.frame(), seat.blind);
                    if let Err(source) = gate.publish(slot, view) {
                        return Err(abort(rec, &state, gate, source));
                    }
                }
            }
            for slot in PlayerSlot::BOTH {
                if seats[slot.index()].is_none() {
                    continue;
                }
                match gate.await_action(slot, settings.mode, config.budget_ms) {
                    Ok(reply) => {
                        let i = slot.index();
                        record.actions[i] = reply.action;
                        record.raw_actions[i] = reply.raw_action;
                        rec.samples[i].push(reply.sample);
                        rec.substituted[i] += u32::from(reply.substituted);
                    }
                    Err(source) => return Err(abort(rec, &state, gate, source)),
                }
            }
        }

        state.step(record.actions[0], record.actions[1])?;
        rec.action_log.push(record);
    }

    Ok(rec.finish(&state, gate))
}

fn abort(rec: Recorder, state: &GameState, gate: &FrameGate, source: GateError) -> MatchError {
    let frame_index = state.frame_index();
    log::error!("aborting match at frame {frame_index}: {source}");
    MatchError::Aborted {
        frame_index,
        source,
        partial: Box::new(rec.finish(state, gate)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::Outcome;
    use std::sync::Arc;
    use std::thread;

    fn small_settings(frames: u32, delay: u32) -> MatchSettings {
        MatchSettings {
            game: GameConfig {
                frames_per_game: frames,
                frame_delay: delay,
                audio_payload_bytes: 64,
                screen_payload_bytes: 256,
                ..GameConfig::default()
            },
            ..MatchSettings::default()
        }
    }

    /// Answer every view on `slot` with `pick(frame_index)` and collect the views.
    fn consumer(
        gate: &Arc<FrameGate>,
        slot: PlayerSlot,
        pick: fn(u32) -> &'static str,
    ) -> thread::JoinHandle<Vec<crate::game::PlayerGameData>> {
        let mut rx = gate.subscribe(slot).unwrap();
        let gate = Arc::clone(gate);
        thread::spawn(move || {
            let mut seen = Vec::new();
            while let Some(v) = rx.blocking_recv() {
                gate.submit_action(slot, pick(v.frame_index)).unwrap();
                seen.push(v);
            }
            seen
        })
    }

    #[test]
    fn streams_exactly_the_responsible_frames() {
        let settings = small_settings(60, 15);
        let gate = Arc::new(FrameGate::new());
        let c1 = consumer(&gate, PlayerSlot::One, |_| "KICK");
        let c2 = consumer(&gate, PlayerSlot::Two, |_| "KICK");
        let seats = [Some(Seat { blind: false }), Some(Seat { blind: true })];
        let report = run_match(&settings, &gate, seats).unwrap();
        gate.close();
        let v1 = c1.join().unwrap();
        let v2 = c2.join().unwrap();

        let idx: Vec<u32> = v1.iter().map(|v| v.frame_index).collect();
        assert_eq!(idx, (15..60).collect::<Vec<_>>());
        assert_eq!(v2.len(), 45);
        assert!(v2.iter().all(|v| v.is_blind_view()));
        assert!(v1
            .iter()
            .all(|v| v.frame_data.is_some() && v.screen_data.is_some()));
        assert_eq!(report.samples[0].len(), 45);
        assert_eq!(report.samples[1].len(), 45);
        assert_eq!(report.frames_played(), 60);
        assert_eq!(report.action_log.len(), 60);
        assert!(report.action_log[..15]
            .iter()
            .all(|r| r.actions == [ActionCommand::Neutral; 2]));
        assert!(report.action_log[15..]
            .iter()
            .all(|r| r.actions == [ActionCommand::Kick; 2]));
        assert_eq!(report.counters, [GateCounters::default(); 2]);
    }

    #[test]
    fn empty_seat_plays_neutral() {
        let settings = small_settings(30, 0);
        let gate = Arc::new(FrameGate::new());
        let c1 = consumer(&gate, PlayerSlot::One, |f| {
            if f % 2 == 0 {
                "MOVE_RIGHT"
            } else {
                "NEUTRAL"
            }
        });
        let report = run_match(&settings, &gate, [Some(Seat { blind: false }), None]).unwrap();
        gate.close();
        assert_eq!(c1.join().unwrap().len(), 30);
        assert!(report.samples[1].is_empty());
        assert_eq!(report.final_state.characters[0].x, 120 + 15 * 10);
        assert!(report
            .action_log
            .iter()
            .all(|r| r.actions[1] == ActionCommand::Neutral));
    }

    #[test]
    fn view_frame_data_matches_the_state_the_action_applies_to() {
        let settings = small_settings(40, 5);
        let gate = Arc::new(FrameGate::new());
        let c1 = consumer(&gate, PlayerSlot::One, |f| {
            ActionCommand::ALL[f as usize % 6].as_str()
        });
        let report = run_match(&settings, &gate, [Some(Seat { blind: false }), None]).unwrap();
        gate.close();
        let views = c1.join().unwrap();

        let mut replay = GameState::new(settings.game.clone()).unwrap();
        for rec in &report.action_log {
            if rec.frame_index >= 5 {
                let v = &views[(rec.frame_index - 5) as usize];
                assert_eq!(v.frame_data.as_ref(), Some(replay.frame()));
                assert_eq!(
                    rec.actions[0],
                    ActionCommand::ALL[rec.frame_index as usize % 6]
                );
            }
            replay.step(rec.actions[0], rec.actions[1]).unwrap();
        }
        assert_eq!(replay.state_hash(), report.final_hash);
    }

    #[test]
    fn disconnect_in_lockstep_aborts_with_partial_report() {
        let settings = small_settings(100, 0);
        let gate = Arc::new(FrameGate::new());
        let mut rx = gate.subscribe(PlayerSlot::One).unwrap();
        let g = Arc::clone(&gate);
        let c = thread::spawn(move || {
            for _ in 0..10 {
                rx.blocking_recv().unwrap();
                g.submit_action(PlayerSlot::One, "KICK").unwrap();
            }
            rx.blocking_recv().unwrap();
            g.disconnect(PlayerSlot::One);
        });
        let err = run_match(&settings, &gate, [Some(Seat { blind: false }), None]).unwrap_err();
        c.join().unwrap();
        match err {
            MatchError::Aborted {
                frame_index,
                partial,
                ..
            } => {
                assert_eq!(frame_index, 10);
                assert_eq!(partial.samples[0].len(), 10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deadline_mode_survives_a_silent_agent() {
        let mut settings = small_settings(8, 2);
        settings.mode = GateMode::Deadline;
        settings.game.budget_ms = 1.0;
        let gate = Arc::new(FrameGate::new());
        let _rx = gate.subscribe(PlayerSlot::Two).unwrap();
        let report = run_match(&settings, &gate, [None, Some(Seat { blind: true })]).unwrap();
        assert_eq!(report.samples[1].len(), 6);
        assert!(report.samples[1].iter().all(|s| s.outcome == Outcome::Miss));
        assert_eq!(report.substituted_frames[1], 6);
        assert_eq!(report.frames_played(), 8);
    }

    #[test]
    fn paced_match_takes_at_least_the_frame_grid() {
        let mut settings = small_settings(6, 0);
        settings.pace = Pace::Fps60;
        let gate = FrameGate::new();
        let started = Instant::now();
        run_match(&settings, &gate, [None, None]).unwrap();
        assert!(started.elapsed() >= FRAME_PERIOD * 5);
    }
}
