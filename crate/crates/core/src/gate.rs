//! Single-slot producer-consumer gate between the game loop and the agents.
//!
//! The game loop publishes one view per player and then blocks in
//! [`FrameGate::await_action`] until the agent's answer arrives through
//! [`FrameGate::submit_action`]. Each slot holds at most one pending view.
//! Latency is measured from publish to submission on a single monotonic clock.

use std::fmt;
use std::sync::{Condvar, Mutex, MutexGuard};
use std::time::Duration;

use thiserror::Error;
use tokio::sync::mpsc;

use crate::clock::{ns_to_ms, MeasurementError, MonotonicClock};
use crate::game::{ActionCommand, ParsedAction, PlayerGameData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlayerSlot {
    One,
    Two,
}

impl PlayerSlot {
    pub const BOTH: [PlayerSlot; 2] = [PlayerSlot::One, PlayerSlot::Two];

    pub fn index(self) -> usize {
        match self {
            PlayerSlot::One => 0,
            PlayerSlot::Two => 1,
        }
    }

    pub fn from_player_number(player_one: bool) -> Self {
        if player_one {
            PlayerSlot::One
        } else {
            PlayerSlot::Two
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

impl fmt::Display for PlayerSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GateMode {
    /// Wait for the agent's action however long it takes.
    #[default]
    Lockstep,
    /// Substitute NEUTRAL once the frame budget has elapsed.
    Deadline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Hit,
    Miss,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Hit => "HIT",
            Outcome::Miss => "MISS",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencySample {
    pub frame_index: u32,
    pub latency_ms: f64,
    pub outcome: Outcome,
}

impl LatencySample {
    pub fn new(
        frame_index: u32,
        latency_ms: f64,
        budget_ms: f64,
    ) -> Result<Self, MeasurementError> {
        Ok(Self {
            frame_index,
            latency_ms,
            outcome: classify(latency_ms, budget_ms)?,
        })
    }
}

/// A frame is missed iff its latency strictly exceeds the budget.
pub fn classify(latency_ms: f64, budget_ms: f64) -> Result<Outcome, MeasurementError> {
    if !(latency_ms.is_finite() && latency_ms >= 0.0) {
        return Err(MeasurementError::InvalidLatency(latency_ms));
    }
    Ok(if latency_ms > budget_ms {
        Outcome::Miss
    } else {
        Outcome::Hit
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("{0} already has a pending view")]
    DoublePublish(PlayerSlot),
    #[error("await on {0} without a published view")]
    AwaitWithoutPublish(PlayerSlot),
    #[error("stale input for {slot}: {reason}")]
    StaleInput {
        slot: PlayerSlot,
        reason: StaleReason,
    },
    #[error("{0} already has a view subscriber")]
    AlreadySubscribed(PlayerSlot),
    #[error("{slot} disconnected while frame {frame_index} was pending")]
    Disconnected { slot: PlayerSlot, frame_index: u32 },
    #[error("gate closed")]
    Closed,
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaleReason {
    /// No view was pending.
    NoPendingView,
    /// A reply for the pending view was already accepted.
    Duplicate,
}

impl fmt::Display for StaleReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StaleReason::NoPendingView => "no pending view",
            StaleReason::Duplicate => "duplicate reply",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GateCounters {
    pub stale_inputs: u64,
    pub duplicate_inputs: u64,
}

impl GateCounters {
    pub fn total_rejected(&self) -> u64 {
        self.stale_inputs + self.duplicate_inputs
    }
}

/// What the game loop gets back for one published frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GateReply {
    pub action: ActionCommand,
    /// The action string exactly as submitted, if one arrived in time.
    pub raw_action: Option<String>,
    pub sample: LatencySample,
    /// NEUTRAL was applied because the deadline passed.
    pub substituted: bool,
}

/// Receiving end of a slot's view stream.
#[derive(Debug)]
pub struct ViewReceiver {
    slot: PlayerSlot,
    rx: mpsc::UnboundedReceiver<PlayerGameData>,
}

impl ViewReceiver {
    pub fn slot(&self) -> PlayerSlot {
        self.slot
    }

    /// Next view, or `None` once the gate is closed.
    pub async fn recv(&mut self) -> Option<PlayerGameData> {
        self.rx.recv().await
    }

    /// Blocking variant for plain threads. Must not be called from async code.
    pub fn blocking_recv(&mut self) -> Option<PlayerGameData> {
        self.rx.blocking_recv()
    }

    pub(crate) fn poll_recv(
        &mut self,
        cx: &mut std::task::Context<'_>,
    ) -> std::task::Poll<Option<PlayerGameData>> {
        self.rx.poll_recv(cx)
    }
}

#[derive(Debug)]
struct Pending {
    frame_index: u32,
    t_start: u64,
    /// Kept until a subscriber picks it up.
    undelivered: Option<PlayerGameData>,
}

#[derive(Debug)]
struct Reply {
    raw: String,
    parsed: ParsedAction,
    t_end: u64,
}

#[derive(Debug, Default)]
struct SlotState {
    pending: Option<Pending>,
    reply: Option<Reply>,
    subscriber: Option<mpsc::UnboundedSender<PlayerGameData>>,
    disconnected: bool,
    closed: bool,
    counters: GateCounters,
}

#[derive(Debug, Default)]
struct SlotCell {
    state: Mutex<SlotState>,
    wake: Condvar,
}

impl SlotCell {
    fn lock(&self) -> MutexGuard<'_, SlotState> {
        // A panicking holder cannot leave the slot half-updated; recover the guard.
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Debug, Default)]
pub struct FrameGate {
    clock: MonotonicClock,
    slots: [SlotCell; 2],
}

impl FrameGate {
    pub fn new() -> Self {
        Self::default()
    }

    fn cell(&self, slot: PlayerSlot) -> &SlotCell {
        &self.slots[slot.index()]
    }

    /// Attach the consumer side of a slot. A view published before the
    /// subscriber arrived is delivered immediately.
    pub fn subscribe(&self, slot: PlayerSlot) -> Result<ViewReceiver, GateError> {
        let mut st = self.cell(slot).lock();
        if st.closed {
            return Err(GateError::Closed);
        }
        if st.subscriber.as_ref().is_some_and(|tx| !tx.is_closed()) {
            return Err(GateError::AlreadySubscribed(slot));
        }
        let (tx, rx) = mpsc::unbounded_channel();
        if let Some(view) = st.pending.as_mut().and_then(|p| p.undelivered.take()) {
            let _ = tx.send(view);
        }
        st.subscriber = Some(tx);
        st.disconnected = false;
        Ok(ViewReceiver { slot, rx })
    }

    /// Hand a view to the slot's consumer and start its latency timer.
    pub fn publish(&self, slot: PlayerSlot, view: PlayerGameData) -> Result<(), GateError> {
        let mut st = self.cell(slot).lock();
        if st.closed {
            return Err(GateError::Closed);
        }
        if st.pending.is_some() {
            return Err(GateError::DoublePublish(slot));
        }
        let t_start = self.clock.now_ns();
        let frame_index = view.frame_index;
        let undelivered = match &st.subscriber {
            Some(tx) => tx.send(view).err().map(|e| e.0),
            None => Some(view),
        };
        st.reply = None;
        st.pending = Some(Pending {
            frame_index,
            t_start,
            undelivered,
        });
        Ok(())
    }

    /// Record an agent's answer for the pending frame. Inputs with no pending
    /// frame, or a second answer to the same frame, are counted and rejected.
    pub fn submit_action(&self, slot: PlayerSlot, raw: &str) -> Result<ParsedAction, GateError> {
        let t_end = self.clock.now_ns();
        let cell = self.cell(slot);
        let mut st = cell.lock();
        let reason = match (&st.pending, &st.reply) {
            (None, _) => StaleReason::NoPendingView,
            (Some(_), Some(_)) => StaleReason::Duplicate,
            (Some(_), None) => {
                let parsed = ActionCommand::parse_lossy(raw);
                st.reply = Some(Reply {
                    raw: raw.to_owned(),
                    parsed,
                    t_end,
                });
                drop(st);
                cell.wake.notify_all();
                return Ok(parsed);
            }
        };
        match reason {
            StaleReason::NoPendingView => st.counters.stale_inputs += 1,
            StaleReason::Duplicate => st.counters.duplicate_inputs += 1,
        }
        Err(GateError::StaleInput { slot, reason })
    }

    /// Block until the pending frame is answered (or, in deadline mode, the
    /// budget runs out). Clears the pending view.
    pub fn await_action(
        &self,
        slot: PlayerSlot,
        mode: GateMode,
        budget_ms: f64,
    ) -> Result<GateReply, GateError> {
        let cell = self.cell(slot);
        let mut st = cell.lock();
        let (frame_index, t_start) = match &st.pending {
            Some(p) => (p.frame_index, p.t_start),
            None => return Err(GateError::AwaitWithoutPublish(slot)),
        };
        loop {
            if let Some(reply) = st.reply.take() {
                st.pending = None;
                let latency_ms = ns_to_ms(i128::from(reply.t_end.saturating_sub(t_start)))?;
                let sample = LatencySample::new(frame_index, latency_ms, budget_ms)?;
                let late = sample.outcome == Outcome::Miss && mode == GateMode::Deadline;
                return Ok(GateReply {
                    action: if late {
                        ActionCommand::Neutral
                    } else {
                        reply.parsed.command
                    },
                    raw_action: (!late).then_some(reply.raw),
                    sample,
                    substituted: late,
                });
            }
            if st.closed {
                st.pending = None;
                return Err(GateError::Closed);
            }
            match mode {
                GateMode::Lockstep => {
                    if st.disconnected {
                        st.pending = None;
                        return Err(GateError::Disconnected { slot, frame_index });
                    }
                    st = cell.wake.wait(st).unwrap_or_else(|e| e.into_inner());
                }
                GateMode::Deadline => {
                    let elapsed_ns = self.clock.now_ns().saturating_sub(t_start);
                    let latency_ms = ns_to_ms(i128::from(elapsed_ns))?;
                    if latency_ms > budget_ms {
                        st.pending = None;
                        return Ok(GateReply {
                            action: ActionCommand::Neutral,
                            raw_action: None,
                            sample: LatencySample::new(frame_index, latency_ms, budget_ms)?,
                            substituted: true,
                        });
                    }
                    let budget_ns = (budget_ms * 1_000_000.0).ceil() as u64;
                    let remaining = budget_ns.saturating_sub(elapsed_ns).max(1_000);
                    st = cell
                        .wake
                        .wait_timeout(st, Duration::from_nanos(remaining))
                        .unwrap_or_else(|e| e.into_inner())
                        .0;
                }
            }
        }
    }

    /// Mark the consumer as gone. Lockstep waits on this slot fail instead of
    /// hanging; deadline waits keep substituting NEUTRAL.
    pub fn disconnect(&self, slot: PlayerSlot) {
        let cell = self.cell(slot);
        let mut st = cell.lock();
        st.disconnected = true;
        st.subscriber = None;
        drop(st);
        cell.wake.notify_all();
    }

    /// End every stream. Pending awaits return [`GateError::Closed`].
    pub fn close(&self) {
        for cell in &self.slots {
            let mut st = cell.lock();
            st.closed = true;
            st.subscriber = None;
            drop(st);
            cell.wake.notify_all();
        }
    }

    pub fn has_pending(&self, slot: PlayerSlot) -> bool {
        self.cell(slot).lock().pending.is_some()
    }

    pub fn counters(&self, slot: PlayerSlot) -> GateCounters {
        self.cell(slot).lock().counters
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bytes::Bytes;
    use proptest::prelude::*;
    use std::sync::Arc;
    use std::thread;
    use std::time::Instant;

    const BUDGET: f64 = 16.66;

    fn view(frame_index: u32) -> PlayerGameData {
        PlayerGameData {
            frame_index,
            audio_data: Bytes::from_static(b"abc"),
            frame_data: None,
            screen_data: None,
        }
    }

    /// Reply from another thread after `delay`.
    fn reply_after(
        gate: &Arc<FrameGate>,
        slot: PlayerSlot,
        delay: Duration,
        action: &'static str,
    ) -> thread::JoinHandle<()> {
        let gate = Arc::clone(gate);
        thread::spawn(move || {
            thread::sleep(delay);
            gate.submit_action(slot, action).unwrap();
        })
    }

    #[test]
    fn classify_boundaries() {
        assert_eq!(classify(6.18, BUDGET), Ok(Outcome::Hit));
        assert_eq!(classify(39.20, BUDGET), Ok(Outcome::Miss));
        assert_eq!(classify(16.66, BUDGET), Ok(Outcome::Hit));
        assert_eq!(classify(16.661, BUDGET), Ok(Outcome::Miss));
        assert_eq!(classify(0.0, BUDGET), Ok(Outcome::Hit));
        assert!(classify(-0.5, BUDGET).is_err());
        assert!(classify(f64::NAN, BUDGET).is_err());
    }

    proptest! {
        #[test]
        fn classify_matches_strict_comparison(lat in 0.0f64..1e6, budget in 0.001f64..1e3) {
            let expected = if lat > budget { Outcome::Miss } else { Outcome::Hit };
            prop_assert_eq!(classify(lat, budget).unwrap(), expected);
        }
    }

    #[test]
    fn measured_latency_tracks_injected_delay() {
        let gate = Arc::new(FrameGate::new());
        let _rx = gate.subscribe(PlayerSlot::One).unwrap();
        gate.publish(PlayerSlot::One, view(15)).unwrap();
        let h = reply_after(&gate, PlayerSlot::One, Duration::from_millis(5), "KICK");
        let reply = gate
            .await_action(PlayerSlot::One, GateMode::Lockstep, BUDGET)
            .unwrap();
        h.join().unwrap();
        assert_eq!(reply.action, ActionCommand::Kick);
        assert_eq!(reply.sample.frame_index, 15);
        assert_eq!(reply.sample.outcome, Outcome::Hit);
        let lat = reply.sample.latency_ms;
        assert!((5.0..6.0).contains(&lat), "latency {lat} ms outside [5, 6)");
    }

    #[test]
    fn double_publish_is_rejected() {
        let gate = FrameGate::new();
        gate.publish(PlayerSlot::One, view(1)).unwrap();
        assert_eq!(
            gate.publish(PlayerSlot::One, view(2)),
            Err(GateError::DoublePublish(PlayerSlot::One))
        );
        // other slot unaffected
        gate.publish(PlayerSlot::Two, view(1)).unwrap();
    }

    #[test]
    fn await_without_publish_is_rejected() {
        let gate = FrameGate::new();
        assert_eq!(
            gate.await_action(PlayerSlot::Two, GateMode::Lockstep, BUDGET),
            Err(GateError::AwaitWithoutPublish(PlayerSlot::Two))
        );
    }

    #[test]
    fn stale_and_duplicate_inputs_are_counted() {
        let gate = FrameGate::new();
        let err = gate.submit_action(PlayerSlot::One, "KICK").unwrap_err();
        assert_eq!(
            err,
            GateError::StaleInput {
                slot: PlayerSlot::One,
                reason: StaleReason::NoPendingView
            }
        );

        gate.publish(PlayerSlot::One, view(3)).unwrap();
        gate.submit_action(PlayerSlot::One, "KICK").unwrap();
        let err = gate.submit_action(PlayerSlot::One, "GUARD").unwrap_err();
        assert_eq!(
            err,
            GateError::StaleInput {
                slot: PlayerSlot::One,
                reason: StaleReason::Duplicate
            }
        );
        let reply = gate
            .await_action(PlayerSlot::One, GateMode::Lockstep, BUDGET)
            .unwrap();
        assert_eq!(reply.action, ActionCommand::Kick, "first submission wins");
        assert_eq!(reply.raw_action.as_deref(), Some("KICK"));
        assert_eq!(
            gate.counters(PlayerSlot::One),
            GateCounters {
                stale_inputs: 1,
                duplicate_inputs: 1
            }
        );
        assert_eq!(gate.counters(PlayerSlot::Two), GateCounters::default());
        assert!(!gate.has_pending(PlayerSlot::One));
    }

    #[test]
    fn unknown_action_becomes_neutral_but_keeps_raw_text() {
        let gate = FrameGate::new();
        gate.publish(PlayerSlot::Two, view(9)).unwrap();
        let parsed = gate.submit_action(PlayerSlot::Two, "DANCE").unwrap();
        assert!(!parsed.recognized);
        let reply = gate
            .await_action(PlayerSlot::Two, GateMode::Lockstep, BUDGET)
            .unwrap();
        assert_eq!(reply.action, ActionCommand::Neutral);
        assert_eq!(reply.raw_action.as_deref(), Some("DANCE"));
    }

    #[test]
    fn lockstep_returns_late_action_as_miss() {
        let gate = Arc::new(FrameGate::new());
        gate.publish(PlayerSlot::One, view(20)).unwrap();
        let h = reply_after(&gate, PlayerSlot::One, Duration::from_millis(20), "KICK");
        let reply = gate
            .await_action(PlayerSlot::One, GateMode::Lockstep, BUDGET)
            .unwrap();
        h.join().unwrap();
        assert_eq!(reply.action, ActionCommand::Kick);
        assert!(!reply.substituted);
        assert_eq!(reply.sample.outcome, Outcome::Miss);
        assert!(reply.sample.latency_ms >= 20.0);
    }

    #[test]
    fn deadline_substitutes_neutral_after_budget() {
        let gate = Arc::new(FrameGate::new());
        gate.publish(PlayerSlot::One, view(20)).unwrap();
        let started = Instant::now();
        let h = reply_after(&gate, PlayerSlot::One, Duration::from_millis(40), "KICK");
        let reply = gate
            .await_action(PlayerSlot::One, GateMode::Deadline, BUDGET)
            .unwrap();
        let waited = started.elapsed();
        assert_eq!(reply.action, ActionCommand::Neutral);
        assert!(reply.substituted);
        assert_eq!(reply.sample.outcome, Outcome::Miss);
        assert!(reply.sample.latency_ms > BUDGET);
        assert!(
            waited < Duration::from_millis(40),
            "deadline wait overran: {waited:?}"
        );
        // the late answer lands on an empty slot
        h.join().unwrap_err();
        assert_eq!(gate.counters(PlayerSlot::One).stale_inputs, 1);
    }

    #[test]
    fn deadline_late_reply_already_queued_is_still_substituted() {
        let gate = FrameGate::new();
        gate.publish(PlayerSlot::One, view(1)).unwrap();
        thread::sleep(Duration::from_millis(3));
        gate.submit_action(PlayerSlot::One, "KICK").unwrap();
        let reply = gate
            .await_action(PlayerSlot::One, GateMode::Deadline, 1.0)
            .unwrap();
        assert_eq!(reply.action, ActionCommand::Neutral);
        assert_eq!(reply.sample.outcome, Outcome::Miss);
    }

    #[test]
    fn deadline_in_time_reply_passes_through() {
        let gate = Arc::new(FrameGate::new());
        gate.publish(PlayerSlot::Two, view(1)).unwrap();
        let h = reply_after(&gate, PlayerSlot::Two, Duration::from_millis(1), "GUARD");
        let reply = gate
            .await_action(PlayerSlot::Two, GateMode::Deadline, 200.0)
            .unwrap();
        h.join().unwrap();
        assert_eq!(reply.action, ActionCommand::Guard);
        assert_eq!(reply.sample.outcome, Outcome::Hit);
    }

    #[test]
    fn view_published_before_subscriber_is_delivered_on_subscribe() {
        let gate = Arc::new(FrameGate::new());
        gate.publish(PlayerSlot::One, view(15)).unwrap();
        let consumer = {
            let gate = Arc::clone(&gate);
            thread::spawn(move || {
                thread::sleep(Duration::from_millis(10));
                let mut rx = gate.subscribe(PlayerSlot::One).unwrap();
                let v = rx.blocking_recv().unwrap();
                gate.submit_action(PlayerSlot::One, "KICK").unwrap();
                v.frame_index
            })
        };
        let reply = gate
            .await_action(PlayerSlot::One, GateMode::Lockstep, BUDGET)
            .unwrap();
        assert_eq!(reply.action, ActionCommand::Kick);
        assert_eq!(consumer.join().unwrap(), 15);
    }

    #[test]
    fn second_subscriber_is_rejected() {
        let gate = FrameGate::new();
        let _rx = gate.subscribe(PlayerSlot::One).unwrap();
        assert_eq!(
            gate.subscribe(PlayerSlot::One).unwrap_err(),
            GateError::AlreadySubscribed(PlayerSlot::One)
        );
        gate.subscribe(PlayerSlot::Two).unwrap();
    }

    #[test]
    fn disconnect_aborts_lockstep_wait() {
        let gate = Arc::new(FrameGate::new());
        let _rx = gate.subscribe(PlayerSlot::One).unwrap();
        gate.publish(PlayerSlot::One, view(30)).unwrap();
        let g = Arc::clone(&gate);
        let h = thread::spawn(move || {
            thread::sleep(Duration::from_millis(5));
            g.disconnect(PlayerSlot::One);
        });
        let err = gate
            .await_action(PlayerSlot::One, GateMode::Lockstep, BUDGET)
            .unwrap_err();
        h.join().unwrap();
        assert_eq!(
            err,
            GateError::Disconnected {
                slot: PlayerSlot::One,
                frame_index: 30
            }
        );
    }

    #[test]
    fn close_ends_streams() {
        let gate = FrameGate::new();
        let mut rx = gate.subscribe(PlayerSlot::Two).unwrap();
        gate.publish(PlayerSlot::Two, view(1)).unwrap();
        gate.close();
        assert_eq!(rx.blocking_recv().map(|v| v.frame_index), Some(1));
        assert!(rx.blocking_recv().is_none());
        assert_eq!(
            gate.publish(PlayerSlot::Two, view(2)),
            Err(GateError::Closed)
        );
    }

    #[test]
    fn blocked_slot_does_not_block_other_slot() {
        let gate = Arc::new(FrameGate::new());
        gate.publish(PlayerSlot::One, view(1)).unwrap();
        gate.publish(PlayerSlot::Two, view(1)).unwrap();
        let g = Arc::clone(&gate);
        let waiter =
            thread::spawn(move || g.await_action(PlayerSlot::One, GateMode::Lockstep, BUDGET));
        gate.submit_action(PlayerSlot::Two, "PUNCH").unwrap();
        let reply = gate
            .await_action(PlayerSlot::Two, GateMode::Lockstep, BUDGET)
            .unwrap();
        assert_eq!(reply.action, ActionCommand::Punch);
        gate.submit_action(PlayerSlot::One, "KICK").unwrap();
        assert_eq!(waiter.join().unwrap().unwrap().action, ActionCommand::Kick);
    }

    #[test]
    fn lockstep_applies_answers_in_frame_order() {
        let gate = Arc::new(FrameGate::new());
        let mut rx = gate.subscribe(PlayerSlot::One).unwrap();
        let g = Arc::clone(&gate);
        let consumer = thread::spawn(move || {
            while let Some(v) = rx.blocking_recv() {
                let a = ActionCommand::ALL[v.frame_index as usize % 6];
                g.submit_action(PlayerSlot::One, a.as_str()).unwrap();
            }
        });
        for frame in 0..500u32 {
            gate.publish(PlayerSlot::One, view(frame)).unwrap();
            let reply = gate
                .await_action(PlayerSlot::One, GateMode::Lockstep, BUDGET)
                .unwrap();
            assert_eq!(reply.action, ActionCommand::ALL[frame as usize % 6]);
            assert_eq!(reply.sample.frame_index, frame);
            assert!(reply.sample.latency_ms >= 0.0 && reply.sample.latency_ms.is_finite());
        }
        gate.close();
        consumer.join().unwrap();
        assert_eq!(gate.counters(PlayerSlot::One), GateCounters::default());
    }
}
