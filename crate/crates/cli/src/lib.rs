//! Argument types shared by the `framegate`, `agent` and `bench` binaries.

use clap::ValueEnum;
use framegate_core::{GateMode, Measure, Pace, Transport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportArg {
    Rpc,
    Baseline,
}

impl From<TransportArg> for Transport {
    fn from(t: TransportArg) -> Self {
        match t {
            TransportArg::Rpc => Transport::Rpc,
            TransportArg::Baseline => Transport::Baseline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Lockstep,
    Deadline,
}

impl From<ModeArg> for GateMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Lockstep => GateMode::Lockstep,
            ModeArg::Deadline => GateMode::Deadline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PaceArg {
    Unpaced,
    #[value(name = "60fps")]
    Fps60,
}

impl From<PaceArg> for Pace {
    fn from(p: PaceArg) -> Self {
        match p {
            PaceArg::Unpaced => Pace::Unpaced,
            PaceArg::Fps60 => Pace::Fps60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    #[value(name = "p1")]
    PlayerOne,
    Both,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::PlayerOne => Measure::PlayerOne,
            MeasureArg::Both => Measure::Both,
        }
    }
}

pub fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
}
