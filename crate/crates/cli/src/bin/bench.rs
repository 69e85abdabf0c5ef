use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use framegate_cli::{init_logging, MeasureArg, ModeArg, PaceArg, TransportArg};
use framegate_core::{run_benchmark, BenchConfig, BenchError, Comparison, GameConfig};

#[derive(Debug, Parser)]
#[command(
    name = "bench",
    about = "Measure per-frame agent latency and missed frames"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Play full games between two kick agents and report gate latency.
    Run(RunArgs),
    /// Compare two CSV files produced by `bench run`.
    Compare {
        #[arg(long)]
        csv_a: PathBuf,
        #[arg(long)]
        csv_b: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "rpc")]
    transport: TransportArg,
    #[arg(long, default_value_t = 1)]
    games: u32,
    #[arg(long, value_enum, default_value = "lockstep")]
    mode: ModeArg,
    #[arg(long, default_value_t = 16.66)]
    budget_ms: f64,
    /// Listen port on loopback; 0 picks a free one.
    #[arg(long, default_value_t = 0)]
    port: u16,
    /// GET round trips per frame on the baseline transport.
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(long, default_value_t = 8000)]
    audio_bytes: usize,
    #[arg(long, default_value_t = 153_600)]
    screen_bytes: usize,
    #[arg(long, default_value_t = 3600)]
    frames: u32,
    #[arg(long, default_value_t = 15)]
    frame_delay: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "unpaced")]
    pace: PaceArg,
    #[arg(long)]
    no_warmup: bool,
    /// Play one agent against the built-in NEUTRAL opponent.
    #[arg(long)]
    solo: bool,
    #[arg(long, value_enum, default_value = "p1")]
    measure: MeasureArg,
}

impl RunArgs {
    fn config(&self) -> BenchConfig {
        BenchConfig {
            transport: self.transport.into(),
            games: self.games,
            mode: self.mode.into(),
            pace: self.pace.into(),
            game: GameConfig {
                frames_per_game: self.frames,
                frame_delay: self.frame_delay,
                budget_ms: self.budget_ms,
                audio_payload_bytes: self.audio_bytes,
                screen_payload_bytes: self.screen_bytes,
                seed: self.seed,
                ..GameConfig::default()
            },
            accessor_calls: self.k,
            port: self.port,
            csv: self.csv.clone(),
            warmup: !self.no_warmup,
            solo: self.solo,
            measure: self.measure.into(),
        }
    }
}

fn main() -> ExitCode {
    init_logging();
    match Cli::parse().command {
        Command::Run(args) => match run_benchmark(&args.config()) {
            Ok(report) => {
                println!("{report}");
                if let Some(path) = &args.csv {
                    println!("samples written to {}", path.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("bench run failed: {e}");
                if let BenchError::Run { partial, .. } = &e {
                    eprintln!(
                        "{} samples were collected before the failure",
                        partial.len()
                    );
                }
                ExitCode::FAILURE
            }
        },
        Command::Compare { csv_a, csv_b } => match Comparison::from_csv(&csv_a, &csv_b) {
            Ok(cmp) => {
                println!("A = {}\nB = {}", csv_a.display(), csv_b.display());
                println!("{cmp}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("compare failed: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
