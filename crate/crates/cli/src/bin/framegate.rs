use std::net::{IpAddr, SocketAddr};
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use clap::{Parser, Subcommand};
use framegate_cli::{init_logging, ModeArg, PaceArg};
use framegate_core::baseline::DEFAULT_BASELINE_PORT;
use framegate_core::rpc::DEFAULT_PORT;
use framegate_core::stats::compute_stats;
use framegate_core::{BaselineServer, GameConfig, Lobby, MatchSettings, RpcServer, ServerConfig};

#[derive(Debug, Parser)]
#[command(name = "framegate", about = "Game-state streaming server")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Serve games over gRPC and, unless disabled, the baseline line protocol.
    Serve {
        #[arg(long, default_value = "0.0.0.0")]
        host: IpAddr,
        #[arg(long, env = "FRAMEGATE_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value_t = DEFAULT_BASELINE_PORT)]
        baseline_port: u16,
        #[arg(long)]
        no_baseline: bool,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, value_enum, default_value = "lockstep")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "unpaced")]
        pace: PaceArg,
        #[arg(long)]
        solo: bool,
        #[arg(long, default_value_t = 16.66)]
        budget_ms: f64,
        #[arg(long, default_value_t = 3600)]
        frames: u32,
        #[arg(long, default_value_t = 15)]
        frame_delay: u32,
        #[arg(long, default_value_t = 8000)]
        audio_bytes: usize,
        #[arg(long, default_value_t = 153_600)]
        screen_bytes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    init_logging();
    let Command::Serve {
        host,
        port,
        baseline_port,
        no_baseline,
        k,
        mode,
        pace,
        solo,
        budget_ms,
        frames,
        frame_delay,
        audio_bytes,
        screen_bytes,
        seed,
    } = Cli::parse().command;

    let game = GameConfig {
        frames_per_game: frames,
        frame_delay,
        budget_ms,
        audio_payload_bytes: audio_bytes,
        screen_payload_bytes: screen_bytes,
        seed,
        ..GameConfig::default()
    };
    let settings = MatchSettings {
        game,
        mode: mode.into(),
        pace: pace.into(),
    };
    let lobby =
        Lobby::new(ServerConfig { settings, solo }).context("invalid game configuration")?;

    let rpc = RpcServer::start(SocketAddr::new(host, port), Arc::clone(&lobby))
        .await
        .with_context(|| format!("cannot listen on port {port}"))?;
    let _baseline = if no_baseline {
        None
    } else {
        Some(
            BaselineServer::start(SocketAddr::new(host, baseline_port), k, Arc::clone(&lobby))
                .with_context(|| format!("cannot listen on baseline port {baseline_port}"))?,
        )
    };

    let reporter = Arc::clone(&lobby);
    std::thread::spawn(move || loop {
        match reporter.next_report(Duration::from_secs(3600)) {
            Some(Ok(report)) => {
                let p1 = report.samples[0].clone();
                match compute_stats(p1) {
                    Ok(stats) => log::info!(
                        "game over at frame {} (hash {}): P1 mean {:.3} ms, max {:.3} ms, misses {} ({:.2}%)",
                        report.frames_played(),
                        report.final_hash,
                        stats.mean_ms,
                        stats.max_ms,
                        stats.miss_frames,
                        stats.miss_rate_percent
                    ),
                    Err(_) => log::info!("game over at frame {}", report.frames_played()),
                }
            }
            Some(Err(e)) => log::error!("game aborted: {e}"),
            None => {}
        }
    });

    tokio::select! {
        res = rpc.wait() => res.context("gRPC server failed")?,
        _ = tokio::signal::ctrl_c() => log::info!("shutting down"),
    }
    Ok(())
}
