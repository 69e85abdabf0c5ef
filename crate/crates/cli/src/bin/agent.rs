use std::process::ExitCode;

use clap::{Parser, Subcommand};
use framegate_cli::{init_logging, TransportArg};
use framegate_core::baseline::run_baseline_agent;
use framegate_core::{connect_and_register, run_agent, BaselineConnection, KickAgent, RunSummary};

#[derive(Debug, Parser)]
#[command(
    name = "agent",
    about = "Run the rule-based kick agent against a framegate server"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    Run {
        #[arg(long, default_value = "127.0.0.1:50051")]
        address: String,
        /// 1 or 2.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        player: u8,
        #[arg(long, default_value = "KickAI")]
        name: String,
        /// Receive audio only.
        #[arg(long)]
        blind: bool,
        #[arg(long, value_enum, default_value = "rpc")]
        transport: TransportArg,
    },
}

fn report(summary: &RunSummary) -> ExitCode {
    println!(
        "frames handled: {}, callback errors: {}, stale acks: {}, frames {:?}..={:?}",
        summary.frames_handled,
        summary.callback_errors,
        summary.stale_acks,
        summary.first_frame,
        summary.last_frame
    );
    match &summary.error {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("agent stopped early: {e}");
            ExitCode::FAILURE
        }
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    init_logging();
    let Command::Run {
        address,
        player,
        name,
        blind,
        transport,
    } = Cli::parse().command;
    let player_one = player == 1;
    match transport {
        TransportArg::Rpc => match connect_and_register(&address, player_one, &name, blind).await {
            Ok(session) => {
                log::info!("registered as P{player} with id {}", session.uuid);
                report(&run_agent(session, &mut KickAgent).await)
            }
            Err(e) => {
                eprintln!("cannot register: {e}");
                ExitCode::FAILURE
            }
        },
        TransportArg::Baseline => {
            let summary = tokio::task::spawn_blocking(move || {
                BaselineConnection::connect(address.as_str(), player_one, &name, blind)
                    .map(|conn| run_baseline_agent(conn, &mut KickAgent))
            })
            .await
            .expect("agent thread");
            match summary {
                Ok(s) => report(&s),
                Err(e) => {
                    eprintln!("cannot register: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
