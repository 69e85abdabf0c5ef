use std::net::TcpListener;
use std::process::{Child, Command, Output, Stdio};
use std::thread;
use std::time::{Duration, Instant};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SHORT: &[&str] = &["--frames", "215", "--frame-delay", "15", "--no-warmup"];

#[test]
fn run_writes_csv_and_compare_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("rpc.csv");
    let b = dir.path().join("baseline.csv");

    let out = bench(
        &[
            &["run", "--transport", "rpc", "--csv", a.to_str().unwrap()],
            SHORT,
        ]
        .concat(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("frames            200"));

    let out = bench(
        &[
            &[
                "run",
                "--transport",
                "baseline",
                "--k",
                "8",
                "--csv",
                b.to_str().unwrap(),
            ],
            SHORT,
        ]
        .concat(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let text = std::fs::read_to_string(&a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("frame_index,latency_ms,outcome"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 200);
    assert!(rows[0].starts_with("15,"));
    assert!(rows[199].starts_with("214,"));

    let out = bench(&[
        "compare",
        "--csv-a",
        a.to_str().unwrap(),
        "--csv-b",
        b.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("mean latency reduction (A vs B):"));
}

#[test]
fn bad_input_exits_nonzero() {
    let out = bench(&[
        "run",
        "--frames",
        "10",
        "--frame-delay",
        "15",
        "--no-warmup",
    ]);
    assert!(!out.status.success());
    let out = bench(&["run", "--games", "0"]);
    assert!(!out.status.success());
    let out = bench(&[
        "compare",
        "--csv-a",
        "/nonexistent/a.csv",
        "--csv-b",
        "/nonexistent/b.csv",
    ]);
    assert!(!out.status.success());
    let out = bench(&["run", "--transport", "carrier-pigeon"]);
    assert!(!out.status.success());
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port()
}

struct KillOnDrop(Child);

impl Drop for KillOnDrop {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn wait_for_port(port: u16) {
    let deadline = Instant::now() + Duration::from_secs(20);
    while std::net::TcpStream::connect(("127.0.0.1", port)).is_err() {
        assert!(Instant::now() < deadline, "server did not start on {port}");
        thread::sleep(Duration::from_millis(50));
    }
}

fn agent(port: u16, player: &str, transport: &str) -> Child {
    Command::new(env!("CARGO_BIN_EXE_agent"))
        .args([
            "run",
            "--address",
            &format!("127.0.0.1:{port}"),
            "--player",
            player,
            "--transport",
            transport,
        ])
        .env("RUST_LOG", "warn")
        .stdout(Stdio::piped())
        .spawn()
        .unwrap()
}

#[test]
fn server_and_agents_play_a_game() {
    let (port, baseline_port) = (free_port(), free_port());
    let _server = KillOnDrop(
        Command::new(env!("CARGO_BIN_EXE_framegate"))
            .args([
                "serve",
                "--host",
                "127.0.0.1",
                "--baseline-port",
                &baseline_port.to_string(),
                "--frames",
                "60",
            ])
            .env("FRAMEGATE_PORT", port.to_string())
            .env("RUST_LOG", "error")
            .stderr(Stdio::null())
            .spawn()
            .unwrap(),
    );
    wait_for_port(port);
    wait_for_port(baseline_port);

    // one agent per transport; both land in the same game
    let p1 = agent(port, "1", "rpc");
    let p2 = agent(baseline_port, "2", "baseline");
    for child in [p1, p2] {
        let out = child.wait_with_output().unwrap();
        assert!(out.status.success());
        assert!(
            stdout(&out).contains("frames handled: 45"),
            "{}",
            stdout(&out)
        );
    }

    let out = Command::new(env!("CARGO_BIN_EXE_agent"))
        .args([
            "run",
            "--address",
            &format!("127.0.0.1:{port}"),
            "--player",
            "3",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn agent_reports_unreachable_server() {
    let port = free_port();
    let out = Command::new(env!("CARGO_BIN_EXE_agent"))
        .args([
            "run",
            "--address",
            &format!("127.0.0.1:{port}"),
            "--player",
            "1",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot register"));
}
