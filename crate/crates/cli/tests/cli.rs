use std::path::PathBuf;
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn rvtwin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rvtwin")).args(args).current_dir(root()).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_prints_outputs() {
    let o = rvtwin(&["check", "specs/p2_tolerance.tessla", "traces/listing1.in"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 20);
    assert!(stdout(&o).starts_with("0: diff = 1.0\n"));
}

#[test]
fn check_without_outputs_prints_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("quiet.tessla");
    std::fs::write(&spec, "in expectedSpeed: Events[Float]\nin actualSpeed: Events[Float]\ndef y = expectedSpeed + actualSpeed\n").unwrap();
    let o = rvtwin(&["check", spec.to_str().unwrap(), "traces/listing1.in"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn malformed_trace_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("bad.in");
    std::fs::write(&trace, "0: expectedSpeed = 1\n1 expectedSpeed 2\n").unwrap();
    let o = rvtwin(&["check", "specs/p2_tolerance.tessla", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn bad_param_is_a_usage_error() {
    let o = rvtwin(&["check", "specs/p2_tolerance.tessla", "traces/listing1.in", "--param", "delta"]);
    assert_eq!(o.status.code(), Some(1));
    let o = rvtwin(&["check", "specs/p2_tolerance.tessla", "traces/listing1.in", "--param", "nosuch=1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(rvtwin(&["compare", "--bogus"]).status.code(), Some(1));
}

#[test]
fn invalid_scenario_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("bad.toml");
    std::fs::write(&sc, "name = \"x\"\n[mission]\nkind = \"schedule\"\ndwell = -1.0\n").unwrap();
    let out = dir.path().join("out");
    let o = rvtwin(&["experiment", sc.to_str().unwrap(), "--mode", "default", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("scenario"), "{}", stderr(&o));
}

#[test]
fn experiment_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = rvtwin(&["experiment", "scenarios/flat.toml", "--mode", "augmented", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(line["mode"], "augmented");
    assert_eq!(line["seed"], 3);
    for f in ["augmented_ticks.csv", "augmented_twin.jsonl", "augmented_states.csv", "summary.jsonl"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn compare_asserts_reduction() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let ok = rvtwin(&["compare", "scenarios/canonical.toml", "--seed", "2", "--out", out, "--assert-reduction", "25"]);
    assert!(ok.status.success(), "{}", stderr(&ok));
    assert!(stdout(&ok).contains("reduction"));
    let fail = rvtwin(&["compare", "scenarios/flat.toml", "--seed", "2", "--out", out, "--assert-reduction", "25"]);
    assert_eq!(fail.status.code(), Some(3));
}

#[test]
fn replay_round_trips_through_an_inline_twin() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let o = rvtwin(&["experiment", "scenarios/flat.toml", "--mode", "augmented", "--out", run.to_str().unwrap()]);
    assert!(o.status.success());
    let states = run.join("augmented_states.csv");
    let log = dir.path().join("replay.jsonl");
    let o = rvtwin(&["replay", states.to_str().unwrap(), "--log", log.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1000);
    assert!(stderr(&o).contains("1000 verdicts, 0 timeouts"), "{}", stderr(&o));
    let verdicts = |p: PathBuf| -> Vec<String> {
        std::fs::read_to_string(p).unwrap().lines().filter(|l| l.contains("\"kind\":\"verdict\"")).map(String::from).collect()
    };
    assert_eq!(verdicts(run.join("augmented_twin.jsonl")), verdicts(log));
}

#[test]
fn replay_rejects_short_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("short.csv");
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((1..=360).map(|j| format!("lidar_{j}")));
    header.extend(["expected_speed", "actual_speed", "proposed_linear", "proposed_angular"].map(String::from));
    header.extend((1..=7).map(|j| format!("meta_{j}")));
    let row = vec!["0"; 359].join(",");
    std::fs::write(&csv, format!("{}\n{row}\n", header.join(","))).unwrap();
    let o = rvtwin(&["replay", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 1"), "{}", stderr(&o));
}

#[test]
fn serve_needs_a_broker() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("twin.toml");
    std::fs::write(&cfg, "broker_url = \"memory\"\n").unwrap();
    assert_eq!(rvtwin(&["serve", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    std::fs::write(&cfg, "qos = 7\n").unwrap();
    assert_eq!(rvtwin(&["serve", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn shipped_twin_config_is_valid() {
    rvtwin::twin::TwinConfig::load(root().join("configs/twin.toml")).unwrap();
}

/// Kills the child if the test fails before it exits.
struct Reaped(std::process::Child);

impl Drop for Reaped {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn start_broker() -> u16 {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let server = rumqttd::ServerSettings {
        name: "v4".into(),
        listen: format!("127.0.0.1:{port}").parse().unwrap(),
        tls: None,
        next_connection_delay_ms: 1,
        connections: rumqttd::ConnectionSettings {
            connection_timeout_ms: 60_000,
            max_payload_size: 1 << 20,
            max_inflight_count: 100,
            auth: None,
            external_auth: None,
            dynamic_filters: true,
        },
    };
    let config = rumqttd::Config {
        router: rumqttd::RouterConfig {
            max_connections: 100,
            max_outgoing_packet_count: 200,
            max_segment_size: 1 << 20,
            max_segment_count: 10,
            ..Default::default()
        },
        v4: Some([("1".to_string(), server)].into()),
        ..Default::default()
    };
    std::thread::spawn(move || rumqttd::Broker::new(config).start().unwrap());
    while std::net::TcpStream::connect(("127.0.0.1", port)).is_err() {
        std::thread::sleep(std::time::Duration::from_millis(20));
    }
    port
}

#[test]
fn serve_answers_over_mqtt_and_stops_on_sigterm() {
    use std::sync::{Arc, Mutex};
    use std::time::{Duration, Instant};

    use rvtwin::msg::{ActuationCommand, RobotStateMsg, VerdictMsg};
    use rvtwin::twin::{MqttTransport, Transport};

    let port = start_broker();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("twin.toml");
    let log = dir.path().join("twin.jsonl");
    std::fs::write(&cfg, format!("broker_url = \"mqtt://127.0.0.1:{port}\"\nlog_path = \"{}\"\n", log.display())).unwrap();
    let mut child = Reaped(Command::new(env!("CARGO_BIN_EXE_rvtwin")).args(["serve", "--config", cfg.to_str().unwrap()]).spawn().unwrap());

    let robot = MqttTransport::connect(&format!("mqtt://127.0.0.1:{port}"), "cli-robot", 1, Duration::from_secs(5)).unwrap();
    let got: Arc<Mutex<Vec<VerdictMsg>>> = Arc::default();
    let g = got.clone();
    robot.subscribe("action", Arc::new(move |_, p| g.lock().unwrap().push(serde_json::from_slice(p).unwrap()))).unwrap();
    let state = RobotStateMsg {
        seq: 0,
        t: 0.0,
        expected_linear: 0.1,
        expected_angular: 0.0,
        actual_linear: 0.0,
        actual_angular: 0.0,
        expected_speed: 0.1,
        actual_speed: 0.0,
        lidar: vec![3.5; 360],
        proposed: ActuationCommand::new(0.1, 0.0),
        meta: vec![String::new(); 7],
    };
    // The twin may still be subscribing; resend with fresh seqs until it answers.
    let deadline = Instant::now() + Duration::from_secs(10);
    let mut seq = 0;
    while got.lock().unwrap().is_empty() {
        assert!(Instant::now() < deadline, "no verdict from serve");
        let msg = RobotStateMsg { seq, ..state.clone() };
        robot.publish("tessla", &serde_json::to_vec(&msg).unwrap()).unwrap();
        seq += 1;
        std::thread::sleep(Duration::from_millis(200));
    }
    let v = got.lock().unwrap()[0].clone();
    assert!(!v.p2_ok);
    assert!((v.action.linear - 0.15).abs() < 1e-12);

    Command::new("kill").args(["-TERM", &child.0.id().to_string()]).status().unwrap();
    let deadline = Instant::now() + Duration::from_secs(5);
    let status = loop {
        if let Some(s) = child.0.try_wait().unwrap() {
            break s;
        }
        assert!(Instant::now() < deadline, "serve ignored SIGTERM");
        std::thread::sleep(Duration::from_millis(50));
    };
    assert!(status.success());
    assert!(std::fs::read_to_string(&log).unwrap().contains("\"kind\":\"verdict\""));
}
