use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};

use rvtwin::harness::{self, read_replay_csv, replay};
use rvtwin::sim::{Mode, Scenario};
use rvtwin::stream::{compile, format_trace, parse_spec, parse_trace, run_trace, Value};
use rvtwin::twin::{self, attach_inline, BusLink, LogStore, MemoryBus, MqttTransport, Transport, TwinConfig, TwinService};

#[derive(Parser)]
#[command(name = "rvtwin", version, about = "Digital-twin runtime verification harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a monitor program over a trace and print its outputs.
    Check {
        spec: PathBuf,
        trace: PathBuf,
        /// Override a constant definition, e.g. `delta=2`.
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
    },
    /// Publish a recorded CSV as robot states and collect verdicts.
    Replay {
        csv: PathBuf,
        /// Speed-up factor; 0 sends as fast as possible.
        #[arg(long, default_value_t = 0.0)]
        rate: f64,
        /// External MQTT broker; without it an in-process twin is used.
        #[arg(long)]
        broker: Option<String>,
        /// Twin and topic settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Log file for the in-process twin.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Per-state verdict timeout.
        #[arg(long, default_value_t = 2000)]
        timeout_ms: u64,
    },
    /// Simulate one mode of a scenario.
    Experiment {
        scenario: PathBuf,
        #[arg(long)]
        mode: Mode,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Simulate both modes with one seed and compare their MSE.
    Compare {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Fail (exit 3) unless the MSE drops by at least this many percent.
        #[arg(long, value_name = "PERCENT")]
        assert_reduction: Option<f64>,
    },
    /// Run the twin against an MQTT broker until SIGTERM or SIGINT.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
    Acceptance(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) => 2,
            Failure::Acceptance(_) => 3,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(m) | Failure::Runtime(m) | Failure::Acceptance(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Check { spec, trace, params } => check(&spec, &trace, &params),
        Cmd::Replay { csv, rate, broker, config, log, timeout_ms } => {
            replay_cmd(&csv, rate, broker, config, log, Duration::from_millis(timeout_ms))
        }
        Cmd::Experiment { scenario, mode, seed, out, config } => {
            let sc = Scenario::load(&scenario).map_err(usage)?;
            let cfg = twin_config(config.as_deref())?;
            let r = harness::run_experiment_to_dir(&sc, mode, seed.unwrap_or(sc.seed), &cfg, &out).map_err(runtime)?;
            println!("{}", r.summary_line());
            Ok(())
        }
        Cmd::Compare { scenario, seed, out, config, assert_reduction } => {
            let sc = Scenario::load(&scenario).map_err(usage)?;
            let cfg = twin_config(config.as_deref())?;
            let s = harness::compare(&sc, seed.unwrap_or(sc.seed), &cfg, &out).map_err(runtime)?;
            print!("{}", s.table());
            match assert_reduction {
                Some(p) if s.reduction * 100.0 < p => Err(Failure::Acceptance(format!(
                    "MSE reduction {:.1}% is below the required {p}%",
                    s.reduction * 100.0
                ))),
                _ => Ok(()),
            }
        }
        Cmd::Serve { config } => serve(&config),
    }
}

fn twin_config(path: Option<&Path>) -> Result<TwinConfig, Failure> {
    path.map_or_else(|| Ok(TwinConfig::default()), |p| TwinConfig::load(p).map_err(usage))
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn check(spec_path: &Path, trace_path: &Path, params: &[String]) -> Result<(), Failure> {
    let mut spec = parse_spec(&read(spec_path)?).map_err(|e| runtime(format!("{}: {e}", spec_path.display())))?;
    for p in params {
        let (name, value) = p.split_once('=').ok_or_else(|| usage(format!("--param expects NAME=VALUE, got `{p}`")))?;
        let v: Value = value.trim().parse().map_err(|e| usage(format!("--param {name}: {e}")))?;
        spec.set_constant(name.trim(), v).map_err(usage)?;
    }
    let trace = parse_trace(&read(trace_path)?).map_err(|e| runtime(format!("{}: {e}", trace_path.display())))?;
    let graph = compile(&spec).map_err(runtime)?;
    let out = run_trace(&graph, &trace).map_err(runtime)?;
    print!("{}", format_trace(&out));
    Ok(())
}

fn replay_cmd(
    csv: &Path,
    rate: f64,
    broker: Option<String>,
    config: Option<PathBuf>,
    log_path: Option<PathBuf>,
    timeout: Duration,
) -> Result<(), Failure> {
    if !(rate >= 0.0) {
        return Err(usage("--rate must be >= 0"));
    }
    let cfg = twin_config(config.as_deref())?;
    let file = std::fs::File::open(csv).map_err(|e| usage(format!("{}: {e}", csv.display())))?;
    let rows = read_replay_csv(file).map_err(runtime)?;
    let report = match broker {
        Some(url) => {
            let t = MqttTransport::connect(&url, "rvtwin-replay", cfg.qos, Duration::from_secs(5)).map_err(runtime)?;
            let t: Arc<dyn Transport> = Arc::new(t);
            let mut link = BusLink::new(t, &cfg.topics, timeout).map_err(runtime)?;
            replay(&rows, &mut link, rate).map_err(runtime)?
        }
        None => {
            let store = match &log_path {
                Some(p) => LogStore::open(p).map_err(usage)?,
                None => LogStore::memory(),
            };
            let bus = MemoryBus::new();
            let svc = TwinService::new(cfg.clone(), store).map_err(usage)?;
            let _twin = attach_inline(svc, bus.clone()).map_err(runtime)?;
            let mut link = BusLink::new(bus, &cfg.topics, timeout).map_err(runtime)?;
            replay(&rows, &mut link, rate).map_err(runtime)?
        }
    };
    for v in &report.verdicts {
        println!("{}", serde_json::to_string(v).expect("verdict serializes"));
    }
    eprintln!("sent {} states, {} verdicts, {} timeouts", report.sent, report.verdicts.len(), report.timeouts);
    Ok(())
}

fn serve(config: &Path) -> Result<(), Failure> {
    let cfg = TwinConfig::load(config).map_err(usage)?;
    if cfg.broker_url == "memory" {
        return Err(usage("serve needs an MQTT broker_url"));
    }
    let store = match &cfg.log_path {
        Some(p) => LogStore::open(p).map_err(usage)?,
        None => LogStore::memory(),
    };
    let service = TwinService::new(cfg.clone(), store).map_err(usage)?;
    let shutdown = Arc::new(AtomicBool::new(false));
    for sig in [signal_hook::consts::SIGTERM, signal_hook::consts::SIGINT] {
        signal_hook::flag::register(sig, shutdown.clone()).map_err(runtime)?;
    }
    let transport = MqttTransport::start(&cfg.broker_url, &cfg.client_id, cfg.qos).map_err(usage)?;
    transport.on_connection_change(Arc::new(|up| {
        if up {
            log::info!("connected to broker");
        } else {
            log::warn!("broker connection lost");
        }
    }));
    let transport: Arc<dyn Transport> = Arc::new(transport);
    let counters = twin::run_service(service, transport, shutdown).map_err(runtime)?;
    eprint!("{}", counters.render(false, false));
    Ok(())
}
