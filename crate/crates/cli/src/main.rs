use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use mindframe_core::frames::Frame;
use mindframe_core::geometry::Pose;
use mindframe_core::llm::{GatewayConfig, HttpGateway, LanguageModel};
use mindframe_core::log::{
    export_stimuli, read_log, replay, write_bundle, BehaviorTrace, FsyncPolicy, LogRecord,
    SessionLog,
};
use mindframe_core::model::EventPayload;
use mindframe_core::policy::Engine;
use mindframe_core::runtime::SessionSettings;
use mindframe_core::script::{fixture_script, run_script, Script};
use mindframe_core::sim::{plan, DEFAULT_ARRIVAL_TOLERANCE};
use mindframe_core::world::{open_world, rasterize, WorldSpec};
use mindframe_service::mock::{serve_mock, MockMode};
use mindframe_service::{serve, PerCallGateway, ServiceConfig};

#[derive(Parser)]
#[command(
    name = "mindframe",
    version,
    about = "Scripted robot sessions under three explanation frames"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario script at full simulation speed and write its log(s).
    Run(RunArgs),
    /// Build a stimulus bundle from one log per frame.
    Export(ExportArgs),
    /// Re-run a log from its inputs and check it reproduces bit-exactly.
    Replay {
        /// Log file (JSON lines).
        log: PathBuf,
    },
    /// Serve a mock chat-completion endpoint.
    MockLlm(MockArgs),
    /// Parse and check a world file or bundled world name.
    ValidateWorld {
        /// Bundled world name or path to a TOML world file.
        world: String,
    },
    /// Serve the HTTP/WebSocket session API.
    Serve(ServeArgs),
}

#[derive(Args)]
struct LlmArgs {
    /// Base URL of a chat-completion server; `/v1/chat/completions` is appended.
    #[arg(long, env = "MINDFRAME_LLM_ENDPOINT")]
    llm_endpoint: Option<String>,
    /// Model name sent with each request.
    #[arg(long, env = "MINDFRAME_LLM_MODEL")]
    llm_model: Option<String>,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 10.0)]
    llm_timeout: f64,
}

impl LlmArgs {
    fn config(&self) -> Option<GatewayConfig> {
        let endpoint = self.llm_endpoint.clone()?;
        let mut cfg = GatewayConfig {
            endpoint,
            timeout_secs: self.llm_timeout,
            ..Default::default()
        };
        if let Some(m) = &self.llm_model {
            cfg.model = m.clone();
        }
        Some(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Script file, or the name of a bundled fixture script.
    script: String,
    /// World name or path; overrides the script's `world` line.
    #[arg(long)]
    world: Option<String>,
    /// Decision engine: rules | llm.
    #[arg(long, default_value = "rules")]
    engine: Engine,
    /// Explanation frame for a single run: agentive | teleological | mechanistic.
    #[arg(long, default_value = "agentive", conflicts_with = "all_frames")]
    frame: Frame,
    /// Run once per frame with the same seed and export a stimulus bundle.
    #[arg(long)]
    all_frames: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Seeded Gaussian noise on odometry.
    #[arg(long)]
    odometry_noise: bool,
    /// Ask the model to rephrase replies (lexicon-checked).
    #[arg(long)]
    phrasing: bool,
    /// Output directory for logs and the bundle.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args)]
struct ExportArgs {
    /// One log per frame.
    #[arg(required = true, num_args = 3)]
    logs: Vec<PathBuf>,
    /// Scenario name recorded in the bundle (defaults to the first log's stem).
    #[arg(long)]
    scenario: Option<String>,
    /// Script file recorded in the bundle (defaults to the logged utterances).
    #[arg(long)]
    script: Option<PathBuf>,
    /// Bundle directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MockArgs {
    /// echo | garbage | drop | delay:<ms> | status:<code>.
    #[arg(long, default_value = "echo")]
    mode: MockMode,
    /// JSON array of reply strings served in rotation (overrides --mode).
    #[arg(long)]
    canned: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8089")]
    addr: SocketAddr,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Default simulated seconds per wall second; 0 = manual clock.
    #[arg(long, default_value_t = 1.0)]
    time_scale: f64,
    /// Minutes without activity before a session is closed.
    #[arg(long, default_value_t = 15)]
    idle_minutes: u64,
    #[command(flatten)]
    llm: LlmArgs,
}

type CliResult = Result<(), String>;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Export(a) => export(a),
        Command::Replay { log } => replay_cmd(&log),
        Command::MockLlm(a) => mock(a),
        Command::ValidateWorld { world } => validate_world(&world),
        Command::Serve(a) => serve_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_script(arg: &str) -> Result<(String, String), String> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let name = path
            .file_stem()
            .map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
        return Ok((name, text));
    }
    fixture_script(arg)
        .map(|t| (arg.to_string(), t.to_string()))
        .ok_or_else(|| format!("no script file or bundled script named `{arg}`"))
}

fn run(a: RunArgs) -> CliResult {
    let (name, text) = load_script(&a.script)?;
    let script = Script::parse(&text).map_err(|e| e.to_string())?;
    let world = match &a.world {
        Some(w) => open_world(w).map_err(|e| e.to_string())?,
        None => script.load_world().map_err(|e| e.to_string())?,
    };
    let gateway = match a.llm.config() {
        Some(cfg) => Some(HttpGateway::new(cfg).map_err(|e| e.to_string())?),
        None => None,
    };
    let llm = gateway.as_ref().map(|g| g as &dyn LanguageModel);
    if (a.engine == Engine::Llm || a.phrasing) && llm.is_none() {
        return Err("--engine llm and --phrasing need --llm-endpoint".into());
    }
    std::fs::create_dir_all(&a.out).map_err(|e| format!("{}: {e}", a.out.display()))?;

    let frames: Vec<Frame> = if a.all_frames {
        Frame::ALL.to_vec()
    } else {
        vec![a.frame]
    };
    let mut runs = Vec::new();
    for frame in frames {
        let settings = SessionSettings {
            engine: a.engine,
            seed: a.seed,
            frame,
            odometry_noise: a.odometry_noise,
            phrasing: a.phrasing,
            ..Default::default()
        };
        let path = a.out.join(format!("{name}.{frame}.jsonl"));
        let log = SessionLog::create(&path, FsyncPolicy::Buffered).map_err(|e| e.to_string())?;
        let rt =
            run_script(&script, world.clone(), settings, log, llm).map_err(|e| e.to_string())?;
        let hash = BehaviorTrace::from_records(rt.records()).hash;
        println!(
            "{:<13} {} records  trace {hash}  {}",
            frame.to_string(),
            rt.records().len(),
            path.display()
        );
        runs.push(rt.records().to_vec());
    }
    if a.all_frames {
        let item = export_stimuli(&name, &text, &runs).map_err(|e| e.to_string())?;
        let dir = a.out.join(&name);
        write_bundle(&item, &dir).map_err(|e| e.to_string())?;
        println!("bundle        trace {}  {}", item.trace.hash, dir.display());
    }
    Ok(())
}

fn read(path: &Path) -> Result<Vec<LogRecord>, String> {
    read_log(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn export(a: ExportArgs) -> CliResult {
    let runs = a
        .logs
        .iter()
        .map(|p| read(p))
        .collect::<Result<Vec<_>, _>>()?;
    let scenario = a.scenario.unwrap_or_else(|| {
        let stem = a.logs[0]
            .file_stem()
            .map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
        stem.split('.').next().unwrap_or(&stem).to_string()
    });
    let script = match &a.script {
        Some(p) => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None => runs[0]
            .iter()
            .filter_map(|r| match &r.event.payload {
                EventPayload::UserUtterance { text } => Some(format!("say {text}\n")),
                _ => None,
            })
            .collect(),
    };
    let item = export_stimuli(&scenario, &script, &runs).map_err(|e| e.to_string())?;
    write_bundle(&item, &a.out).map_err(|e| e.to_string())?;
    println!("bundle trace {}  {}", item.trace.hash, a.out.display());
    Ok(())
}

fn replay_cmd(path: &Path) -> CliResult {
    let records = read(path)?;
    let out = replay(&records).map_err(|e| e.to_string())?;
    println!(
        "replay identical: {} records, trace {}",
        out.records.len(),
        out.trace.hash
    );
    Ok(())
}

fn runtime() -> Result<tokio::runtime::Runtime, String> {
    tokio::runtime::Runtime::new().map_err(|e| e.to_string())
}

fn mock(a: MockArgs) -> CliResult {
    let mode = match &a.canned {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            let replies: Vec<String> =
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?;
            if replies.is_empty() {
                return Err("canned reply list is empty".into());
            }
            MockMode::Canned(replies)
        }
        None => a.mode,
    };
    runtime()?.block_on(async {
        let listener = tokio::net::TcpListener::bind(a.addr)
            .await
            .map_err(|e| e.to_string())?;
        let addr = listener.local_addr().map_err(|e| e.to_string())?;
        println!("mock model at http://{addr} (POST /v1/chat/completions)");
        let stop = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        serve_mock(listener, mode, stop)
            .await
            .map_err(|e| e.to_string())
    })
}

fn validate_world(arg: &str) -> CliResult {
    let world: WorldSpec = open_world(arg).map_err(|e| e.to_string())?;
    let settings = SessionSettings::default();
    let grid = rasterize(&world, settings.robot_radius + settings.planning_margin)
        .map_err(|e| e.to_string())?;
    println!(
        "{}: {} obstacles, {} waypoints, grid {}x{} ({} free cells)",
        world.name,
        world.obstacles.len(),
        world.waypoints.len(),
        grid.width(),
        grid.height(),
        grid.free_count()
    );
    let mut unreachable = Vec::new();
    for w in &world.waypoints {
        match plan(
            &grid,
            world.spawn,
            Pose::new(w.x, w.y, 0.0),
            DEFAULT_ARRIVAL_TOLERANCE,
        ) {
            Ok(p) => println!(
                "  {:<12} ({:>6.2}, {:>6.2})  {:.2} m from spawn",
                w.label, w.x, w.y, p.grid_path_length
            ),
            Err(e) => {
                println!(
                    "  {:<12} ({:>6.2}, {:>6.2})  unreachable: {e}",
                    w.label, w.x, w.y
                );
                unreachable.push(w.label.clone());
            }
        }
    }
    if unreachable.is_empty() {
        Ok(())
    } else {
        Err(format!(
            "unreachable from spawn: {}",
            unreachable.join(", ")
        ))
    }
}

fn serve_cmd(a: ServeArgs) -> CliResult {
    let config = ServiceConfig {
        time_scale: a.time_scale,
        idle_timeout: Duration::from_secs(a.idle_minutes * 60),
        llm: a
            .llm
            .config()
            .map(|c| Arc::new(PerCallGateway(c)) as Arc<dyn LanguageModel>),
        ..Default::default()
    };
    runtime()?.block_on(async {
        let listener = tokio::net::TcpListener::bind(a.addr)
            .await
            .map_err(|e| e.to_string())?;
        println!(
            "listening on http://{}",
            listener.local_addr().map_err(|e| e.to_string())?
        );
        serve(listener, config).await.map_err(|e| e.to_string())
    })
}
