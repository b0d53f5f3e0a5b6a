//! Headline acceptance checks. Runs as a plain binary so every criterion
//! prints exactly one PASS/FAIL line, with its wall-clock budget.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mindframe_core::frames::{reachable_keys, render, Frame, Utterance};
use mindframe_core::geometry::{Point, Pose, Rect};
use mindframe_core::llm::{
    parse_decision, Completion, GatewayConfig, GatewayError, HttpGateway, LanguageModel,
    PromptBundle,
};
use mindframe_core::log::{parse_log, replay, to_jsonl, BehaviorTrace, LogRecord, SessionLog};
use mindframe_core::model::{
    initial_beliefs, ActionKind, ActionParams, ErrorOrigin, EventPayload, IntentKind, LabelRef,
    NavGoal, OperationalStatus, QueryKind, State, Topic, Twist,
};
use mindframe_core::policy::{parse_command, ActionDecision, Engine, RationaleTag};
use mindframe_core::runtime::{Runtime, SessionSettings, TurnStep};
use mindframe_core::script::{complete_turn, run_script, Script, FIXTURE_SCRIPTS};
use mindframe_core::sim::{astar, PLANNING_MARGIN};
use mindframe_core::world::{
    bundled_world, rasterize, OccupancyGrid, WorldSpec, DEFAULT_ROBOT_RADIUS,
};
use mindframe_service::mock::{MockMode, MockServer};

type Outcome = Result<String, String>;
/// Name, check, wall-clock budget in seconds.
type Criterion = (&'static str, fn() -> Outcome, u64);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixture_runs(frame: Frame) -> Vec<(&'static str, Vec<LogRecord>)> {
    FIXTURE_SCRIPTS
        .iter()
        .map(|(name, text)| {
            let script = Script::parse(text).expect("fixture parses");
            let settings = SessionSettings {
                frame,
                seed: 42,
                ..Default::default()
            };
            let rt = run_script(
                &script,
                script.load_world().expect("world"),
                settings,
                SessionLog::in_memory(),
                None,
            )
            .expect("fixture runs");
            (*name, rt.records().to_vec())
        })
        .collect()
}

// ---------------------------------------------------------------- 1

fn frame_invariance() -> Outcome {
    let runs: Vec<_> = Frame::ALL.iter().map(|f| fixture_runs(*f)).collect();
    for i in 0..FIXTURE_SCRIPTS.len() {
        let hashes: Vec<String> = runs
            .iter()
            .map(|r| BehaviorTrace::from_records(&r[i].1).hash)
            .collect();
        ensure!(
            hashes.iter().all(|h| *h == hashes[0]),
            "{}: hashes differ across frames: {hashes:?}",
            runs[0][i].0
        );
        // the frames really did talk differently
        let texts = |r: &[LogRecord]| -> Vec<String> {
            r.iter()
                .filter_map(|x| x.utterance.as_ref().map(|u| u.text.clone()))
                .collect()
        };
        ensure!(
            texts(&runs[0][i].1) != texts(&runs[2][i].1),
            "{}: transcripts identical",
            runs[0][i].0
        );
    }
    Ok(format!(
        "{} scripts x 3 frames, one hash per script",
        FIXTURE_SCRIPTS.len()
    ))
}

// ---------------------------------------------------------------- 2

enum Expect {
    Goto(&'static str),
    Query(QueryKind),
    FreeChoice,
}

fn dialogue_parsing() -> Outcome {
    use Expect::*;
    let cases: [(&str, &str, Expect); 13] = [
        ("bookstore", "Go to wellness bookshelf.", Goto("wellness")),
        ("bookstore", "What is your state?", Query(QueryKind::State)),
        ("bookstore", "What is your position?", Query(QueryKind::Position)),
        ("bookstore", "Go to cash.", Goto("cash")),
        ("bookstore", "Where are you going?", Query(QueryKind::Goal)),
        ("small_house", "Go to bed.", Goto("bed")),
        ("small_house", "Go to tv.", Goto("tv")),
        ("small_house", "Go to the bed.", Goto("bed")),
        ("small_house", "What is your goal now?", Query(QueryKind::Goal)),
        (
            "bookstore",
            "I am a big fan of Tolkien, can you go where the book of that genre are?",
            Goto("fantasy"),
        ),
        (
            "bookstore",
            "I need to get internet access to post about a wellness book. Go to the most suitable place to it.",
            Goto("internet"),
        ),
        (
            "small_house",
            "You look dirty, maybe a quick wash at the sink would benefit you, go there.",
            Goto("sink"),
        ),
        ("small_house", "Go to a random place, your choice.", FreeChoice),
    ];
    for (world, text, expect) in &cases {
        let w = bundled_world(world).map_err(|e| e.to_string())?;
        let intent = parse_command(text, &w);
        ensure!(!intent.is_unknown(), "`{text}` parsed as unknown");
        let ok = match (expect, &intent.kind) {
            (
                Goto(l),
                IntentKind::Goto {
                    target: LabelRef::Resolved { label },
                },
            ) => label == l,
            (Query(q), IntentKind::Query { about }) => about == q,
            (FreeChoice, IntentKind::FreeChoice) => true,
            _ => false,
        };
        ensure!(ok, "`{text}` parsed as {:?}", intent.kind);
    }
    Ok(format!("{}/{} utterances", cases.len(), cases.len()))
}

// ---------------------------------------------------------------- 3

fn rect_distance(r: &Rect, p: Point) -> f64 {
    let dx = (r.xmin - p.x).max(0.0).max(p.x - r.xmax);
    let dy = (r.ymin - p.y).max(0.0).max(p.y - r.ymax);
    dx.hypot(dy)
}

fn navigation() -> Outcome {
    let goals = [
        ("bookstore", "wellness", -1.56, -1.59),
        ("bookstore", "internet", 4.58, -5.64),
        ("small_house", "bed", -4.40, 1.04),
        ("small_house", "tv", 0.62, -4.24),
    ];
    let mut report = Vec::new();
    for (world_name, label, gx, gy) in goals {
        let world = bundled_world(world_name).map_err(|e| e.to_string())?;
        let settings = SessionSettings::default();
        let budget = (120.0 / settings.dt).round() as u64;
        let mut rt = Runtime::start(world.clone(), settings, SessionLog::in_memory())
            .map_err(|e| e.to_string())?;
        rt.post_message(&format!("Go to {label}."))
            .map_err(|e| e.to_string())?;
        let target = rt.state().nav.goal.as_ref().map(|g| g.target);
        ensure!(
            target.is_some_and(|t| (t.x - gx).abs() < 1e-9 && (t.y - gy).abs() < 1e-9),
            "{label}: goal {target:?} is not ({gx}, {gy})"
        );
        let mut ticks = 0;
        while rt.is_navigating() && ticks < budget {
            rt.tick().map_err(|e| e.to_string())?;
            ticks += 1;
        }
        ensure!(!rt.is_navigating(), "{label}: not reached within 120 s");
        let end = rt.kinematics().pose;
        let miss = (end.x - gx).hypot(end.y - gy);
        ensure!(miss <= 0.15, "{label}: stopped {miss:.3} m from the goal");
        let mut hits = 0;
        for r in rt.records() {
            if let EventPayload::Tick { pose, .. } = &r.event.payload {
                if world
                    .obstacles
                    .iter()
                    .any(|o| rect_distance(o, pose.position()) < DEFAULT_ROBOT_RADIUS)
                {
                    hits += 1;
                }
            }
        }
        ensure!(hits == 0, "{label}: {hits} poses intersect obstacles");
        report.push(format!("{label} {:.1}s/{miss:.3}m", ticks as f64 * 0.05));
    }
    Ok(report.join(", "))
}

// ---------------------------------------------------------------- 4

fn replay_determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut logs = 0;
    let mut corruptions = 0;
    for (name, records) in fixture_runs(Frame::Agentive)
        .into_iter()
        .chain(fixture_runs(Frame::Mechanistic))
    {
        let text = to_jsonl(&records);
        let parsed = parse_log(&text).map_err(|e| format!("{name}: {e}"))?;
        let out = replay(&parsed).map_err(|e| format!("{name}: {e}"))?;
        ensure!(
            to_jsonl(&out.records) == text,
            "{name}: replayed log differs"
        );
        logs += 1;

        let starts: Vec<usize> = std::iter::once(0)
            .chain(text.match_indices('\n').map(|(i, _)| i + 1))
            .take(records.len())
            .collect();
        for _ in 0..10 {
            let line = rng.random_range(0..records.len());
            let end = starts.get(line + 1).map_or(text.len(), |s| s - 1);
            let at = rng.random_range(starts[line]..end);
            let mut bytes = text.clone().into_bytes();
            if !bytes[at].is_ascii() {
                continue;
            }
            let replacement = loop {
                let b = rng.random_range(b' '..=b'~');
                if b != bytes[at] {
                    break b;
                }
            };
            bytes[at] = replacement;
            let corrupted = String::from_utf8(bytes).expect("ascii swap keeps utf-8");
            match parse_log(&corrupted) {
                Err(mindframe_core::log::LogError::Corrupt { seq, .. }) if seq == line as u64 => {
                    corruptions += 1
                }
                other => return Err(format!("{name}: byte {at} (line {line}) gave {other:?}")),
            }
        }
    }
    Ok(format!(
        "{logs} logs replayed bit-exact, {corruptions} corruptions located"
    ))
}

// ---------------------------------------------------------------- 5

const MARKERS: [(Frame, &[&str]); 3] = [
    (
        Frame::Agentive,
        &["believe", "intend", "want", "notice", "think", "I believe"],
    ),
    (
        Frame::Teleological,
        &[
            "goal",
            "purpose",
            "function",
            "objective",
            "designed",
            "The goal of this movement is",
        ],
    ),
    (
        Frame::Mechanistic,
        &[
            "Odometry reading",
            "Publishing Twist",
            "Publishing Twist:",
            "Executing velocity command",
            "coordinates",
        ],
    ),
];

fn mentions(text: &str, marker: &str) -> bool {
    let t = text.to_lowercase();
    let m = marker.to_lowercase();
    let mut from = 0;
    while let Some(i) = t[from..].find(&m) {
        let at = from + i;
        let before = t[..at].chars().last();
        if before.is_none_or(|c| !c.is_alphanumeric()) {
            return true;
        }
        from = at + m.len();
    }
    false
}

fn random_state(rng: &mut ChaCha8Rng, world: &WorldSpec, navigating: bool) -> State {
    let mut s = State::from_world(world);
    let b = world.bounds;
    s.nav.pose = Pose::new(
        rng.random_range(b.xmin..b.xmax),
        rng.random_range(b.ymin..b.ymax),
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
    );
    s.robot.localization_confidence = rng.random_range(0.5..1.0);
    if navigating {
        let w = &world.waypoints[rng.random_range(0..world.waypoints.len())];
        s.nav.goal = Some(NavGoal {
            label: w.label.clone(),
            target: Pose::new(w.x, w.y, 0.0),
            progress: rng.random_range(0.0..1.0),
        });
        s.nav.engaged = true;
        s.robot.status = OperationalStatus::Navigating;
        s.nav.command = Twist {
            linear: rng.random_range(0.0..0.26),
            angular: rng.random_range(-1.82..1.82),
        };
    }
    s
}

fn lexicon() -> Outcome {
    let worlds = [
        bundled_world("bookstore").unwrap(),
        bundled_world("small_house").unwrap(),
    ];
    let keys = reachable_keys();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let (mut required_ok, mut forbidden_hits, mut surface_checked) = (0, 0, 0);
    const N: usize = 1000;
    for i in 0..N {
        let frame = Frame::ALL[i % 3];
        let world = &worlds[rng.random_range(0..2)];
        let (tag, nav) = keys[rng.random_range(0..keys.len())];
        let mut state = random_state(&mut rng, world, nav);
        let beliefs = initial_beliefs(&state).map_err(|e| e.to_string())?;
        let label = world.waypoints[rng.random_range(0..world.waypoints.len())]
            .label
            .clone();
        let decision = match tag {
            RationaleTag::UserRequest | RationaleTag::FreeChoice => ActionDecision {
                params: ActionParams::move_to(&label, beliefs.location(&label).unwrap()),
                rationale_tags: vec![tag],
            },
            RationaleTag::ArrivalReport => {
                state.nav.last_arrival = Some(label.clone());
                ActionDecision::chat(Topic::ArrivalReport)
            }
            RationaleTag::NavigationFailure => {
                ActionDecision::chat(Topic::NavigationFailure(label.clone()))
            }
            RationaleTag::Clarification => ActionDecision::chat(Topic::Clarify("somewhere".into())),
            RationaleTag::Greeting => ActionDecision::chat(Topic::Greeting),
            RationaleTag::Smalltalk => ActionDecision::chat(Topic::Smalltalk),
            RationaleTag::PositionReport => ActionDecision::chat(Topic::PositionReport),
            RationaleTag::StateReport => ActionDecision::chat(Topic::StateReport),
            RationaleTag::GoalReport => ActionDecision::chat(Topic::GoalReport),
        };
        let u: Utterance = render(&decision, &state, &beliefs, frame).map_err(|e| e.to_string())?;
        for (f, markers) in MARKERS {
            let hit = markers.iter().find(|m| mentions(&u.text, m));
            if f == frame {
                if hit.is_some() {
                    required_ok += 1;
                }
            } else if let Some(m) = hit {
                forbidden_hits += 1;
                eprintln!("{frame} utterance carries {f} marker `{m}`: {}", u.text);
            }
        }
        if tag == RationaleTag::UserRequest {
            let surface = match frame {
                Frame::Agentive => "I believe",
                Frame::Teleological => "The goal of this movement is",
                Frame::Mechanistic => "Publishing Twist:",
            };
            ensure!(
                u.text.contains(surface),
                "{frame} move lacks `{surface}`: {}",
                u.text
            );
            surface_checked += 1;
        }
    }
    ensure!(
        required_ok == N,
        "{} utterances miss their frame's markers",
        N - required_ok
    );
    ensure!(
        forbidden_hits == 0,
        "{forbidden_hits} forbidden marker hits"
    );
    Ok(format!(
        "{N} utterances: {required_ok}/{N} with required markers, {forbidden_hits} forbidden hits, {surface_checked} move openers checked"
    ))
}

// ---------------------------------------------------------------- 6

fn llm_settings() -> SessionSettings {
    SessionSettings {
        engine: Engine::Llm,
        phrasing: true,
        seed: 42,
        ..Default::default()
    }
}

fn gateway(endpoint: String, timeout_secs: f64) -> Result<HttpGateway, String> {
    HttpGateway::new(GatewayConfig {
        endpoint,
        timeout_secs,
        temperature: 0.0,
        ..Default::default()
    })
    .map_err(|e| e.to_string())
}

/// Counts model calls so a turn's time can be bounded per call.
struct Counting<'a>(&'a HttpGateway, AtomicUsize);

impl LanguageModel for Counting<'_> {
    fn complete(&self, b: &PromptBundle) -> Result<Completion, GatewayError> {
        self.1.fetch_add(1, Ordering::Relaxed);
        self.0.complete(b)
    }
}

fn gateway_robustness() -> Outcome {
    const TIMEOUT: f64 = 0.4;
    let refused = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").map_err(|e| e.to_string())?;
        format!("http://{}", l.local_addr().unwrap())
    };
    let delay =
        MockServer::start(MockMode::Delay(Duration::from_secs(3))).map_err(|e| e.to_string())?;
    let garbage = MockServer::start(MockMode::Garbage).map_err(|e| e.to_string())?;
    let dropper = MockServer::start(MockMode::Drop).map_err(|e| e.to_string())?;
    let faults = [
        ("timeout", delay.endpoint(), "timeout"),
        ("garbage", garbage.endpoint(), "protocol"),
        ("refused", refused, "connection_failed"),
        ("dropped", dropper.endpoint(), "connection_failed"),
    ];
    let turns = [
        "Go to cash.",
        "What is your state?",
        "Go to a random place, your choice.",
    ];
    let mut completed = 0;
    let mut total = 0;
    for (fault, endpoint, code) in &faults {
        let gw = gateway(endpoint.clone(), TIMEOUT)?;
        let model = Counting(&gw, Default::default());
        let world = bundled_world("bookstore").unwrap();
        let mut rt = Runtime::start(world.clone(), llm_settings(), SessionLog::in_memory())
            .map_err(|e| e.to_string())?;
        let mut rules = Runtime::start(
            world,
            SessionSettings {
                seed: 42,
                ..Default::default()
            },
            SessionLog::in_memory(),
        )
        .map_err(|e| e.to_string())?;
        for text in turns {
            total += 1;
            let before = rt.records().len();
            let started = Instant::now();
            model.1.store(0, Ordering::Relaxed);
            let step = rt.post_message(text).map_err(|e| e.to_string())?;
            ensure!(
                matches!(step, TurnStep::NeedsCompletion(_)),
                "{fault}: llm turn did not ask the model"
            );
            let reply =
                complete_turn(&mut rt, step, Some(&model)).map_err(|e| format!("{fault}: {e}"))?;
            let took = started.elapsed().as_secs_f64();
            ensure!(
                took <= model.1.load(Ordering::Relaxed) as f64 * (TIMEOUT + 0.5),
                "{fault}: turn took {took:.2}s for {} calls",
                model.1.load(Ordering::Relaxed)
            );
            let errors: Vec<_> = rt.records()[before..]
                .iter()
                .filter_map(|r| match &r.event.payload {
                    EventPayload::Error {
                        origin: ErrorOrigin::Gateway,
                        code,
                        ..
                    } => Some(code.clone()),
                    _ => None,
                })
                .collect();
            ensure!(
                !errors.is_empty() && errors.iter().all(|c| c == code),
                "{fault}: turn `{text}` logged gateway errors {errors:?}"
            );
            ensure!(!rt.is_pending(), "{fault}: turn left pending");
            // the fallback behaves like the rules engine
            let step = rules.post_message(text).map_err(|e| e.to_string())?;
            let TurnStep::Done(expected) = step else {
                return Err("rules engine asked the model".into());
            };
            ensure!(
                reply.utterance.text == expected.utterance.text,
                "{fault}: fallback reply `{}` != rules reply `{}`",
                reply.utterance.text,
                expected.utterance.text
            );
            completed += 1;
        }
        replay(rt.records()).map_err(|e| format!("{fault}: {e}"))?;
    }
    ensure!(completed == total, "{completed}/{total} turns completed");

    // canned structured replies through the wire
    let bookstore = bundled_world("bookstore").unwrap();
    let house = bundled_world("small_house").unwrap();
    let mut canned: Vec<(String, &WorldSpec, ActionKind, Option<String>)> = vec![(
        "```json\n{\"action\": \"move\", \"target\": \"cash\", \"utterance\": \"I'm heading to the cash location\"}\n```"
            .into(),
        &bookstore,
        ActionKind::Move,
        Some("cash".into()),
    )];
    let mut i = 0usize;
    while canned.len() < 50 {
        let world = if i.is_multiple_of(2) {
            &bookstore
        } else {
            &house
        };
        let label = world.waypoints[i % world.waypoints.len()].label.clone();
        let body = match i % 5 {
            0 => format!("```json\n{{\"action\": \"move\", \"target\": \"{label}\", \"utterance\": \"On my way.\"}}\n```"),
            1 => format!("Sure thing. {{\"action\":\"move\",\"target\":\"{label}\",\"utterance\":\"Going {{now}}.\"}} Done."),
            2 => format!("```json\n{{\"action\": \"MOVE\", \"target_label\": \"{label}\", \"utterance\": \"\"}}\n```"),
            3 => "```json\n{\"action\": \"chat\", \"utterance\": \"I'm right here.\"}\n```".to_string(),
            _ => format!("{{\"action\": \"chat\", \"target\": \"{label}\", \"utterance\": \"That's the {label}.\"}}"),
        };
        let (kind, target) = match i % 5 {
            0..=2 => (ActionKind::Move, Some(label)),
            3 => (ActionKind::Chat, None),
            _ => (ActionKind::Chat, Some(label)),
        };
        canned.push((body, world, kind, target));
        i += 1;
    }
    let server = MockServer::start(MockMode::Canned(
        canned.iter().map(|c| c.0.clone()).collect(),
    ))
    .map_err(|e| e.to_string())?;
    let gw = gateway(server.endpoint(), 2.0)?;
    let probe = PromptBundle {
        profile: mindframe_core::llm::PromptProfile::Interpret,
        system: "s".into(),
        context: "{}".into(),
        user: "u".into(),
        frame: None,
    };
    let mut accepted = 0;
    for (body, world, kind, target) in &canned {
        let text = gw.complete(&probe).map_err(|e| e.to_string())?.text;
        ensure!(text == *body, "mock reply out of order");
        let d = parse_decision(&text, world).map_err(|e| format!("rejected `{body}`: {e:?}"))?;
        ensure!(
            d.action == *kind && d.target_label == *target,
            "`{body}` decoded as {d:?}"
        );
        accepted += 1;
    }
    Ok(format!(
        "{completed}/{total} faulted turns fell back with error events; {accepted}/{} canned replies accepted",
        canned.len()
    ))
}

// ---------------------------------------------------------------- 7

/// Plain Dijkstra over the same 8-connected move model (no corner cutting).
fn dijkstra(grid: &OccupancyGrid, start: (usize, usize), goal: (usize, usize)) -> Option<f64> {
    let (w, h) = (grid.width(), grid.height());
    let res = grid.resolution();
    let free = |x: i64, y: i64| {
        x >= 0
            && y >= 0
            && (x as usize) < w
            && (y as usize) < h
            && grid.is_free(x as usize, y as usize)
    };
    let mut dist = vec![f64::INFINITY; w * h];
    let mut heap = BinaryHeap::new();
    dist[start.1 * w + start.0] = 0.0;
    heap.push(Reverse((0u64, start.0, start.1)));
    let scale = 1e9;
    while let Some(Reverse((d, x, y))) = heap.pop() {
        let d = d as f64 / scale;
        if (x, y) == goal {
            return Some(d);
        }
        if d > dist[y * w + x] + 1e-12 {
            continue;
        }
        for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if !free(nx, ny) {
                    continue;
                }
                let diagonal = dx != 0 && dy != 0;
                if diagonal && !(free(x as i64 + dx, y as i64) && free(x as i64, y as i64 + dy)) {
                    continue;
                }
                let nd = d + if diagonal { res * 2f64.sqrt() } else { res };
                let k = ny as usize * w + nx as usize;
                if nd < dist[k] - 1e-12 {
                    dist[k] = nd;
                    heap.push(Reverse((
                        (nd * scale).round() as u64,
                        nx as usize,
                        ny as usize,
                    )));
                }
            }
        }
    }
    None
}

fn planner_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for name in ["bookstore", "small_house"] {
        let world = bundled_world(name).unwrap();
        let grid =
            rasterize(&world, DEFAULT_ROBOT_RADIUS + PLANNING_MARGIN).map_err(|e| e.to_string())?;
        let free: Vec<(usize, usize)> = (0..grid.height())
            .flat_map(|y| (0..grid.width()).map(move |x| (x, y)))
            .filter(|&(x, y)| grid.is_free(x, y))
            .collect();
        let mut found = 0;
        let mut tries = 0;
        while found < 100 {
            tries += 1;
            ensure!(tries < 10_000, "{name}: could not sample reachable pairs");
            let s = free[rng.random_range(0..free.len())];
            let g = free[rng.random_range(0..free.len())];
            if s == g {
                continue;
            }
            let Some(oracle) = dijkstra(&grid, s, g) else {
                continue;
            };
            let (_, cost) =
                astar(&grid, grid.index(s.0, s.1), grid.index(g.0, g.1)).ok_or_else(|| {
                    format!("{name}: A* found no path for a reachable pair {s:?}->{g:?}")
                })?;
            let rel = (cost - oracle).abs() / oracle;
            ensure!(
                rel <= 0.05,
                "{name}: {s:?}->{g:?} A* {cost:.4} vs Dijkstra {oracle:.4}"
            );
            worst = worst.max(rel);
            found += 1;
        }
        pairs += found;
    }
    Ok(format!("{pairs} pairs, worst relative gap {:.2e}", worst))
}

// ----------------------------------------------------------------

fn main() {
    let criteria: [Criterion; 7] = [
        ("frame invariance", frame_invariance, 10),
        ("dialogue parsing", dialogue_parsing, 1),
        ("navigation", navigation, 5),
        ("replay determinism", replay_determinism, 5),
        ("lexicon compliance", lexicon, 5),
        ("gateway robustness", gateway_robustness, 10),
        ("planner sanity", planner_sanity, 20),
    ];
    let hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let suite = Instant::now();
    let mut failed = 0;
    println!();
    for (name, check, budget) in criteria {
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(format!(
                "panicked: {:?}",
                p.downcast_ref::<String>()
                    .map(String::as_str)
                    .or(p.downcast_ref::<&str>().copied())
            ))
        });
        let took = started.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if took <= Duration::from_secs(budget) => ("PASS", d),
            Ok(d) => ("FAIL", format!("over budget; {d}")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "acceptance {status} {name:<20} {:>6.2}s / {budget:>2}s  {detail}",
            took.as_secs_f64()
        );
    }
    panic::set_hook(hook);
    let total = suite.elapsed().as_secs_f64();
    let within = total < 60.0;
    println!(
        "acceptance {} suite total {total:.2}s / 60s",
        if within { "PASS" } else { "FAIL" }
    );
    if failed > 0 || !within {
        std::process::exit(1);
    }
}
