//! One actor task per session owns the runtime; HTTP handlers talk to it
//! through a command queue and streams read a shared copy of the log.

use std::sync::{Arc, RwLock};
use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Value};
use tokio::sync::{mpsc, oneshot, watch};
use tokio::task::JoinHandle;
use tokio::time::{Instant, MissedTickBehavior};

use mindframe_core::frames::Utterance;
use mindframe_core::llm::{Completion, GatewayError, LanguageModel, PromptBundle};
use mindframe_core::log::{to_jsonl, LogRecord};
use mindframe_core::runtime::{Runtime, TurnStep};
use mindframe_core::script::ARRIVAL_TIMEOUT_SECS;

use crate::ApiError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MessageReply {
    pub seq: u64,
    pub utterance: Utterance,
}

/// How far `/advance` moves a session's clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Advance {
    Ticks(u64),
    /// Until no goal is active, at most the arrival timeout.
    UntilIdle,
}

pub(crate) enum Command {
    Message(String, oneshot::Sender<Result<MessageReply, ApiError>>),
    Frame(String, oneshot::Sender<Result<u64, ApiError>>),
    Advance(Advance, oneshot::Sender<Result<u64, ApiError>>),
    Close(oneshot::Sender<()>),
}

/// Read side of a session, shared with handlers and streams.
pub struct Feed {
    records: RwLock<Vec<LogRecord>>,
    state: RwLock<Value>,
    // (records published, closed)
    version: watch::Sender<(usize, bool)>,
}

impl Feed {
    fn new() -> Self {
        Self {
            records: RwLock::new(Vec::new()),
            state: RwLock::new(Value::Null),
            version: watch::channel((0, false)).0,
        }
    }

    pub fn len(&self) -> usize {
        self.version.borrow().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_closed(&self) -> bool {
        self.version.borrow().1
    }

    pub fn subscribe(&self) -> watch::Receiver<(usize, bool)> {
        self.version.subscribe()
    }

    /// Records `from..` currently published.
    pub fn records_from(&self, from: usize) -> Vec<LogRecord> {
        let r = self.records.read().expect("feed lock");
        r.get(from..).map(<[_]>::to_vec).unwrap_or_default()
    }

    pub fn jsonl(&self) -> String {
        to_jsonl(&self.records.read().expect("feed lock"))
    }

    pub fn state(&self) -> Value {
        self.state.read().expect("feed lock").clone()
    }

    fn publish(&self, rt: &Runtime, id: &str) {
        let all = rt.records();
        {
            let mut r = self.records.write().expect("feed lock");
            let have = r.len();
            r.extend_from_slice(&all[have..]);
        }
        *self.state.write().expect("feed lock") = snapshot(rt, id);
        self.version.send_replace((all.len(), rt.is_closed()));
    }
}

fn snapshot(rt: &Runtime, id: &str) -> Value {
    let s = rt.settings();
    json!({
        "id": id,
        "world": rt.world().name,
        "frame": rt.frame(),
        "engine": s.engine,
        "seed": s.seed,
        "status": if rt.is_closed() { "closed" } else { "live" },
        "clock": rt.now(),
        "dt": s.dt,
        "ticks": rt.tick_count(),
        "robot_status": rt.state().robot.status,
        "pose": rt.kinematics().pose,
        "odometry": rt.state().nav.pose,
        "goal": rt.state().nav.goal,
        "navigating": rt.is_navigating(),
        "awaiting_model": rt.is_pending(),
        "beliefs": rt.beliefs(),
        "desires": rt.desires(),
        "intention": rt.intention(),
        "records": rt.records().len(),
    })
}

pub struct SessionHandle {
    pub id: String,
    pub feed: Arc<Feed>,
    tx: mpsc::Sender<Command>,
}

impl SessionHandle {
    pub(crate) async fn request<T>(
        &self,
        make: impl FnOnce(oneshot::Sender<Result<T, ApiError>>) -> Command,
    ) -> Result<T, ApiError> {
        let (tx, rx) = oneshot::channel();
        self.tx
            .send(make(tx))
            .await
            .map_err(|_| ApiError::closed())?;
        rx.await.map_err(|_| ApiError::closed())?
    }

    pub async fn close(&self) {
        let (tx, rx) = oneshot::channel();
        if self.tx.send(Command::Close(tx)).await.is_ok() {
            let _ = rx.await;
        }
    }
}

#[derive(Clone)]
pub struct ActorConfig {
    /// Simulated seconds per wall second; 0 stops the clock (advance manually).
    pub time_scale: f64,
    pub idle_timeout: Duration,
    pub llm: Option<Arc<dyn LanguageModel>>,
}

type Inflight = JoinHandle<Result<Completion, GatewayError>>;

struct Actor {
    id: String,
    rt: Runtime,
    feed: Arc<Feed>,
    cfg: ActorConfig,
    inflight: Option<Inflight>,
    waiter: Option<oneshot::Sender<Result<MessageReply, ApiError>>>,
}

pub fn spawn_session(id: String, rt: Runtime, cfg: ActorConfig) -> SessionHandle {
    let feed = Arc::new(Feed::new());
    feed.publish(&rt, &id);
    let (tx, rx) = mpsc::channel(64);
    let actor = Actor {
        id: id.clone(),
        rt,
        feed: feed.clone(),
        cfg,
        inflight: None,
        waiter: None,
    };
    tokio::spawn(actor.run(rx));
    SessionHandle { id, feed, tx }
}

async fn join_inflight(slot: &mut Option<Inflight>) -> Result<Completion, GatewayError> {
    match slot.as_mut() {
        Some(handle) => {
            let out = handle.await.unwrap_or_else(|e| {
                Err(GatewayError::Connection(format!("model call aborted: {e}")))
            });
            *slot = None;
            out
        }
        None => std::future::pending().await,
    }
}

impl Actor {
    async fn run(mut self, mut rx: mpsc::Receiver<Command>) {
        let dt = self.rt.settings().dt;
        let mut ticker = (self.cfg.time_scale > 0.0).then(|| {
            let mut i = tokio::time::interval(Duration::from_secs_f64(dt / self.cfg.time_scale));
            i.set_missed_tick_behavior(MissedTickBehavior::Delay);
            i
        });
        let mut deadline = Instant::now() + self.cfg.idle_timeout;
        loop {
            tokio::select! {
                cmd = rx.recv() => {
                    deadline = Instant::now() + self.cfg.idle_timeout;
                    match cmd {
                        None => break,
                        Some(Command::Close(done)) => {
                            self.shutdown();
                            let _ = done.send(());
                            break;
                        }
                        Some(cmd) => self.handle(cmd),
                    }
                }
                _ = async { ticker.as_mut().expect("guarded").tick().await }, if ticker.is_some() => {
                    if let Err(e) = self.rt.tick() {
                        tracing::warn!(session = %self.id, error = %e, "tick failed");
                    }
                }
                out = join_inflight(&mut self.inflight) => self.completed(out),
                _ = tokio::time::sleep_until(deadline) => {
                    tracing::info!(session = %self.id, "closing idle session");
                    self.shutdown();
                    break;
                }
            }
            self.feed.publish(&self.rt, &self.id);
        }
        self.feed.publish(&self.rt, &self.id);
    }

    fn shutdown(&mut self) {
        if let Some(h) = self.inflight.take() {
            h.abort();
        }
        if let Some(w) = self.waiter.take() {
            let _ = w.send(Err(ApiError::closed()));
        }
        if let Err(e) = self.rt.close() {
            tracing::warn!(session = %self.id, error = %e, "closing log failed");
        }
    }

    fn handle(&mut self, cmd: Command) {
        match cmd {
            Command::Message(text, reply) => match self.rt.post_message(&text) {
                Ok(step) => {
                    self.waiter = Some(reply);
                    self.step(step);
                }
                Err(e) => {
                    let _ = reply.send(Err(e.into()));
                }
            },
            Command::Frame(name, reply) => {
                let _ = reply.send(self.rt.switch_frame(&name).map_err(Into::into));
            }
            Command::Advance(a, reply) => {
                let _ = reply.send(self.advance(a));
            }
            Command::Close(_) => unreachable!("handled by the loop"),
        }
    }

    fn advance(&mut self, a: Advance) -> Result<u64, ApiError> {
        let budget = match a {
            Advance::Ticks(n) => n,
            Advance::UntilIdle => (ARRIVAL_TIMEOUT_SECS / self.rt.settings().dt).round() as u64,
        };
        let mut done = 0;
        while done < budget {
            if a == Advance::UntilIdle && !self.rt.is_navigating() {
                break;
            }
            self.rt.tick()?;
            done += 1;
        }
        Ok(done)
    }

    fn step(&mut self, step: TurnStep) {
        match step {
            TurnStep::Done(reply) => {
                if let Some(w) = self.waiter.take() {
                    let _ = w.send(Ok(MessageReply {
                        seq: reply.seq,
                        utterance: reply.utterance,
                    }));
                }
            }
            TurnStep::NeedsCompletion(bundle) => self.call_model(bundle),
        }
    }

    fn call_model(&mut self, bundle: PromptBundle) {
        let llm = self.cfg.llm.clone();
        self.inflight = Some(tokio::task::spawn_blocking(move || match llm {
            Some(m) => m.complete(&bundle),
            None => Err(GatewayError::Connection(
                "no language model configured".into(),
            )),
        }));
    }

    fn completed(&mut self, out: Result<Completion, GatewayError>) {
        match self.rt.resume(out) {
            Ok(step) => self.step(step),
            Err(e) => {
                if let Some(w) = self.waiter.take() {
                    let _ = w.send(Err(e.into()));
                }
            }
        }
    }
}
