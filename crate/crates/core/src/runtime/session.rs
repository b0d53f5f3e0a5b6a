use thiserror::Error;

use super::SessionSettings;
use crate::frames::{
    check_lexicon, select_frame, Frame, FrameError, LexiconSpec, Provenance, TemplateLibrary,
    Utterance,
};
use crate::geometry::Pose;
use crate::llm::{
    interpret_prompt, parse_decision, report_prompt, Completion, DecisionError, DecisionFailure,
    GatewayError, LlmDecision, PromptBundle, PromptProfile,
};
use crate::log::{LogError, LogRecord, SessionLog};
use crate::model::{
    apply_event, promote, ActionKind, ActionParams, BeliefBase, Desire, ErrorOrigin, Event,
    EventPayload, Intent, IntentKind, Intention, IntentionStatus, ModelError, Proposition, State,
    Topic,
};
use crate::policy::{decide, parse_command, ActionDecision, DecisionTrigger, Engine, RationaleTag};
use crate::sim::{
    command, odometry, plan, step, tick_seed, KinematicState, NavPlan, PlanError, SimError,
};
use crate::world::{rasterize, OccupancyGrid, WorldError, WorldSpec};

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("session is closed")]
    Closed,
    #[error("message text is empty")]
    EmptyMessage,
    #[error("a turn is already waiting for the language model")]
    Busy,
    #[error("no turn is waiting for a completion")]
    NotPending,
    #[error("event does not answer the pending turn: {0}")]
    UnexpectedCompletion(String),
    #[error("invalid settings: {0}")]
    Settings(String),
    #[error("clock cannot move backwards from tick {current} to {requested}")]
    Clock { current: u64, requested: u64 },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// What a turn produced so far.
#[derive(Debug, Clone, PartialEq)]
pub enum TurnStep {
    /// The caller must obtain a completion for this prompt and pass it to
    /// [`Runtime::resume`]. Ticks may continue in the meantime.
    NeedsCompletion(PromptBundle),
    Done(Reply),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub utterance: Utterance,
    /// Record carrying the reply.
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq)]
enum Pending {
    Interpret { intent: Intent, t: f64 },
    Report { draft: Utterance, seq: u64 },
}

impl Pending {
    fn profile(&self) -> PromptProfile {
        match self {
            Pending::Interpret { .. } => PromptProfile::Interpret,
            Pending::Report { .. } => PromptProfile::Report,
        }
    }
}

/// One session: BDI state, simulator and log, advanced by external inputs
/// (messages, frame switches, clock ticks, model completions).
pub struct Runtime {
    world: WorldSpec,
    settings: SessionSettings,
    grid: OccupancyGrid,
    templates: TemplateLibrary,
    lexicon: LexiconSpec,
    state: State,
    beliefs: BeliefBase,
    desires: Vec<Desire>,
    intention: Option<Intention>,
    frame: Frame,
    plan: Option<NavPlan>,
    kin: KinematicState,
    tick_count: u64,
    goal_ticks: u64,
    log: SessionLog,
    pending: Option<Pending>,
}

impl std::fmt::Debug for Runtime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Runtime")
            .field("world", &self.world.name)
            .field("frame", &self.frame)
            .field("clock", &self.now())
            .field("records", &self.log.records().len())
            .finish()
    }
}

fn validate_settings(s: &SessionSettings) -> Result<(), RuntimeError> {
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !positive(s.dt) || s.dt > 1.0 {
        return Err(RuntimeError::Settings(format!(
            "dt must be in (0, 1], got {}",
            s.dt
        )));
    }
    if !(s.robot_radius >= 0.0 && s.planning_margin >= 0.0) {
        return Err(RuntimeError::Settings(
            "radius and margin must be non-negative".into(),
        ));
    }
    if !positive(s.limits.v_max) || !positive(s.limits.omega_max) {
        return Err(RuntimeError::Settings(
            "velocity limits must be positive".into(),
        ));
    }
    Ok(())
}

fn planner_code(e: &PlanError) -> &'static str {
    match e {
        PlanError::OutOfBounds(_) => "out_of_bounds",
        PlanError::UnreachableGoal { .. } => "unreachable_goal",
        PlanError::NoPath => "no_path",
    }
}

/// Schema closure for model decisions: every accepted decision is one the
/// rules engine could also have produced.
fn adopt(
    d: &LlmDecision,
    intent: &Intent,
    rules: &ActionDecision,
    base: &BeliefBase,
) -> Result<ActionDecision, DecisionError> {
    match d.action {
        ActionKind::Move => {
            let label = d.target_label.as_deref().unwrap_or_default();
            let p = base.location(label).ok_or_else(|| DecisionError {
                reason: DecisionFailure::UnresolvableLabel,
                detail: format!("no location belief for `{label}`"),
            })?;
            let tag = if matches!(intent.kind, IntentKind::FreeChoice) {
                RationaleTag::FreeChoice
            } else {
                RationaleTag::UserRequest
            };
            Ok(ActionDecision {
                params: ActionParams::move_to(label, p),
                rationale_tags: vec![tag],
            })
        }
        ActionKind::Chat if rules.action() == ActionKind::Chat => Ok(rules.clone()),
        ActionKind::Chat => Ok(ActionDecision::chat(Topic::Clarify("request".into()))),
    }
}

impl Runtime {
    /// Opens a session: logs `session_start` (with the greeting) at t = 0.
    pub fn start(
        world: WorldSpec,
        settings: SessionSettings,
        log: SessionLog,
    ) -> Result<Self, RuntimeError> {
        world.validate()?;
        validate_settings(&settings)?;
        let grid = rasterize(&world, settings.robot_radius + settings.planning_margin)?;
        let state = State::from_world(&world);
        let mut rt = Self {
            kin: KinematicState::at_rest(state.nav.pose),
            frame: settings.frame,
            grid,
            templates: TemplateLibrary::bundled().clone(),
            lexicon: LexiconSpec::default(),
            state,
            beliefs: BeliefBase::new(),
            desires: Vec::new(),
            intention: None,
            plan: None,
            tick_count: 0,
            goal_ticks: 0,
            log,
            pending: None,
            world,
            settings,
        };
        let e = Event::new(
            0.0,
            EventPayload::SessionStart {
                world: rt.world.clone(),
                settings: rt.settings.clone(),
            },
        );
        rt.apply(&e)?;
        let d = decide(
            &rt.state,
            &rt.beliefs,
            &DecisionTrigger::SessionStart,
            rt.settings.seed,
        );
        let u = rt.render(&d, &rt.state)?;
        rt.commit(e, Some(d.params), Some(u))?;
        Ok(rt)
    }

    /// Replaces the template packs (e.g. a hot-reloadable development set).
    pub fn set_templates(&mut self, templates: TemplateLibrary) {
        self.templates = templates;
    }

    pub fn templates_mut(&mut self) -> &mut TemplateLibrary {
        &mut self.templates
    }

    pub fn world(&self) -> &WorldSpec {
        &self.world
    }

    pub fn settings(&self) -> &SessionSettings {
        &self.settings
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn beliefs(&self) -> &BeliefBase {
        &self.beliefs
    }

    pub fn desires(&self) -> &[Desire] {
        &self.desires
    }

    pub fn intention(&self) -> Option<&Intention> {
        self.intention.as_ref()
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn plan(&self) -> Option<&NavPlan> {
        self.plan.as_ref()
    }

    /// Ground-truth kinematic state.
    pub fn kinematics(&self) -> &KinematicState {
        &self.kin
    }

    pub fn records(&self) -> &[LogRecord] {
        self.log.records()
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }

    pub fn is_navigating(&self) -> bool {
        self.plan.is_some()
    }

    pub fn is_pending(&self) -> bool {
        self.pending.is_some()
    }

    pub fn pending_profile(&self) -> Option<PromptProfile> {
        self.pending.as_ref().map(Pending::profile)
    }

    pub fn is_closed(&self) -> bool {
        self.log.is_closed()
    }

    pub fn tick_count(&self) -> u64 {
        self.tick_count
    }

    /// Simulated time in seconds.
    pub fn now(&self) -> f64 {
        self.tick_count as f64 * self.settings.dt
    }

    pub fn close(&mut self) -> Result<(), RuntimeError> {
        self.pending = None;
        Ok(self.log.close()?)
    }

    /// Moves the clock to `tick` without simulating (used by replay, where
    /// idle ticks are not logged).
    pub(crate) fn set_tick_count(&mut self, tick: u64) -> Result<(), RuntimeError> {
        if tick < self.tick_count {
            return Err(RuntimeError::Clock {
                current: self.tick_count,
                requested: tick,
            });
        }
        if tick > self.tick_count && self.plan.is_some() {
            return Err(RuntimeError::Internal(
                "cannot skip ticks while navigating".into(),
            ));
        }
        self.tick_count = tick;
        Ok(())
    }

    fn ensure_open(&self) -> Result<(), RuntimeError> {
        if self.log.is_closed() {
            Err(RuntimeError::Closed)
        } else {
            Ok(())
        }
    }

    fn apply(&mut self, e: &Event) -> Result<Vec<Desire>, RuntimeError> {
        let a = apply_event(&self.state, &self.beliefs, self.intention.as_ref(), e)?;
        let frame = select_frame(self.frame, e)?;
        self.state = a.state;
        self.beliefs = a.beliefs;
        self.intention = a.intention;
        if matches!(e.payload, EventPayload::SessionStart { .. }) {
            self.desires.clear();
        }
        self.desires.extend(a.desires.iter().cloned());
        self.frame = frame;
        Ok(a.desires)
    }

    fn commit(
        &mut self,
        event: Event,
        action: Option<ActionParams>,
        utterance: Option<Utterance>,
    ) -> Result<u64, RuntimeError> {
        let seq = self.log.next_seq();
        self.log.append(LogRecord {
            seq,
            event,
            beliefs: self.beliefs.clone(),
            desires: self.desires.clone(),
            intention: self.intention.clone(),
            action,
            frame: self.frame,
            utterance,
        })?;
        Ok(seq)
    }

    fn emit(
        &mut self,
        payload: EventPayload,
        action: Option<ActionParams>,
        utterance: Option<Utterance>,
    ) -> Result<u64, RuntimeError> {
        let e = Event::new(self.now(), payload);
        self.apply(&e)?;
        self.commit(e, action, utterance)
    }

    fn render(&self, d: &ActionDecision, view: &State) -> Result<Utterance, RuntimeError> {
        Ok(self.templates.render(d, view, &self.beliefs, self.frame)?)
    }

    fn drop_desire(&mut self, id: &str) {
        self.desires.retain(|d| d.id != id);
    }

    /// Non-tick events, newest last, for the model's context window.
    fn recent_events(&self) -> Vec<Event> {
        let mut out: Vec<Event> = self
            .log
            .records()
            .iter()
            .rev()
            .filter(|r| !matches!(r.event.payload, EventPayload::Tick { .. }))
            .take(crate::llm::RECENT_EVENTS)
            .map(|r| r.event.clone())
            .collect();
        out.reverse();
        out
    }

    /// Starts a user turn. With the rules engine it completes immediately.
    pub fn post_message(&mut self, text: &str) -> Result<TurnStep, RuntimeError> {
        self.ensure_open()?;
        if text.trim().is_empty() {
            return Err(RuntimeError::EmptyMessage);
        }
        if self.pending.is_some() {
            return Err(RuntimeError::Busy);
        }
        let t = self.now();
        self.emit(
            EventPayload::UserUtterance {
                text: text.to_string(),
            },
            None,
            None,
        )?;
        let intent = parse_command(text, &self.world);
        match self.settings.engine {
            Engine::Rules => {
                let d = self.rules_decision(&intent, t);
                self.finish_command(intent, d)
            }
            Engine::Llm => {
                let bundle = interpret_prompt(
                    &self.state,
                    &self.beliefs,
                    &self.desires,
                    self.intention.as_ref(),
                    &self.recent_events(),
                    text,
                );
                self.pending = Some(Pending::Interpret { intent, t });
                Ok(TurnStep::NeedsCompletion(bundle))
            }
        }
    }

    fn rules_decision(&self, intent: &Intent, t: f64) -> ActionDecision {
        decide(
            &self.state,
            &self.beliefs,
            &DecisionTrigger::UserUtterance {
                intent: intent.clone(),
                t,
            },
            self.settings.seed,
        )
    }

    /// The event a completion outcome is logged as.
    pub fn completion_event(
        &self,
        outcome: &Result<Completion, GatewayError>,
    ) -> Result<Event, RuntimeError> {
        let profile = self
            .pending
            .as_ref()
            .map(Pending::profile)
            .ok_or(RuntimeError::NotPending)?;
        let payload = match outcome {
            Ok(c) => EventPayload::LlmResponse {
                profile,
                text: c.text.clone(),
                truncated: c.truncated,
            },
            Err(g) => EventPayload::Error {
                origin: ErrorOrigin::Gateway,
                code: g.code().to_string(),
                detail: g.to_string(),
            },
        };
        Ok(Event::new(self.now(), payload))
    }

    /// Continues the pending turn with a model completion or gateway failure.
    pub fn resume(
        &mut self,
        outcome: Result<Completion, GatewayError>,
    ) -> Result<TurnStep, RuntimeError> {
        let e = self.completion_event(&outcome)?;
        self.resume_event(e)
    }

    /// Like [`Runtime::resume`] but with the already-built event (replay).
    pub fn resume_event(&mut self, e: Event) -> Result<TurnStep, RuntimeError> {
        self.ensure_open()?;
        let pending = self.pending.take().ok_or(RuntimeError::NotPending)?;
        let text = match &e.payload {
            EventPayload::LlmResponse { profile, text, .. } if *profile == pending.profile() => {
                Some(text.clone())
            }
            EventPayload::Error {
                origin: ErrorOrigin::Gateway,
                ..
            } => None,
            other => {
                self.pending = Some(pending);
                return Err(RuntimeError::UnexpectedCompletion(format!("{other:?}")));
            }
        };
        self.apply(&e)?;
        match pending {
            Pending::Interpret { intent, t } => {
                self.commit(e, None, None)?;
                let rules = self.rules_decision(&intent, t);
                let decision = match text {
                    None => rules,
                    Some(text) => match parse_decision(&text, &self.world)
                        .and_then(|d| adopt(&d, &intent, &rules, &self.beliefs))
                    {
                        Ok(d) => d,
                        Err(err) => {
                            self.emit(
                                EventPayload::Error {
                                    origin: ErrorOrigin::Validation,
                                    code: err.reason.code().to_string(),
                                    detail: err.detail,
                                },
                                None,
                                None,
                            )?;
                            rules
                        }
                    },
                };
                self.finish_command(intent, decision)
            }
            Pending::Report { draft, .. } => {
                let Some(text) = text else {
                    let seq = self.commit(e, None, None)?;
                    return Ok(TurnStep::Done(Reply {
                        utterance: draft,
                        seq,
                    }));
                };
                let truncated = matches!(
                    e.payload,
                    EventPayload::LlmResponse {
                        truncated: true,
                        ..
                    }
                );
                let candidate = Utterance {
                    text: text.trim().to_string(),
                    frame: draft.frame,
                    topic: draft.topic.clone(),
                    provenance: Provenance::Llm,
                };
                let violations = check_lexicon(&candidate, &self.lexicon);
                if candidate.text.is_empty() || truncated || !violations.is_empty() {
                    self.commit(e, None, None)?;
                    let detail = if candidate.text.is_empty() {
                        "empty rephrasing".to_string()
                    } else if truncated {
                        "truncated rephrasing".to_string()
                    } else {
                        serde_json::to_string(&violations).unwrap_or_default()
                    };
                    let seq = self.emit(
                        EventPayload::Error {
                            origin: ErrorOrigin::Lexicon,
                            code: "lexicon_violation".into(),
                            detail,
                        },
                        None,
                        None,
                    )?;
                    return Ok(TurnStep::Done(Reply {
                        utterance: draft,
                        seq,
                    }));
                }
                let seq = self.commit(e, None, Some(candidate.clone()))?;
                Ok(TurnStep::Done(Reply {
                    utterance: candidate,
                    seq,
                }))
            }
        }
    }

    fn reply(&mut self, utterance: Utterance, seq: u64) -> TurnStep {
        if self.settings.phrasing {
            let bundle = report_prompt(&utterance, &self.state, &self.beliefs);
            self.pending = Some(Pending::Report {
                draft: utterance,
                seq,
            });
            TurnStep::NeedsCompletion(bundle)
        } else {
            TurnStep::Done(Reply { utterance, seq })
        }
    }

    /// Cancels a live move intention, dropping its desire and plan.
    fn preempt_move(&mut self) {
        if let Some(i) = self.intention.as_mut() {
            if i.is_live_move() {
                i.status = IntentionStatus::Cancelled;
                let id = i.desire.clone();
                self.drop_desire(&id);
                self.plan = None;
            }
        }
    }

    fn finish_command(
        &mut self,
        intent: Intent,
        d: ActionDecision,
    ) -> Result<TurnStep, RuntimeError> {
        let goal = match &d.params {
            ActionParams::Move { label, .. } => Proposition::goto(label),
            ActionParams::Chat { topic, .. } => Proposition::respond(&topic.symbol()),
        };
        let e = Event::new(
            self.now(),
            EventPayload::CommandParsed {
                intent,
                goal: Some(goal),
            },
        );
        let new = self.apply(&e)?;
        let id = new
            .first()
            .map(|d| d.id.clone())
            .ok_or_else(|| RuntimeError::Internal("command_parsed produced no desire".into()))?;
        if d.action() == ActionKind::Move {
            self.preempt_move();
        }
        let chosen = promote(&self.desires, &self.beliefs)
            .into_iter()
            .find(|i| i.desire == id)
            .ok_or_else(|| RuntimeError::Internal(format!("desire {id} was not promoted")))?;
        let d = if chosen.params.kind() == d.action() {
            ActionDecision {
                params: chosen.params.clone(),
                rationale_tags: d.rationale_tags,
            }
        } else {
            match &chosen.params {
                ActionParams::Chat { topic, .. } => ActionDecision::chat(topic.clone()),
                ActionParams::Move { .. } => {
                    return Err(RuntimeError::Internal(
                        "chat decision promoted to a move".into(),
                    ))
                }
            }
        };
        match d.params.clone() {
            ActionParams::Chat { .. } => {
                self.drop_desire(&id);
                if !self.intention.as_ref().is_some_and(Intention::is_live_move) {
                    self.intention = Some(Intention {
                        status: IntentionStatus::Succeeded,
                        ..chosen
                    });
                }
                let u = self.render(&d, &self.state)?;
                let seq = self.commit(e, Some(d.params), Some(u.clone()))?;
                Ok(self.reply(u, seq))
            }
            ActionParams::Move { label, target } => {
                self.commit(e, None, None)?;
                self.intention = Some(chosen);
                self.start_navigation(d, label, target)
            }
        }
    }

    fn start_navigation(
        &mut self,
        d: ActionDecision,
        label: String,
        target: Pose,
    ) -> Result<TurnStep, RuntimeError> {
        match plan(
            &self.grid,
            self.kin.pose,
            target,
            self.state.nav.arrival_tolerance,
        ) {
            Ok(p) => {
                let e = Event::new(self.now(), EventPayload::NavGoalSet { label, target });
                self.apply(&e)?;
                let mut preview_plan = p.clone();
                self.plan = Some(p);
                self.goal_ticks = 0;
                // mechanistic reports quote the first velocity command
                let mut view = self.state.clone();
                view.nav.command =
                    command(&self.kin.pose, &mut preview_plan, &self.settings.limits);
                let u = self.render(&d, &view)?;
                let seq = self.commit(e, Some(d.params), Some(u.clone()))?;
                Ok(self.reply(u, seq))
            }
            Err(err) => {
                let e = Event::new(
                    self.now(),
                    EventPayload::Error {
                        origin: ErrorOrigin::Planner,
                        code: planner_code(&err).to_string(),
                        detail: err.to_string(),
                    },
                );
                self.apply(&e)?;
                if let Some(id) = self.intention.as_ref().map(|i| i.desire.clone()) {
                    self.drop_desire(&id);
                }
                self.plan = None;
                let fail = ActionDecision::chat(Topic::NavigationFailure(label));
                let u = self.render(&fail, &self.state)?;
                let seq = self.commit(e, Some(fail.params), Some(u.clone()))?;
                Ok(self.reply(u, seq))
            }
        }
    }

    /// Switches the explanation frame; logged even when unchanged.
    pub fn switch_frame(&mut self, name: &str) -> Result<u64, RuntimeError> {
        self.ensure_open()?;
        let frame: Frame = name.parse()?;
        self.emit(
            EventPayload::FrameSwitch {
                frame: frame.as_str().to_string(),
            },
            None,
            None,
        )
    }

    /// Advances the clock by one `dt`. Only ticks during navigation are
    /// logged; returns the seqs of records written, plus the arrival reply
    /// if the goal was reached on this tick.
    pub fn tick(&mut self) -> Result<TickOutcome, RuntimeError> {
        self.ensure_open()?;
        self.tick_count += 1;
        let mut out = TickOutcome::default();
        let Some(plan) = self.plan.as_mut() else {
            return Ok(out);
        };
        let dt = self.settings.dt;
        let s = step(&self.kin, plan, &self.settings.limits, dt)?;
        self.kin = s.state;
        let noise = self
            .settings
            .odometry_noise
            .then(|| tick_seed(self.settings.seed, self.tick_count));
        let odo = odometry(&self.kin, noise);
        out.seqs.push(self.emit(
            EventPayload::Tick {
                dt,
                pose: self.kin.pose,
                odometry: odo,
                command: self.kin.twist(),
                progress: Some(s.progress),
            },
            None,
            None,
        )?);
        self.goal_ticks += 1;
        if !s.reached
            && self
                .goal_ticks
                .is_multiple_of(self.settings.ticks_per_second())
        {
            out.seqs.push(self.emit(
                EventPayload::NavProgress {
                    progress: s.progress,
                    pose: odo,
                },
                None,
                None,
            )?);
        }
        if s.reached {
            let label = self
                .state
                .nav
                .goal
                .as_ref()
                .map(|g| g.label.clone())
                .ok_or_else(|| RuntimeError::Internal("navigating without a goal".into()))?;
            let e = Event::new(
                self.now(),
                EventPayload::NavGoalReached {
                    label: label.clone(),
                    pose: odo,
                },
            );
            self.apply(&e)?;
            if let Some(id) = self.intention.as_ref().map(|i| i.desire.clone()) {
                self.drop_desire(&id);
            }
            self.plan = None;
            let d = decide(
                &self.state,
                &self.beliefs,
                &DecisionTrigger::GoalReached { label },
                self.settings.seed,
            );
            let u = self.render(&d, &self.state)?;
            let seq = self.commit(e, Some(d.params), Some(u.clone()))?;
            out.seqs.push(seq);
            out.arrival = Some(Reply { utterance: u, seq });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickOutcome {
    pub seqs: Vec<u64>,
    pub arrival: Option<Reply>,
}
