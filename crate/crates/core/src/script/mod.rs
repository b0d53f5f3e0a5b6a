//! Line-oriented command scripts and a synchronous driver for them.
//!
//! ```text
//! # comment
//! world bookstore
//! say Go to wellness bookshelf.
//! wait 2.5
//! wait arrival
//! frame mechanistic       (or: switch-frame mechanistic)
//! ```

use thiserror::Error;

use crate::frames::Frame;
use crate::llm::LanguageModel;
use crate::log::SessionLog;
use crate::runtime::{Runtime, RuntimeError, SessionSettings, TurnStep};
use crate::world::{open_world, WorldError, WorldSpec};

/// Longest `wait arrival` before the script fails, in simulated seconds.
pub const ARRIVAL_TIMEOUT_SECS: f64 = 120.0;

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("script names no world")]
    NoWorld,
    #[error("goal not reached within {0} s of simulated time")]
    ArrivalTimeout(f64),
    #[error("session needs a language model but none was given")]
    NoModel,
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Say(String),
    Wait(f64),
    WaitArrival,
    Frame(Frame),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Script {
    pub world: Option<String>,
    pub steps: Vec<Step>,
}

impl Script {
    pub fn parse(text: &str) -> Result<Self, ScriptError> {
        let mut script = Script::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| ScriptError::Syntax {
                line: i + 1,
                reason,
            };
            let (word, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match word {
                "world" if !rest.is_empty() => script.world = Some(rest.to_string()),
                "say" if !rest.is_empty() => script.steps.push(Step::Say(rest.to_string())),
                "wait" if rest == "arrival" => script.steps.push(Step::WaitArrival),
                "wait" => match rest.parse::<f64>() {
                    Ok(s) if s.is_finite() && s >= 0.0 => script.steps.push(Step::Wait(s)),
                    _ => return Err(err(format!("bad wait duration `{rest}`"))),
                },
                "frame" | "switch-frame" => {
                    let f = rest.parse::<Frame>().map_err(|e| err(e.to_string()))?;
                    script.steps.push(Step::Frame(f));
                }
                "world" | "say" => return Err(err(format!("`{word}` needs an argument"))),
                other => return Err(err(format!("unknown directive `{other}`"))),
            }
        }
        Ok(script)
    }

    pub fn load_world(&self) -> Result<WorldSpec, ScriptError> {
        Ok(open_world(
            self.world.as_deref().ok_or(ScriptError::NoWorld)?,
        )?)
    }

    pub fn utterances(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().filter_map(|s| match s {
            Step::Say(t) => Some(t.as_str()),
            _ => None,
        })
    }
}

/// Scripts shipped with the crate, by name.
pub const FIXTURE_SCRIPTS: [(&str, &str); 4] = [
    (
        "bookstore_wellness_cash",
        include_str!("../../assets/scripts/bookstore_wellness_cash.script"),
    ),
    (
        "small_house_bed_tv",
        include_str!("../../assets/scripts/small_house_bed_tv.script"),
    ),
    (
        "bookstore_tolkien_internet",
        include_str!("../../assets/scripts/bookstore_tolkien_internet.script"),
    ),
    (
        "small_house_sink_free_choice",
        include_str!("../../assets/scripts/small_house_sink_free_choice.script"),
    ),
];

pub fn fixture_script(name: &str) -> Option<&'static str> {
    FIXTURE_SCRIPTS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
}

/// Runs a turn to completion, calling the model as often as it asks.
pub fn complete_turn(
    rt: &mut Runtime,
    mut step: TurnStep,
    llm: Option<&dyn LanguageModel>,
) -> Result<crate::runtime::Reply, ScriptError> {
    loop {
        match step {
            TurnStep::Done(reply) => return Ok(reply),
            TurnStep::NeedsCompletion(bundle) => {
                let model = llm.ok_or(ScriptError::NoModel)?;
                step = rt.resume(model.complete(&bundle))?;
            }
        }
    }
}

/// Executes every step against a running session at full speed.
pub fn drive(
    rt: &mut Runtime,
    script: &Script,
    llm: Option<&dyn LanguageModel>,
) -> Result<(), ScriptError> {
    let dt = rt.settings().dt;
    for step in &script.steps {
        match step {
            Step::Say(text) => {
                let s = rt.post_message(text)?;
                complete_turn(rt, s, llm)?;
            }
            Step::Frame(f) => {
                rt.switch_frame(f.as_str())?;
            }
            Step::Wait(secs) => {
                for _ in 0..(secs / dt).round() as u64 {
                    rt.tick()?;
                }
            }
            Step::WaitArrival => {
                let budget = (ARRIVAL_TIMEOUT_SECS / dt).round() as u64;
                let mut spent = 0;
                while rt.is_navigating() {
                    if spent == budget {
                        return Err(ScriptError::ArrivalTimeout(ARRIVAL_TIMEOUT_SECS));
                    }
                    rt.tick()?;
                    spent += 1;
                }
            }
        }
    }
    Ok(())
}

/// Starts a session on `world`, drives the script and closes the log.
pub fn run_script(
    script: &Script,
    world: WorldSpec,
    settings: SessionSettings,
    log: SessionLog,
    llm: Option<&dyn LanguageModel>,
) -> Result<Runtime, ScriptError> {
    if settings.uses_llm() && llm.is_none() {
        return Err(ScriptError::NoModel);
    }
    let mut rt = Runtime::start(world, settings, log)?;
    drive(&mut rt, script, llm)?;
    rt.close()?;
    Ok(rt)
}
