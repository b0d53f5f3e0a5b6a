use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::SystemTime;

use serde::{Deserialize, Serialize};

use super::{Frame, FrameError, Provenance, Utterance};
use crate::geometry::{fmt2, Point, Pose};
use crate::model::{ActionKind, ActionParams, BeliefBase, State, Topic};
use crate::policy::{ActionDecision, RationaleTag};

/// Names a template may reference as `{name}`.
pub const PLACEHOLDERS: &[&str] = &[
    "label", "tx", "ty", "x", "y", "theta", "v", "omega", "conf", "source", "identity", "progress",
    "known",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum When {
    Navigating,
    Idle,
    #[default]
    Any,
}

impl When {
    fn admits(self, navigating: bool) -> bool {
        match self {
            When::Any => true,
            When::Navigating => navigating,
            When::Idle => !navigating,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Template {
    pub action: ActionKind,
    pub tag: RationaleTag,
    #[serde(default)]
    pub when: When,
    pub text: String,
}

/// One frame's templates, in file order. The first matching entry wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplatePack {
    pub frame: Frame,
    #[serde(rename = "template")]
    pub templates: Vec<Template>,
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn pieces(text: &str) -> Result<Vec<Piece<'_>>, String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push(Piece::Text(&rest[..open]));
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| format!("unclosed `{{` in \"{text}\""))?;
        out.push(Piece::Slot(&after[..close]));
        rest = &after[close + 1..];
    }
    if rest.contains('}') {
        return Err(format!("stray `}}` in \"{text}\""));
    }
    out.push(Piece::Text(rest));
    Ok(out)
}

impl TemplatePack {
    pub fn parse(document: &str) -> Result<Self, FrameError> {
        let pack: TemplatePack =
            toml::from_str(document).map_err(|e| FrameError::Pack(e.to_string()))?;
        for t in &pack.templates {
            if t.tag.action() != t.action {
                return Err(FrameError::Pack(format!(
                    "tag `{}` belongs to `{}` actions, not `{}`",
                    t.tag,
                    t.tag.action().as_str(),
                    t.action.as_str()
                )));
            }
            if t.text.trim().is_empty() {
                return Err(FrameError::Pack(format!("empty text for tag `{}`", t.tag)));
            }
            for p in pieces(&t.text).map_err(FrameError::Pack)? {
                if let Piece::Slot(name) = p {
                    if !PLACEHOLDERS.contains(&name) {
                        return Err(FrameError::Pack(format!(
                            "unknown placeholder `{{{name}}}` in tag `{}`",
                            t.tag
                        )));
                    }
                }
            }
        }
        Ok(pack)
    }

    pub fn find(
        &self,
        action: ActionKind,
        tag: RationaleTag,
        navigating: bool,
    ) -> Option<&Template> {
        self.templates
            .iter()
            .find(|t| t.action == action && t.tag == tag && t.when.admits(navigating))
    }
}

/// Values available to a template, computed from the decision and snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderContext {
    values: BTreeMap<&'static str, String>,
}

fn target_of(
    decision: &ActionDecision,
    state: &State,
    base: &BeliefBase,
) -> Option<(String, Point)> {
    match &decision.params {
        ActionParams::Move { label, target } => Some((label.clone(), target.position())),
        ActionParams::Chat {
            topic: Topic::NavigationFailure(label),
            ..
        } => base.location(label).map(|p| (label.clone(), p)),
        ActionParams::Chat { .. } => {
            if let Some(g) = &state.nav.goal {
                Some((g.label.clone(), g.target.position()))
            } else {
                let label = state.nav.last_arrival.as_ref()?;
                base.location(label).map(|p| (label.clone(), p))
            }
        }
    }
}

impl RenderContext {
    pub fn new(decision: &ActionDecision, state: &State, base: &BeliefBase) -> Self {
        let mut values = BTreeMap::new();
        let position = base.position();
        let pose: Pose = position
            .and_then(|b| b.content.args.get(1))
            .and_then(|t| match t {
                crate::model::Term::Pose(p) => Some(*p),
                _ => None,
            })
            .unwrap_or(state.nav.pose);
        values.insert("x", fmt2(pose.x));
        values.insert("y", fmt2(pose.y));
        values.insert("theta", fmt2(pose.theta));
        values.insert("v", fmt2(state.nav.command.linear));
        values.insert("omega", fmt2(state.nav.command.angular));
        let (conf, source) = position
            .map(|b| (b.confidence, b.source.as_str()))
            .unwrap_or((state.robot.localization_confidence, "odometry"));
        values.insert("conf", format!("{:.0}", conf * 100.0));
        values.insert("source", source.to_string());
        values.insert("identity", state.robot.identity.clone());
        values.insert("known", base.location_labels().join(", "));
        if let Some(g) = &state.nav.goal {
            values.insert("progress", format!("{:.0}", g.progress * 100.0));
        }
        if let Some((label, p)) = target_of(decision, state, base) {
            values.insert("label", label);
            values.insert("tx", fmt2(p.x));
            values.insert("ty", fmt2(p.y));
        }
        Self { values }
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(String::as_str)
    }
}

/// Packs for all three frames.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateLibrary {
    packs: BTreeMap<Frame, TemplatePack>,
    source: Option<(PathBuf, Vec<Option<SystemTime>>)>,
}

const BUNDLED: [(Frame, &str); 3] = [
    (
        Frame::Agentive,
        include_str!("../../assets/templates/agentive.toml"),
    ),
    (
        Frame::Teleological,
        include_str!("../../assets/templates/teleological.toml"),
    ),
    (
        Frame::Mechanistic,
        include_str!("../../assets/templates/mechanistic.toml"),
    ),
];

fn pack_path(dir: &Path, frame: Frame) -> PathBuf {
    dir.join(format!("{}.toml", frame.as_str()))
}

fn mtimes(dir: &Path) -> Vec<Option<SystemTime>> {
    Frame::ALL
        .iter()
        .map(|f| {
            std::fs::metadata(pack_path(dir, *f))
                .and_then(|m| m.modified())
                .ok()
        })
        .collect()
}

impl TemplateLibrary {
    fn from_documents<'a>(
        docs: impl IntoIterator<Item = (Frame, &'a str)>,
    ) -> Result<Self, FrameError> {
        let mut packs = BTreeMap::new();
        for (frame, doc) in docs {
            let pack = TemplatePack::parse(doc)?;
            if pack.frame != frame {
                return Err(FrameError::Pack(format!(
                    "pack for {frame} declares frame {}",
                    pack.frame
                )));
            }
            packs.insert(frame, pack);
        }
        Ok(Self {
            packs,
            source: None,
        })
    }

    pub fn bundled() -> &'static TemplateLibrary {
        static LIB: OnceLock<TemplateLibrary> = OnceLock::new();
        LIB.get_or_init(|| {
            TemplateLibrary::from_documents(BUNDLED).expect("bundled template packs are valid")
        })
    }

    /// Loads `agentive.toml`, `teleological.toml` and `mechanistic.toml` from `dir`.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, FrameError> {
        let dir = dir.as_ref();
        let mut docs = Vec::new();
        for f in Frame::ALL {
            let path = pack_path(dir, f);
            let doc = std::fs::read_to_string(&path).map_err(|source| FrameError::Io {
                path: path.display().to_string(),
                source,
            })?;
            docs.push((f, doc));
        }
        let mut lib = Self::from_documents(docs.iter().map(|(f, d)| (*f, d.as_str())))?;
        lib.source = Some((dir.to_path_buf(), mtimes(dir)));
        Ok(lib)
    }

    /// Development hot reload: re-reads the packs if any file changed on
    /// disk. Keeps the current packs if the new ones fail to parse.
    pub fn reload_if_changed(&mut self) -> Result<bool, FrameError> {
        let Some((dir, seen)) = &self.source else {
            return Ok(false);
        };
        if mtimes(dir) == *seen {
            return Ok(false);
        }
        *self = Self::from_dir(dir.clone())?;
        Ok(true)
    }

    pub fn pack(&self, frame: Frame) -> &TemplatePack {
        &self.packs[&frame]
    }

    pub fn render(
        &self,
        decision: &ActionDecision,
        state: &State,
        base: &BeliefBase,
        frame: Frame,
    ) -> Result<Utterance, FrameError> {
        let tag = decision.primary_tag();
        let navigating = state.nav.goal.is_some();
        let template = self
            .pack(frame)
            .find(decision.action(), tag, navigating)
            .ok_or_else(|| FrameError::MissingTemplate {
                frame,
                action: decision.action().as_str().to_string(),
                tag: tag.to_string(),
                when: if navigating { "navigating" } else { "idle" },
            })?;
        let ctx = RenderContext::new(decision, state, base);
        let mut text = String::with_capacity(template.text.len() + 32);
        for p in pieces(&template.text).map_err(FrameError::Pack)? {
            match p {
                Piece::Text(s) => text.push_str(s),
                Piece::Slot(name) => {
                    text.push_str(ctx.get(name).ok_or_else(|| FrameError::MissingValue {
                        frame,
                        tag: tag.to_string(),
                        placeholder: name.to_string(),
                    })?)
                }
            }
        }
        let topic = match &decision.params {
            ActionParams::Chat { topic, .. } => topic.symbol(),
            ActionParams::Move { .. } => tag.to_string(),
        };
        Ok(Utterance {
            text,
            frame,
            topic,
            provenance: Provenance::Template,
        })
    }
}

/// Renders with the bundled packs.
pub fn render(
    decision: &ActionDecision,
    state: &State,
    base: &BeliefBase,
    frame: Frame,
) -> Result<Utterance, FrameError> {
    TemplateLibrary::bundled().render(decision, state, base, frame)
}

/// Every (tag, navigating) combination the runtime can render.
/// Moves are rendered once navigation has started; greetings, arrivals and
/// planner failures always happen while idle.
pub fn reachable_keys() -> Vec<(RationaleTag, bool)> {
    RationaleTag::ALL
        .into_iter()
        .flat_map(|tag| {
            let modes: &[bool] = match tag {
                RationaleTag::UserRequest | RationaleTag::FreeChoice => &[true],
                RationaleTag::Greeting
                | RationaleTag::ArrivalReport
                | RationaleTag::NavigationFailure => &[false],
                _ => &[true, false],
            };
            modes.iter().map(move |m| (tag, *m))
        })
        .collect()
}
