//! Semantic environments: waypoints, obstacles, bounds and label aliases.
//!
//! Worlds are TOML documents (grammar in `docs/world-format.md`). Two
//! fixtures ship with the crate and can be referenced by name.

mod grid;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Pose, Rect};

pub use grid::{rasterize, rasterize_with_resolution, OccupancyGrid, DEFAULT_RESOLUTION};

pub const DEFAULT_ROBOT_RADIUS: f64 = 0.22;

const BUNDLED: &[(&str, &str)] = &[
    (
        "bookstore",
        include_str!("../../assets/worlds/bookstore.toml"),
    ),
    (
        "small_house",
        include_str!("../../assets/worlds/small_house.toml"),
    ),
];

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("world parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid world: {entity}: {reason}")]
    Validation { entity: String, reason: String },
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("cannot read world file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(entity: impl Into<String>, reason: impl Into<String>) -> WorldError {
    WorldError::Validation {
        entity: entity.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub label: String,
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facing: Option<f64>,
}

impl Waypoint {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldDefaults {
    pub position_confidence: f64,
    pub arrival_tolerance: f64,
}

impl Default for WorldDefaults {
    fn default() -> Self {
        Self {
            position_confidence: 0.95,
            arrival_tolerance: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub name: String,
    pub bounds: Rect,
    #[serde(default = "origin")]
    pub spawn: Pose,
    #[serde(default)]
    pub defaults: WorldDefaults,
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
    #[serde(default)]
    pub obstacles: Vec<Rect>,
    pub waypoints: Vec<Waypoint>,
}

fn origin() -> Pose {
    Pose::new(0.0, 0.0, 0.0)
}

impl WorldSpec {
    pub fn waypoint(&self, label: &str) -> Option<&Waypoint> {
        self.waypoints.iter().find(|w| w.label == label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.waypoints.iter().map(|w| w.label.as_str())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("world specs always serialize")
    }

    /// Checks every structural invariant; `load_world` calls this.
    pub fn validate(&self) -> Result<(), WorldError> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "world name is empty"));
        }
        if !self.bounds.is_well_formed() {
            return Err(invalid(
                "bounds",
                "requires finite xmin < xmax and ymin < ymax",
            ));
        }
        let d = &self.defaults;
        if !(0.0..=1.0).contains(&d.position_confidence) {
            return Err(invalid(
                "defaults.position_confidence",
                "must lie in [0, 1]",
            ));
        }
        if !(d.arrival_tolerance.is_finite() && d.arrival_tolerance > 0.0) {
            return Err(invalid("defaults.arrival_tolerance", "must be positive"));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            let entity = format!("obstacles[{i}]");
            if !o.is_well_formed() {
                return Err(invalid(
                    entity,
                    "requires finite xmin < xmax and ymin < ymax",
                ));
            }
            if !self.bounds.contains_rect(o) {
                return Err(invalid(entity, "lies outside the world bounds"));
            }
        }
        let mut seen = BTreeSet::new();
        for w in &self.waypoints {
            let entity = format!("waypoint `{}`", w.label);
            if w.label.trim().is_empty() {
                return Err(invalid("waypoint", "label is empty"));
            }
            if normalize_phrase(&w.label).is_empty() {
                return Err(invalid(entity, "label has no alphanumeric characters"));
            }
            if !seen.insert(w.label.as_str()) {
                return Err(invalid(entity, "duplicate label"));
            }
            let p = w.position();
            if !(p.x.is_finite() && p.y.is_finite()) || !self.bounds.contains(p) {
                return Err(invalid(entity, "position lies outside the world bounds"));
            }
            if let Some(facing) = w.facing {
                if !facing.is_finite() {
                    return Err(invalid(entity, "facing is not finite"));
                }
            }
            if let Some(i) = self.obstacles.iter().position(|o| o.strictly_contains(p)) {
                return Err(invalid(entity, format!("lies inside obstacles[{i}]")));
            }
        }
        for (alias, target) in &self.aliases {
            if normalize_phrase(alias).is_empty() {
                return Err(invalid(format!("alias `{alias}`"), "alias is empty"));
            }
            if !seen.contains(target.as_str()) {
                return Err(invalid(
                    format!("alias `{alias}`"),
                    format!("targets unknown waypoint `{target}`"),
                ));
            }
        }
        let s = self.spawn;
        if !s.is_finite() || !self.bounds.contains(s.position()) {
            return Err(invalid("spawn", "must be finite and inside the bounds"));
        }
        if !(s.theta > -std::f64::consts::PI && s.theta <= std::f64::consts::PI) {
            return Err(invalid("spawn", "theta must lie in (-pi, pi]"));
        }
        Ok(())
    }
}

/// Parses and validates a world document.
pub fn load_world(document: &str) -> Result<WorldSpec, WorldError> {
    let spec: WorldSpec = toml::from_str(document).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|span| line_col(document, span.start))
            .unwrap_or((0, 0));
        WorldError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    spec.validate()?;
    Ok(spec)
}

fn line_col(doc: &str, offset: usize) -> (usize, usize) {
    let before = &doc[..offset.min(doc.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

pub fn bundled_world_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

pub fn bundled_world(name: &str) -> Result<WorldSpec, WorldError> {
    let (_, doc) = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| WorldError::UnknownWorld(name.to_string()))?;
    load_world(doc)
}

/// Resolves `--world` arguments: a bundled name, or a path to a TOML file.
pub fn open_world(name_or_path: &str) -> Result<WorldSpec, WorldError> {
    if let Ok(world) = bundled_world(name_or_path) {
        return Ok(world);
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(WorldError::UnknownWorld(name_or_path.to_string()));
    }
    let doc = std::fs::read_to_string(path).map_err(|source| WorldError::Io {
        path: name_or_path.to_string(),
        source,
    })?;
    load_world(&doc)
}

/// Lowercases, turns punctuation and underscores into spaces and collapses runs of whitespace.
pub fn normalize_phrase(text: &str) -> String {
    let mapped: String = text
        .chars()
        .filter(|c| *c != '\'' && *c != '’')
        .map(|c| {
            if c.is_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                ' '
            }
        })
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Exact label match first, then the world's alias table; both compared after
/// [`normalize_phrase`].
pub fn resolve_label(world: &WorldSpec, text: &str) -> Option<String> {
    let needle = normalize_phrase(text);
    if needle.is_empty() {
        return None;
    }
    if let Some(w) = world
        .waypoints
        .iter()
        .find(|w| normalize_phrase(&w.label) == needle)
    {
        return Some(w.label.clone());
    }
    world
        .aliases
        .iter()
        .find(|(alias, _)| normalize_phrase(alias) == needle)
        .map(|(_, label)| label.clone())
}
