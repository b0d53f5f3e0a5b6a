use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ModelError, State};
use crate::geometry::{fmt2, Point, Pose};

/// Default tolerance for positional predicates: half of the two-decimal
/// resolution every report uses.
pub const POSITION_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Symbol(String),
    Number(f64),
    Point(Point),
    Pose(Pose),
}

impl Term {
    pub fn symbol(s: impl Into<String>) -> Self {
        Term::Symbol(s.into())
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Term::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_point(&self) -> Option<Point> {
        match self {
            Term::Point(p) => Some(*p),
            Term::Pose(p) => Some(p.position()),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Symbol(s) => f.write_str(s),
            Term::Number(n) => write!(f, "{}", fmt2(*n)),
            Term::Point(p) => write!(f, "({}, {})", fmt2(p.x), fmt2(p.y)),
            Term::Pose(p) => write!(f, "({}, {}, {})", fmt2(p.x), fmt2(p.y), fmt2(p.theta)),
        }
    }
}

/// The closed predicate registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Predicate {
    /// `at(entity, point|pose[, tol])`
    At,
    /// `located(label, point)`
    Located,
    /// `status(idle|navigating|error)`
    Status,
    /// `intends_user(intent)`
    IntendsUser,
    /// `capability(name)`
    Capability,
    /// `identity(name)`
    Identity,
    /// `goto(label)`, desire goal: robot within arrival tolerance of the label
    Goto,
    /// `respond(topic)`, desire goal: the topic was the last one answered
    Respond,
}

impl Predicate {
    pub const ALL: [Predicate; 8] = [
        Predicate::At,
        Predicate::Located,
        Predicate::Status,
        Predicate::IntendsUser,
        Predicate::Capability,
        Predicate::Identity,
        Predicate::Goto,
        Predicate::Respond,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Predicate::At => "at",
            Predicate::Located => "located",
            Predicate::Status => "status",
            Predicate::IntendsUser => "intends_user",
            Predicate::Capability => "capability",
            Predicate::Identity => "identity",
            Predicate::Goto => "goto",
            Predicate::Respond => "respond",
        }
    }

    pub fn lookup(name: &str) -> Result<Predicate, ModelError> {
        Predicate::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| ModelError::UnknownPredicate(name.to_string()))
    }

    pub fn arity(self) -> (usize, usize) {
        match self {
            Predicate::At => (2, 3),
            Predicate::Located => (2, 2),
            _ => (1, 1),
        }
    }

    /// Whether the belief key uses the first argument (one belief per entity)
    /// rather than the predicate alone.
    pub fn keyed_by_subject(self) -> bool {
        matches!(
            self,
            Predicate::At | Predicate::Located | Predicate::Capability
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposition {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Proposition {
    pub fn new(predicate: Predicate, args: Vec<Term>) -> Self {
        Self {
            predicate: predicate.name().to_string(),
            args,
        }
    }

    pub fn at(entity: &str, pose: Pose) -> Self {
        Self::new(Predicate::At, vec![Term::symbol(entity), Term::Pose(pose)])
    }

    pub fn located(label: &str, p: Point) -> Self {
        Self::new(
            Predicate::Located,
            vec![Term::symbol(label), Term::Point(p)],
        )
    }

    pub fn unary(predicate: Predicate, symbol: impl Into<String>) -> Self {
        Self::new(predicate, vec![Term::symbol(symbol)])
    }

    pub fn goto(label: &str) -> Self {
        Self::unary(Predicate::Goto, label)
    }

    pub fn respond(topic: &str) -> Self {
        Self::unary(Predicate::Respond, topic)
    }

    /// Looks the predicate up and checks arity and argument sorts.
    pub fn validate(&self) -> Result<Predicate, ModelError> {
        let p = Predicate::lookup(&self.predicate)?;
        let (lo, hi) = p.arity();
        let n = self.args.len();
        if n < lo || n > hi {
            return Err(ModelError::Arity {
                predicate: self.predicate.clone(),
                expected: if lo == hi {
                    lo.to_string()
                } else {
                    format!("{lo}..={hi}")
                },
                found: n,
            });
        }
        let bad = |i: usize, want: &str| ModelError::BadArgument {
            predicate: self.predicate.clone(),
            index: i,
            expected: want.to_string(),
        };
        if self.args[0].as_symbol().is_none() {
            return Err(bad(0, "symbol"));
        }
        match p {
            Predicate::At => {
                if self.args[1].as_point().is_none() {
                    return Err(bad(1, "point or pose"));
                }
                if let Some(t) = self.args.get(2) {
                    match t {
                        Term::Number(v) if *v >= 0.0 => {}
                        _ => return Err(bad(2, "non-negative tolerance")),
                    }
                }
            }
            Predicate::Located if !matches!(self.args[1], Term::Point(_)) => {
                return Err(bad(1, "point"));
            }
            _ => {}
        }
        Ok(p)
    }

    pub fn subject(&self) -> Option<&str> {
        self.args.first().and_then(Term::as_symbol)
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// Whether `phi` holds in `state`, over the closed predicate registry. Pure.
pub fn holds(state: &State, phi: &Proposition) -> Result<bool, ModelError> {
    let predicate = phi.validate()?;
    let subject = phi.subject().unwrap_or_default();
    let truth = match predicate {
        Predicate::At => {
            let is_robot = subject == "robot" || subject == state.robot.identity;
            let target = phi.args[1]
                .as_point()
                .unwrap_or(Point::new(f64::NAN, f64::NAN));
            let tol = match phi.args.get(2) {
                Some(Term::Number(t)) => *t,
                _ => POSITION_TOLERANCE,
            };
            is_robot && state.nav.pose.distance_to(target) <= tol
        }
        Predicate::Located => {
            let p = phi.args[1]
                .as_point()
                .unwrap_or(Point::new(f64::NAN, f64::NAN));
            state
                .env
                .get(subject)
                .is_some_and(|w| w.position().distance(p) <= POSITION_TOLERANCE)
        }
        Predicate::Status => state.robot.status.as_str() == subject,
        Predicate::IntendsUser => state
            .user
            .intent
            .as_ref()
            .is_some_and(|i| i.symbol() == subject),
        Predicate::Capability => state.robot.capabilities.iter().any(|c| c == subject),
        Predicate::Identity => state.robot.identity == subject,
        Predicate::Goto => state.env.get(subject).is_some_and(|w| {
            state.nav.pose.distance_to(w.position()) <= state.nav.arrival_tolerance
        }),
        Predicate::Respond => state.user.last_answered.as_deref() == Some(subject),
    };
    Ok(truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::bundled_world;

    fn bookstore_state() -> State {
        State::from_world(&bundled_world("bookstore").unwrap())
    }

    #[test]
    fn robot_at_reported_position() {
        let mut s = bookstore_state();
        s.nav.pose = Pose::new(-0.72, -0.62, 0.3);
        let phi = Proposition::new(
            Predicate::At,
            vec![
                Term::symbol("robot"),
                Term::Point(Point::new(-0.72, -0.62)),
                Term::Number(0.01),
            ],
        );
        assert!(holds(&s, &phi).unwrap());
        s.nav.pose = Pose::new(-0.70, -0.62, 0.3);
        assert!(!holds(&s, &phi).unwrap());
    }

    #[test]
    fn wellness_is_located_where_reported() {
        let s = bookstore_state();
        assert!(holds(
            &s,
            &Proposition::located("wellness", Point::new(-1.56, -1.59))
        )
        .unwrap());
        assert!(!holds(
            &s,
            &Proposition::located("wellness", Point::new(1.56, -1.59))
        )
        .unwrap());
        assert!(!holds(&s, &Proposition::located("atlantis", Point::new(0.0, 0.0))).unwrap());
    }

    #[test]
    fn unregistered_predicate_is_an_error() {
        let s = bookstore_state();
        let phi = Proposition {
            predicate: "teleports".into(),
            args: vec![Term::symbol("robot")],
        };
        assert!(matches!(
            holds(&s, &phi),
            Err(ModelError::UnknownPredicate(_))
        ));
    }

    #[test]
    fn arity_and_sorts_are_checked() {
        let s = bookstore_state();
        let too_many = Proposition::new(
            Predicate::Status,
            vec![Term::symbol("idle"), Term::symbol("extra")],
        );
        assert!(matches!(
            holds(&s, &too_many),
            Err(ModelError::Arity { .. })
        ));
        let bad_sort = Proposition::new(
            Predicate::Located,
            vec![Term::symbol("cash"), Term::Number(1.0)],
        );
        assert!(matches!(
            holds(&s, &bad_sort),
            Err(ModelError::BadArgument { .. })
        ));
    }

    #[test]
    fn status_identity_and_capabilities() {
        let s = bookstore_state();
        assert!(holds(&s, &Proposition::unary(Predicate::Status, "idle")).unwrap());
        assert!(!holds(&s, &Proposition::unary(Predicate::Status, "navigating")).unwrap());
        assert!(holds(&s, &Proposition::unary(Predicate::Capability, "move")).unwrap());
        assert!(holds(
            &s,
            &Proposition::unary(Predicate::Identity, &s.robot.identity)
        )
        .unwrap());
    }

    #[test]
    fn goto_holds_within_arrival_tolerance() {
        let mut s = bookstore_state();
        s.nav.pose = Pose::new(-1.50, -1.55, 0.0);
        assert!(holds(&s, &Proposition::goto("wellness")).unwrap());
        assert!(!holds(&s, &Proposition::goto("cash")).unwrap());
    }

    #[test]
    fn display_uses_two_decimals() {
        let p = Proposition::located("wellness", Point::new(-1.56, -1.59));
        assert_eq!(p.to_string(), "located(wellness, (-1.56, -1.59))");
    }
}
