use crate::model::{Intent, IntentKind, LabelRef, QueryKind};
use crate::world::{normalize_phrase, resolve_label, WorldSpec};

const FREE_CHOICE: &[&str] = &[
    "random place",
    "random location",
    "random spot",
    "your choice",
    "you choose",
    "you decide",
    "anywhere you like",
    "anywhere you want",
    "wherever you want",
    "wherever you like",
    "surprise me",
];

const MOTION_VERBS: &[&str] = &[
    "go", "move", "navigate", "head", "drive", "walk", "return", "travel",
];
const DIRECTIONS: &[&str] = &[
    "to", "towards", "toward", "there", "where", "over", "back", "into", "on",
];
const DETERMINERS: &[&str] = &["the", "a", "an", "my", "your", "that", "this", "its"];

/// Checked in this order: goal before position because "where are you going"
/// also contains "where are you".
const GOAL_QUERIES: &[&str] = &[
    "where are you going",
    "where are you heading",
    "where are you headed",
    "your goal",
    "your target",
    "your destination",
    "what are you doing",
];
const STATE_QUERIES: &[&str] = &[
    "your state",
    "your status",
    "are you moving",
    "are you navigating",
    "are you busy",
];
const POSITION_QUERIES: &[&str] = &[
    "your position",
    "your location",
    "your coordinates",
    "where are you",
    "where do you think you are",
];
const SMALLTALK: &[&str] = &[
    "hello",
    "hi",
    "hey",
    "good morning",
    "good afternoon",
    "good evening",
    "how are you",
    "who are you",
    "thanks",
    "thank you",
    "bye",
    "goodbye",
    "nice",
    "well done",
];

/// Longest alias or label looked at when scanning free text.
const MAX_NGRAM: usize = 3;

fn contains_phrase(normalized: &str, phrase: &str) -> bool {
    format!(" {normalized} ").contains(&format!(" {phrase} "))
}

fn any_phrase(normalized: &str, phrases: &[&str]) -> bool {
    phrases.iter().any(|p| contains_phrase(normalized, p))
}

/// Longest leading n-gram of `words` that names a location.
fn resolve_prefix(world: &WorldSpec, words: &[&str]) -> Option<String> {
    (1..=words.len())
        .rev()
        .find_map(|k| resolve_label(world, &words[..k].join(" ")))
}

/// Earliest location mention anywhere in `words`; at equal start the longest wins.
fn scan_mentions(world: &WorldSpec, words: &[&str]) -> Option<String> {
    (0..words.len()).find_map(|start| {
        let end = (start + MAX_NGRAM).min(words.len());
        resolve_prefix(world, &words[start..end])
    })
}

/// Object of the first motion clause, e.g. `["the", "bed"]` in "go to the bed".
/// `None` when the clause has no motion verb; `Some(empty)` for "go there".
fn motion_object(clause: &str) -> Option<Vec<&str>> {
    let words: Vec<&str> = clause.split(' ').filter(|w| !w.is_empty()).collect();
    let verb = words.iter().position(|w| MOTION_VERBS.contains(w))?;
    let mut rest = &words[verb + 1..];
    let directed = rest.first().is_some_and(|w| DIRECTIONS.contains(w));
    while rest.first().is_some_and(|w| DIRECTIONS.contains(w)) {
        rest = &rest[1..];
    }
    while rest.first().is_some_and(|w| DETERMINERS.contains(w)) {
        rest = &rest[1..];
    }
    if !directed && rest.is_empty() {
        return None;
    }
    Some(rest.to_vec())
}

fn imperative(world: &WorldSpec, text: &str, normalized: &str) -> Option<LabelRef> {
    let all: Vec<&str> = normalized.split(' ').filter(|w| !w.is_empty()).collect();
    for clause in text.split(['.', ',', ';', '!', '?', ':']) {
        let clause = normalize_phrase(clause);
        let Some(object) = motion_object(&clause) else {
            continue;
        };
        if let Some(label) = resolve_prefix(world, &object) {
            return Some(LabelRef::Resolved { label });
        }
        // Indirect reference ("go there", "go where ..."): look for a mention
        // anywhere in the utterance.
        if let Some(label) = scan_mentions(world, &all) {
            return Some(LabelRef::Resolved { label });
        }
        let text = if object.is_empty() {
            clause
        } else {
            object.join(" ")
        };
        return Some(LabelRef::Unresolved { text });
    }
    None
}

/// Rule cascade: free choice, motion imperatives, queries, small talk, unknown.
pub fn parse_command(text: &str, world: &WorldSpec) -> Intent {
    let normalized = normalize_phrase(text);
    let kind = if any_phrase(&normalized, FREE_CHOICE) {
        IntentKind::FreeChoice
    } else if let Some(target) = imperative(world, text, &normalized) {
        IntentKind::Goto { target }
    } else if any_phrase(&normalized, GOAL_QUERIES) {
        IntentKind::Query {
            about: QueryKind::Goal,
        }
    } else if any_phrase(&normalized, STATE_QUERIES) {
        IntentKind::Query {
            about: QueryKind::State,
        }
    } else if any_phrase(&normalized, POSITION_QUERIES) {
        IntentKind::Query {
            about: QueryKind::Position,
        }
    } else if any_phrase(&normalized, SMALLTALK) {
        IntentKind::Smalltalk
    } else {
        IntentKind::Unknown
    };
    Intent::new(kind, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::bundled_world;

    fn goto(label: &str) -> IntentKind {
        IntentKind::Goto {
            target: LabelRef::Resolved {
                label: label.into(),
            },
        }
    }

    fn query(about: QueryKind) -> IntentKind {
        IntentKind::Query { about }
    }

    #[test]
    fn simple_commands() {
        let w = bundled_world("bookstore").unwrap();
        assert_eq!(
            parse_command("Go to wellness bookshelf.", &w).kind,
            goto("wellness")
        );
        assert_eq!(parse_command("go to CASH!!", &w).kind, goto("cash"));
        assert_eq!(
            parse_command("Please navigate towards the checkout", &w).kind,
            goto("cash")
        );
    }

    #[test]
    fn queries() {
        let w = bundled_world("bookstore").unwrap();
        assert_eq!(
            parse_command("What is your position?", &w).kind,
            query(QueryKind::Position)
        );
        assert_eq!(
            parse_command("Where are you?", &w).kind,
            query(QueryKind::Position)
        );
        assert_eq!(
            parse_command("Where are you going?", &w).kind,
            query(QueryKind::Goal)
        );
        assert_eq!(
            parse_command("what's your status", &w).kind,
            query(QueryKind::State)
        );
    }

    #[test]
    fn free_choice_wins_over_imperative() {
        let w = bundled_world("small_house").unwrap();
        assert_eq!(
            parse_command("Go to a random place, your choice.", &w).kind,
            IntentKind::FreeChoice
        );
    }

    #[test]
    fn indirect_references_use_earliest_mention() {
        let w = bundled_world("small_house").unwrap();
        assert_eq!(
            parse_command("There's a sink; head over there.", &w).kind,
            goto("sink")
        );
        let b = bundled_world("bookstore").unwrap();
        assert_eq!(
            parse_command(
                "I want internet for my wellness blog, go to the right spot",
                &b
            )
            .kind,
            goto("internet")
        );
    }

    #[test]
    fn unresolved_destination_keeps_wording() {
        let w = bundled_world("bookstore").unwrap();
        assert_eq!(
            parse_command("Go to the swimming pool.", &w).kind,
            IntentKind::Goto {
                target: LabelRef::Unresolved {
                    text: "swimming pool".into()
                }
            }
        );
    }

    #[test]
    fn fallthrough() {
        let w = bundled_world("bookstore").unwrap();
        assert_eq!(parse_command("hello there", &w).kind, IntentKind::Smalltalk);
        assert_eq!(parse_command("xyzzy", &w).kind, IntentKind::Unknown);
        assert_eq!(parse_command("", &w).kind, IntentKind::Unknown);
        // "going" is not a motion verb
        assert_eq!(
            parse_command("I'm going home", &w).kind,
            IntentKind::Unknown
        );
    }
}
