//! The TOML strategy format.
//!
//! ```toml
//! format = "pebblewalk-strategy/1"
//! name = "pair"
//!
//! [[member]]
//! name = "A"
//! states = ["go"]
//! initial_state = "go"
//! position = [0, 0]
//!
//! [[member.rule]]
//! state = "go"
//! here = "{P}"
//! around = ["{}", "{}", "*"]
//! output = "free"
//! next = "go"
//! ```
//!
//! The first member is the automaton. `here` is the set of other members on
//! the observer's vertex, `around` the three neighbour sets as an unordered
//! list, `*` matches any set. Outputs are `stay`, `free` or a target set.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use toml::Spanned;

use super::notation::{output_text, parse_output, parse_pattern, pattern_text};
use crate::collective::Configuration;
use crate::lattice::Vertex;
use crate::machine::{
    validate_pebbles, AutomatonDef, CollectiveDef, MemberDef, MemberId, ObservationPattern,
    OutputSymbol, PebbleViolation, Rule, SetPattern, StateId, MAX_MEMBERS,
};
use crate::program::Strategy;

pub const STRATEGY_FORMAT: &str = "pebblewalk-strategy/1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct StrategyFileError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    format: Spanned<String>,
    name: String,
    #[serde(default)]
    member: Vec<Spanned<RawMember>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMember {
    name: Spanned<String>,
    #[serde(default)]
    states: Option<Spanned<Vec<String>>>,
    initial_state: Option<Spanned<String>>,
    position: Spanned<(i64, i64)>,
    #[serde(default)]
    rule: Vec<Spanned<RawRule>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    state: Option<Spanned<String>>,
    here: Spanned<String>,
    around: Spanned<Vec<String>>,
    output: Spanned<String>,
    next: Option<Spanned<String>>,
    priority: Option<i64>,
}

#[derive(Serialize)]
struct EmitFile<'a> {
    format: &'a str,
    name: &'a str,
    member: Vec<EmitMember>,
}

#[derive(Serialize)]
struct EmitMember {
    name: String,
    states: Vec<String>,
    initial_state: String,
    position: (i64, i64),
    rule: Vec<EmitRule>,
}

#[derive(Serialize)]
struct EmitRule {
    state: String,
    here: String,
    around: Vec<String>,
    output: String,
    next: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    priority: Option<i64>,
}

struct Locator<'a>(&'a str);

impl Locator<'_> {
    fn at(&self, offset: usize, message: impl Into<String>) -> StrategyFileError {
        let before = &self.0[..offset.min(self.0.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        StrategyFileError {
            line,
            column,
            message: message.into(),
        }
    }

    fn span<T>(&self, s: &Spanned<T>, message: impl Into<String>) -> StrategyFileError {
        self.at(s.span().start, message)
    }
}

fn valid_name(n: &str) -> bool {
    !n.is_empty()
        && n.chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '-')
}

struct ParsedRule {
    rule: Rule,
    priority: Option<i64>,
    offset: usize,
}

/// Parse and validate a strategy file. Every error carries the line and
/// column it refers to.
pub fn parse_strategy(src: &str) -> Result<Strategy, StrategyFileError> {
    let loc = Locator(src);
    let raw: RawFile = toml::from_str(src).map_err(|e| {
        let offset = e.span().map_or(0, |s| s.start);
        loc.at(offset, e.message().to_string())
    })?;
    if raw.format.get_ref() != STRATEGY_FORMAT {
        return Err(loc.span(
            &raw.format,
            format!("unsupported format '{}'", raw.format.get_ref()),
        ));
    }
    if raw.member.is_empty() || raw.member.len() > MAX_MEMBERS {
        return Err(loc.at(
            0,
            format!("need 1 to {MAX_MEMBERS} members, got {}", raw.member.len()),
        ));
    }
    let names: Vec<String> = raw
        .member
        .iter()
        .map(|m| m.get_ref().name.get_ref().clone())
        .collect();
    for (i, m) in raw.member.iter().enumerate() {
        let n = &m.get_ref().name;
        if !valid_name(n.get_ref()) {
            return Err(loc.span(n, format!("invalid member name '{}'", n.get_ref())));
        }
        if names[..i].contains(n.get_ref()) {
            return Err(loc.span(n, format!("duplicate member name '{}'", n.get_ref())));
        }
    }

    let mut members = Vec::new();
    let mut positions = Vec::new();
    for (slot, m) in raw.member.iter().enumerate() {
        let m = m.get_ref();
        let me = MemberId::from_slot(slot);
        let states: Vec<String> = m
            .states
            .as_ref()
            .map_or_else(|| vec!["q0".to_string()], |s| s.get_ref().clone());
        if states.is_empty() {
            let s = m.states.as_ref().expect("empty only when given");
            return Err(loc.span(s, "states must not be empty"));
        }
        let state_id = |s: &Spanned<String>| {
            states
                .iter()
                .position(|n| n == s.get_ref())
                .map(|i| StateId(i as u16))
                .ok_or_else(|| loc.span(s, format!("unknown state '{}'", s.get_ref())))
        };
        let initial = match &m.initial_state {
            Some(s) => state_id(s)?,
            None => StateId(0),
        };
        let (x, y) = *m.position.get_ref();
        let at = Vertex::try_new(x, y).map_err(|e| loc.span(&m.position, e.to_string()))?;
        positions.push(at);

        let mut parsed = Vec::new();
        for r in &m.rule {
            let offset = r.span().start;
            let r = r.get_ref();
            let state = match &r.state {
                Some(s) => state_id(s)?,
                None => initial,
            };
            let next = match &r.next {
                Some(s) => state_id(s)?,
                None => state,
            };
            let alpha =
                parse_pattern(&names, r.here.get_ref()).map_err(|e| loc.span(&r.here, e))?;
            if matches!(alpha, SetPattern::Exact(s) if s.contains(me)) {
                return Err(loc.span(&r.here, "'here' lists the observer itself"));
            }
            let around = r.around.get_ref();
            if around.len() != 3 {
                return Err(loc.span(
                    &r.around,
                    format!("'around' needs 3 entries, got {}", around.len()),
                ));
            }
            let mut neighborhood = [SetPattern::Any; 3];
            for (i, t) in around.iter().enumerate() {
                neighborhood[i] = parse_pattern(&names, t).map_err(|e| loc.span(&r.around, e))?;
            }
            let output =
                parse_output(&names, r.output.get_ref()).map_err(|e| loc.span(&r.output, e))?;
            if matches!(output, OutputSymbol::MoveToSet(t) if t.contains(me)) {
                return Err(loc.span(&r.output, "a member cannot target itself"));
            }
            parsed.push(ParsedRule {
                rule: Rule {
                    state,
                    pattern: ObservationPattern {
                        alpha,
                        neighborhood,
                    },
                    next,
                    output,
                },
                priority: r.priority,
                offset,
            });
        }
        for (j, b) in parsed.iter().enumerate() {
            for a in &parsed[..j] {
                if a.rule.state == b.rule.state && a.rule.pattern.overlaps(&b.rule.pattern) {
                    let ordered = matches!((a.priority, b.priority), (Some(p), Some(q)) if p != q);
                    if !ordered {
                        return Err(loc.at(
                            b.offset,
                            "rule overlaps an earlier rule; give both distinct priorities"
                                .to_string(),
                        ));
                    }
                }
            }
        }
        parsed.sort_by_key(|p| std::cmp::Reverse(p.priority.unwrap_or(0)));
        let rules = parsed.into_iter().map(|p| p.rule).collect();
        let machine = AutomatonDef::new(states, initial, rules)
            .map_err(|e| loc.span(&m.name, e.to_string()))?;
        members.push(MemberDef {
            name: names[slot].clone(),
            machine,
        });
    }
    let def = CollectiveDef::new(members).map_err(|e| loc.at(0, e.to_string()))?;
    if let Some(v) = validate_pebbles(&def).into_iter().next() {
        let slot = match &v {
            PebbleViolation::StateCount { pebble, .. }
            | PebbleViolation::MovesWithoutAutomaton { pebble, .. }
            | PebbleViolation::OutputUnavailableToAutomaton { pebble, .. } => pebble.slot(),
            PebbleViolation::NotAPebble(id) => id.slot(),
        };
        return Err(loc.span(
            &raw.member[slot].get_ref().name,
            format!("invalid pebble: {v}"),
        ));
    }
    Ok(Strategy {
        name: raw.name,
        def,
        initial: Configuration::new(positions),
    })
}

/// Canonical TOML for a strategy. Rule order is kept; members whose rules
/// overlap get explicit decreasing priorities so parsing restores it.
pub fn emit_strategy(strategy: &Strategy) -> String {
    let names: Vec<String> = strategy
        .def
        .members()
        .iter()
        .map(|m| m.name.clone())
        .collect();
    let member = strategy
        .def
        .members()
        .iter()
        .enumerate()
        .map(|(slot, m)| {
            let a = &m.machine;
            let rules = a.rules();
            let overlapping = rules.iter().enumerate().any(|(j, b)| {
                rules[..j]
                    .iter()
                    .any(|r| r.state == b.state && r.pattern.overlaps(&b.pattern))
            });
            let state = |s: StateId| a.state_name(s).to_string();
            let at = strategy.initial.positions()[slot];
            EmitMember {
                name: m.name.clone(),
                states: a.states().to_vec(),
                initial_state: state(a.initial()),
                position: (at.x(), at.y()),
                rule: rules
                    .iter()
                    .enumerate()
                    .map(|(i, r)| EmitRule {
                        state: state(r.state),
                        here: pattern_text(&names, r.pattern.alpha),
                        around: r
                            .pattern
                            .neighborhood
                            .iter()
                            .map(|p| pattern_text(&names, *p))
                            .collect(),
                        output: output_text(&names, r.output),
                        next: state(r.next),
                        priority: overlapping.then(|| (rules.len() - i) as i64),
                    })
                    .collect(),
            }
        })
        .collect();
    let file = EmitFile {
        format: STRATEGY_FORMAT,
        name: &strategy.name,
        member,
    };
    toml::to_string(&file).expect("strategy serializes")
}

/// Hex SHA-256 of the canonical emission.
pub fn strategy_hash(strategy: &Strategy) -> String {
    format!("{:x}", Sha256::digest(emit_strategy(strategy).as_bytes()))
}
