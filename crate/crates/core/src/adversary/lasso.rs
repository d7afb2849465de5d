//! Lasso search over adversary choice trees.
//!
//! A lasso is a choice prefix followed by a choice cycle that brings the
//! collective back to exactly the state it was in when the cycle started.
//! Repeating the cycle forever is a valid realization whose coordinate never
//! leaves a bounded region, so no finite look-ahead can witness directed
//! movement.

use std::collections::{BTreeSet, HashMap};

use num_rational::Rational64;
use num_traits::Zero;
use thiserror::Error;

use super::ScriptedChoices;
use crate::collective::{
    coordinate, diameter, find_isolated, prepare_step, run, CanonicalState, CollectiveState,
    Configuration, RationalPoint,
};
use crate::machine::{validate_pebbles, CollectiveDef, MemberId, PebbleViolation, StateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    /// Longest realization (prefix plus cycle, in steps) considered.
    pub max_depth: usize,
    /// Branches whose diameter exceeds this are not expanded.
    pub diameter_bound: i64,
}

impl SearchConfig {
    pub fn new(max_depth: usize) -> Self {
        Self {
            max_depth,
            diameter_bound: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LassoCertificate {
    /// Option indices chosen at branching steps of the prefix.
    pub prefix: Vec<usize>,
    /// Option indices chosen at branching steps of the cycle.
    pub cycle: Vec<usize>,
    pub prefix_steps: usize,
    pub cycle_steps: usize,
    /// Coordinate change over one traversal of the cycle.
    pub net_displacement: RationalPoint,
    /// The state at both ends of the cycle, modulo x-translation.
    pub repeated: CanonicalState,
    /// Largest Chebyshev distance of the coordinate from its value at the
    /// start of the cycle, over the cycle.
    pub confinement_radius: Rational64,
    pub distinct_configurations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("replay faulted: {0}")]
    Fault(String),
    #[error("cycle does not return to its starting state")]
    NotClosed,
    #[error("cycle has non-zero net displacement {0}")]
    Displaced(RationalPoint),
    #[error("script consumed {used} of {available} choices")]
    ScriptMismatch { used: usize, available: usize },
}

impl LassoCertificate {
    /// Replay prefix, cycle, cycle through [`ScriptedChoices`] and check
    /// that both cycle boundaries hit the same exact state.
    pub fn replay(
        &self,
        def: &CollectiveDef,
        initial: &CollectiveState,
    ) -> Result<(), ReplayError> {
        let script: Vec<usize> = self
            .prefix
            .iter()
            .chain(self.cycle.iter())
            .chain(self.cycle.iter())
            .copied()
            .collect();
        let available = script.len();
        let mut adversary = ScriptedChoices::new(script);
        let steps = self.prefix_steps + 2 * self.cycle_steps;
        let trace = run(def, initial, &mut adversary, steps)
            .map_err(|e| ReplayError::Fault(e.fault.to_string()))?;
        if adversary.consumed() != available {
            return Err(ReplayError::ScriptMismatch {
                used: adversary.consumed(),
                available,
            });
        }
        let at = |t: usize| (&trace.records[t].states, &trace.records[t].config);
        let (a, b, c) = (
            self.prefix_steps,
            self.prefix_steps + self.cycle_steps,
            steps,
        );
        if at(a) != at(b) || at(b) != at(c) {
            return Err(ReplayError::NotClosed);
        }
        let shift = coordinate(&trace.records[b].config) - coordinate(&trace.records[a].config);
        if !shift.is_zero() {
            return Err(ReplayError::Displaced(shift));
        }
        let (canon, _) = CollectiveState {
            config: trace.records[a].config.clone(),
            states: trace.records[a].states.clone(),
            step_index: 0,
        }
        .canonical();
        if canon != self.repeated {
            return Err(ReplayError::NotClosed);
        }
        Ok(())
    }
}

/// A reachable state in which the automaton's component does not contain
/// every member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsolationEvidence {
    pub prefix: Vec<usize>,
    pub steps: usize,
    pub components: Vec<Vec<MemberId>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LassoSearch {
    Found(LassoCertificate),
    /// The bounded space was explored completely without a lasso.
    NotFound {
        explored: usize,
    },
    /// The depth limit cut the search short.
    DepthExhausted {
        explored: usize,
        isolation: Option<IsolationEvidence>,
    },
}

type ExactKey = (Vec<StateId>, Configuration);

fn key(state: &CollectiveState) -> ExactKey {
    (state.states.clone(), state.config.clone())
}

struct Frame {
    state: CollectiveState,
    choice: Option<usize>,
}

struct Searcher<'d> {
    def: &'d CollectiveDef,
    diameter_bound: i64,
    on_path: HashMap<ExactKey, usize>,
    finished: HashMap<ExactKey, usize>,
    path: Vec<Frame>,
    truncated: bool,
    explored: usize,
    isolation: Option<IsolationEvidence>,
}

impl Searcher<'_> {
    fn visit(&mut self, state: &CollectiveState, remaining: usize) -> Option<usize> {
        let k = key(state);
        if let Some(&start) = self.on_path.get(&k) {
            return Some(start);
        }
        if self.finished.get(&k).is_some_and(|&b| b >= remaining) {
            return None;
        }
        self.explored += 1;
        if self.isolation.is_none() {
            let components = find_isolated(&state.config);
            if components.len() > 1 {
                self.isolation = Some(IsolationEvidence {
                    prefix: self.path.iter().filter_map(|f| f.choice).collect(),
                    steps: self.path.len(),
                    components,
                });
            }
        }
        if diameter(&state.config) > self.diameter_bound {
            self.finished.insert(k, usize::MAX);
            return None;
        }
        if remaining == 0 {
            self.truncated = true;
            return None;
        }
        let Ok(pending) = prepare_step(self.def, state) else {
            self.finished.insert(k, usize::MAX);
            return None;
        };
        let offered = pending.options().len();
        let depth = self.path.len();
        self.on_path.insert(k.clone(), depth);
        self.path.push(Frame {
            state: state.clone(),
            choice: None,
        });
        for i in 0..offered {
            self.path[depth].choice = (offered > 1).then_some(i);
            let (child, _) = pending.commit(i);
            if let Some(start) = self.visit(&child, remaining - 1) {
                return Some(start);
            }
        }
        self.path.pop();
        self.on_path.remove(&k);
        let best = self.finished.entry(k).or_insert(0);
        *best = (*best).max(remaining);
        None
    }

    fn certificate(&self, start: usize) -> LassoCertificate {
        let prefix = self.path[..start].iter().filter_map(|f| f.choice).collect();
        let cycle_frames = &self.path[start..];
        let cycle = cycle_frames.iter().filter_map(|f| f.choice).collect();
        let origin = coordinate(&cycle_frames[0].state.config);
        let confinement_radius = cycle_frames
            .iter()
            .map(|f| (coordinate(&f.state.config) - origin).max_abs())
            .max()
            .unwrap_or_else(Rational64::zero);
        let distinct_configurations = cycle_frames
            .iter()
            .map(|f| f.state.config.clone())
            .collect::<BTreeSet<_>>()
            .len();
        LassoCertificate {
            prefix,
            cycle,
            prefix_steps: start,
            cycle_steps: cycle_frames.len(),
            // The cycle closes on an identical exact state.
            net_displacement: RationalPoint::zero(),
            repeated: cycle_frames[0].state.canonical().0,
            confinement_radius,
            distinct_configurations,
        }
    }
}

fn budgets(max_depth: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (1..=max_depth.min(16)).collect();
    let mut b = 32;
    while b < max_depth {
        out.push(b);
        b *= 2;
    }
    if max_depth > 16 {
        out.push(max_depth);
    }
    out
}

/// Depth-first search with iterative deepening for the shortest-budget lasso
/// with zero net displacement. Children are tried in option order, so the
/// result is deterministic.
pub fn search_lasso(
    def: &CollectiveDef,
    initial: &CollectiveState,
    cfg: &SearchConfig,
) -> LassoSearch {
    let mut explored = 0;
    let mut isolation = None;
    for budget in budgets(cfg.max_depth) {
        let mut s = Searcher {
            def,
            diameter_bound: cfg.diameter_bound,
            on_path: HashMap::new(),
            finished: HashMap::new(),
            path: Vec::new(),
            truncated: false,
            explored: 0,
            isolation: None,
        };
        let found = s.visit(initial, budget);
        explored += s.explored;
        if isolation.is_none() {
            isolation = s.isolation.take();
        }
        if let Some(start) = found {
            return LassoSearch::Found(s.certificate(start));
        }
        if !s.truncated {
            return LassoSearch::NotFound { explored };
        }
    }
    LassoSearch::DepthExhausted {
        explored,
        isolation,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DefeatError {
    #[error("collective has {0} pebbles; only types (1,0) to (1,3) are in scope")]
    OutOfScope(usize),
    #[error("pebble conditions violated: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidPebbles(Vec<PebbleViolation>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum DefeatOutcome {
    Certified {
        certificate: LassoCertificate,
        /// Set when the lasso was found after the automaton's component
        /// separated from the rest of the collective.
        via_isolation: Option<IsolationEvidence>,
    },
    Inconclusive {
        explored: usize,
    },
}

/// Produce a zero-displacement lasso for a collective with at most three
/// pebbles. If the bounded search only finds a realization that isolates
/// the automaton, the search restarts from the isolated state without the
/// diameter bound, since the isolated sub-collective is free to wander.
pub fn defeat_strategy(
    def: &CollectiveDef,
    initial: &CollectiveState,
    cfg: &SearchConfig,
) -> Result<DefeatOutcome, DefeatError> {
    if def.pebble_count() > 3 {
        return Err(DefeatError::OutOfScope(def.pebble_count()));
    }
    let violations = validate_pebbles(def);
    if !violations.is_empty() {
        return Err(DefeatError::InvalidPebbles(violations));
    }
    let (explored, isolation) = match search_lasso(def, initial, cfg) {
        LassoSearch::Found(certificate) => {
            return Ok(DefeatOutcome::Certified {
                certificate,
                via_isolation: None,
            })
        }
        LassoSearch::NotFound { explored } => (explored, None),
        LassoSearch::DepthExhausted {
            explored,
            isolation,
        } => (explored, isolation),
    };
    let Some(iso) = isolation else {
        return Ok(DefeatOutcome::Inconclusive { explored });
    };
    let mut adversary = ScriptedChoices::new(iso.prefix.clone());
    let Ok(trace) = run(def, initial, &mut adversary, iso.steps) else {
        return Ok(DefeatOutcome::Inconclusive { explored });
    };
    let last = trace.records.last().expect("trace has the initial record");
    let isolated = CollectiveState {
        config: last.config.clone(),
        states: last.states.clone(),
        step_index: last.step,
    };
    let relaxed = SearchConfig {
        max_depth: cfg.max_depth.saturating_sub(iso.steps).max(1),
        diameter_bound: i64::MAX,
    };
    match search_lasso(def, &isolated, &relaxed) {
        LassoSearch::Found(mut certificate) => {
            let mut prefix = iso.prefix.clone();
            prefix.extend(certificate.prefix);
            certificate.prefix = prefix;
            certificate.prefix_steps += iso.steps;
            Ok(DefeatOutcome::Certified {
                certificate,
                via_isolation: Some(iso),
            })
        }
        _ => Ok(DefeatOutcome::Inconclusive { explored }),
    }
}
