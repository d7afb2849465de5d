//! Synchronous stepping of a collective, trace recording, and the movement
//! metrics (coordinate, diameter, directedness).

use num_rational::Rational64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{Adversary, ChoiceContext};
use crate::lattice::{Symmetry, Vertex};
use crate::machine::{
    observe, resolve_output, CollectiveDef, MemberId, MemberSet, ObservationSymbol, OutputSymbol,
    StateId,
};

/// Position of every member; slot `i` holds member `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    positions: Vec<Vertex>,
}

impl Configuration {
    pub fn new(positions: Vec<Vertex>) -> Self {
        assert!(!positions.is_empty(), "configuration needs the automaton");
        Self { positions }
    }

    pub fn positions(&self) -> &[Vertex] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, id: MemberId) -> Vertex {
        self.positions[id.slot()]
    }

    pub fn occupants(&self, v: Vertex) -> MemberSet {
        self.positions
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == v)
            .map(|(i, _)| MemberId::from_slot(i))
            .collect()
    }

    pub fn mapped(&self, s: Symmetry) -> Configuration {
        Configuration {
            positions: self.positions.iter().map(|v| s.apply(*v)).collect(),
        }
    }

    pub fn min_x(&self) -> i64 {
        self.positions.iter().map(|v| v.x()).min().unwrap_or(0)
    }

    /// Translate so the leftmost member sits at `x = 0`; returns the offset
    /// that was removed.
    pub fn normalized(&self) -> (Configuration, i64) {
        let off = self.min_x();
        (self.mapped(Symmetry::translation(-off)), off)
    }

    fn moved(&self, movers: MemberSet, to: Vertex) -> Configuration {
        let mut positions = self.positions.clone();
        for id in movers.iter() {
            positions[id.slot()] = to;
        }
        Configuration { positions }
    }
}

/// Exact rational point, used for the collective's coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RationalPoint {
    pub x: Rational64,
    pub y: Rational64,
}

impl RationalPoint {
    pub fn new(x: Rational64, y: Rational64) -> Self {
        Self { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        Self {
            x: Rational64::from_integer(x),
            y: Rational64::from_integer(y),
        }
    }

    pub fn zero() -> Self {
        Self::from_ints(0, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    /// Chebyshev norm.
    pub fn max_abs(&self) -> Rational64 {
        let ax = if self.x < Rational64::zero() {
            -self.x
        } else {
            self.x
        };
        let ay = if self.y < Rational64::zero() {
            -self.y
        } else {
            self.y
        };
        ax.max(ay)
    }
}

impl std::ops::Sub for RationalPoint {
    type Output = RationalPoint;
    fn sub(self, o: RationalPoint) -> RationalPoint {
        RationalPoint {
            x: self.x - o.x,
            y: self.y - o.y,
        }
    }
}

impl std::ops::Add for RationalPoint {
    type Output = RationalPoint;
    fn add(self, o: RationalPoint) -> RationalPoint {
        RationalPoint {
            x: self.x + o.x,
            y: self.y + o.y,
        }
    }
}

impl std::fmt::Display for RationalPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CollectiveState {
    pub config: Configuration,
    pub states: Vec<StateId>,
    pub step_index: u64,
}

impl CollectiveState {
    pub fn initial(def: &CollectiveDef, config: Configuration) -> Self {
        assert_eq!(
            def.len(),
            config.len(),
            "configuration does not match the collective"
        );
        Self {
            config,
            states: def.initial_states(),
            step_index: 0,
        }
    }

    pub fn automaton_state(&self) -> StateId {
        self.states[0]
    }

    /// Internal states plus the configuration modulo x-translation, and the
    /// translation offset.
    pub fn canonical(&self) -> (CanonicalState, i64) {
        let (config, off) = self.config.normalized();
        (
            CanonicalState {
                states: self.states.clone(),
                config,
            },
            off,
        )
    }

    pub fn coordinate(&self) -> RationalPoint {
        coordinate(&self.config)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalState {
    pub states: Vec<StateId>,
    pub config: Configuration,
}

/// Mean of all member positions, exact.
pub fn coordinate(config: &Configuration) -> RationalPoint {
    let n = config.len() as i64;
    let (sx, sy) = config
        .positions()
        .iter()
        .fold((0i64, 0i64), |(a, b), v| (a + v.x(), b + v.y()));
    RationalPoint::new(Rational64::new(sx, n), Rational64::new(sy, n))
}

/// Largest per-axis spread of member positions.
pub fn diameter(config: &Configuration) -> i64 {
    let ps = config.positions();
    let spread = |f: fn(&Vertex) -> i64| {
        let max = ps.iter().map(f).max().unwrap_or(0);
        let min = ps.iter().map(f).min().unwrap_or(0);
        max - min
    };
    spread(|v| v.x()).max(spread(|v| v.y()))
}

/// Connected components of the "can observe each other" relation: two
/// members are linked when they share a vertex or sit on neighbours.
pub fn find_isolated(config: &Configuration) -> Vec<Vec<MemberId>> {
    let n = config.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let ps = config.positions();
    for i in 0..n {
        for j in (i + 1)..n {
            if ps[i] == ps[j] || ps[i].is_neighbor(ps[j]) {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<MemberId>> = Default::default();
    for i in 0..n {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().push(MemberId::from_slot(i));
    }
    groups.into_values().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub index: usize,
    #[serde(rename = "of")]
    pub offered: usize,
}

/// One moment `t` of a realization.
///
/// `outputs` are the symbols emitted in the step that produced this moment
/// (`y_t`); at `t = 0` they are all `Stay`. `observations` are what each
/// member perceives in `config` (`x_t`). `choice` is the adversary decision
/// that led here, present only when more than one target was offered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub step: u64,
    pub config: Configuration,
    pub states: Vec<StateId>,
    pub observations: Vec<ObservationSymbol>,
    pub outputs: Vec<OutputSymbol>,
    pub choice: Option<Choice>,
}

impl TraceRecord {
    pub fn initial(state: &CollectiveState) -> Self {
        TraceRecord {
            step: state.step_index,
            config: state.config.clone(),
            states: state.states.clone(),
            observations: observe_all(&state.config),
            outputs: vec![OutputSymbol::Stay; state.config.len()],
            choice: None,
        }
    }
}

fn observe_all(config: &Configuration) -> Vec<ObservationSymbol> {
    (0..config.len())
        .map(|i| observe(config, MemberId::from_slot(i)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn coordinates(&self) -> Vec<RationalPoint> {
        self.records.iter().map(|r| coordinate(&r.config)).collect()
    }

    pub fn choices(&self) -> Vec<usize> {
        self.records
            .iter()
            .filter_map(|r| r.choice.map(|c| c.index))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepFault {
    #[error("step {step}: automaton output {output:?} has no admissible target")]
    Strategy { step: u64, output: OutputSymbol },
    #[error("step {step}: pebble {} outputs a move without the automaton", pebble.index())]
    Pebble { step: u64, pebble: MemberId },
    #[error("step {step}: adversary returned no choice among {offered} options")]
    Adversary { step: u64, offered: usize },
}

/// A step whose observations and outputs are computed but whose target is
/// not yet chosen.
#[derive(Debug, Clone)]
pub struct PendingStep<'a> {
    state: &'a CollectiveState,
    observations: Vec<ObservationSymbol>,
    next_states: Vec<StateId>,
    outputs: Vec<OutputSymbol>,
    options: Vec<Vertex>,
    movers: MemberSet,
}

impl<'a> PendingStep<'a> {
    pub fn options(&self) -> &[Vertex] {
        &self.options
    }

    pub fn automaton_output(&self) -> OutputSymbol {
        self.outputs[0]
    }

    pub fn observations(&self) -> &[ObservationSymbol] {
        &self.observations
    }

    /// Members that move with the automaton (the automaton included).
    pub fn movers(&self) -> MemberSet {
        self.movers
    }

    pub fn commit(&self, index: usize) -> (CollectiveState, TraceRecord) {
        let target = self.options[index];
        let config = if self.outputs[0].is_move() {
            self.state.config.moved(self.movers, target)
        } else {
            self.state.config.clone()
        };
        let next = CollectiveState {
            config,
            states: self.next_states.clone(),
            step_index: self.state.step_index + 1,
        };
        let offered = self.options.len();
        let record = TraceRecord {
            step: next.step_index,
            config: next.config.clone(),
            states: next.states.clone(),
            observations: observe_all(&next.config),
            outputs: self.outputs.clone(),
            choice: (offered > 1).then_some(Choice { index, offered }),
        };
        (next, record)
    }
}

/// The first half of a synchronous step: observe, compute outputs, resolve
/// the automaton's option set.
pub fn prepare_step<'a>(
    def: &CollectiveDef,
    state: &'a CollectiveState,
) -> Result<PendingStep<'a>, StepFault> {
    let config = &state.config;
    let observations = observe_all(config);
    let mut next_states = Vec::with_capacity(def.len());
    let mut outputs = Vec::with_capacity(def.len());
    for (slot, member) in def.members().iter().enumerate() {
        let (q, y) = member
            .machine
            .apply(state.states[slot], &observations[slot]);
        next_states.push(q);
        outputs.push(y);
    }
    let at = config.position(MemberId::AUTOMATON);
    let mut movers = MemberSet::single(MemberId::AUTOMATON);
    for p in def.pebbles() {
        if !outputs[p.slot()].is_move() {
            continue;
        }
        if config.position(p) != at {
            return Err(StepFault::Pebble {
                step: state.step_index,
                pebble: p,
            });
        }
        movers = movers.with(p);
    }
    let options = resolve_output(outputs[0], at, config);
    if options.is_empty() {
        return Err(StepFault::Strategy {
            step: state.step_index,
            output: outputs[0],
        });
    }
    Ok(PendingStep {
        state,
        observations,
        next_states,
        outputs,
        options,
        movers,
    })
}

/// One synchronous step; the adversary is consulted only when the
/// automaton's output leaves more than one target.
pub fn step(
    def: &CollectiveDef,
    state: &CollectiveState,
    adversary: &mut dyn Adversary,
) -> Result<(CollectiveState, TraceRecord), StepFault> {
    let pending = prepare_step(def, state)?;
    let index = if pending.options.len() > 1 {
        let ctx = ChoiceContext {
            state,
            at: state.config.position(MemberId::AUTOMATON),
            options: &pending.options,
            digest: history_digest(state),
        };
        match adversary.choose(&ctx) {
            Some(i) if i < pending.options.len() => i,
            _ => {
                return Err(StepFault::Adversary {
                    step: state.step_index,
                    offered: pending.options.len(),
                })
            }
        }
    } else {
        0
    };
    Ok(pending.commit(index))
}

/// FNV-1a over the step index, internal states and positions. Stable across
/// platforms and toolchains, unlike `std`'s hasher.
pub fn history_digest(state: &CollectiveState) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for b in bytes {
            h ^= u64::from(*b);
            h = h.wrapping_mul(PRIME);
        }
    };
    eat(&state.step_index.to_le_bytes());
    for q in &state.states {
        eat(&q.0.to_le_bytes());
    }
    for v in state.config.positions() {
        eat(&v.x().to_le_bytes());
        eat(&[v.y() as u8]);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{fault}")]
pub struct RunFault {
    pub fault: StepFault,
    pub partial: Trace,
}

/// Run `horizon` steps from `initial`; the trace has `horizon + 1` records
/// unless a fault cuts it short.
pub fn run(
    def: &CollectiveDef,
    initial: &CollectiveState,
    adversary: &mut dyn Adversary,
    horizon: usize,
) -> Result<Trace, Box<RunFault>> {
    let mut trace = Trace {
        records: vec![TraceRecord::initial(initial)],
    };
    let mut state = initial.clone();
    for _ in 0..horizon {
        match step(def, &state, adversary) {
            Ok((next, record)) => {
                trace.records.push(record);
                state = next;
            }
            Err(fault) => {
                return Err(Box::new(RunFault {
                    fault,
                    partial: trace,
                }))
            }
        }
    }
    Ok(trace)
}

/// How the displacement equality is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DisplacementRule {
    /// The equality as literally defined; a zero displacement counts.
    #[default]
    Literal,
    /// Additionally require the common displacement to be non-zero.
    Progress,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationReason {
    Diameter { diameter: i64, bound: i64 },
    Displacement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Every judged moment satisfied the condition; `judged` moments fit a
    /// full look-ahead window.
    HoldsOnPrefix {
        judged: usize,
    },
    Violated {
        at: usize,
        reason: ViolationReason,
    },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::HoldsOnPrefix { .. })
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::HoldsOnPrefix { judged } => {
                write!(f, "holds-on-prefix ({judged} moments judged)")
            }
            Verdict::Violated {
                at,
                reason: ViolationReason::Diameter { diameter, bound },
            } => {
                write!(
                    f,
                    "violated at step {at}: diameter {diameter} exceeds c1 = {bound}"
                )
            }
            Verdict::Violated {
                at,
                reason: ViolationReason::Displacement,
            } => {
                write!(
                    f,
                    "violated at step {at}: no look-ahead pair with equal displacements"
                )
            }
        }
    }
}

fn displacement_ok(
    v: &[RationalPoint],
    t: usize,
    t1: usize,
    t2: usize,
    rule: DisplacementRule,
) -> bool {
    let first = v[t + t1] - v[t];
    let second = v[t + t1 + t2] - v[t + t1];
    first == second && (rule == DisplacementRule::Literal || !first.is_zero())
}

pub fn check_directed(trace: &Trace, c1: i64, c2: usize) -> Verdict {
    check_directed_with(trace, c1, c2, DisplacementRule::Literal)
}

/// Diameter bounded by `c1` everywhere, and for every moment `t` whose full
/// window fits the trace there are `t', t'' in [1, c2]` with
/// `v(t+t') - v(t) = v(t+t'+t'') - v(t+t')`.
pub fn check_directed_with(trace: &Trace, c1: i64, c2: usize, rule: DisplacementRule) -> Verdict {
    for (t, r) in trace.records.iter().enumerate() {
        let d = diameter(&r.config);
        if d > c1 {
            return Verdict::Violated {
                at: t,
                reason: ViolationReason::Diameter {
                    diameter: d,
                    bound: c1,
                },
            };
        }
    }
    let v = trace.coordinates();
    let judged = judged_moments(v.len(), c2);
    for t in 0..judged {
        let found = (1..=c2).any(|t1| (1..=c2).any(|t2| displacement_ok(&v, t, t1, t2, rule)));
        if !found {
            return Verdict::Violated {
                at: t,
                reason: ViolationReason::Displacement,
            };
        }
    }
    Verdict::HoldsOnPrefix { judged }
}

pub fn check_uniform(trace: &Trace, c2: usize) -> Verdict {
    check_uniform_with(trace, c2, DisplacementRule::Literal)
}

/// The uniform variant: `t' = t'' = c2` at every judged moment.
pub fn check_uniform_with(trace: &Trace, c2: usize, rule: DisplacementRule) -> Verdict {
    let v = trace.coordinates();
    let judged = judged_moments(v.len(), c2);
    for t in 0..judged {
        if !displacement_ok(&v, t, c2, c2, rule) {
            return Verdict::Violated {
                at: t,
                reason: ViolationReason::Displacement,
            };
        }
    }
    Verdict::HoldsOnPrefix { judged }
}

fn judged_moments(len: usize, c2: usize) -> usize {
    if c2 == 0 {
        return 0;
    }
    len.saturating_sub(2 * c2)
}
