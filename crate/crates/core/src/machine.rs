//! The formal automaton model: members, compassless observations, output
//! symbols, rule tables and pebble legality.

use std::fmt;

use crate::collective::Configuration;
use crate::lattice::Vertex;

/// Largest collective the bitset representation (and the exhaustive pebble
/// validator) supports.
pub const MAX_MEMBERS: usize = 9;

/// Member index; `1` is the automaton, `2..=m+1` are pebbles.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MemberId(u8);

impl MemberId {
    pub const AUTOMATON: MemberId = MemberId(1);

    pub fn new(index: usize) -> Self {
        assert!(
            (1..=MAX_MEMBERS).contains(&index),
            "member index {index} out of range"
        );
        MemberId(index as u8)
    }

    pub fn index(self) -> usize {
        usize::from(self.0)
    }

    /// Zero-based slot in per-member vectors.
    pub fn slot(self) -> usize {
        usize::from(self.0) - 1
    }

    pub fn from_slot(slot: usize) -> Self {
        MemberId::new(slot + 1)
    }

    pub fn is_automaton(self) -> bool {
        self.0 == 1
    }
}

impl fmt::Debug for MemberId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A set of members as a bitset (bit `i` is member `i`).
///
/// The integer value doubles as the fixed total order on sets used to
/// canonicalize neighbourhood multisets.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MemberSet(u32);

impl MemberSet {
    pub const EMPTY: MemberSet = MemberSet(0);

    pub fn single(id: MemberId) -> Self {
        MemberSet(1 << id.index())
    }

    pub fn from_bits(bits: u32) -> Self {
        MemberSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, id: MemberId) -> bool {
        self.0 & (1 << id.index()) != 0
    }

    pub fn with(self, id: MemberId) -> Self {
        MemberSet(self.0 | (1 << id.index()))
    }

    pub fn without(self, id: MemberId) -> Self {
        MemberSet(self.0 & !(1 << id.index()))
    }

    pub fn union(self, other: MemberSet) -> Self {
        MemberSet(self.0 | other.0)
    }

    pub fn is_subset(self, other: MemberSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = MemberId> {
        (1..=MAX_MEMBERS)
            .map(MemberId::new)
            .filter(move |id| self.contains(*id))
    }
}

impl FromIterator<MemberId> for MemberSet {
    fn from_iter<I: IntoIterator<Item = MemberId>>(iter: I) -> Self {
        iter.into_iter().fold(MemberSet::EMPTY, MemberSet::with)
    }
}

impl fmt::Debug for MemberSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set()
            .entries(self.iter().map(|m| m.index()))
            .finish()
    }
}

/// What a member perceives: the others on its own vertex and the unordered
/// multiset of its three neighbours' occupant sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObservationSymbol {
    alpha: MemberSet,
    neighborhood: [MemberSet; 3],
}

impl ObservationSymbol {
    /// Neighbour sets may be given in any order.
    pub fn new(alpha: MemberSet, mut neighborhood: [MemberSet; 3]) -> Self {
        neighborhood.sort();
        Self {
            alpha,
            neighborhood,
        }
    }

    pub fn alpha(&self) -> MemberSet {
        self.alpha
    }

    pub fn neighborhood(&self) -> [MemberSet; 3] {
        self.neighborhood
    }

    /// True if `id` sits on any neighbouring vertex.
    pub fn sees_nearby(&self, id: MemberId) -> bool {
        self.neighborhood.iter().any(|s| s.contains(id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OutputSymbol {
    Stay,
    MoveToFree,
    /// Move to a neighbour whose occupants are non-empty and all in the set.
    MoveToSet(MemberSet),
}

impl OutputSymbol {
    pub fn is_move(self) -> bool {
        !matches!(self, OutputSymbol::Stay)
    }
}

/// Compute `who`'s observation of `config`.
pub fn observe(config: &Configuration, who: MemberId) -> ObservationSymbol {
    let at = config.position(who);
    let alpha = config.occupants(at).without(who);
    let n = at.neighbors();
    ObservationSymbol::new(
        alpha,
        [
            config.occupants(n[0]),
            config.occupants(n[1]),
            config.occupants(n[2]),
        ],
    )
}

/// The set of vertices an output may lead to. Empty means the output cannot
/// be executed (a strategy fault for the automaton).
pub fn resolve_output(y: OutputSymbol, at: Vertex, config: &Configuration) -> Vec<Vertex> {
    match y {
        OutputSymbol::Stay => vec![at],
        OutputSymbol::MoveToFree => at
            .neighbors()
            .into_iter()
            .filter(|v| config.occupants(*v).is_empty())
            .collect(),
        OutputSymbol::MoveToSet(target) => at
            .neighbors()
            .into_iter()
            .filter(|v| {
                let occ = config.occupants(*v);
                !occ.is_empty() && occ.is_subset(target)
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetPattern {
    Any,
    Exact(MemberSet),
}

impl SetPattern {
    pub fn matches(self, s: MemberSet) -> bool {
        match self {
            SetPattern::Any => true,
            SetPattern::Exact(e) => e == s,
        }
    }

    fn compatible(self, other: SetPattern) -> bool {
        match (self, other) {
            (SetPattern::Exact(a), SetPattern::Exact(b)) => a == b,
            _ => true,
        }
    }
}

const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Observation pattern: alpha plus an unordered triple of neighbour patterns.
///
/// Neighbour patterns are matched as a multiset, so there is no way to
/// address a neighbour by position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ObservationPattern {
    pub alpha: SetPattern,
    pub neighborhood: [SetPattern; 3],
}

impl ObservationPattern {
    pub fn exact(obs: &ObservationSymbol) -> Self {
        let n = obs.neighborhood();
        ObservationPattern {
            alpha: SetPattern::Exact(obs.alpha()),
            neighborhood: [
                SetPattern::Exact(n[0]),
                SetPattern::Exact(n[1]),
                SetPattern::Exact(n[2]),
            ],
        }
    }

    pub fn is_exact(&self) -> bool {
        std::iter::once(&self.alpha)
            .chain(self.neighborhood.iter())
            .all(|p| matches!(p, SetPattern::Exact(_)))
    }

    pub fn matches(&self, obs: &ObservationSymbol) -> bool {
        if !self.alpha.matches(obs.alpha()) {
            return false;
        }
        let n = obs.neighborhood();
        PERMUTATIONS
            .iter()
            .any(|p| (0..3).all(|i| self.neighborhood[i].matches(n[p[i]])))
    }

    /// True iff some observation matches both patterns.
    pub fn overlaps(&self, other: &ObservationPattern) -> bool {
        self.alpha.compatible(other.alpha)
            && PERMUTATIONS
                .iter()
                .any(|p| (0..3).all(|i| self.neighborhood[i].compatible(other.neighborhood[p[i]])))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u16);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub state: StateId,
    pub pattern: ObservationPattern,
    pub next: StateId,
    pub output: OutputSymbol,
}

/// One member's sextuple: states, initial state, and the transition/output
/// functions given as an ordered rule list (first match wins).
///
/// Observations no rule covers fall back to `Stay` with a self-loop, which
/// keeps both functions total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutomatonDef {
    states: Vec<String>,
    initial: StateId,
    rules: Vec<Rule>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DefinitionError {
    #[error("automaton has no states")]
    NoStates,
    #[error("state {0:?} is out of range")]
    UnknownState(StateId),
    #[error("duplicate state name '{0}'")]
    DuplicateState(String),
    #[error("MoveToSet with an empty target set")]
    EmptyTarget,
    #[error("collective needs at least the automaton and at most {MAX_MEMBERS} members, got {0}")]
    MemberCount(usize),
    #[error("member '{0}' targets itself in a move output")]
    SelfTarget(String),
}

impl AutomatonDef {
    pub fn new(
        states: Vec<String>,
        initial: StateId,
        rules: Vec<Rule>,
    ) -> Result<Self, DefinitionError> {
        if states.is_empty() {
            return Err(DefinitionError::NoStates);
        }
        for (i, s) in states.iter().enumerate() {
            if states[..i].contains(s) {
                return Err(DefinitionError::DuplicateState(s.clone()));
            }
        }
        let n = states.len();
        let bad = |s: StateId| usize::from(s.0) >= n;
        if bad(initial) {
            return Err(DefinitionError::UnknownState(initial));
        }
        for r in &rules {
            if bad(r.state) || bad(r.next) {
                return Err(DefinitionError::UnknownState(if bad(r.state) {
                    r.state
                } else {
                    r.next
                }));
            }
            if r.output == OutputSymbol::MoveToSet(MemberSet::EMPTY) {
                return Err(DefinitionError::EmptyTarget);
            }
        }
        Ok(Self {
            states,
            initial,
            rules,
        })
    }

    /// Single-state member that always stays (a passive pebble).
    pub fn passive() -> Self {
        Self {
            states: vec!["q0".into()],
            initial: StateId(0),
            rules: Vec::new(),
        }
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[usize::from(s.0)]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states
            .iter()
            .position(|s| s == name)
            .map(|i| StateId(i as u16))
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// `(phi(q, x), psi(q, x))`.
    pub fn apply(&self, state: StateId, obs: &ObservationSymbol) -> (StateId, OutputSymbol) {
        self.rules
            .iter()
            .find(|r| r.state == state && r.pattern.matches(obs))
            .map_or((state, OutputSymbol::Stay), |r| (r.next, r.output))
    }

    pub fn output(&self, state: StateId, obs: &ObservationSymbol) -> OutputSymbol {
        self.apply(state, obs).1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberDef {
    pub name: String,
    pub machine: AutomatonDef,
}

/// A collective of type `(1, m)`: member 1 is the automaton, the rest are
/// pebbles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollectiveDef {
    members: Vec<MemberDef>,
}

impl CollectiveDef {
    pub fn new(members: Vec<MemberDef>) -> Result<Self, DefinitionError> {
        if members.is_empty() || members.len() > MAX_MEMBERS {
            return Err(DefinitionError::MemberCount(members.len()));
        }
        for (slot, m) in members.iter().enumerate() {
            let me = MemberId::from_slot(slot);
            if m.machine
                .rules()
                .iter()
                .any(|r| matches!(r.output, OutputSymbol::MoveToSet(t) if t.contains(me)))
            {
                return Err(DefinitionError::SelfTarget(m.name.clone()));
            }
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[MemberDef] {
        &self.members
    }

    pub fn member(&self, id: MemberId) -> &MemberDef {
        &self.members[id.slot()]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn pebble_count(&self) -> usize {
        self.members.len() - 1
    }

    pub fn ids(&self) -> impl Iterator<Item = MemberId> {
        (0..self.members.len()).map(MemberId::from_slot)
    }

    pub fn pebbles(&self) -> impl Iterator<Item = MemberId> {
        (1..self.members.len()).map(MemberId::from_slot)
    }

    pub fn all_members(&self) -> MemberSet {
        self.ids().collect()
    }

    pub fn id_by_name(&self, name: &str) -> Option<MemberId> {
        self.members
            .iter()
            .position(|m| m.name == name)
            .map(MemberId::from_slot)
    }

    pub fn initial_states(&self) -> Vec<StateId> {
        self.members.iter().map(|m| m.machine.initial()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PebbleViolation {
    /// A pebble has exactly one state.
    StateCount { pebble: MemberId, states: usize },
    /// Moves only when the automaton shares the vertex.
    MovesWithoutAutomaton {
        pebble: MemberId,
        observation: ObservationSymbol,
        output: OutputSymbol,
    },
    /// The move must be one the automaton itself can emit from
    /// the same vertex in some state.
    OutputUnavailableToAutomaton {
        pebble: MemberId,
        observation: ObservationSymbol,
        output: OutputSymbol,
    },
    /// Member 1 is the automaton, not a pebble.
    NotAPebble(MemberId),
}

impl fmt::Display for PebbleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PebbleViolation::StateCount { pebble, states } => {
                write!(
                    f,
                    "pebble {} has {} states, expected exactly 1",
                    pebble.index(),
                    states
                )
            }
            PebbleViolation::MovesWithoutAutomaton {
                pebble,
                observation,
                output,
            } => write!(
                f,
                "pebble {} outputs {:?} on {:?} without the automaton co-located",
                pebble.index(),
                output,
                observation
            ),
            PebbleViolation::OutputUnavailableToAutomaton {
                pebble,
                observation,
                output,
            } => write!(
                f,
                "pebble {} outputs {:?} on {:?}, which the automaton never emits from that vertex",
                pebble.index(),
                output,
                observation
            ),
            PebbleViolation::NotAPebble(id) => write!(f, "member {} is the automaton", id.index()),
        }
    }
}

/// Every observation a member of a collective of `size` can physically
/// receive: the other members are each on the observer's vertex, on one of
/// the three neighbours, or out of sight.
pub fn reachable_observations(who: MemberId, size: usize) -> Vec<ObservationSymbol> {
    let others: Vec<MemberId> = (1..=size)
        .map(MemberId::new)
        .filter(|m| *m != who)
        .collect();
    let total = 5usize.pow(others.len() as u32);
    let mut out = std::collections::BTreeSet::new();
    for code in 0..total {
        let mut c = code;
        let mut alpha = MemberSet::EMPTY;
        let mut n = [MemberSet::EMPTY; 3];
        for m in &others {
            match c % 5 {
                0 => alpha = alpha.with(*m),
                k @ 1..=3 => n[k - 1] = n[k - 1].with(*m),
                _ => {}
            }
            c /= 5;
        }
        out.insert(ObservationSymbol::new(alpha, n));
    }
    out.into_iter().collect()
}

/// Check the pebble conditions for one member of `def`.
///
/// The check is semantic: it evaluates the pebble's rule table on every
/// physically possible observation, so wildcard patterns are covered.
pub fn validate_pebble(def: &CollectiveDef, pebble: MemberId) -> Vec<PebbleViolation> {
    if pebble.is_automaton() {
        return vec![PebbleViolation::NotAPebble(pebble)];
    }
    let machine = &def.member(pebble).machine;
    let mut violations = Vec::new();
    if machine.states().len() != 1 {
        violations.push(PebbleViolation::StateCount {
            pebble,
            states: machine.states().len(),
        });
    }
    let automaton = &def.member(MemberId::AUTOMATON).machine;
    for obs in reachable_observations(pebble, def.len()) {
        let y = machine.output(machine.initial(), &obs);
        if !y.is_move() {
            continue;
        }
        if !obs.alpha().contains(MemberId::AUTOMATON) {
            violations.push(PebbleViolation::MovesWithoutAutomaton {
                pebble,
                observation: obs,
                output: y,
            });
            continue;
        }
        // The automaton on the same vertex sees the same neighbourhood and
        // the pebble in place of itself.
        let seen_by_automaton = ObservationSymbol::new(
            obs.alpha().without(MemberId::AUTOMATON).with(pebble),
            obs.neighborhood(),
        );
        let available = (0..automaton.states().len())
            .any(|q| automaton.output(StateId(q as u16), &seen_by_automaton) == y);
        if !available {
            violations.push(PebbleViolation::OutputUnavailableToAutomaton {
                pebble,
                observation: obs,
                output: y,
            });
        }
    }
    violations
}

pub fn validate_pebbles(def: &CollectiveDef) -> Vec<PebbleViolation> {
    def.pebbles()
        .flat_map(|p| validate_pebble(def, p))
        .collect()
}
