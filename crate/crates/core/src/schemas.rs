//! Pebble schemas: occupied-vertex sets up to x-translation, their symmetry
//! classes, worst-case indistinguishability and the elementary-transfer
//! graph.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::collective::{find_isolated, Configuration};
use crate::lattice::{Symmetry, Vertex};
use crate::machine::{
    observe, resolve_output, MemberId, MemberSet, ObservationSymbol, OutputSymbol,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("schema enumeration supports 2 or 3 pebbles, got {0}")]
    UnsupportedCount(usize),
    #[error("schemas compare only at equal pebble counts ({0} vs {1})")]
    CountMismatch(usize, usize),
}

/// Occupied pebble vertices, translated so that the smallest x is 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Schema {
    cells: Vec<Vertex>,
    pebbles: usize,
}

impl Schema {
    pub fn new(pebbles: usize, cells: impl IntoIterator<Item = Vertex>) -> Self {
        let mut cells: Vec<Vertex> = cells.into_iter().collect();
        let min_x = cells.iter().map(|v| v.x()).min().unwrap_or(0);
        for c in &mut cells {
            *c = c.translated(-min_x);
        }
        cells.sort();
        cells.dedup();
        Self { cells, pebbles }
    }

    pub fn cells(&self) -> &[Vertex] {
        &self.cells
    }

    pub fn pebbles(&self) -> usize {
        self.pebbles
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.cells.binary_search(&v).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        is_connected(&self.cells)
    }

    pub fn mapped(&self, s: Symmetry) -> Schema {
        Schema::new(self.pebbles, self.cells.iter().map(|v| s.apply(*v)))
    }

    /// Every way to spread the pebbles over the cells with each cell
    /// holding at least one; counts follow `cells()` order.
    pub fn multiplicities(&self) -> Vec<Vec<usize>> {
        compositions(self.pebbles, self.cells.len())
    }

    /// Every placement of the numbered pebbles (members 2, 3, ...) whose
    /// schema is this one.
    pub fn interpretations(&self) -> Vec<Vec<Vertex>> {
        let k = self.cells.len();
        let mut out = Vec::new();
        let mut cur = vec![0usize; self.pebbles];
        loop {
            let mut used = vec![false; k];
            for &c in &cur {
                used[c] = true;
            }
            if used.iter().all(|u| *u) {
                out.push(cur.iter().map(|&c| self.cells[c]).collect());
            }
            // Odometer increment.
            let mut i = 0;
            loop {
                if i == cur.len() {
                    return out;
                }
                cur[i] += 1;
                if cur[i] < k {
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }

    /// Two-line picture, row 1 on top, `#` for occupied.
    pub fn picture(&self) -> String {
        let width = self.cells.iter().map(|v| v.x()).max().map_or(0, |m| m + 1);
        let row = |y: i64| -> String {
            (0..width)
                .map(|x| {
                    if self.contains(Vertex::new(x, y)) {
                        '#'
                    } else {
                        '.'
                    }
                })
                .collect()
        };
        format!("{}\n{}", row(1), row(0))
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.cells.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

fn is_connected(cells: &[Vertex]) -> bool {
    let Some(&first) = cells.first() else {
        return true;
    };
    let set: BTreeSet<Vertex> = cells.iter().copied().collect();
    let mut seen = BTreeSet::from([first]);
    let mut stack = vec![first];
    while let Some(v) = stack.pop() {
        for w in v.neighbors() {
            if set.contains(&w) && seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen.len() == set.len()
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=total.saturating_sub(parts - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Schema of the pebbles of `config` (the automaton is ignored).
///
/// Panics if the configuration has no pebbles.
pub fn schema_of(config: &Configuration) -> Schema {
    let pebbles = &config.positions()[1..];
    assert!(
        !pebbles.is_empty(),
        "schema of a configuration without pebbles"
    );
    Schema::new(pebbles.len(), pebbles.iter().copied())
}

fn check_count(pebbles: usize) -> Result<(), SchemaError> {
    if pebbles == 2 || pebbles == 3 {
        Ok(())
    } else {
        Err(SchemaError::UnsupportedCount(pebbles))
    }
}

fn raw(cells: &[(i64, i64)]) -> Vec<Vertex> {
    cells.iter().map(|&(x, y)| Vertex::new(x, y)).collect()
}

/// Labelled schemas in catalog order.
pub fn catalog(pebbles: usize) -> Result<Vec<(String, Schema)>, SchemaError> {
    check_count(pebbles)?;
    let shapes: Vec<Vec<(i64, i64)>> = if pebbles == 2 {
        vec![
            vec![(0, 0)],
            vec![(0, 1)],
            vec![(0, 0), (1, 0)],
            vec![(0, 1), (1, 1)],
            vec![(0, 0), (0, 1)],
        ]
    } else {
        vec![
            vec![(0, 0), (1, 0), (2, 0)],
            vec![(0, 1), (1, 1), (2, 1)],
            vec![(0, 0), (1, 0), (0, 1)],
            vec![(0, 1), (1, 1), (0, 0)],
            vec![(0, 1), (1, 1), (1, 0)],
            vec![(0, 0), (1, 0), (1, 1)],
            vec![(0, 0), (1, 0)],
            vec![(0, 1), (1, 1)],
            vec![(0, 0), (0, 1)],
            vec![(0, 0)],
            vec![(0, 1)],
        ]
    };
    Ok(shapes
        .iter()
        .enumerate()
        .map(|(i, s)| (format!("K{}", i + 1), Schema::new(pebbles, raw(s))))
        .collect())
}

pub fn label_of(schema: &Schema) -> Option<String> {
    catalog(schema.pebbles)
        .ok()?
        .into_iter()
        .find(|(_, s)| s == schema)
        .map(|(l, _)| l)
}

/// Look up a catalog schema by label.
pub fn by_label(pebbles: usize, label: &str) -> Option<Schema> {
    catalog(pebbles)
        .ok()?
        .into_iter()
        .find(|(l, _)| l == label)
        .map(|(_, s)| s)
}

/// All connected occupied-vertex sets with at most `pebbles` vertices, up
/// to x-translation. Grown cell by cell from a single vertex; the result is
/// sorted in catalog order.
pub fn enumerate_schemas(pebbles: usize) -> Result<Vec<Schema>, SchemaError> {
    check_count(pebbles)?;
    let mut found: BTreeSet<Schema> = BTreeSet::new();
    let mut layer: BTreeSet<Schema> = [
        Schema::new(pebbles, [Vertex::new(0, 0)]),
        Schema::new(pebbles, [Vertex::new(0, 1)]),
    ]
    .into();
    while !layer.is_empty() {
        let mut next = BTreeSet::new();
        for s in &layer {
            if s.cells.len() < pebbles {
                for c in &s.cells {
                    for n in c.neighbors() {
                        if !s.contains(n) {
                            next.insert(Schema::new(pebbles, s.cells.iter().copied().chain([n])));
                        }
                    }
                }
            }
        }
        found.extend(std::mem::take(&mut layer));
        layer = next.into_iter().filter(|s| !found.contains(s)).collect();
    }
    let order: BTreeMap<Schema, usize> = catalog(pebbles)?
        .into_iter()
        .enumerate()
        .map(|(i, (_, s))| (s, i))
        .collect();
    let mut out: Vec<Schema> = found.into_iter().filter(|s| s.is_connected()).collect();
    out.sort_by_key(|s| (order.get(s).copied().unwrap_or(usize::MAX), s.clone()));
    Ok(out)
}

/// True if some combination of the two reflections maps `a` onto `b`.
pub fn symmetry_indistinguishable(a: &Schema, b: &Schema) -> bool {
    a.pebbles == b.pebbles && Symmetry::reflections().iter().any(|s| a.mapped(*s) == *b)
}

/// Partition into symmetry classes, each sorted in input order, classes
/// ordered by their first member.
pub fn symmetry_classes(schemas: &[Schema]) -> Vec<Vec<Schema>> {
    let mut classes: Vec<Vec<Schema>> = Vec::new();
    for s in schemas {
        match classes
            .iter_mut()
            .find(|c| symmetry_indistinguishable(&c[0], s))
        {
            Some(c) => c.push(s.clone()),
            None => classes.push(vec![s.clone()]),
        }
    }
    classes
}

// ---------------------------------------------------------------------------
// Worst-case indistinguishability

pub const DEFAULT_WORST_CASE_DEPTH: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessStep {
    pub output: String,
    pub carry: Vec<usize>,
    /// Adversary choice in each of the two configurations.
    pub choices: [usize; 2],
}

/// Two configurations and a common run: the automaton makes the same
/// observation in both after every step, neither collective splits, and at
/// least one pebble gets carried.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    /// Configurations after each step, starting with the initial pair.
    pub configs: Vec<[Configuration; 2]>,
    pub steps: Vec<WitnessStep>,
    pub observations: Vec<ObservationSymbol>,
}

impl Witness {
    pub fn start(&self) -> &[Configuration; 2] {
        &self.configs[0]
    }

    /// Re-check observation equality, connectivity and adjacency of every
    /// move from the stored configurations.
    pub fn is_consistent(&self) -> bool {
        let ok_pair = |p: &[Configuration; 2]| {
            observe(&p[0], MemberId::AUTOMATON) == observe(&p[1], MemberId::AUTOMATON)
                && find_isolated(&p[0]).len() == 1
                && find_isolated(&p[1]).len() == 1
        };
        let moved_ok = |a: &Configuration, b: &Configuration| {
            let from = a.position(MemberId::AUTOMATON);
            let to = b.position(MemberId::AUTOMATON);
            from == to || from.is_neighbor(to)
        };
        self.configs.len() == self.steps.len() + 1
            && self.configs.iter().all(ok_pair)
            && self
                .configs
                .windows(2)
                .all(|w| moved_ok(&w[0][0], &w[1][0]) && moved_ok(&w[0][1], &w[1][1]))
            && self.steps.iter().any(|s| !s.carry.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WorstCase {
    Witness(Box<Witness>),
    /// The whole reachable pair space was searched without a witness.
    Distinct,
    /// The depth budget ran out with unexplored pairs left.
    DepthExhausted {
        depth: usize,
    },
}

impl WorstCase {
    pub fn witness(&self) -> Option<&Witness> {
        match self {
            WorstCase::Witness(w) => Some(w),
            _ => None,
        }
    }
}

fn with_automaton(pebbles: &[Vertex], on: usize) -> Configuration {
    let mut ps = vec![pebbles[on]];
    ps.extend_from_slice(pebbles);
    Configuration::new(ps)
}

fn candidate_outputs(pebble_count: usize) -> Vec<OutputSymbol> {
    let mut out = vec![OutputSymbol::MoveToFree];
    for bits in 1u32..(1 << pebble_count) {
        let set: MemberSet = (0..pebble_count)
            .filter(|i| bits & (1 << i) != 0)
            .map(|i| MemberId::new(i + 2))
            .collect();
        out.push(OutputSymbol::MoveToSet(set));
    }
    out
}

fn subsets(set: MemberSet) -> Vec<MemberSet> {
    let items: Vec<MemberId> = set.iter().collect();
    (0u32..(1 << items.len()))
        .map(|bits| {
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| bits & (1 << i) != 0)
                .map(|(_, id)| *id)
                .collect()
        })
        .collect()
}

fn moved(config: &Configuration, movers: MemberSet, to: Vertex) -> Configuration {
    let mut ps = config.positions().to_vec();
    for id in movers.iter() {
        ps[id.slot()] = to;
    }
    Configuration::new(ps)
}

fn output_text(y: OutputSymbol) -> String {
    match y {
        OutputSymbol::Stay => "stay".into(),
        OutputSymbol::MoveToFree => "free".into(),
        OutputSymbol::MoveToSet(s) => format!("{s:?}"),
    }
}

type PairKey = (Configuration, Configuration, bool);

struct PairNode {
    pair: [Configuration; 2],
    transferred: bool,
    parent: Option<(usize, WitnessStep)>,
}

fn search_pairs(starts: Vec<[Configuration; 2]>, depth: usize) -> WorstCase {
    let mut nodes: Vec<PairNode> = Vec::new();
    let mut seen: BTreeSet<PairKey> = BTreeSet::new();
    let mut frontier: Vec<usize> = Vec::new();
    for pair in starts {
        if observe(&pair[0], MemberId::AUTOMATON) != observe(&pair[1], MemberId::AUTOMATON) {
            continue;
        }
        if find_isolated(&pair[0]).len() != 1 || find_isolated(&pair[1]).len() != 1 {
            continue;
        }
        if seen.insert((pair[0].normalized().0, pair[1].normalized().0, false)) {
            frontier.push(nodes.len());
            nodes.push(PairNode {
                pair,
                transferred: false,
                parent: None,
            });
        }
    }
    let Some(first) = frontier.first() else {
        return WorstCase::Distinct;
    };
    let outputs = candidate_outputs(nodes[*first].pair[0].len() - 1);

    for _ in 0..depth {
        let mut next = Vec::new();
        for &ix in &frontier {
            let [a, b] = nodes[ix].pair.clone();
            let pa = a.position(MemberId::AUTOMATON);
            let pb = b.position(MemberId::AUTOMATON);
            let co = a.occupants(pa).without(MemberId::AUTOMATON);
            for &y in &outputs {
                let oa = resolve_output(y, pa, &a);
                let ob = resolve_output(y, pb, &b);
                if oa.is_empty() || ob.is_empty() {
                    continue;
                }
                for carry in subsets(co) {
                    let movers = carry.with(MemberId::AUTOMATON);
                    for (ia, va) in oa.iter().enumerate() {
                        for (ib, vb) in ob.iter().enumerate() {
                            let na = moved(&a, movers, *va);
                            let nb = moved(&b, movers, *vb);
                            if observe(&na, MemberId::AUTOMATON)
                                != observe(&nb, MemberId::AUTOMATON)
                                || find_isolated(&na).len() != 1
                                || find_isolated(&nb).len() != 1
                            {
                                continue;
                            }
                            let transferred = nodes[ix].transferred || !carry.is_empty();
                            let step = WitnessStep {
                                output: output_text(y),
                                carry: carry.iter().map(|m| m.index()).collect(),
                                choices: [ia, ib],
                            };
                            if !seen.insert((na.normalized().0, nb.normalized().0, transferred)) {
                                continue;
                            }
                            nodes.push(PairNode {
                                pair: [na, nb],
                                transferred,
                                parent: Some((ix, step)),
                            });
                            let new_ix = nodes.len() - 1;
                            if transferred {
                                return WorstCase::Witness(Box::new(rebuild(&nodes, new_ix)));
                            }
                            next.push(new_ix);
                        }
                    }
                }
            }
        }
        if next.is_empty() {
            return WorstCase::Distinct;
        }
        frontier = next;
    }
    WorstCase::DepthExhausted { depth }
}

fn rebuild(nodes: &[PairNode], mut ix: usize) -> Witness {
    let mut configs = vec![nodes[ix].pair.clone()];
    let mut steps = Vec::new();
    while let Some((parent, step)) = &nodes[ix].parent {
        steps.push(step.clone());
        ix = *parent;
        configs.push(nodes[ix].pair.clone());
    }
    configs.reverse();
    steps.reverse();
    let observations = configs
        .iter()
        .map(|p| observe(&p[0], MemberId::AUTOMATON))
        .collect();
    Witness {
        configs,
        steps,
        observations,
    }
}

/// Search for a common run between two concrete pebble placements (listed
/// in member order from member 2). The automaton starts on the same pebble
/// in both.
pub fn worst_case_between(
    a: &[Vertex],
    b: &[Vertex],
    depth: usize,
) -> Result<WorstCase, SchemaError> {
    if a.len() != b.len() {
        return Err(SchemaError::CountMismatch(a.len(), b.len()));
    }
    let starts = (0..a.len())
        .map(|p| [with_automaton(a, p), with_automaton(b, p)])
        .collect();
    Ok(search_pairs(starts, depth))
}

/// Search over every pair of interpretations of `a` and `b`.
pub fn worst_case_indistinguishable(
    a: &Schema,
    b: &Schema,
    depth: usize,
) -> Result<WorstCase, SchemaError> {
    if a.pebbles != b.pebbles {
        return Err(SchemaError::CountMismatch(a.pebbles, b.pebbles));
    }
    let mut starts = Vec::new();
    for ia in a.interpretations() {
        for ib in b.interpretations() {
            for p in 0..a.pebbles {
                starts.push([with_automaton(&ia, p), with_automaton(&ib, p)]);
            }
        }
    }
    Ok(search_pairs(starts, depth))
}

// ---------------------------------------------------------------------------
// Transfer graph

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransferKind {
    /// Onto a vertex that already holds a pebble (solid arrow).
    ToOccupied,
    /// Onto a free vertex (dashed arrow).
    ToFree,
}

impl fmt::Display for TransferKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransferKind::ToOccupied => "to-occupied",
            TransferKind::ToFree => "to-free",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SchemaEdge {
    pub from: usize,
    pub to: usize,
    pub kind: TransferKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaGraph {
    pub pebbles: usize,
    pub nodes: Vec<Schema>,
    pub edges: BTreeSet<SchemaEdge>,
}

/// Pebble counts per occupied vertex.
pub type Occupancy = BTreeMap<Vertex, usize>;

fn occupancy_schema(pebbles: usize, occ: &Occupancy) -> Schema {
    Schema::new(pebbles, occ.keys().copied())
}

/// Every single-pebble relocation from `occ` that keeps the occupied set
/// connected, with its kind.
pub fn elementary_transfers(occ: &Occupancy) -> Vec<(Occupancy, TransferKind)> {
    let mut out = Vec::new();
    for (&v, &count) in occ {
        for w in v.neighbors() {
            let kind = if occ.contains_key(&w) {
                TransferKind::ToOccupied
            } else {
                TransferKind::ToFree
            };
            let mut next = occ.clone();
            if count == 1 {
                next.remove(&v);
            } else {
                next.insert(v, count - 1);
            }
            *next.entry(w).or_insert(0) += 1;
            let cells: Vec<Vertex> = next.keys().copied().collect();
            if is_connected(&cells) {
                out.push((next, kind));
            }
        }
    }
    out
}

pub fn schema_occupancy(schema: &Schema, counts: &[usize]) -> Occupancy {
    schema
        .cells
        .iter()
        .copied()
        .zip(counts.iter().copied())
        .collect()
}

pub fn transfer_graph(pebbles: usize) -> Result<SchemaGraph, SchemaError> {
    let nodes = enumerate_schemas(pebbles)?;
    let index: HashMap<Schema, usize> = nodes
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let mut edges = BTreeSet::new();
    for (from, s) in nodes.iter().enumerate() {
        for counts in s.multiplicities() {
            for (next, kind) in elementary_transfers(&schema_occupancy(s, &counts)) {
                let to = index[&occupancy_schema(pebbles, &next)];
                edges.insert(SchemaEdge { from, to, kind });
            }
        }
    }
    Ok(SchemaGraph {
        pebbles,
        nodes,
        edges,
    })
}

impl SchemaGraph {
    pub fn index_of(&self, s: &Schema) -> Option<usize> {
        self.nodes.iter().position(|n| n == s)
    }

    pub fn has_edge(&self, from: &Schema, to: &Schema, kind: TransferKind) -> bool {
        match (self.index_of(from), self.index_of(to)) {
            (Some(from), Some(to)) => self.edges.contains(&SchemaEdge { from, to, kind }),
            _ => false,
        }
    }

    /// Schemas reachable from `from` by one transfer of `kind`.
    pub fn successors(&self, from: &Schema, kind: TransferKind) -> Vec<Schema> {
        let Some(i) = self.index_of(from) else {
            return Vec::new();
        };
        self.edges
            .iter()
            .filter(|e| e.from == i && e.kind == kind)
            .map(|e| self.nodes[e.to].clone())
            .collect()
    }

    fn node_name(&self, i: usize) -> String {
        label_of(&self.nodes[i]).unwrap_or_else(|| format!("S{i}"))
    }

    /// Graphviz text; solid edges for transfers onto occupied vertices and
    /// dashed edges for transfers onto free ones.
    pub fn to_dot(&self) -> String {
        let mut s = format!("digraph schemas_{} {{\n", self.pebbles);
        for (i, n) in self.nodes.iter().enumerate() {
            s += &format!(
                "  {} [label=\"{} {}\"];\n",
                self.node_name(i),
                self.node_name(i),
                n
            );
        }
        for e in &self.edges {
            let style = match e.kind {
                TransferKind::ToOccupied => "solid",
                TransferKind::ToFree => "dashed",
            };
            s += &format!(
                "  {} -> {} [style={style}];\n",
                self.node_name(e.from),
                self.node_name(e.to)
            );
        }
        s += "}\n";
        s
    }
}

/// A closed walk of elementary transfers returning every pebble count to
/// its starting vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfinementCycle {
    /// Graph node indices visited; first equals last.
    pub schemas: Vec<usize>,
    pub kinds: Vec<TransferKind>,
    /// Concrete occupancies; first equals last.
    pub occupancies: Vec<Occupancy>,
    /// Inclusive x-range touched by any pebble.
    pub window: (i64, i64),
}

impl ConfinementCycle {
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    /// Replay the occupancies and check each step is an edge of `graph`.
    pub fn replays_in(&self, graph: &SchemaGraph) -> bool {
        if self.occupancies.first() != self.occupancies.last()
            || self.occupancies.len() != self.kinds.len() + 1
        {
            return false;
        }
        self.occupancies
            .windows(2)
            .zip(&self.kinds)
            .zip(self.schemas.windows(2))
            .all(|((w, kind), s)| {
                let from = occupancy_schema(graph.pebbles, &w[0]);
                let to = occupancy_schema(graph.pebbles, &w[1]);
                elementary_transfers(&w[0])
                    .iter()
                    .any(|(o, k)| o == &w[1] && k == kind)
                    && graph.index_of(&from) == Some(s[0])
                    && graph.index_of(&to) == Some(s[1])
                    && graph.has_edge(&from, &to, *kind)
                    && w[1]
                        .keys()
                        .all(|v| v.x() >= self.window.0 && v.x() <= self.window.1)
            })
    }
}

const CYCLE_DEPTH: usize = 12;
const CYCLE_MARGIN: i64 = 2;

/// Shortest closed transfer walk using at least one transfer of each kind
/// and only edges present in `graph`. For three or more pebbles the walk
/// avoids the one-vertex schemas, which a moving collective cannot revisit.
pub fn find_confinement_cycle(graph: &SchemaGraph) -> Option<ConfinementCycle> {
    let index: HashMap<Schema, usize> = graph
        .nodes
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let allowed = |s: &Schema| graph.pebbles < 3 || s.cells.len() > 1;
    let mut best: Option<ConfinementCycle> = None;
    for start_schema in graph.nodes.iter().filter(|s| allowed(s)) {
        for counts in start_schema.multiplicities() {
            let start = schema_occupancy(start_schema, &counts);
            let lo = -CYCLE_MARGIN;
            let hi = start_schema.cells.iter().map(|v| v.x()).max().unwrap_or(0) + CYCLE_MARGIN;
            if let Some(c) = shortest_cycle(graph, &index, &start, (lo, hi), &allowed) {
                if best.as_ref().is_none_or(|b| c.len() < b.len()) {
                    best = Some(c);
                }
            }
        }
    }
    best
}

type CycleKey = (Occupancy, bool, bool);

fn shortest_cycle(
    graph: &SchemaGraph,
    index: &HashMap<Schema, usize>,
    start: &Occupancy,
    window: (i64, i64),
    allowed: &dyn Fn(&Schema) -> bool,
) -> Option<ConfinementCycle> {
    let mut parent: HashMap<CycleKey, (CycleKey, TransferKind)> = HashMap::new();
    let origin: CycleKey = (start.clone(), false, false);
    let goal: CycleKey = (start.clone(), true, true);
    let mut queue = VecDeque::from([(origin.clone(), 0usize)]);
    let mut seen = BTreeSet::from([origin.clone()]);
    while let Some((key, d)) = queue.pop_front() {
        if d == CYCLE_DEPTH {
            continue;
        }
        let from = index[&occupancy_schema(graph.pebbles, &key.0)];
        for (next, kind) in elementary_transfers(&key.0) {
            if next.keys().any(|v| v.x() < window.0 || v.x() > window.1) {
                continue;
            }
            let schema = occupancy_schema(graph.pebbles, &next);
            if !allowed(&schema) {
                continue;
            }
            let to = index[&schema];
            if !graph.edges.contains(&SchemaEdge { from, to, kind }) {
                continue;
            }
            let nk: CycleKey = (
                next,
                key.1 || kind == TransferKind::ToOccupied,
                key.2 || kind == TransferKind::ToFree,
            );
            if !seen.insert(nk.clone()) {
                continue;
            }
            parent.insert(nk.clone(), (key.clone(), kind));
            if nk == goal {
                return Some(unwind(graph, index, &parent, nk, &origin, window));
            }
            queue.push_back((nk, d + 1));
        }
    }
    None
}

fn unwind(
    graph: &SchemaGraph,
    index: &HashMap<Schema, usize>,
    parent: &HashMap<CycleKey, (CycleKey, TransferKind)>,
    mut key: CycleKey,
    origin: &CycleKey,
    window: (i64, i64),
) -> ConfinementCycle {
    let mut occupancies = vec![key.0.clone()];
    let mut kinds = Vec::new();
    while &key != origin {
        let (p, k) = parent[&key].clone();
        kinds.push(k);
        occupancies.push(p.0.clone());
        key = p;
    }
    occupancies.reverse();
    kinds.reverse();
    let schemas = occupancies
        .iter()
        .map(|o| index[&occupancy_schema(graph.pebbles, o)])
        .collect();
    let xs = occupancies.iter().flat_map(|o| o.keys().map(|v| v.x()));
    let touched = (xs.clone().min().unwrap_or(0), xs.max().unwrap_or(0));
    debug_assert!(touched.0 >= window.0 && touched.1 <= window.1);
    ConfinementCycle {
        schemas,
        kinds,
        occupancies,
        window: touched,
    }
}
