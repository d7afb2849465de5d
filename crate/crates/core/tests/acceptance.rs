//! Acceptance suite. One PASS/FAIL line per criterion; the process exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p pebblewalk --test acceptance`.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use num_rational::Rational64;
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};

use pebblewalk::adversary::{
    defeat_strategy, search_lasso, DefeatOutcome, FirstOption, LassoSearch, Oscillator,
    SearchConfig, SeededRandom,
};
use pebblewalk::builtins::{builtin, BUILTIN_NAMES};
use pebblewalk::cli::run_cli;
use pebblewalk::cli::strategy_file::{emit_strategy, parse_strategy};
use pebblewalk::collective::{
    diameter, prepare_step, run, CollectiveState, Configuration, RationalPoint,
};
use pebblewalk::lattice::{Symmetry, Vertex};
use pebblewalk::machine::{
    observe, resolve_output, validate_pebbles, AutomatonDef, CollectiveDef, MemberDef, MemberId,
    MemberSet, ObservationPattern, ObservationSymbol, OutputSymbol, PebbleViolation, Rule, StateId,
};
use pebblewalk::program::Strategy;
use pebblewalk::schemas::{
    by_label, enumerate_schemas, find_confinement_cycle, label_of, symmetry_classes,
    transfer_graph, worst_case_indistinguishable, Schema, TransferKind, DEFAULT_WORST_CASE_DEPTH,
};
use pebblewalk::walker14::{build_walker, iterate, verify_from, RoleAssignment};

// Pinned limits.
const ITERATIONS: usize = 100;
const SEEDS: [u64; 3] = [1, 42, 2024];
const C1: i64 = 2;
const C2: usize = 22;
const WALK_BUDGET: Duration = Duration::from_secs(1);
const SCHEMA_BUDGET: Duration = Duration::from_secs(1);
const DEFEAT_BUDGET: Duration = Duration::from_secs(30);
const DEFEAT_DEPTH: usize = 200;
const NEGATIVE_DEPTH: usize = 200;
const COMPASSLESS_CASES: u32 = 1000;
const PROPERTY_CASES: u32 = 64;

struct Criterion {
    name: &'static str,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Criterion {
            name,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    fn report(&self) -> bool {
        let ok = self.failures.is_empty();
        let detail = if ok {
            self.notes.join("; ")
        } else {
            self.failures.join("; ")
        };
        println!("{} {}: {}", if ok { "PASS" } else { "FAIL" }, self.name, detail);
        ok
    }
}

fn walker() -> Strategy {
    build_walker(RoleAssignment::default()).unwrap()
}

fn v(x: i64, y: i64) -> Vertex {
    Vertex::new(x, y)
}

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["pebblewalk"];
    full.extend_from_slice(args);
    let code = run_cli(full, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn directed_walk() -> Criterion {
    let mut c = Criterion::new("walker14 directed movement");
    let w = walker();
    let started = Instant::now();
    let mut adversaries: Vec<(String, Box<dyn pebblewalk::adversary::Adversary>)> = vec![
        ("first".into(), Box::new(FirstOption)),
        ("oscillator".into(), Box::new(Oscillator::default())),
    ];
    for s in SEEDS {
        adversaries.push((format!("seeded:{s}"), Box::new(SeededRandom::new(s))));
    }
    for (name, mut adv) in adversaries {
        let report = verify_from(&w, &w.initial_state(), ITERATIONS, adv.as_mut());
        c.check(
            report.iterations.len() == ITERATIONS,
            format!("{name}: {} iterations completed", report.iterations.len()),
        );
        c.check(
            report.max_diameter <= C1,
            format!("{name}: diameter {}", report.max_diameter),
        );
        let lengths: BTreeSet<usize> = report.iterations.iter().map(|i| i.steps).collect();
        c.check(
            lengths.iter().all(|l| *l == 9 || *l == 11),
            format!("{name}: iteration lengths {lengths:?}"),
        );
        c.check(
            report
                .iterations
                .iter()
                .all(|i| i.displacement == RationalPoint::from_ints(1, 0)),
            format!("{name}: displacement other than (1,0)"),
        );
        match &report.directed {
            Some(v) if v.holds() => {}
            Some(v) => c.check(false, format!("{name}: c1={C1} c2={C2} {v}")),
            None => c.check(false, format!("{name}: no verdict")),
        }
        c.note(format!("{name} lengths {lengths:?}"));
    }
    let elapsed = started.elapsed();
    c.check(
        elapsed < WALK_BUDGET,
        format!("took {elapsed:?}, budget {WALK_BUDGET:?}"),
    );

    // The same claim through the command line.
    let dir = tempfile::tempdir().unwrap();
    for adv in ["first", "oscillator", "seeded:42"] {
        let path = dir.path().join(format!("{}.jsonl", adv.replace(':', "-")));
        let p = path.to_str().unwrap();
        let horizon = (ITERATIONS * 11).to_string();
        let (code, _, err) = cli(&["simulate", "walker14", "--adversary", adv, "--horizon", &horizon, "-o", p]);
        c.check(code == 0, format!("simulate {adv} exited {code}: {err}"));
        let (code, out, _) = cli(&["check", p, "--c1", "2", "--c2", "22"]);
        c.check(code == 0, format!("check on {adv} trace exited {code}: {}", out.trim()));
    }
    c
}

fn coordinate_anchors() -> Criterion {
    let mut c = Criterion::new("coordinate anchors");
    let w = walker();
    for shift in -3..=3 {
        let config = w.initial.mapped(Symmetry::translation(shift));
        // i is the column of the middle lower vertex of the layout.
        let i = config.position(w.def.id_by_name("C").unwrap()).x();
        let start = CollectiveState::initial(&w.def, config);
        // Independent mean over all five members.
        let sum_x: i64 = start.config.positions().iter().map(|p| p.x()).sum();
        let sum_y: i64 = start.config.positions().iter().map(|p| p.y()).sum();
        let mean = RationalPoint::new(r(sum_x, 5), r(sum_y, 5));
        let expected = RationalPoint::new(Rational64::from_integer(i) - r(1, 5), r(1, 5));
        c.check(start.coordinate() == expected, format!("i={i}: start {}", start.coordinate()));
        c.check(mean == expected, format!("i={i}: recomputed {mean}"));

        let mut state = start.clone();
        let mut adv = SeededRandom::new((shift + 10) as u64);
        for k in 1..=12i64 {
            let (next, _) = iterate(&w, &state, &mut adv).unwrap();
            let want = RationalPoint::new(
                Rational64::from_integer(i + k) - r(1, 5),
                r(1, 5),
            );
            c.check(next.coordinate() == want, format!("i={i} k={k}: {}", next.coordinate()));
            state = next;
        }
    }
    c.note("start (i-1/5, 1/5), +(1,0) per iteration over 7 anchors x 12 iterations");
    c
}

/// Every connected set of at most `pebbles` cells that some placement of
/// the pebbles in a 5x2 window occupies, shifted so its least column is 0.
fn brute_force_schemas(pebbles: usize) -> BTreeSet<Vec<(i64, i64)>> {
    let cells: Vec<(i64, i64)> = (0..5).flat_map(|x| [(x, 0), (x, 1)]).collect();
    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; pebbles];
    loop {
        let occupied: BTreeSet<(i64, i64)> = idx.iter().map(|i| cells[*i]).collect();
        if connected(&occupied) {
            let min = occupied.iter().map(|c| c.0).min().unwrap();
            out.insert(occupied.iter().map(|&(x, y)| (x - min, y)).collect());
        }
        let mut k = 0;
        loop {
            if k == pebbles {
                return out;
            }
            idx[k] += 1;
            if idx[k] < cells.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn connected(cells: &BTreeSet<(i64, i64)>) -> bool {
    let start = *cells.iter().next().unwrap();
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some((x, y)) = stack.pop() {
        for n in [(x - 1, y), (x + 1, y), (x, 1 - y)] {
            if cells.contains(&n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen.len() == cells.len()
}

fn schema_cells(s: &Schema) -> Vec<(i64, i64)> {
    let set: BTreeSet<(i64, i64)> = s.cells().iter().map(|c| (c.x(), c.y())).collect();
    set.into_iter().collect()
}

fn schema_counts() -> Criterion {
    let mut c = Criterion::new("schema counts");
    let started = Instant::now();
    for (pebbles, want) in [(2usize, 5usize), (3, 11)] {
        let found = enumerate_schemas(pebbles).unwrap();
        c.check(found.len() == want, format!("{pebbles} pebbles: {} schemas", found.len()));
        let ours: BTreeSet<Vec<(i64, i64)>> = found.iter().map(schema_cells).collect();
        let oracle = brute_force_schemas(pebbles);
        c.check(ours == oracle, format!("{pebbles} pebbles: brute force gives {}", oracle.len()));
        c.note(format!("{pebbles} pebbles: {} (brute force {})", found.len(), oracle.len()));
    }
    let elapsed = started.elapsed();
    c.check(elapsed < SCHEMA_BUDGET, format!("took {elapsed:?}"));
    c
}

fn labels(class: &[Schema]) -> Vec<String> {
    class.iter().map(|s| label_of(s).unwrap()).collect()
}

fn indistinguishability() -> Criterion {
    let mut c = Criterion::new("indistinguishability classes");
    let schemas = enumerate_schemas(3).unwrap();
    let classes = symmetry_classes(&schemas);
    let got: Vec<Vec<String>> = classes.iter().map(|cl| labels(cl)).collect();
    let want: Vec<Vec<&str>> = vec![
        vec!["K1", "K2"],
        vec!["K3", "K4", "K5", "K6"],
        vec!["K7", "K8"],
        vec!["K9"],
        vec!["K10", "K11"],
    ];
    c.check(got == want, format!("classes {got:?}"));
    let sizes: Vec<usize> = classes.iter().map(Vec::len).collect();
    c.check(sizes == [2, 4, 2, 1, 2], format!("sizes {sizes:?}"));

    let k = |l: &str| by_label(3, l).unwrap();
    for (a, b) in [("K1", "K3"), ("K7", "K9")] {
        match worst_case_indistinguishable(&k(a), &k(b), DEFAULT_WORST_CASE_DEPTH) {
            Ok(outcome) => match outcome.witness() {
                Some(w) => {
                    c.check(w.is_consistent(), format!("{a}/{b}: inconsistent witness"));
                    c.note(format!("{a}/{b} witness in {} steps", w.steps.len()));
                }
                None => c.check(false, format!("{a}/{b}: {outcome:?}")),
            },
            Err(e) => c.check(false, format!("{a}/{b}: {e}")),
        }
    }
    c.note(format!("class sizes {sizes:?}"));
    c
}

fn transfer_graph_edges() -> Criterion {
    let mut c = Criterion::new("transfer graph");
    let g = transfer_graph(3).unwrap();
    let k = |l: &str| by_label(3, l).unwrap();
    c.check(
        g.has_edge(&k("K1"), &k("K7"), TransferKind::ToOccupied)
            || g.has_edge(&k("K1"), &k("K8"), TransferKind::ToOccupied),
        "K1 -> K7 class",
    );
    c.check(
        g.has_edge(&k("K3"), &k("K7"), TransferKind::ToOccupied)
            || g.has_edge(&k("K3"), &k("K8"), TransferKind::ToOccupied),
        "K3 -> K7 class",
    );
    c.check(g.has_edge(&k("K3"), &k("K9"), TransferKind::ToOccupied), "K3 -> K9");
    for (from, targets) in [("K7", &["K3", "K6", "K1"][..]), ("K9", &["K3", "K4", "K5", "K6"][..])] {
        let succ: BTreeSet<String> = g
            .successors(&k(from), TransferKind::ToFree)
            .iter()
            .map(|s| label_of(s).unwrap())
            .collect();
        for t in targets {
            c.check(succ.contains(*t), format!("{from} to-free -> {t} missing (have {succ:?})"));
        }
    }
    match find_confinement_cycle(&g) {
        Some(cycle) if !cycle.is_empty() => {
            c.check(cycle.replays_in(&g), "cycle does not replay in the graph");
            let names: Vec<String> = cycle.schemas.iter().map(|i| label_of(&g.nodes[*i]).unwrap()).collect();
            c.note(format!("cycle {}", names.join(" -> ")));
        }
        other => c.check(false, format!("no confinement cycle: {other:?}")),
    }
    c.note(format!("{} edges", g.edges.len()));
    c
}

fn defeats() -> Criterion {
    let mut c = Criterion::new("baseline defeats");
    let started = Instant::now();
    for (name, pebbles) in [
        ("baseline-10", 0),
        ("baseline-11", 1),
        ("baseline-12", 2),
        ("baseline-13-caterpillar", 3),
    ] {
        let s = builtin(name).unwrap();
        c.check(s.def.pebble_count() == pebbles, format!("{name}: {} pebbles", s.def.pebble_count()));
        let initial = s.initial_state();
        match defeat_strategy(&s.def, &initial, &SearchConfig::new(DEFEAT_DEPTH)) {
            Ok(DefeatOutcome::Certified { certificate, .. }) => {
                c.check(certificate.net_displacement.is_zero(), format!("{name}: displaced"));
                c.check(
                    certificate.prefix_steps + certificate.cycle_steps <= DEFEAT_DEPTH,
                    format!("{name}: lasso longer than {DEFEAT_DEPTH}"),
                );
                c.check(
                    certificate.replay(&s.def, &initial).is_ok(),
                    format!("{name}: replay failed"),
                );
                c.note(format!(
                    "{name} prefix {} cycle {}",
                    certificate.prefix_steps, certificate.cycle_steps
                ));
            }
            other => c.check(false, format!("{name}: {other:?}")),
        }
    }
    let (code, out, _) = cli(&["defeat", "baseline-13-caterpillar", "--json"]);
    c.check(code == 0 && out.contains("\"cycle\""), format!("cli defeat exited {code}"));
    let elapsed = started.elapsed();
    c.check(elapsed < DEFEAT_BUDGET, format!("took {elapsed:?}"));
    c
}

fn negative_control() -> Criterion {
    let mut c = Criterion::new("walker14 negative control");
    let w = walker();
    let started = Instant::now();
    match search_lasso(&w.def, &w.initial_state(), &SearchConfig::new(NEGATIVE_DEPTH)) {
        LassoSearch::Found(cert) => c.check(false, format!("found lasso {:?}", cert.cycle)),
        LassoSearch::NotFound { explored } => c.note(format!("exhausted after {explored} states")),
        LassoSearch::DepthExhausted { explored, .. } => {
            c.note(format!("none within depth {NEGATIVE_DEPTH} ({explored} states)"))
        }
    }
    c.note(format!("{:?}", started.elapsed()));
    c
}

fn arb_config(max_members: usize) -> impl Strategy2<Value = Configuration> {
    prop::collection::vec((-4i64..=4, 0i64..=1), 1..=max_members)
        .prop_map(|ps| Configuration::new(ps.into_iter().map(|(x, y)| v(x, y)).collect()))
}

// Alias so the proptest strategy trait does not clash with the collective
// strategy type.
use proptest::strategy::Strategy as Strategy2;

fn arb_symmetry() -> impl Strategy2<Value = Symmetry> {
    (any::<bool>(), -5i64..=5, any::<bool>()).prop_map(|(fx, k, fy)| {
        let mut s = Symmetry::translation(k);
        if fx {
            s = s.then(Symmetry::x_reflection());
        }
        if fy {
            s = s.then(Symmetry::y_reflection());
        }
        s
    })
}

fn run_prop<S: Strategy2>(
    c: &mut Criterion,
    label: &str,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) {
    let mut runner = TestRunner::new(PropConfig {
        cases,
        failure_persistence: None,
        ..PropConfig::default()
    });
    match runner.run(&strategy, test) {
        Ok(()) => c.note(format!("{label} ({cases} cases)")),
        Err(e) => c.check(false, format!("{label}: {e}")),
    }
}

fn property_suites() -> Criterion {
    let mut c = Criterion::new("property suites");

    run_prop(&mut c, "compasslessness", COMPASSLESS_CASES, (arb_config(5), arb_symmetry()), |(config, g)| {
        let mapped = config.mapped(g);
        for i in 0..config.len() {
            let id = MemberId::from_slot(i);
            prop_assert_eq!(observe(&config, id), observe(&mapped, id));
        }
        for gen in Symmetry::generators() {
            let m = config.mapped(gen);
            for i in 0..config.len() {
                let id = MemberId::from_slot(i);
                prop_assert_eq!(observe(&config, id), observe(&m, id));
            }
        }
        Ok(())
    });

    let names = prop::sample::select(BUILTIN_NAMES.to_vec());
    run_prop(&mut c, "trace consistency", PROPERTY_CASES, (names.clone(), any::<u64>()), |(name, seed)| {
        let s = builtin(name).unwrap();
        let trace = run(&s.def, &s.initial_state(), &mut SeededRandom::new(seed), 80).unwrap();
        for pair in trace.records.windows(2) {
            let (prev, cur) = (&pair[0], &pair[1]);
            for (slot, m) in s.def.members().iter().enumerate() {
                let id = MemberId::from_slot(slot);
                prop_assert_eq!(&prev.observations[slot], &observe(&prev.config, id));
                let (q, y) = m.machine.apply(prev.states[slot], &prev.observations[slot]);
                prop_assert_eq!(q, cur.states[slot]);
                prop_assert_eq!(y, cur.outputs[slot]);
            }
            let at = prev.config.position(MemberId::AUTOMATON);
            let options = resolve_output(cur.outputs[0], at, &prev.config);
            let target = cur.config.position(MemberId::AUTOMATON);
            prop_assert!(options.contains(&target));
            prop_assert_eq!(cur.choice.is_some(), options.len() > 1);
            for slot in 1..s.def.len() {
                let id = MemberId::from_slot(slot);
                let carried = cur.outputs[slot].is_move() && cur.outputs[0].is_move();
                let want = if carried { target } else { prev.config.position(id) };
                prop_assert_eq!(cur.config.position(id), want);
            }
            prop_assert!(diameter(&cur.config) >= 0);
        }
        Ok(())
    });

    run_prop(
        &mut c,
        "symmetry-equivariant runs",
        PROPERTY_CASES,
        (names.clone(), any::<u64>(), arb_symmetry()),
        |(name, seed, g)| {
            let s = builtin(name).unwrap();
            let trace = run(&s.def, &s.initial_state(), &mut SeededRandom::new(seed), 60).unwrap();
            let mut image = CollectiveState::initial(&s.def, s.initial.mapped(g));
            for rec in &trace.records[1..] {
                let pending = prepare_step(&s.def, &image).unwrap();
                let want = g.apply(rec.config.position(MemberId::AUTOMATON));
                let idx = pending.options().iter().position(|o| *o == want);
                prop_assert!(idx.is_some(), "mapped target not offered");
                let (next, mapped_rec) = pending.commit(idx.unwrap());
                prop_assert_eq!(&mapped_rec.config, &rec.config.mapped(g));
                prop_assert_eq!(&mapped_rec.states, &rec.states);
                prop_assert_eq!(&mapped_rec.outputs, &rec.outputs);
                image = next;
            }
            Ok(())
        },
    );

    let w = walker();
    c.check(validate_pebbles(&w.def).is_empty(), "walker14 pebbles rejected");
    let (two_state, lonely) = canonical_violators();
    c.check(
        matches!(validate_pebbles(&two_state).as_slice(), [PebbleViolation::StateCount { .. }]),
        "two-state pebble accepted",
    );
    c.check(
        matches!(
            validate_pebbles(&lonely).as_slice(),
            [PebbleViolation::MovesWithoutAutomaton { .. }]
        ),
        "pebble moving alone accepted",
    );
    c.note("pebble validator");

    for name in BUILTIN_NAMES {
        let s = builtin(name).unwrap();
        let text = emit_strategy(&s);
        match parse_strategy(&text) {
            Ok(back) => {
                c.check(emit_strategy(&back) == text, format!("{name}: emission differs"));
                for seed in [3u64, 11] {
                    let a = run(&s.def, &s.initial_state(), &mut SeededRandom::new(seed), 120).unwrap();
                    let b = run(&back.def, &back.initial_state(), &mut SeededRandom::new(seed), 120).unwrap();
                    c.check(a == b, format!("{name}: round-tripped trace differs"));
                }
            }
            Err(e) => c.check(false, format!("{name}: {e}")),
        }
    }
    c.note("strategy file round trip");

    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("t{i}.jsonl"))).collect();
    for p in &paths {
        let (code, _, err) = cli(&[
            "simulate",
            "walker14",
            "--adversary",
            "seeded:9",
            "--horizon",
            "400",
            "-o",
            p.to_str().unwrap(),
        ]);
        c.check(code == 0, format!("simulate exited {code}: {err}"));
    }
    let read = |p: &Path| std::fs::read(p).unwrap_or_default();
    c.check(
        !read(&paths[0]).is_empty() && read(&paths[0]) == read(&paths[1]),
        "seeded traces differ",
    );
    c.note("byte-identical seeded traces");
    c
}

fn canonical_violators() -> (CollectiveDef, CollectiveDef) {
    let automaton = || AutomatonDef::new(vec!["s".into()], StateId(0), vec![]).unwrap();
    let pair = |pebble: AutomatonDef| {
        CollectiveDef::new(vec![
            MemberDef {
                name: "A".into(),
                machine: automaton(),
            },
            MemberDef {
                name: "P".into(),
                machine: pebble,
            },
        ])
        .unwrap()
    };
    let two_state = AutomatonDef::new(vec!["q0".into(), "q1".into()], StateId(0), vec![]).unwrap();
    let alone = ObservationSymbol::new(
        MemberSet::EMPTY,
        [MemberSet::single(MemberId::AUTOMATON), MemberSet::EMPTY, MemberSet::EMPTY],
    );
    let mover = AutomatonDef::new(
        vec!["q0".into()],
        StateId(0),
        vec![Rule {
            state: StateId(0),
            pattern: ObservationPattern::exact(&alone),
            next: StateId(0),
            output: OutputSymbol::MoveToFree,
        }],
    )
    .unwrap();
    (pair(two_state), pair(mover))
}

fn main() {
    // Accept and ignore libtest flags such as --nocapture or a filter.
    let criteria = [
        directed_walk as fn() -> Criterion,
        coordinate_anchors,
        schema_counts,
        indistinguishability,
        transfer_graph_edges,
        defeats,
        negative_control,
        property_suites,
    ];
    let mut failed = 0;
    for f in criteria {
        if !f().report() {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
