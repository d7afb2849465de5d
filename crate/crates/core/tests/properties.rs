use std::collections::BTreeSet;

use proptest::prelude::*;

use pebblewalk::adversary::{ScriptedChoices, SeededRandom};
use pebblewalk::builtins::{builtin, BUILTIN_NAMES};
use pebblewalk::cli::strategy_file::{emit_strategy, parse_strategy, strategy_hash};
use pebblewalk::cli::trace_doc::{TraceDocument, TraceHeader};
use pebblewalk::collective::{
    check_directed, check_directed_with, check_uniform, coordinate, diameter, run, Configuration,
    DisplacementRule, Trace, TraceRecord, Verdict,
};
use pebblewalk::lattice::Vertex;
use pebblewalk::machine::{MemberId, OutputSymbol, StateId};
use pebblewalk::schemas::{enumerate_schemas, label_of, schema_of};
use pebblewalk::walker14::{build_walker, verify_walk, RoleAssignment};

fn arb_builtin() -> impl Strategy<Value = &'static str> {
    prop::sample::select(BUILTIN_NAMES.to_vec())
}

/// A trace whose only meaningful content is positions.
fn positions_trace(configs: Vec<Vec<(i64, i64)>>) -> Trace {
    Trace {
        records: configs
            .into_iter()
            .enumerate()
            .map(|(t, ps)| {
                let n = ps.len();
                TraceRecord {
                    step: t as u64,
                    config: Configuration::new(ps.into_iter().map(|(x, y)| Vertex::new(x, y)).collect()),
                    states: vec![StateId(0); n],
                    observations: Vec::new(),
                    outputs: vec![OutputSymbol::Stay; n],
                    choice: None,
                }
            })
            .collect(),
    }
}

/// Random walks of `members` members, each moving by at most one edge per
/// step, with small jitter so that both equal and unequal displacements
/// show up.
fn arb_walk(members: usize, len: usize) -> impl Strategy<Value = Vec<Vec<(i64, i64)>>> {
    prop::collection::vec(prop::collection::vec(0u8..4, members), len).prop_map(move |moves| {
        let mut cur: Vec<(i64, i64)> = (0..members).map(|i| (i as i64, 0)).collect();
        let mut out = vec![cur.clone()];
        for step in moves {
            for (p, m) in cur.iter_mut().zip(step) {
                match m {
                    0 => {}
                    1 => p.0 += 1,
                    2 => p.0 -= 1,
                    _ => p.1 = 1 - p.1,
                }
            }
            out.push(cur.clone());
        }
        out
    })
}

/// Directedness judged on integer position sums: equal mean displacements
/// are equal sum displacements because the member count is fixed.
fn oracle_directed(configs: &[Vec<(i64, i64)>], c1: i64, c2: usize, progress: bool) -> Option<usize> {
    for (t, ps) in configs.iter().enumerate() {
        let xs: Vec<i64> = ps.iter().map(|p| p.0).collect();
        let ys: Vec<i64> = ps.iter().map(|p| p.1).collect();
        let spread = |v: &[i64]| v.iter().max().unwrap() - v.iter().min().unwrap();
        if spread(&xs).max(spread(&ys)) > c1 {
            return Some(t);
        }
    }
    let sums: Vec<(i64, i64)> = configs
        .iter()
        .map(|ps| ps.iter().fold((0, 0), |a, p| (a.0 + p.0, a.1 + p.1)))
        .collect();
    if c2 == 0 {
        return None;
    }
    let judged = sums.len().saturating_sub(2 * c2);
    for t in 0..judged {
        let mut ok = false;
        for a in 1..=c2 {
            for b in 1..=c2 {
                let d1 = (sums[t + a].0 - sums[t].0, sums[t + a].1 - sums[t].1);
                let d2 = (sums[t + a + b].0 - sums[t + a].0, sums[t + a + b].1 - sums[t + a].1);
                if d1 == d2 && (!progress || d1 != (0, 0)) {
                    ok = true;
                }
            }
        }
        if !ok {
            return Some(t);
        }
    }
    None
}

fn violated_at(v: &Verdict) -> Option<usize> {
    match v {
        Verdict::HoldsOnPrefix { .. } => None,
        Verdict::Violated { at, .. } => Some(*at),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn directed_check_matches_oracle(
        walk in (1usize..=3).prop_flat_map(|m| arb_walk(m, 30)),
        c1 in 0i64..=4,
        c2 in 0usize..=6,
        progress in any::<bool>(),
    ) {
        let trace = positions_trace(walk.clone());
        let rule = if progress { DisplacementRule::Progress } else { DisplacementRule::Literal };
        let got = violated_at(&check_directed_with(&trace, c1, c2, rule));
        prop_assert_eq!(got, oracle_directed(&walk, c1, c2, progress));
    }

    #[test]
    fn uniform_implies_directed(walk in arb_walk(2, 30), c2 in 1usize..=5) {
        let trace = positions_trace(walk);
        if check_uniform(&trace, c2).holds() {
            prop_assert!(check_directed(&trace, i64::MAX, c2).holds());
        }
    }

    #[test]
    fn single_move_locality(name in arb_builtin(), seed in any::<u64>()) {
        let s = builtin(name).unwrap();
        let trace = run(&s.def, &s.initial_state(), &mut SeededRandom::new(seed), 100).unwrap();
        for pair in trace.records.windows(2) {
            let (a, b) = (&pair[0].config, &pair[1].config);
            let target = b.position(MemberId::AUTOMATON);
            for slot in 0..a.len() {
                let id = MemberId::from_slot(slot);
                let (p, q) = (a.position(id), b.position(id));
                prop_assert!(p == q || p.is_neighbor(q));
                if p != q {
                    prop_assert_eq!(q, target);
                    prop_assert_eq!(p, a.position(MemberId::AUTOMATON));
                }
            }
        }
    }

    #[test]
    fn displacement_is_additive(walk in arb_walk(3, 20), i in 0usize..=20, j in 0usize..=20, k in 0usize..=20) {
        let trace = positions_trace(walk);
        let v = trace.coordinates();
        prop_assert_eq!(v[k] - v[i], (v[k] - v[j]) + (v[j] - v[i]));
    }

    #[test]
    fn trace_document_round_trips(name in arb_builtin(), seed in any::<u64>(), horizon in 0usize..80) {
        let s = builtin(name).unwrap();
        let trace = run(&s.def, &s.initial_state(), &mut SeededRandom::new(seed), horizon).unwrap();
        let header = TraceHeader::for_strategy(&s, strategy_hash(&s), format!("seeded:{seed}"), Some(seed), horizon);
        let doc = TraceDocument { header, trace };
        let text = doc.to_jsonl();
        let back = TraceDocument::from_jsonl(&text).unwrap();
        prop_assert_eq!(&back.trace, &doc.trace);
        prop_assert_eq!(back.to_jsonl(), text);
    }

    #[test]
    fn replaying_recorded_choices_reproduces_trace(name in arb_builtin(), seed in any::<u64>()) {
        let s = builtin(name).unwrap();
        let a = run(&s.def, &s.initial_state(), &mut SeededRandom::new(seed), 120).unwrap();
        let b = run(&s.def, &s.initial_state(), &mut ScriptedChoices::new(a.choices()), 120).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn permuted_walker_roles_still_walk(perm in Just(vec![2usize, 3, 4, 5]).prop_shuffle(), seed in any::<u64>()) {
        let roles = RoleAssignment {
            b: MemberId::new(perm[0]),
            c: MemberId::new(perm[1]),
            d: MemberId::new(perm[2]),
            h: MemberId::new(perm[3]),
        };
        let w = build_walker(roles).unwrap();
        let back = parse_strategy(&emit_strategy(&w)).unwrap();
        prop_assert_eq!(emit_strategy(&back), emit_strategy(&w));
        let report = verify_walk(&w, 20, &mut SeededRandom::new(seed));
        prop_assert_eq!(report.iterations.len(), 20);
        prop_assert!(report.max_diameter <= 2);
        prop_assert!(report.iterations.iter().all(|i| i.steps == 9 || i.steps == 11));
    }

    #[test]
    fn schema_of_connected_placement_is_catalogued(
        ps in prop::collection::vec((-6i64..=6, 0i64..=1), 2..=3),
        ax in -6i64..=6,
    ) {
        let mut all = vec![Vertex::new(ax, 0)];
        all.extend(ps.iter().map(|&(x, y)| Vertex::new(x, y)));
        let config = Configuration::new(all);
        let schema = schema_of(&config);
        let catalogued = enumerate_schemas(ps.len()).unwrap().contains(&schema);
        prop_assert_eq!(catalogued, schema.is_connected());
        prop_assert_eq!(label_of(&schema).is_some(), schema.is_connected());
    }
}

#[test]
fn coordinate_denominator_is_member_count() {
    let c = Configuration::new(vec![Vertex::new(0, 0), Vertex::new(0, 0), Vertex::new(1, 1)]);
    let v = coordinate(&c);
    assert_eq!((*v.x.numer(), *v.x.denom()), (1, 3));
    assert_eq!((*v.y.numer(), *v.y.denom()), (1, 3));
    assert_eq!(diameter(&c), 1);
}

#[test]
fn catalog_covers_every_small_window_placement() {
    for pebbles in [2usize, 3] {
        let cells: Vec<Vertex> = (0..4).flat_map(|x| [Vertex::new(x, 0), Vertex::new(x, 1)]).collect();
        let mut seen = BTreeSet::new();
        let mut idx = vec![0usize; pebbles];
        'outer: loop {
            let mut positions = vec![Vertex::new(0, 0)];
            positions.extend(idx.iter().map(|i| cells[*i]));
            let s = schema_of(&Configuration::new(positions));
            if s.is_connected() {
                seen.insert(label_of(&s).expect("connected schema has a label"));
            }
            for i in idx.iter_mut() {
                *i += 1;
                if *i < cells.len() {
                    continue 'outer;
                }
                *i = 0;
            }
            break;
        }
        assert_eq!(seen.len(), if pebbles == 2 { 5 } else { 11 });
    }
}
