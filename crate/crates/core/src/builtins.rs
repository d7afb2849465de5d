//! Named strategies shipped with the tool.

use crate::lattice::Vertex;
use crate::program::{mv, RoleProgram, Strategy, Target};
use crate::walker14::{build_walker, RoleAssignment};

pub const BUILTIN_NAMES: [&str; 6] = [
    "walker14",
    "baseline-10",
    "baseline-11",
    "baseline-12",
    "baseline-13-caterpillar",
    "idle",
];

fn v(x: i64, y: i64) -> Vertex {
    Vertex::new(x, y)
}

fn compile(p: RoleProgram) -> Strategy {
    p.compile().expect("builtin program compiles")
}

/// The automaton alone, always stepping to a free neighbour.
pub fn baseline_10() -> Strategy {
    compile(RoleProgram {
        name: "baseline-10".into(),
        roles: vec![],
        lines: vec![mv(1, &[], Target::Free, 1)],
        entry: 1,
        automaton_at: v(0, 0),
        pebbles_at: vec![],
    })
}

/// Automaton and one pebble travelling together.
pub fn baseline_11() -> Strategy {
    compile(RoleProgram {
        name: "baseline-11".into(),
        roles: vec!['P'],
        lines: vec![mv(1, &['P'], Target::Free, 1)],
        entry: 1,
        automaton_at: v(0, 0),
        pebbles_at: vec![v(0, 0)],
    })
}

/// Join the second pebble, then move the stack.
pub fn baseline_12() -> Strategy {
    compile(RoleProgram {
        name: "baseline-12".into(),
        roles: vec!['B', 'C'],
        lines: vec![
            mv(1, &['B'], Target::Role('C'), 2),
            mv(2, &['B', 'C'], Target::Free, 2),
        ],
        entry: 1,
        automaton_at: v(0, 0),
        pebbles_at: vec![v(0, 0), v(1, 0)],
    })
}

/// The walker loop without the H pebble: a three-pebble snake that
/// advances its head to any free vertex.
pub fn baseline_13_caterpillar() -> Strategy {
    compile(RoleProgram {
        name: "baseline-13-caterpillar".into(),
        roles: vec!['B', 'C', 'D'],
        lines: vec![
            mv(2, &['B'], Target::Role('C'), 3),
            mv(3, &['C'], Target::Role('D'), 4),
            mv(4, &['D'], Target::Free, 17),
            mv(17, &[], Target::Role('C'), 18),
            mv(18, &[], Target::Role('B'), 2),
        ],
        entry: 2,
        automaton_at: v(0, 0),
        pebbles_at: vec![v(0, 0), v(1, 0), v(2, 0)],
    })
}

/// A lone automaton that never moves.
pub fn idle() -> Strategy {
    compile(RoleProgram {
        name: "idle".into(),
        roles: vec![],
        lines: vec![mv(1, &[], Target::Stay, 1)],
        entry: 1,
        automaton_at: v(0, 0),
        pebbles_at: vec![],
    })
}

pub fn builtin(name: &str) -> Option<Strategy> {
    Some(match name {
        "walker14" => build_walker(RoleAssignment::default()).expect("default roles are valid"),
        "baseline-10" => baseline_10(),
        "baseline-11" => baseline_11(),
        "baseline-12" => baseline_12(),
        "baseline-13-caterpillar" => baseline_13_caterpillar(),
        "idle" => idle(),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::validate_pebbles;

    #[test]
    fn all_builtins_compile_with_legal_pebbles() {
        for n in BUILTIN_NAMES {
            let s = builtin(n).unwrap();
            assert_eq!(s.name, n);
            assert!(validate_pebbles(&s.def).is_empty(), "{n}");
        }
        assert!(builtin("nope").is_none());
    }

    #[test]
    fn pebble_counts() {
        let counts: Vec<usize> = BUILTIN_NAMES
            .iter()
            .map(|n| builtin(n).unwrap().def.pebble_count())
            .collect();
        assert_eq!(counts, vec![4, 0, 1, 2, 3, 0]);
    }
}
