//! The directed walker: one automaton and four pebbles B, C, D, H.
//!
//! Every loop iteration shifts the whole collective one column along the
//! heading fixed by the initial B -> D orientation. The only
//! nondeterministic step is the free move with D; the branch taken there
//! decides whether the iteration takes 9 or 11 steps.

use thiserror::Error;

use crate::adversary::Adversary;
use crate::collective::{
    check_directed, diameter, step, CollectiveState, RationalPoint, StepFault, Trace, TraceRecord,
    Verdict,
};
use crate::lattice::Vertex;
use crate::machine::{MemberId, StateId};
use crate::program::{mv, Instruction, Line, RoleProgram, Strategy, Target};
use crate::schemas::{schema_of, Schema};

/// Which pebble plays which role. Defaults to B, C, D, H = members 2..5.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoleAssignment {
    pub b: MemberId,
    pub c: MemberId,
    pub d: MemberId,
    pub h: MemberId,
}

impl Default for RoleAssignment {
    fn default() -> Self {
        Self {
            b: MemberId::new(2),
            c: MemberId::new(3),
            d: MemberId::new(4),
            h: MemberId::new(5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WalkerError {
    #[error("roles must be a bijection onto pebbles 2..=5")]
    InvalidRoles,
    #[error("state is not at the loop header")]
    NotAtLoopHeader,
    #[error(transparent)]
    Fault(#[from] StepFault),
    #[error("iteration did not return to the loop header within {0} steps")]
    Runaway(usize),
}

impl RoleAssignment {
    fn ordered_roles(&self) -> Result<Vec<char>, WalkerError> {
        let mut roles = ['?'; 4];
        for (id, r) in [(self.b, 'B'), (self.c, 'C'), (self.d, 'D'), (self.h, 'H')] {
            let i = id.index();
            if !(2..=5).contains(&i) || roles[i - 2] != '?' {
                return Err(WalkerError::InvalidRoles);
            }
            roles[i - 2] = r;
        }
        Ok(roles.to_vec())
    }
}

/// The loop as line program. Line 5 is the H test; line 10 (`else`) and the
/// `end if` are not steps.
pub fn program(roles: &RoleAssignment) -> Result<RoleProgram, WalkerError> {
    let order = roles.ordered_roles()?;
    let layout = |r: char| match r {
        'B' => Vertex::new(0, 0),
        'C' => Vertex::new(1, 0),
        'D' => Vertex::new(2, 0),
        _ => Vertex::new(1, 1),
    };
    let lines: Vec<Line> = vec![
        mv(2, &['B'], Target::Role('C'), 3),
        mv(3, &['C'], Target::Role('D'), 4),
        mv(4, &['D'], Target::Free, 5),
        Line {
            number: 5,
            instruction: Instruction::IfNeighbor {
                role: 'H',
                then_line: 6,
                else_line: 11,
            },
            next: 6,
        },
        mv(6, &[], Target::Role('H'), 7),
        mv(7, &['H'], Target::Role('D'), 8),
        mv(8, &['D'], Target::Role('C'), 9),
        mv(9, &['D'], Target::Free, 17),
        mv(11, &[], Target::Role('C'), 12),
        mv(12, &[], Target::Role('B'), 13),
        mv(13, &[], Target::Role('H'), 14),
        mv(14, &['H'], Target::Role('B'), 15),
        mv(15, &['H'], Target::Role('C'), 16),
        mv(16, &['H'], Target::Free, 17),
        mv(17, &[], Target::Role('C'), 18),
        mv(18, &[], Target::Role('B'), 2),
    ];
    Ok(RoleProgram {
        name: "walker14".into(),
        pebbles_at: order.iter().map(|r| layout(*r)).collect(),
        roles: order,
        lines,
        entry: 2,
        automaton_at: layout('B'),
    })
}

/// Compile the walker: B, C, D on (0,0), (1,0), (2,0), H on (1,1), the
/// automaton with B, heading +x.
pub fn build_walker(roles: RoleAssignment) -> Result<Strategy, WalkerError> {
    Ok(program(&roles)?.compile().expect("walker program compiles"))
}

/// The automaton state of the loop header.
pub fn loop_header(strategy: &Strategy) -> StateId {
    strategy
        .def
        .member(MemberId::AUTOMATON)
        .machine
        .state_id("L2")
        .expect("walker has line 2")
}

/// Run one loop iteration from the header; returns the new state and the
/// records of the steps taken.
pub fn iterate(
    strategy: &Strategy,
    state: &CollectiveState,
    adversary: &mut dyn Adversary,
) -> Result<(CollectiveState, Vec<TraceRecord>), WalkerError> {
    let header = loop_header(strategy);
    if state.automaton_state() != header {
        return Err(WalkerError::NotAtLoopHeader);
    }
    let mut records = Vec::new();
    let mut current = state.clone();
    loop {
        let (next, record) = step(&strategy.def, &current, adversary)?;
        records.push(record);
        current = next;
        if current.automaton_state() == header {
            return Ok((current, records));
        }
        if records.len() > 64 {
            return Err(WalkerError::Runaway(records.len()));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationSummary {
    pub steps: usize,
    /// Coordinate change in the heading frame (x multiplied by the heading
    /// sign).
    pub displacement: RationalPoint,
    pub branching_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkReport {
    pub iterations: Vec<IterationSummary>,
    pub total_steps: usize,
    pub max_diameter: i64,
    pub directed: Option<Verdict>,
    pub failures: Vec<String>,
    pub trace: Trace,
}

impl WalkReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub const DIRECTED_C1: i64 = 2;
pub const DIRECTED_C2: usize = 22;

/// Heading sign (+1 or -1) from the initial B -> D orientation.
pub fn heading(strategy: &Strategy) -> i64 {
    let at = |role: &str| {
        strategy
            .initial
            .position(strategy.def.id_by_name(role).expect("walker roles"))
    };
    let (b, d) = (at("B"), at("D"));
    (d.x() - b.x()).signum()
}

/// Run `iterations` loop iterations and check every directed-movement claim
/// along the way: diameter at most 2 at every step, 9 or 11 steps per
/// iteration with exactly one branching step, heading-frame displacement
/// (1, 0) per iteration, schema preserved at every header, and the
/// directedness check with `c1 = 2`, `c2 = 22` on the whole trace.
pub fn verify_walk(
    strategy: &Strategy,
    iterations: usize,
    adversary: &mut dyn Adversary,
) -> WalkReport {
    verify_from(strategy, &strategy.initial_state(), iterations, adversary)
}

pub fn verify_from(
    strategy: &Strategy,
    start: &CollectiveState,
    iterations: usize,
    adversary: &mut dyn Adversary,
) -> WalkReport {
    let sign = heading(strategy);
    let initial_schema: Schema = schema_of(&start.config);
    let mut report = WalkReport {
        iterations: Vec::new(),
        total_steps: 0,
        max_diameter: diameter(&start.config),
        directed: None,
        failures: Vec::new(),
        trace: Trace {
            records: vec![TraceRecord::initial(start)],
        },
    };
    let mut state = start.clone();
    for k in 0..iterations {
        let (next, records) = match iterate(strategy, &state, adversary) {
            Ok(r) => r,
            Err(e) => {
                report.failures.push(format!("iteration {k}: {e}"));
                break;
            }
        };
        let raw = next.coordinate() - state.coordinate();
        let displacement = RationalPoint::new(raw.x * sign, raw.y);
        let summary = IterationSummary {
            steps: records.len(),
            displacement,
            branching_steps: records.iter().filter(|r| r.choice.is_some()).count(),
        };
        for r in &records {
            let d = diameter(&r.config);
            report.max_diameter = report.max_diameter.max(d);
            if d > DIRECTED_C1 {
                report
                    .failures
                    .push(format!("step {}: diameter {d}", r.step));
            }
        }
        if summary.steps != 9 && summary.steps != 11 {
            report
                .failures
                .push(format!("iteration {k}: {} steps", summary.steps));
        }
        if summary.branching_steps != 1 {
            report.failures.push(format!(
                "iteration {k}: {} branching steps",
                summary.branching_steps
            ));
        }
        if summary.displacement != RationalPoint::from_ints(1, 0) {
            report.failures.push(format!(
                "iteration {k}: displacement {}",
                summary.displacement
            ));
        }
        if schema_of(&next.config) != initial_schema {
            report
                .failures
                .push(format!("iteration {k}: schema changed"));
        }
        report.total_steps += summary.steps;
        report.iterations.push(summary);
        report.trace.records.extend(records);
        state = next;
    }
    if iterations > 0 {
        let verdict = check_directed(&report.trace, DIRECTED_C1, DIRECTED_C2);
        if !verdict.holds() {
            report.failures.push(format!("directedness: {verdict}"));
        }
        report.directed = Some(verdict);
    }
    report
}
