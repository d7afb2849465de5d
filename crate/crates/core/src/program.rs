//! Compilation of role-based line programs into automaton and pebble tables.
//!
//! A program is written in terms of pebble roles ("move with B to the
//! vertex of C"). The compiler executes it on the initial layout over every
//! adversary choice, and records each `(line, observation)` the automaton
//! meets together with the output and next line. Pebbles get a rule for
//! every observation they receive while co-located with the automaton:
//! carried pebbles copy the automaton's move, the rest stay. A program that
//! would need two different outputs for one pebble observation does not
//! compile.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::collective::{CollectiveState, Configuration};
use crate::lattice::Vertex;
use crate::machine::{
    observe, resolve_output, AutomatonDef, CollectiveDef, DefinitionError, MemberDef, MemberId,
    MemberSet, ObservationPattern, ObservationSymbol, OutputSymbol, Rule, StateId,
};

pub type Role = char;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Role(Role),
    Free,
    Stay,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    /// The automaton moves to `target`, taking the `carry` pebbles along.
    Move { carry: Vec<Role>, target: Target },
    /// Branch on whether `role` sits on a neighbouring vertex. Evaluated on
    /// the observation of the step that executes the branch.
    IfNeighbor {
        role: Role,
        then_line: u8,
        else_line: u8,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    pub number: u8,
    pub instruction: Instruction,
    /// Line executed after a `Move`; ignored for branches.
    pub next: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleProgram {
    pub name: String,
    /// Pebble roles in member order (member 2 first).
    pub roles: Vec<Role>,
    pub lines: Vec<Line>,
    pub entry: u8,
    pub automaton_at: Vertex,
    /// Initial vertex per role, same order as `roles`.
    pub pebbles_at: Vec<Vertex>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("line {0} is not defined")]
    UnknownLine(u8),
    #[error("role '{0}' is not defined")]
    UnknownRole(Role),
    #[error("line {line}: branch must lead to a move line")]
    NestedBranch { line: u8 },
    #[error("line {line}: output {output:?} has no admissible target")]
    NoTarget { line: u8, output: OutputSymbol },
    #[error("line {line}: carried pebble '{role}' is not with the automaton")]
    CarryNotColocated { line: u8, role: Role },
    #[error("pebble '{role}' needs both {first:?} and {second:?} on one observation")]
    PebbleConflict {
        role: Role,
        first: OutputSymbol,
        second: OutputSymbol,
    },
    #[error(transparent)]
    Definition(#[from] DefinitionError),
}

/// A collective definition together with its initial configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    pub name: String,
    pub def: CollectiveDef,
    pub initial: Configuration,
}

impl Strategy {
    pub fn initial_state(&self) -> CollectiveState {
        CollectiveState::initial(&self.def, self.initial.clone())
    }
}

impl RoleProgram {
    fn line(&self, n: u8) -> Result<&Line, CompileError> {
        self.lines
            .iter()
            .find(|l| l.number == n)
            .ok_or(CompileError::UnknownLine(n))
    }

    fn member(&self, role: Role) -> Result<MemberId, CompileError> {
        self.roles
            .iter()
            .position(|r| *r == role)
            .map(|i| MemberId::from_slot(i + 1))
            .ok_or(CompileError::UnknownRole(role))
    }

    pub fn state_name(line: u8) -> String {
        format!("L{line}")
    }

    /// Resolve a branch line against an observation; returns the move line
    /// that the step actually executes.
    fn effective(
        &self,
        line: &Line,
        obs: &ObservationSymbol,
    ) -> Result<(u8, Vec<Role>, Target, u8), CompileError> {
        match &line.instruction {
            Instruction::Move { carry, target } => {
                Ok((line.number, carry.clone(), target.clone(), line.next))
            }
            Instruction::IfNeighbor {
                role,
                then_line,
                else_line,
            } => {
                let chosen = if obs.sees_nearby(self.member(*role)?) {
                    *then_line
                } else {
                    *else_line
                };
                let l = self.line(chosen)?;
                match &l.instruction {
                    Instruction::Move { carry, target } => {
                        Ok((l.number, carry.clone(), target.clone(), l.next))
                    }
                    Instruction::IfNeighbor { .. } => {
                        Err(CompileError::NestedBranch { line: line.number })
                    }
                }
            }
        }
    }

    fn output(&self, target: &Target) -> Result<OutputSymbol, CompileError> {
        Ok(match target {
            Target::Role(r) => OutputSymbol::MoveToSet(MemberSet::single(self.member(*r)?)),
            Target::Free => OutputSymbol::MoveToFree,
            Target::Stay => OutputSymbol::Stay,
        })
    }

    fn automaton_name() -> String {
        "A".into()
    }

    pub fn compile(&self) -> Result<Strategy, CompileError> {
        let mut positions = vec![self.automaton_at];
        positions.extend(self.pebbles_at.iter().copied());
        let initial = Configuration::new(positions);
        let size = initial.len();

        let mut automaton: BTreeMap<(u8, ObservationSymbol), (u8, OutputSymbol)> = BTreeMap::new();
        let mut pebbles: Vec<BTreeMap<ObservationSymbol, OutputSymbol>> =
            vec![BTreeMap::new(); size - 1];
        let mut seen: BTreeSet<(u8, Configuration)> = BTreeSet::new();
        let mut queue = VecDeque::from([(self.entry, initial.clone())]);

        while let Some((pc, config)) = queue.pop_front() {
            if !seen.insert((pc, config.normalized().0)) {
                continue;
            }
            let at = config.position(MemberId::AUTOMATON);
            let obs = observe(&config, MemberId::AUTOMATON);
            let (executed, carry, target, next) = self.effective(self.line(pc)?, &obs)?;
            let output = self.output(&target)?;
            automaton.insert((pc, obs), (next, output));

            let mut movers = MemberSet::single(MemberId::AUTOMATON);
            for r in &carry {
                let id = self.member(*r)?;
                if config.position(id) != at {
                    return Err(CompileError::CarryNotColocated {
                        line: executed,
                        role: *r,
                    });
                }
                movers = movers.with(id);
            }
            for p in config.occupants(at).without(MemberId::AUTOMATON).iter() {
                let want = if movers.contains(p) {
                    output
                } else {
                    OutputSymbol::Stay
                };
                let table = &mut pebbles[p.slot() - 1];
                let pobs = observe(&config, p);
                if let Some(prev) = table.insert(pobs, want) {
                    if prev != want {
                        return Err(CompileError::PebbleConflict {
                            role: self.roles[p.slot() - 1],
                            first: prev,
                            second: want,
                        });
                    }
                }
            }

            let options = resolve_output(output, at, &config);
            if options.is_empty() {
                return Err(CompileError::NoTarget {
                    line: executed,
                    output,
                });
            }
            for to in options {
                let mut ps = config.positions().to_vec();
                if output.is_move() {
                    for id in movers.iter() {
                        ps[id.slot()] = to;
                    }
                }
                queue.push_back((next, Configuration::new(ps)));
            }
        }

        let line_numbers: Vec<u8> = self.lines.iter().map(|l| l.number).collect();
        let sid = |n: u8| {
            StateId(
                line_numbers
                    .iter()
                    .position(|x| *x == n)
                    .expect("line exists") as u16,
            )
        };
        let states = line_numbers.iter().map(|n| Self::state_name(*n)).collect();
        let rules = automaton
            .into_iter()
            .map(|((pc, obs), (next, output))| Rule {
                state: sid(pc),
                pattern: ObservationPattern::exact(&obs),
                next: sid(next),
                output,
            })
            .collect();
        let mut members = vec![MemberDef {
            name: Self::automaton_name(),
            machine: AutomatonDef::new(states, sid(self.entry), rules)?,
        }];
        for (i, table) in pebbles.into_iter().enumerate() {
            let rules = table
                .into_iter()
                .filter(|(_, y)| y.is_move())
                .map(|(obs, output)| Rule {
                    state: StateId(0),
                    pattern: ObservationPattern::exact(&obs),
                    next: StateId(0),
                    output,
                })
                .collect();
            members.push(MemberDef {
                name: self.roles[i].to_string(),
                machine: AutomatonDef::new(vec!["q0".into()], StateId(0), rules)?,
            });
        }
        Ok(Strategy {
            name: self.name.clone(),
            def: CollectiveDef::new(members)?,
            initial,
        })
    }
}

/// Shorthand for program literals.
pub(crate) fn mv(number: u8, carry: &[Role], target: Target, next: u8) -> Line {
    Line {
        number,
        instruction: Instruction::Move {
            carry: carry.to_vec(),
            target,
        },
        next,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::validate_pebbles;

    fn v(x: i64, y: i64) -> Vertex {
        Vertex::new(x, y)
    }

    #[test]
    fn carry_must_be_colocated() {
        let p = RoleProgram {
            name: "bad".into(),
            roles: vec!['P'],
            lines: vec![mv(1, &['P'], Target::Free, 1)],
            entry: 1,
            automaton_at: v(0, 0),
            pebbles_at: vec![v(1, 0)],
        };
        assert_eq!(
            p.compile().unwrap_err(),
            CompileError::CarryNotColocated { line: 1, role: 'P' }
        );
    }

    #[test]
    fn missing_target_is_reported() {
        let p = RoleProgram {
            name: "bad".into(),
            roles: vec!['P'],
            lines: vec![mv(1, &[], Target::Role('P'), 1)],
            entry: 1,
            automaton_at: v(0, 0),
            pebbles_at: vec![v(0, 0)],
        };
        assert!(matches!(
            p.compile().unwrap_err(),
            CompileError::NoTarget { line: 1, .. }
        ));
    }

    #[test]
    fn conflicting_pebble_observation_is_rejected() {
        // P is carried on line 1 and left behind on line 2 from a situation
        // it cannot tell apart.
        let p = RoleProgram {
            name: "bad".into(),
            roles: vec!['P'],
            lines: vec![mv(1, &['P'], Target::Free, 2), mv(2, &[], Target::Free, 1)],
            entry: 1,
            automaton_at: v(0, 0),
            pebbles_at: vec![v(0, 0)],
        };
        assert!(matches!(
            p.compile().unwrap_err(),
            CompileError::PebbleConflict { role: 'P', .. }
        ));
    }

    #[test]
    fn compiled_pebbles_are_legal() {
        let p = RoleProgram {
            name: "pair".into(),
            roles: vec!['P'],
            lines: vec![mv(1, &['P'], Target::Free, 1)],
            entry: 1,
            automaton_at: v(0, 0),
            pebbles_at: vec![v(0, 0)],
        };
        let s = p.compile().unwrap();
        assert!(validate_pebbles(&s.def).is_empty());
        assert_eq!(s.def.member(MemberId::new(2)).machine.rules().len(), 1);
    }
}
