//! Resolution of nondeterministic target choices, and the search for
//! realizations that defeat directed movement.

mod lasso;

pub use lasso::{
    defeat_strategy, search_lasso, DefeatError, DefeatOutcome, IsolationEvidence, LassoCertificate,
    LassoSearch, ReplayError, SearchConfig,
};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::collective::CollectiveState;
use crate::lattice::Vertex;

/// What the adversary sees when a step offers more than one target.
///
/// `options` are sorted by vertex order, so an index is meaningful across
/// x-translations of the same situation.
#[derive(Debug, Clone, Copy)]
pub struct ChoiceContext<'a> {
    pub state: &'a CollectiveState,
    pub at: Vertex,
    pub options: &'a [Vertex],
    pub digest: u64,
}

/// Resolver of nondeterminism. Returning `None` (or an out-of-range index)
/// faults the step.
pub trait Adversary {
    fn choose(&mut self, ctx: &ChoiceContext<'_>) -> Option<usize>;
}

impl<A: Adversary + ?Sized> Adversary for Box<A> {
    fn choose(&mut self, ctx: &ChoiceContext<'_>) -> Option<usize> {
        (**self).choose(ctx)
    }
}

/// Always the least option under vertex order.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstOption;

impl Adversary for FirstOption {
    fn choose(&mut self, _ctx: &ChoiceContext<'_>) -> Option<usize> {
        Some(0)
    }
}

/// Pseudo-random choice that depends only on the seed and the context
/// digest, so a given situation always resolves the same way.
#[derive(Debug, Clone, Copy)]
pub struct SeededRandom {
    seed: u64,
}

impl SeededRandom {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

impl Adversary for SeededRandom {
    fn choose(&mut self, ctx: &ChoiceContext<'_>) -> Option<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ ctx.digest.rotate_left(29));
        Some(rng.gen_range(0..ctx.options.len()))
    }
}

/// Replays a recorded list of option indices, optionally cycling.
#[derive(Debug, Clone)]
pub struct ScriptedChoices {
    choices: Vec<usize>,
    next: usize,
    repeat: bool,
}

impl ScriptedChoices {
    pub fn new(choices: Vec<usize>) -> Self {
        Self {
            choices,
            next: 0,
            repeat: false,
        }
    }

    pub fn cycling(choices: Vec<usize>) -> Self {
        Self {
            choices,
            next: 0,
            repeat: true,
        }
    }

    pub fn consumed(&self) -> usize {
        self.next
    }

    pub fn is_exhausted(&self) -> bool {
        !self.repeat && self.next >= self.choices.len()
    }
}

impl Adversary for ScriptedChoices {
    fn choose(&mut self, _ctx: &ChoiceContext<'_>) -> Option<usize> {
        if self.choices.is_empty() {
            return None;
        }
        let i = if self.repeat {
            self.next % self.choices.len()
        } else {
            self.next
        };
        let c = self.choices.get(i).copied();
        self.next += 1;
        c
    }
}

/// Heuristic worst case: pick the option closest to where the automaton
/// was when it was first consulted, pulling the collective back.
#[derive(Debug, Clone, Copy, Default)]
pub struct Oscillator {
    anchor: Option<Vertex>,
}

impl Adversary for Oscillator {
    fn choose(&mut self, ctx: &ChoiceContext<'_>) -> Option<usize> {
        let anchor = *self.anchor.get_or_insert(ctx.at);
        ctx.options
            .iter()
            .enumerate()
            .min_by_key(|(_, v)| ((v.x() - anchor.x()).abs(), (v.y() - anchor.y()).abs()))
            .map(|(i, _)| i)
    }
}

/// Named adversary, as written on the command line and in trace headers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdversarySpec {
    First,
    Seeded(u64),
    Oscillator,
    Script(Vec<usize>),
    Cycle(Vec<usize>),
}

impl AdversarySpec {
    pub fn build(&self) -> Box<dyn Adversary> {
        match self {
            AdversarySpec::First => Box::new(FirstOption),
            AdversarySpec::Seeded(s) => Box::new(SeededRandom::new(*s)),
            AdversarySpec::Oscillator => Box::new(Oscillator::default()),
            AdversarySpec::Script(c) => Box::new(ScriptedChoices::new(c.clone())),
            AdversarySpec::Cycle(c) => Box::new(ScriptedChoices::cycling(c.clone())),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            AdversarySpec::Seeded(s) => Some(*s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error(
    "unknown adversary '{0}' (expected first, oscillator, seeded:N, script:i,j,.. or cycle:i,j,..)"
)]
pub struct ParseAdversaryError(String);

fn list(s: &str) -> Option<Vec<usize>> {
    if s.is_empty() {
        return Some(Vec::new());
    }
    s.split(',').map(|p| p.trim().parse().ok()).collect()
}

impl FromStr for AdversarySpec {
    type Err = ParseAdversaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseAdversaryError(s.to_string());
        match s.split_once(':') {
            None if s == "first" => Ok(AdversarySpec::First),
            None if s == "oscillator" => Ok(AdversarySpec::Oscillator),
            Some(("seeded", n)) => n.parse().map(AdversarySpec::Seeded).map_err(|_| err()),
            Some(("script", l)) => list(l).map(AdversarySpec::Script).ok_or_else(err),
            Some(("cycle", l)) => list(l)
                .filter(|v| !v.is_empty())
                .map(AdversarySpec::Cycle)
                .ok_or_else(err),
            _ => Err(err()),
        }
    }
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| {
            v.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            AdversarySpec::First => write!(f, "first"),
            AdversarySpec::Seeded(s) => write!(f, "seeded:{s}"),
            AdversarySpec::Oscillator => write!(f, "oscillator"),
            AdversarySpec::Script(c) => write!(f, "script:{}", join(c)),
            AdversarySpec::Cycle(c) => write!(f, "cycle:{}", join(c)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collective::Configuration;

    fn ctx_state() -> CollectiveState {
        CollectiveState {
            config: Configuration::new(vec![Vertex::new(0, 0)]),
            states: vec![],
            step_index: 0,
        }
    }

    #[test]
    fn spec_round_trips_through_text() {
        for text in [
            "first",
            "oscillator",
            "seeded:42",
            "script:0,1,1",
            "script:",
            "cycle:0,1",
        ] {
            let spec: AdversarySpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
        assert!("cycle:".parse::<AdversarySpec>().is_err());
        assert!("seeded:x".parse::<AdversarySpec>().is_err());
        assert!("random".parse::<AdversarySpec>().is_err());
    }

    #[test]
    fn choices_stay_in_range_and_are_reproducible() {
        let state = ctx_state();
        let options = [Vertex::new(-1, 0), Vertex::new(0, 1), Vertex::new(1, 0)];
        for digest in 0..200u64 {
            let ctx = ChoiceContext {
                state: &state,
                at: Vertex::new(0, 0),
                options: &options,
                digest,
            };
            let a = SeededRandom::new(7).choose(&ctx).unwrap();
            let b = SeededRandom::new(7).choose(&ctx).unwrap();
            assert_eq!(a, b);
            assert!(a < options.len());
            assert_eq!(FirstOption.choose(&ctx), Some(0));
        }
    }

    #[test]
    fn seeded_random_uses_every_option() {
        let state = ctx_state();
        let options = [Vertex::new(-1, 0), Vertex::new(1, 0)];
        let mut seen = [false; 2];
        for digest in 0..64u64 {
            let ctx = ChoiceContext {
                state: &state,
                at: Vertex::new(0, 0),
                options: &options,
                digest,
            };
            seen[SeededRandom::new(1).choose(&ctx).unwrap()] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn oscillator_pulls_back_to_anchor() {
        let state = ctx_state();
        let mut osc = Oscillator::default();
        let first = [Vertex::new(-1, 0), Vertex::new(0, 1), Vertex::new(1, 0)];
        let ctx = ChoiceContext {
            state: &state,
            at: Vertex::new(0, 0),
            options: &first,
            digest: 0,
        };
        // Same column beats either side.
        assert_eq!(osc.choose(&ctx), Some(1));
        let back = [Vertex::new(-1, 1), Vertex::new(1, 1), Vertex::new(0, 0)];
        let ctx = ChoiceContext {
            state: &state,
            at: Vertex::new(0, 1),
            options: &back,
            digest: 0,
        };
        assert_eq!(osc.choose(&ctx), Some(2));
    }

    #[test]
    fn scripted_choices_replay_then_stop() {
        let state = ctx_state();
        let options = [Vertex::new(-1, 0), Vertex::new(1, 0)];
        let ctx = ChoiceContext {
            state: &state,
            at: Vertex::new(0, 0),
            options: &options,
            digest: 0,
        };
        let mut s = ScriptedChoices::new(vec![1, 0]);
        assert_eq!(s.choose(&ctx), Some(1));
        assert_eq!(s.choose(&ctx), Some(0));
        assert!(s.is_exhausted());
        assert_eq!(s.choose(&ctx), None);
        let mut c = ScriptedChoices::cycling(vec![1, 0]);
        let got: Vec<_> = (0..5).map(|_| c.choose(&ctx).unwrap()).collect();
        assert_eq!(got, vec![1, 0, 1, 0, 1]);
    }
}
