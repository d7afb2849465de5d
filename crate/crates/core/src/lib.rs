//! Compassless automaton collectives on the width-2 lattice `Z x Z2`:
//! simulation, directedness checks, adversarial defeat search and schema
//! combinatorics.

pub mod adversary;
pub mod builtins;
pub mod cli;
pub mod collective;
pub mod lattice;
pub mod machine;
pub mod program;
pub mod schemas;
pub mod walker14;
