//! Text forms of member sets and output symbols, shared by the strategy
//! file and the trace document.

use crate::machine::{MemberId, MemberSet, OutputSymbol, SetPattern};

/// `{B,C}` with names in member order; `{}` for the empty set.
pub fn set_text(names: &[String], set: MemberSet) -> String {
    let parts: Vec<&str> = set.iter().map(|id| names[id.slot()].as_str()).collect();
    format!("{{{}}}", parts.join(","))
}

pub fn parse_set(names: &[String], text: &str) -> Result<MemberSet, String> {
    let inner = text
        .trim()
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| format!("expected a set like {{B,C}}, got '{text}'"))?;
    let mut set = MemberSet::EMPTY;
    for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let slot = names
            .iter()
            .position(|n| n == part)
            .ok_or_else(|| format!("unknown member '{part}'"))?;
        let id = MemberId::from_slot(slot);
        if set.contains(id) {
            return Err(format!("member '{part}' listed twice"));
        }
        set = set.with(id);
    }
    Ok(set)
}

pub fn pattern_text(names: &[String], p: SetPattern) -> String {
    match p {
        SetPattern::Any => "*".into(),
        SetPattern::Exact(s) => set_text(names, s),
    }
}

pub fn parse_pattern(names: &[String], text: &str) -> Result<SetPattern, String> {
    if text.trim() == "*" {
        Ok(SetPattern::Any)
    } else {
        parse_set(names, text).map(SetPattern::Exact)
    }
}

pub fn output_text(names: &[String], y: OutputSymbol) -> String {
    match y {
        OutputSymbol::Stay => "stay".into(),
        OutputSymbol::MoveToFree => "free".into(),
        OutputSymbol::MoveToSet(s) => set_text(names, s),
    }
}

pub fn parse_output(names: &[String], text: &str) -> Result<OutputSymbol, String> {
    match text.trim() {
        "stay" => Ok(OutputSymbol::Stay),
        "free" => Ok(OutputSymbol::MoveToFree),
        other => {
            let set = parse_set(names, other)?;
            if set.is_empty() {
                Err("move target set is empty".into())
            } else {
                Ok(OutputSymbol::MoveToSet(set))
            }
        }
    }
}
