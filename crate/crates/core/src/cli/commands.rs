use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use super::render::render_trace;
use super::strategy_file::{emit_strategy, parse_strategy, strategy_hash};
use super::trace_doc::{TraceDocument, TraceHeader};
use crate::adversary::{
    defeat_strategy, AdversarySpec, DefeatError, DefeatOutcome, LassoCertificate, SearchConfig,
};
use crate::builtins::{builtin, BUILTIN_NAMES};
use crate::collective::{check_directed_with, check_uniform_with, run, DisplacementRule};
use crate::program::Strategy;
use crate::schemas::{
    enumerate_schemas, find_confinement_cycle, label_of, symmetry_classes, transfer_graph,
};

/// Default directory for written traces when `--output` is not given.
pub const OUT_DIR_ENV: &str = "PEBBLEWALK_OUT_DIR";

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Violated = 1,
    InputError = 2,
    RuntimeFault = 3,
}

#[derive(Parser)]
#[command(
    name = "pebblewalk",
    version,
    about = "Compassless automata with pebbles on the width-2 lattice"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    List,
    Classes,
    Graph,
    Cycle,
}

#[derive(Subcommand)]
enum Command {
    /// Run a strategy and write its trace as JSON lines.
    Simulate {
        /// Builtin name or path to a strategy file.
        strategy: String,
        /// first, oscillator, seeded:N, script:i,j,.. or cycle:i,j,..
        #[arg(long, default_value = "first")]
        adversary: String,
        #[arg(long, default_value_t = 1000)]
        horizon: usize,
        /// Trace file; defaults to <$PEBBLEWALK_OUT_DIR>/<name>.jsonl or stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Judge directed movement on a recorded trace.
    Check {
        trace: PathBuf,
        #[arg(long)]
        c1: i64,
        #[arg(long)]
        c2: usize,
        /// Use t' = t'' = c2 at every moment.
        #[arg(long)]
        uniform: bool,
        /// Reject a zero common displacement.
        #[arg(long)]
        require_progress: bool,
    },
    /// Schema enumeration, symmetry classes and the transfer graph.
    Schemas {
        pebbles: usize,
        #[arg(long, value_enum, default_value = "list")]
        emit: Emit,
        #[arg(long)]
        json: bool,
    },
    /// Search for a zero-displacement lasso that defeats a strategy.
    Defeat {
        strategy: String,
        #[arg(long, default_value_t = 200)]
        max_depth: usize,
        #[arg(long, default_value_t = 4)]
        diameter_bound: i64,
        #[arg(long)]
        json: bool,
    },
    /// Print a trace as two-row text panels.
    Render {
        trace: PathBuf,
        #[arg(long, default_value_t = 7)]
        window: usize,
    },
    /// Write a builtin strategy in the strategy file format.
    Export {
        name: String,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

struct Failure(ExitCode, String);

impl Failure {
    fn input(msg: impl Into<String>) -> Self {
        Failure(ExitCode::InputError, msg.into())
    }
}

type Outcome = Result<ExitCode, Failure>;

/// Parse `args` (program name first) and run; returns the exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                ExitCode::InputError
            } else {
                ExitCode::Success
            };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code as i32;
        }
    };
    let result = match cli.command {
        Command::Simulate {
            strategy,
            adversary,
            horizon,
            output,
        } => simulate(&strategy, &adversary, horizon, output, out, err),
        Command::Check {
            trace,
            c1,
            c2,
            uniform,
            require_progress,
        } => check(&trace, c1, c2, uniform, require_progress, out),
        Command::Schemas {
            pebbles,
            emit,
            json,
        } => schemas(pebbles, emit, json, out),
        Command::Defeat {
            strategy,
            max_depth,
            diameter_bound,
            json,
        } => defeat(&strategy, max_depth, diameter_bound, json, out),
        Command::Render { trace, window } => render(&trace, window, out),
        Command::Export { name, output } => export(&name, output, out),
    };
    match result {
        Ok(code) => code as i32,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code as i32
        }
    }
}

fn load_strategy(spec: &str) -> Result<Strategy, Failure> {
    if let Some(s) = builtin(spec) {
        return Ok(s);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Failure::input(format!(
            "'{spec}' is neither a file nor a builtin ({})",
            BUILTIN_NAMES.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{spec}: {e}")))?;
    parse_strategy(&text).map_err(|e| Failure::input(format!("{spec}:{e}")))
}

fn load_trace(path: &Path) -> Result<TraceDocument, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    TraceDocument::from_jsonl(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Write via a temporary file in the target directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let io =
        |e: std::io::Error| Failure(ExitCode::RuntimeFault, format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn deliver(
    path: Option<PathBuf>,
    default_name: &str,
    contents: &str,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let path =
        path.or_else(|| std::env::var_os(OUT_DIR_ENV).map(|d| PathBuf::from(d).join(default_name)));
    match path {
        Some(p) => write_atomic(&p, contents),
        None => out
            .write_all(contents.as_bytes())
            .map_err(|e| Failure(ExitCode::RuntimeFault, e.to_string())),
    }
}

fn simulate(
    strategy: &str,
    adversary: &str,
    horizon: usize,
    output: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let s = load_strategy(strategy)?;
    let spec: AdversarySpec = adversary
        .parse()
        .map_err(|e: crate::adversary::ParseAdversaryError| Failure::input(e.to_string()))?;
    let header = TraceHeader::for_strategy(
        &s,
        strategy_hash(&s),
        spec.to_string(),
        spec.seed(),
        horizon,
    );
    let mut adv = spec.build();
    let (trace, fault) = match run(&s.def, &s.initial_state(), &mut adv, horizon) {
        Ok(t) => (t, None),
        Err(f) => (f.partial, Some(f.fault)),
    };
    let doc = TraceDocument { header, trace };
    deliver(output, &format!("{}.jsonl", s.name), &doc.to_jsonl(), out)?;
    match fault {
        None => Ok(ExitCode::Success),
        Some(f) => {
            let _ = writeln!(err, "runtime fault: {f}");
            Ok(ExitCode::RuntimeFault)
        }
    }
}

fn check(
    trace: &Path,
    c1: i64,
    c2: usize,
    uniform: bool,
    require_progress: bool,
    out: &mut dyn Write,
) -> Outcome {
    let doc = load_trace(trace)?;
    let rule = if require_progress {
        DisplacementRule::Progress
    } else {
        DisplacementRule::Literal
    };
    let verdict = if uniform {
        let diam = check_directed_with(&doc.trace, c1, 0, rule);
        if diam.holds() {
            check_uniform_with(&doc.trace, c2, rule)
        } else {
            diam
        }
    } else {
        check_directed_with(&doc.trace, c1, c2, rule)
    };
    let _ = writeln!(out, "{verdict}");
    Ok(if verdict.holds() {
        ExitCode::Success
    } else {
        ExitCode::Violated
    })
}

fn name(s: &crate::schemas::Schema) -> String {
    label_of(s).unwrap_or_else(|| s.to_string())
}

fn schemas(pebbles: usize, emit: Emit, as_json: bool, out: &mut dyn Write) -> Outcome {
    let all = enumerate_schemas(pebbles).map_err(|e| Failure::input(e.to_string()))?;
    let text = match emit {
        Emit::List if as_json => {
            let v: Vec<_> = all
                .iter()
                .map(|s| json!({"label": name(s), "cells": s.cells()}))
                .collect();
            serde_json::to_string_pretty(&v).expect("json") + "\n"
        }
        Emit::List => all.iter().map(|s| format!("{} {}\n", name(s), s)).collect(),
        Emit::Classes => {
            let classes: Vec<Vec<String>> = symmetry_classes(&all)
                .iter()
                .map(|c| c.iter().map(name).collect())
                .collect();
            if as_json {
                serde_json::to_string_pretty(&classes).expect("json") + "\n"
            } else {
                classes
                    .iter()
                    .map(|c| format!("{{{}}}\n", c.join(",")))
                    .collect()
            }
        }
        Emit::Graph => {
            let g = transfer_graph(pebbles).map_err(|e| Failure::input(e.to_string()))?;
            if as_json {
                let edges: Vec<_> = g
                    .edges
                    .iter()
                    .map(|e| json!({"from": name(&g.nodes[e.from]), "to": name(&g.nodes[e.to]), "kind": e.kind}))
                    .collect();
                serde_json::to_string_pretty(
                    &json!({"nodes": g.nodes.iter().map(name).collect::<Vec<_>>(), "edges": edges}),
                )
                .expect("json")
                    + "\n"
            } else {
                g.to_dot()
            }
        }
        Emit::Cycle => {
            let g = transfer_graph(pebbles).map_err(|e| Failure::input(e.to_string()))?;
            match find_confinement_cycle(&g) {
                None => "no confinement cycle\n".into(),
                Some(c) => {
                    let mut s = name(&g.nodes[c.schemas[0]]);
                    for (k, i) in c.kinds.iter().zip(&c.schemas[1..]) {
                        s += &format!(" --{k}--> {}", name(&g.nodes[*i]));
                    }
                    format!("{s}\nwindow x={}..{}\n", c.window.0, c.window.1)
                }
            }
        }
    };
    out.write_all(text.as_bytes())
        .map_err(|e| Failure(ExitCode::RuntimeFault, e.to_string()))?;
    Ok(ExitCode::Success)
}

fn certificate_json(c: &LassoCertificate, via_isolation: bool) -> serde_json::Value {
    json!({
        "prefix": c.prefix,
        "cycle": c.cycle,
        "prefix_steps": c.prefix_steps,
        "cycle_steps": c.cycle_steps,
        "net_displacement": c.net_displacement.to_string(),
        "confinement_radius": c.confinement_radius.to_string(),
        "distinct_configurations": c.distinct_configurations,
        "via_isolation": via_isolation,
    })
}

fn defeat(
    strategy: &str,
    max_depth: usize,
    diameter_bound: i64,
    as_json: bool,
    out: &mut dyn Write,
) -> Outcome {
    let s = load_strategy(strategy)?;
    let initial = s.initial_state();
    let cfg = SearchConfig {
        max_depth,
        diameter_bound,
    };
    let outcome = defeat_strategy(&s.def, &initial, &cfg).map_err(|e| match e {
        DefeatError::OutOfScope(_) | DefeatError::InvalidPebbles(_) => {
            Failure::input(e.to_string())
        }
    })?;
    match outcome {
        DefeatOutcome::Inconclusive { explored } => {
            let _ = writeln!(
                out,
                "inconclusive: no lasso within depth {max_depth} ({explored} states explored)"
            );
            Ok(ExitCode::Violated)
        }
        DefeatOutcome::Certified {
            certificate,
            via_isolation,
        } => {
            let replay = certificate.replay(&s.def, &initial);
            if as_json {
                let mut v = certificate_json(&certificate, via_isolation.is_some());
                v["replay"] = json!(replay
                    .as_ref()
                    .map(|_| "ok".to_string())
                    .unwrap_or_else(|e| e.to_string()));
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json"));
            } else {
                let c = &certificate;
                let _ = writeln!(out, "lasso certificate for {}", s.name);
                let _ = writeln!(
                    out,
                    "  prefix: {} steps, choices {:?}",
                    c.prefix_steps, c.prefix
                );
                let _ = writeln!(
                    out,
                    "  cycle: {} steps, choices {:?}",
                    c.cycle_steps, c.cycle
                );
                let _ = writeln!(out, "  net displacement: {}", c.net_displacement);
                let _ = writeln!(out, "  confinement radius: {}", c.confinement_radius);
                let _ = writeln!(
                    out,
                    "  distinct configurations in cycle: {}",
                    c.distinct_configurations
                );
                if via_isolation.is_some() {
                    let _ = writeln!(out, "  found after the automaton was isolated");
                }
                let _ = match &replay {
                    Ok(()) => writeln!(out, "replay: ok"),
                    Err(e) => writeln!(out, "replay: FAILED ({e})"),
                };
            }
            Ok(if replay.is_ok() {
                ExitCode::Success
            } else {
                ExitCode::RuntimeFault
            })
        }
    }
}

fn render(trace: &Path, window: usize, out: &mut dyn Write) -> Outcome {
    if window == 0 {
        return Err(Failure::input("window must be at least 1"));
    }
    let doc = load_trace(trace)?;
    out.write_all(render_trace(&doc, window).as_bytes())
        .map_err(|e| Failure(ExitCode::RuntimeFault, e.to_string()))?;
    Ok(ExitCode::Success)
}

fn export(name: &str, output: Option<PathBuf>, out: &mut dyn Write) -> Outcome {
    let s = builtin(name).ok_or_else(|| Failure::input(format!("unknown builtin '{name}'")))?;
    let text = emit_strategy(&s);
    match output {
        Some(p) => write_atomic(&p, &text)?,
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Failure(ExitCode::RuntimeFault, e.to_string()))?,
    }
    Ok(ExitCode::Success)
}
