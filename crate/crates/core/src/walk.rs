//! Seeded random walks that check the focus-history contract.
//!
//! Each walk starts at the entry and applies random rules. After every
//! successful move a cloned session is undone and must land back on the
//! prior node and history; blocked moves must leave state untouched; undo
//! at depth zero must be blocked. Walk `i` uses its own seed, so results do
//! not depend on how walks are scheduled.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::{MoveStatus, Session};
use crate::exec::Execution;
use crate::graph::{Endpoint, Graph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkConfig {
    pub walks: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks: 1000,
            max_len: 50,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    UndoMismatch,
    UndoAtRootNotBlocked,
    BlockedMutated,
    EngineError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub walk: usize,
    pub step: usize,
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct WalkReport {
    pub walks: usize,
    pub moves: usize,
    pub blocked: usize,
    pub undo_checks: usize,
    pub root_checks: usize,
    pub violations: Vec<Violation>,
}

/// Rules that leave the graph or rewind history; walks skip these and
/// check history through [`Session::undo`] instead.
pub fn walk_excluded_rules(graph: &Graph) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for edge in graph.edges() {
        let leaves = [&edge.source, &edge.target].into_iter().any(|ep| match ep {
            Endpoint::Resolver(name) => name == "exit" || name == "previous",
            Endpoint::Literal(id) => id.is_exit(),
        });
        if leaves {
            out.extend(edge.rules.iter().cloned());
        }
    }
    out
}

pub fn random_walks(graph: Arc<Graph>, cfg: &WalkConfig, exec: Execution) -> WalkReport {
    let excluded = walk_excluded_rules(&graph);
    let rules: Vec<String> = graph
        .rules()
        .map(|r| r.name.clone())
        .filter(|r| !excluded.contains(r))
        .collect();
    let per_walk = exec.map_range(cfg.walks, |i| {
        one_walk(&graph, &rules, i, cfg.seed.wrapping_add(i as u64), cfg.max_len)
    });
    let mut report = WalkReport {
        walks: cfg.walks,
        ..Default::default()
    };
    for r in per_walk {
        report.moves += r.moves;
        report.blocked += r.blocked;
        report.undo_checks += r.undo_checks;
        report.root_checks += r.root_checks;
        report.violations.extend(r.violations);
    }
    report
}

fn one_walk(graph: &Arc<Graph>, rules: &[String], walk: usize, seed: u64, max_len: usize) -> WalkReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = WalkReport::default();
    let violation = |step, kind, detail: String| Violation {
        walk,
        step,
        kind,
        detail,
    };
    let Ok((mut session, _)) = Session::enter(graph.clone(), None) else {
        report.violations.push(violation(0, ViolationKind::EngineError, "enter failed".into()));
        return report;
    };
    if rules.is_empty() {
        return report;
    }
    let len = rng.random_range(1..=max_len.max(1));
    for step in 0..len {
        let before = session.snapshot();
        if session.depth() == 0 {
            report.root_checks += 1;
            let mut probe = session.clone();
            match probe.undo() {
                Ok(r) if r.status == MoveStatus::Blocked && probe.snapshot() == before => {}
                other => report.violations.push(violation(
                    step,
                    ViolationKind::UndoAtRootNotBlocked,
                    format!("{other:?}"),
                )),
            }
        }
        let rule = &rules[rng.random_range(0..rules.len())];
        let result = match session.navigate(rule) {
            Ok(r) => r,
            Err(e) => {
                report
                    .violations
                    .push(violation(step, ViolationKind::EngineError, e.to_string()));
                break;
            }
        };
        match result.status {
            MoveStatus::Blocked => {
                report.blocked += 1;
                if session.snapshot() != before {
                    report.violations.push(violation(
                        step,
                        ViolationKind::BlockedMutated,
                        format!("{rule} at {}", before.current),
                    ));
                }
            }
            _ => {
                report.moves += 1;
                report.undo_checks += 1;
                let mut probe = session.clone();
                let undone = probe.undo();
                if !matches!(&undone, Ok(r) if r.status == MoveStatus::Moved)
                    || probe.snapshot() != before
                {
                    report.violations.push(violation(
                        step,
                        ViolationKind::UndoMismatch,
                        format!(
                            "{rule}: {} -> {}, undo gave {}",
                            before.current,
                            session.current(),
                            probe.current()
                        ),
                    ));
                }
            }
        }
    }
    report
}
