use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::Serialize;

use super::{Endpoint, Graph, NodeId, ResolverContext};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    /// Not reachable from the entry under any rule.
    Unreachable,
    /// No outgoing move other than exiting.
    DeadEnd,
    /// No outgoing move at all, not even exit.
    KeyboardTrap,
    /// One input token bound to more than one rule.
    ConflictingBinding,
    /// An edge whose literal endpoints are the same node.
    SelfLoop,
    MissingLabel,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::Unreachable => "unreachable",
            DiagnosticKind::DeadEnd => "dead-end",
            DiagnosticKind::KeyboardTrap => "keyboard-trap",
            DiagnosticKind::ConflictingBinding => "conflicting-binding",
            DiagnosticKind::SelfLoop => "self-loop",
            DiagnosticKind::MissingLabel => "missing-label",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}[{}] {}: {}",
            self.severity, self.kind, self.subject, self.message
        )
    }
}

impl Diagnostic {
    fn new(severity: Severity, kind: DiagnosticKind, subject: &str, message: String) -> Self {
        Diagnostic {
            severity,
            kind,
            subject: subject.to_string(),
            message,
        }
    }
}

/// Static structure checks. History-dependent resolvers (`previous`, ring
/// resolvers) resolve to nothing here because the history is empty, so they
/// never count toward reachability.
pub fn validate(graph: &Graph) -> Vec<Diagnostic> {
    validate_with(graph, Execution::default())
}

pub fn validate_with(graph: &Graph, exec: Execution) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let nodes: Vec<&NodeId> = graph.nodes.keys().collect();
    let index: BTreeMap<&NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let rules: Vec<&str> = graph.rules.keys().map(String::as_str).collect();

    // Per-node static successors; `None` in the list stands for the exit.
    let successors: Vec<Vec<Option<usize>>> = exec.map(&nodes, |id| {
        let ctx = ResolverContext::new(id, &[], &graph.entry);
        let mut succ = Vec::new();
        for rule in &rules {
            for t in graph.applicable_edges(id, rule, &ctx) {
                if t.destination.is_exit() {
                    succ.push(None);
                } else if let Some(&i) = index.get(&t.destination) {
                    succ.push(Some(i));
                }
            }
        }
        succ
    });

    let mut seen = vec![false; nodes.len()];
    let mut queue = VecDeque::new();
    let start = index[&graph.entry];
    seen[start] = true;
    queue.push_back(start);
    while let Some(i) = queue.pop_front() {
        for j in successors[i].iter().flatten() {
            if !seen[*j] {
                seen[*j] = true;
                queue.push_back(*j);
            }
        }
    }

    for (i, id) in nodes.iter().enumerate() {
        if !seen[i] {
            out.push(Diagnostic::new(
                Severity::Warning,
                DiagnosticKind::Unreachable,
                id.as_str(),
                format!("not reachable from entry `{}`", graph.entry),
            ));
        }
        let succ = &successors[i];
        if succ.is_empty() {
            out.push(Diagnostic::new(
                Severity::Error,
                DiagnosticKind::KeyboardTrap,
                id.as_str(),
                "no rule moves focus away from this node, including exit".to_string(),
            ));
        } else if succ.iter().all(Option::is_none) {
            out.push(Diagnostic::new(
                Severity::Warning,
                DiagnosticKind::DeadEnd,
                id.as_str(),
                "exit is the only way out".to_string(),
            ));
        }
        let node = &graph.nodes[*id];
        if node.semantics.label.trim().is_empty() {
            out.push(Diagnostic::new(
                Severity::Warning,
                DiagnosticKind::MissingLabel,
                id.as_str(),
                "focusable node has an empty label".to_string(),
            ));
        }
    }

    let mut by_token: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for rule in graph.rules.values() {
        for token in &rule.bindings {
            let owners = by_token.entry(token.as_str()).or_default();
            if !owners.contains(&rule.name.as_str()) {
                owners.push(&rule.name);
            }
        }
    }
    let mut by_word: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for rule in graph.rules.values() {
        by_word
            .entry(rule.name.trim().to_lowercase())
            .or_default()
            .push(&rule.name);
    }
    for (token, owners) in by_token
        .iter()
        .map(|(t, o)| (t.to_string(), o))
        .chain(by_word.iter().map(|(w, o)| (w.clone(), o)))
    {
        if owners.len() > 1 {
            out.push(Diagnostic::new(
                Severity::Warning,
                DiagnosticKind::ConflictingBinding,
                &token,
                format!("bound to rules {}", owners.join(", ")),
            ));
        }
    }

    for edge in graph.edges.values() {
        if let (Endpoint::Literal(s), Endpoint::Literal(t)) = (&edge.source, &edge.target) {
            if s == t {
                out.push(Diagnostic::new(
                    Severity::Warning,
                    DiagnosticKind::SelfLoop,
                    &edge.id,
                    format!("source and target are both `{s}`"),
                ));
            }
        }
    }

    out
}

pub fn error_count(diags: &[Diagnostic]) -> usize {
    diags.iter().filter(|d| d.severity == Severity::Error).count()
}
