//! Focus state machine.
//!
//! A [`Session`] holds the current node, the previous-node stack and whether
//! focus is still inside the graph. Moves pick the first applicable edge for
//! a rule; a destination of [`EXIT`](crate::graph::EXIT) ends the session.
//! Blocked moves leave the state untouched.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, HistoryEffect, HistoryEntry, Node, NodeId, ResolverContext};

pub const DEFAULT_HISTORY_CAP: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveStatus {
    Moved,
    Blocked,
    Exited,
    Entered,
}

impl fmt::Display for MoveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MoveStatus::Moved => "moved",
            MoveStatus::Blocked => "blocked",
            MoveStatus::Exited => "exited",
            MoveStatus::Entered => "entered",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveResult {
    pub status: MoveStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<String>,
}

impl MoveResult {
    fn blocked(from: &NodeId, rule: Option<&str>) -> Self {
        MoveResult {
            status: MoveStatus::Blocked,
            from: Some(from.clone()),
            to: None,
            rule: rule.map(str::to_string),
            edge: None,
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self.status, MoveStatus::Moved | MoveStatus::Exited)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("session is inactive (focus has exited the graph)")]
    InactiveSession,
    #[error("entry node `{0}` is not declared")]
    UnknownEntry(String),
}

/// Comparable copy of a session's mutable state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FocusSnapshot {
    pub current: NodeId,
    pub history: Vec<HistoryEntry>,
    pub active: bool,
}

/// One focus session over a shared graph.
#[derive(Debug, Clone)]
pub struct Session {
    graph: Arc<Graph>,
    current: NodeId,
    history: Vec<HistoryEntry>,
    active: bool,
    history_cap: usize,
}

impl Session {
    /// Starts a session at the graph entry, or at `entry_override`.
    pub fn enter(
        graph: Arc<Graph>,
        entry_override: Option<&str>,
    ) -> Result<(Session, MoveResult), EngineError> {
        let entry = match entry_override {
            Some(id) if graph.contains_node(id) => NodeId::new(id),
            Some(id) => return Err(EngineError::UnknownEntry(id.to_string())),
            None => graph.entry().clone(),
        };
        let result = MoveResult {
            status: MoveStatus::Entered,
            from: None,
            to: Some(entry.clone()),
            rule: None,
            edge: None,
        };
        let session = Session {
            graph,
            current: entry,
            history: Vec::new(),
            active: true,
            history_cap: DEFAULT_HISTORY_CAP,
        };
        Ok((session, result))
    }

    /// Caps the previous-node stack; the oldest entries are dropped first.
    pub fn with_history_cap(mut self, cap: usize) -> Self {
        self.history_cap = cap.max(1);
        self.trim_history();
        self
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn current(&self) -> &NodeId {
        &self.current
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn depth(&self) -> usize {
        self.history.len()
    }

    pub fn snapshot(&self) -> FocusSnapshot {
        FocusSnapshot {
            current: self.current.clone(),
            history: self.history.clone(),
            active: self.active,
        }
    }

    pub fn current_node(&self) -> Result<&Node, EngineError> {
        self.ensure_active()?;
        Ok(self
            .graph
            .node(self.current.as_str())
            .expect("active sessions always focus a declared node"))
    }

    fn ensure_active(&self) -> Result<(), EngineError> {
        if self.active {
            Ok(())
        } else {
            Err(EngineError::InactiveSession)
        }
    }

    fn context(&self) -> ResolverContext<'_> {
        ResolverContext::new(&self.current, &self.history, self.graph.entry())
    }

    /// Executes a named rule.
    pub fn navigate(&mut self, rule: &str) -> Result<MoveResult, EngineError> {
        self.ensure_active()?;
        if self.graph.rule(rule).is_none() {
            return Err(EngineError::UnknownRule(rule.to_string()));
        }
        let transition = self
            .graph
            .first_transition(&self.current, rule, &self.context());
        let Some(t) = transition else {
            return Ok(MoveResult::blocked(&self.current, Some(rule)));
        };

        let from = self.current.clone();
        let mut result = MoveResult {
            status: MoveStatus::Moved,
            from: Some(from.clone()),
            to: Some(t.destination.clone()),
            rule: Some(rule.to_string()),
            edge: Some(t.edge),
        };
        if t.destination.is_exit() {
            self.active = false;
            result.status = MoveStatus::Exited;
            return Ok(result);
        }
        match t.effect {
            HistoryEffect::Pop => {
                self.history.pop();
            }
            HistoryEffect::Push => {
                self.history.push(HistoryEntry {
                    node: from,
                    rule: Some(rule.to_string()),
                });
                self.trim_history();
            }
        }
        self.current = t.destination;
        Ok(result)
    }

    /// Returns to the top of the previous-node stack and pops it. Equivalent
    /// to following a `current -> previous` universal edge.
    pub fn undo(&mut self) -> Result<MoveResult, EngineError> {
        self.ensure_active()?;
        let (edge, rule) = match self.graph.history_edge() {
            Some((e, r)) => (Some(e.to_string()), Some(r.to_string())),
            None => (None, None),
        };
        let Some(prev) = self.history.pop() else {
            return Ok(MoveResult::blocked(&self.current, rule.as_deref()));
        };
        let from = std::mem::replace(&mut self.current, prev.node);
        Ok(MoveResult {
            status: MoveStatus::Moved,
            from: Some(from),
            to: Some(self.current.clone()),
            rule,
            edge,
        })
    }

    fn trim_history(&mut self) {
        if self.history.len() > self.history_cap {
            let excess = self.history.len() - self.history_cap;
            self.history.drain(..excess);
        }
    }
}
