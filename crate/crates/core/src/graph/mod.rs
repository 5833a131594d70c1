//! Navigation graph substrate.
//!
//! Nodes own an ordered list of edge ids. Each edge has two endpoints and a
//! non-empty list of rule names; endpoints are either literal node ids or
//! named resolvers evaluated against the focus context at navigation time.
//! Universal edges are stored once at graph level and considered at every
//! node after its local edges.

mod format;
mod resolver;
mod validate;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use rustc_hash::FxBuildHasher;

pub(crate) type FxIndexMap<K, V> = IndexMap<K, V, FxBuildHasher>;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::render::{RenderSpec, SemanticsPayload};

pub use format::{deserialize, deserialize_with, serialize};
pub use resolver::{ResolverFn, ResolverRegistry, BUILTIN_RESOLVERS};
pub use validate::{error_count, validate, validate_with, Diagnostic, DiagnosticKind, Severity};

/// Reserved id of the exit sentinel. Any endpoint may target it; no node may
/// declare it.
pub const EXIT: &str = "::exit";

/// Rule name used by the `first-child` resolver unless a graph overrides it.
pub const DEFAULT_DRILL_RULE: &str = "drill";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn exit() -> Self {
        NodeId(EXIT.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_exit(&self) -> bool {
        self.0 == EXIT
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl std::borrow::Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl PartialEq<str> for NodeId {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for NodeId {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

/// One side of an edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Literal(NodeId),
    Resolver(String),
}

impl Endpoint {
    pub fn literal(id: impl Into<String>) -> Self {
        Endpoint::Literal(NodeId::new(id))
    }

    pub fn resolver(name: impl Into<String>) -> Self {
        Endpoint::Resolver(name.into())
    }

    pub fn as_literal(&self) -> Option<&NodeId> {
        match self {
            Endpoint::Literal(id) => Some(id),
            Endpoint::Resolver(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    TowardTarget,
    TowardSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NavigationRule {
    pub name: String,
    pub direction: Direction,
    #[serde(default)]
    pub bindings: Vec<String>,
}

impl NavigationRule {
    pub fn new(name: impl Into<String>, direction: Direction) -> Self {
        NavigationRule {
            name: name.into(),
            direction,
            bindings: Vec::new(),
        }
    }

    pub fn bound_to<I, S>(mut self, tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.bindings.extend(tokens.into_iter().map(Into::into));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub id: String,
    pub source: Endpoint,
    pub target: Endpoint,
    pub rules: Vec<String>,
}

impl Edge {
    pub fn new<I, S>(id: impl Into<String>, source: Endpoint, target: Endpoint, rules: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Edge {
            id: id.into(),
            source,
            target,
            rules: rules.into_iter().map(Into::into).collect(),
        }
    }

    pub fn has_rule(&self, rule: &str) -> bool {
        self.rules.iter().any(|r| r == rule)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Node {
    pub id: NodeId,
    #[serde(default)]
    pub edges: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub render_spec: Option<RenderSpec>,
    #[serde(default)]
    pub semantics: SemanticsPayload,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub datum: BTreeMap<String, Value>,
}

impl Node {
    pub fn new(id: impl Into<String>) -> Self {
        Node {
            id: NodeId::new(id),
            edges: Vec::new(),
            render_spec: None,
            semantics: SemanticsPayload::default(),
            datum: BTreeMap::new(),
        }
    }

    pub fn with_semantics(mut self, semantics: SemanticsPayload) -> Self {
        self.semantics = semantics;
        self
    }

    pub fn with_render(mut self, spec: RenderSpec) -> Self {
        self.render_spec = Some(spec);
        self
    }

    pub fn with_datum(mut self, key: impl Into<String>, value: impl Into<Value>) -> Self {
        self.datum.insert(key.into(), value.into());
        self
    }

    pub fn with_edges<I, S>(mut self, edges: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.edges.extend(edges.into_iter().map(Into::into));
        self
    }
}

/// Unvalidated graph declarations; also the on-disk document shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GraphDecl {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub rules: Vec<NavigationRule>,
    #[serde(default)]
    pub universal_edges: Vec<String>,
    pub entry: NodeId,
    #[serde(default)]
    pub exit_target: Option<String>,
    #[serde(
        default = "default_drill_rule",
        skip_serializing_if = "is_default_drill_rule"
    )]
    pub drill_rule: String,
}

fn default_drill_rule() -> String {
    DEFAULT_DRILL_RULE.to_string()
}

fn is_default_drill_rule(s: &str) -> bool {
    s == DEFAULT_DRILL_RULE
}

impl GraphDecl {
    pub fn new(entry: impl Into<String>) -> Self {
        GraphDecl {
            nodes: Vec::new(),
            edges: Vec::new(),
            rules: Vec::new(),
            universal_edges: Vec::new(),
            entry: NodeId::new(entry),
            exit_target: None,
            drill_rule: default_drill_rule(),
        }
    }
}

/// Focus history entry: a node that was left, and the rule that left it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub node: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
}

/// What resolvers see when an endpoint is evaluated.
#[derive(Debug, Clone, Copy)]
pub struct ResolverContext<'a> {
    pub current: &'a NodeId,
    /// Previous-node stack, most recent last.
    pub history: &'a [HistoryEntry],
    pub entry: &'a NodeId,
}

impl<'a> ResolverContext<'a> {
    pub fn new(current: &'a NodeId, history: &'a [HistoryEntry], entry: &'a NodeId) -> Self {
        ResolverContext {
            current,
            history,
            entry,
        }
    }

    pub fn previous(&self) -> Option<&'a NodeId> {
        self.history.last().map(|h| &h.node)
    }
}

/// How a successful transition affects the previous-node stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryEffect {
    /// Ordinary move: the origin is pushed.
    Push,
    /// Return along the stack (destination came from the `previous` resolver).
    Pop,
}

/// One candidate move produced by [`Graph::applicable_edges`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub edge: String,
    pub destination: NodeId,
    pub effect: HistoryEffect,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("{owner} references unknown {kind} `{reference}`")]
    DanglingEdgeRef {
        owner: String,
        kind: &'static str,
        reference: String,
    },
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("entry node `{0}` is not declared")]
    UnknownEntry(String),
    #[error("`{EXIT}` is reserved and cannot be declared as a node")]
    ReservedIdUse,
    #[error("unknown resolver `{0}`")]
    UnknownResolver(String),
    #[error("empty {0} id")]
    EmptyId(&'static str),
    #[error("edge `{0}` lists no navigation rules")]
    EmptyRuleList(String),
    #[error("node `{node}` lists edge `{edge}` but is not one of its endpoints")]
    NotAnEndpoint { node: String, edge: String },
    #[error("universal edge `{0}` must use a resolver source")]
    UniversalEdgeNotGeneric(String),
    #[error("node `{node}` has invalid geometry: {reason}")]
    InvalidGeometry { node: String, reason: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

/// A validated, immutable navigation graph.
#[derive(Clone)]
pub struct Graph {
    nodes: FxIndexMap<NodeId, Node>,
    edges: FxIndexMap<String, Edge>,
    rules: FxIndexMap<String, NavigationRule>,
    universal_edges: Vec<String>,
    entry: NodeId,
    exit_target: Option<String>,
    drill_rule: String,
    /// Rules that move along a neighbor ring; anchors are found by skipping
    /// history entries left through these.
    ring_rules: BTreeSet<String>,
    resolvers: Arc<ResolverRegistry>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("nodes", &self.nodes.len())
            .field("edges", &self.edges.len())
            .field("rules", &self.rules.keys().collect::<Vec<_>>())
            .field("entry", &self.entry)
            .finish()
    }
}

/// Structural equality, order-sensitive. Resolver registries are ignored.
impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes.iter().eq(other.nodes.iter())
            && self.edges.iter().eq(other.edges.iter())
            && self.rules.iter().eq(other.rules.iter())
            && self.universal_edges == other.universal_edges
            && self.entry == other.entry
            && self.exit_target == other.exit_target
            && self.drill_rule == other.drill_rule
    }
}

/// Builds graphs against a resolver registry (built-ins plus custom ones).
#[derive(Clone, Default)]
pub struct GraphBuilder {
    resolvers: ResolverRegistry,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_resolver<F>(mut self, name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Graph, &ResolverContext<'_>) -> Option<NodeId> + Send + Sync + 'static,
    {
        self.resolvers.register(name, f);
        self
    }

    pub fn registry(&self) -> &ResolverRegistry {
        &self.resolvers
    }

    pub fn build(&self, decl: GraphDecl) -> Result<Graph, GraphError> {
        build_with(decl, Arc::new(self.resolvers.clone()))
    }
}

/// Validates declarations and freezes them into a [`Graph`] using the
/// built-in resolvers.
pub fn build_graph(decl: GraphDecl) -> Result<Graph, GraphError> {
    GraphBuilder::new().build(decl)
}

fn build_with(decl: GraphDecl, resolvers: Arc<ResolverRegistry>) -> Result<Graph, GraphError> {
    let GraphDecl {
        nodes: node_decls,
        edges: edge_decls,
        rules: rule_decls,
        universal_edges,
        entry,
        exit_target,
        drill_rule,
    } = decl;

    let mut rules = FxIndexMap::with_capacity_and_hasher(rule_decls.len(), FxBuildHasher);
    for rule in rule_decls {
        if rule.name.is_empty() {
            return Err(GraphError::EmptyId("rule"));
        }
        if rules.contains_key(&rule.name) {
            return Err(GraphError::DuplicateId {
                kind: "rule",
                id: rule.name,
            });
        }
        rules.insert(rule.name.clone(), rule);
    }

    let mut nodes = FxIndexMap::with_capacity_and_hasher(node_decls.len(), FxBuildHasher);
    for node in node_decls {
        if node.id.as_str().is_empty() {
            return Err(GraphError::EmptyId("node"));
        }
        if node.id.is_exit() {
            return Err(GraphError::ReservedIdUse);
        }
        if let Some(spec) = &node.render_spec {
            if let Err(reason) = spec.geometry.check() {
                return Err(GraphError::InvalidGeometry {
                    node: node.id.to_string(),
                    reason,
                });
            }
        }
        match nodes.entry(node.id.clone()) {
            indexmap::map::Entry::Occupied(e) => {
                return Err(GraphError::DuplicateId {
                    kind: "node",
                    id: e.key().to_string(),
                })
            }
            indexmap::map::Entry::Vacant(e) => {
                e.insert(node);
            }
        }
    }

    let mut edges: FxIndexMap<String, Edge> =
        FxIndexMap::with_capacity_and_hasher(edge_decls.len(), FxBuildHasher);
    let mut ring_rules = BTreeSet::new();
    for edge in edge_decls {
        if edge.id.is_empty() {
            return Err(GraphError::EmptyId("edge"));
        }
        if edge.rules.is_empty() {
            return Err(GraphError::EmptyRuleList(edge.id));
        }
        for rule in &edge.rules {
            if !rules.contains_key(rule) {
                return Err(GraphError::DanglingEdgeRef {
                    owner: format!("edge `{}`", edge.id),
                    kind: "rule",
                    reference: rule.clone(),
                });
            }
        }
        for endpoint in [&edge.source, &edge.target] {
            match endpoint {
                Endpoint::Literal(id) => {
                    if !id.is_exit() && !nodes.contains_key(id) {
                        return Err(GraphError::DanglingEdgeRef {
                            owner: format!("edge `{}`", edge.id),
                            kind: "node",
                            reference: id.to_string(),
                        });
                    }
                }
                Endpoint::Resolver(name) => {
                    if !resolvers.contains(name) {
                        return Err(GraphError::UnknownResolver(name.clone()));
                    }
                    if resolver::is_ring_resolver(name) {
                        ring_rules.extend(edge.rules.iter().cloned());
                    }
                }
            }
        }
        match edges.entry(edge.id.clone()) {
            indexmap::map::Entry::Occupied(e) => {
                return Err(GraphError::DuplicateId {
                    kind: "edge",
                    id: e.key().clone(),
                })
            }
            indexmap::map::Entry::Vacant(e) => {
                e.insert(edge);
            }
        }
    }

    for node in nodes.values() {
        for edge_id in &node.edges {
            let Some(edge) = edges.get(edge_id) else {
                return Err(GraphError::DanglingEdgeRef {
                    owner: format!("node `{}`", node.id),
                    kind: "edge",
                    reference: edge_id.clone(),
                });
            };
            let participates = |ep: &Endpoint| match ep {
                Endpoint::Literal(id) => *id == node.id,
                Endpoint::Resolver(_) => true,
            };
            if !participates(&edge.source) && !participates(&edge.target) {
                return Err(GraphError::NotAnEndpoint {
                    node: node.id.to_string(),
                    edge: edge_id.clone(),
                });
            }
        }
    }

    let mut seen = HashSet::with_hasher(FxBuildHasher);
    for edge_id in &universal_edges {
        let Some(edge) = edges.get(edge_id) else {
            return Err(GraphError::DanglingEdgeRef {
                owner: "universal edge list".to_string(),
                kind: "edge",
                reference: edge_id.clone(),
            });
        };
        if !seen.insert(edge_id) {
            return Err(GraphError::DuplicateId {
                kind: "universal edge",
                id: edge_id.clone(),
            });
        }
        if !matches!(edge.source, Endpoint::Resolver(_)) {
            return Err(GraphError::UniversalEdgeNotGeneric(edge_id.clone()));
        }
    }

    if !nodes.contains_key(&entry) {
        return Err(GraphError::UnknownEntry(entry.to_string()));
    }

    Ok(Graph {
        nodes,
        edges,
        rules,
        universal_edges,
        entry,
        exit_target,
        drill_rule,
        ring_rules,
        resolvers,
    })
}

impl Graph {
    pub fn entry(&self) -> &NodeId {
        &self.entry
    }

    pub fn exit_target(&self) -> Option<&str> {
        self.exit_target.as_deref()
    }

    pub fn drill_rule(&self) -> &str {
        &self.drill_rule
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn contains_node(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.get(id)
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn rule(&self, name: &str) -> Option<&NavigationRule> {
        self.rules.get(name)
    }

    pub fn rules(&self) -> impl ExactSizeIterator<Item = &NavigationRule> {
        self.rules.values()
    }

    pub fn universal_edges(&self) -> &[String] {
        &self.universal_edges
    }

    pub fn resolvers(&self) -> &ResolverRegistry {
        &self.resolvers
    }

    pub(crate) fn is_ring_rule(&self, rule: &str) -> bool {
        self.ring_rules.contains(rule)
    }

    /// Evaluates an endpoint. Literal endpoints resolve to themselves.
    pub fn resolve_endpoint(
        &self,
        endpoint: &Endpoint,
        ctx: &ResolverContext<'_>,
    ) -> Result<Option<NodeId>, GraphError> {
        match endpoint {
            Endpoint::Literal(id) => Ok(Some(id.clone())),
            Endpoint::Resolver(name) => {
                let f = self
                    .resolvers
                    .get(name)
                    .ok_or_else(|| GraphError::UnknownResolver(name.clone()))?;
                Ok(f(self, ctx))
            }
        }
    }

    fn resolve(&self, endpoint: &Endpoint, ctx: &ResolverContext<'_>) -> Option<NodeId> {
        self.resolve_endpoint(endpoint, ctx).ok().flatten()
    }

    /// Candidate moves for `rule` at `node`: local edges in declaration
    /// order, then universal edges. Entries whose destination does not
    /// resolve are dropped. Unknown nodes or rules yield an empty list.
    pub fn applicable_edges(
        &self,
        node: &NodeId,
        rule: &str,
        ctx: &ResolverContext<'_>,
    ) -> Vec<Transition> {
        let mut out = Vec::new();
        self.scan_edges(node, rule, ctx, |t| {
            out.push(t);
            true
        });
        out
    }

    /// First applicable transition, without collecting the rest.
    pub fn first_transition(
        &self,
        node: &NodeId,
        rule: &str,
        ctx: &ResolverContext<'_>,
    ) -> Option<Transition> {
        let mut found = None;
        self.scan_edges(node, rule, ctx, |t| {
            found = Some(t);
            false
        });
        found
    }

    fn scan_edges<F>(&self, node_id: &NodeId, rule: &str, ctx: &ResolverContext<'_>, mut sink: F)
    where
        F: FnMut(Transition) -> bool,
    {
        let (Some(node), Some(rule_decl)) = (self.nodes.get(node_id), self.rules.get(rule)) else {
            return;
        };
        let candidates = node.edges.iter().chain(self.universal_edges.iter());
        for edge_id in candidates {
            let Some(edge) = self.edges.get(edge_id) else {
                continue;
            };
            if !edge.has_rule(rule) {
                continue;
            }
            let (here, there) = match rule_decl.direction {
                Direction::TowardTarget => (&edge.source, &edge.target),
                Direction::TowardSource => (&edge.target, &edge.source),
            };
            let at_here = match here {
                Endpoint::Literal(id) => id == node_id,
                Endpoint::Resolver(_) => self.resolve(here, ctx).as_ref() == Some(node_id),
            };
            if !at_here {
                continue;
            }
            let Some(destination) = self.resolve(there, ctx) else {
                continue;
            };
            let effect = match there {
                Endpoint::Resolver(name) if name == resolver::PREVIOUS => HistoryEffect::Pop,
                _ => HistoryEffect::Push,
            };
            let keep_going = sink(Transition {
                edge: edge_id.clone(),
                destination,
                effect,
            });
            if !keep_going {
                return;
            }
        }
    }

    /// Literal destinations of `node` under `rule`, in edge order. Resolver
    /// endpoints are skipped, which keeps resolvers built on top of this free
    /// of recursion.
    pub fn literal_destinations(&self, node_id: &NodeId, rule: &str) -> Vec<NodeId> {
        let (Some(node), Some(rule_decl)) = (self.nodes.get(node_id), self.rules.get(rule)) else {
            return Vec::new();
        };
        node.edges
            .iter()
            .chain(self.universal_edges.iter())
            .filter_map(|id| self.edges.get(id))
            .filter(|e| e.has_rule(rule))
            .filter_map(|e| {
                let (here, there) = match rule_decl.direction {
                    Direction::TowardTarget => (&e.source, &e.target),
                    Direction::TowardSource => (&e.target, &e.source),
                };
                match (here, there) {
                    (Endpoint::Literal(h), Endpoint::Literal(t)) if h == node_id => Some(t.clone()),
                    _ => None,
                }
            })
            .collect()
    }

    /// The first universal edge that returns to the previous node, with the
    /// first rule it carries.
    pub fn history_edge(&self) -> Option<(&str, &str)> {
        self.universal_edges
            .iter()
            .filter_map(|id| self.edges.get(id))
            .find(|e| {
                matches!(&e.source, Endpoint::Resolver(n) if n == resolver::CURRENT)
                    && matches!(&e.target, Endpoint::Resolver(n) if n == resolver::PREVIOUS)
            })
            .map(|e| (e.id.as_str(), e.rules[0].as_str()))
    }

    /// Returns the declarations this graph was built from.
    pub fn to_decl(&self) -> GraphDecl {
        GraphDecl {
            nodes: self.nodes.values().cloned().collect(),
            edges: self.edges.values().cloned().collect(),
            rules: self.rules.values().cloned().collect(),
            universal_edges: self.universal_edges.clone(),
            entry: self.entry.clone(),
            exit_target: self.exit_target.clone(),
            drill_rule: self.drill_rule.clone(),
        }
    }
}
