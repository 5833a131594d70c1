//! Deterministic constructors from high-level structure descriptions.
//!
//! Every builder emits literal edges for its structure plus two universal
//! edges: `current -> exit` and `current -> previous` (undo). Edge ids are
//! derived from their endpoints, so output is a pure function of the spec.

mod adjacency;
mod dual;
mod list;
mod tree;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::graph::{
    FxIndexMap,
    build_graph, Direction, Edge, Endpoint, Graph, GraphDecl, GraphError, NavigationRule, Node,
    NodeId,
};
use crate::render::{RenderSpec, Role, SemanticsPayload};

pub use adjacency::{build_adjacency, AdjacencyRules, AdjacencySpec};
pub use dual::{build_dual_hierarchy, CellDecl, Dimension, DualHierarchySpec, DualRules};
pub use list::{build_list, ListRules, ListSpec};
pub use tree::{build_tree, TreeNodeDecl, TreeRules, TreeSpec};

pub const EXIT_EDGE: &str = "any-exit";
pub const RETURN_EDGE: &str = "any-return";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("a list needs at least one item")]
    EmptyList,
    #[error("tree has no root")]
    NoRoot,
    #[error("tree has more than one root: {0:?}")]
    MultipleRoots(Vec<String>),
    #[error("parent relation has a cycle through `{0}`")]
    CycleDetected(String),
    #[error("node `{node}` names unknown parent `{parent}`")]
    UnknownParent { node: String, parent: String },
    #[error("expected {expected} cells, found {found}")]
    CellCountMismatch { expected: usize, found: usize },
    #[error("cell `{cell}` references unknown category `{category}`")]
    UnknownCategory { cell: String, category: String },
    #[error("cell for (`{a}`, `{b}`) is declared more than once")]
    DuplicateCell { a: String, b: String },
    #[error("border references unknown region `{0}`")]
    UnknownRegionInBorder(String),
    #[error("region `{0}` cannot border itself")]
    SelfBorder(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A rule name with its default input tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleBinding {
    pub name: String,
    #[serde(default)]
    pub bindings: Vec<String>,
}

impl RuleBinding {
    pub fn new(name: &str, bindings: &[&str]) -> Self {
        RuleBinding {
            name: name.to_string(),
            bindings: bindings.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Exit and undo rules attached to every node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardRules {
    #[serde(default = "StandardRules::default_exit")]
    pub exit: RuleBinding,
    #[serde(default = "StandardRules::default_undo")]
    pub undo: RuleBinding,
}

impl StandardRules {
    fn default_exit() -> RuleBinding {
        RuleBinding::new("exit", &["Escape"])
    }

    fn default_undo() -> RuleBinding {
        RuleBinding::new("undo", &["KeyZ"])
    }
}

impl Default for StandardRules {
    fn default() -> Self {
        StandardRules {
            exit: Self::default_exit(),
            undo: Self::default_undo(),
        }
    }
}

/// Common node description used by every builder spec.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ItemDecl {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_ref: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub datum: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub render_spec: Option<RenderSpec>,
}

impl ItemDecl {
    pub fn new(id: impl Into<String>) -> Self {
        ItemDecl {
            id: id.into(),
            ..Default::default()
        }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub(crate) fn to_node(&self, default_role: Role, position: Option<(usize, usize)>) -> Node {
        let mut semantics = SemanticsPayload::new(
            self.role.unwrap_or(default_role),
            self.label.clone().unwrap_or_else(|| self.id.clone()),
        )
        .described(self.description.clone());
        semantics.external_ref = self.external_ref.clone();
        if let Some((index, count)) = position {
            semantics = semantics.at(index, count);
        }
        Node {
            id: NodeId::new(&self.id),
            edges: Vec::new(),
            render_spec: self.render_spec.clone(),
            semantics,
            datum: self.datum.clone(),
        }
    }
}

/// Any builder spec, tagged by `kind`. This is the `build` file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[allow(clippy::large_enum_variant)]
pub enum BuildSpec {
    List(ListSpec),
    Tree(TreeSpec),
    DualHierarchy(DualHierarchySpec),
    Adjacency(AdjacencySpec),
}

impl BuildSpec {
    pub fn build(&self) -> Result<Graph, BuildError> {
        match self {
            BuildSpec::List(s) => build_list(s),
            BuildSpec::Tree(s) => build_tree(s),
            BuildSpec::DualHierarchy(s) => build_dual_hierarchy(s),
            BuildSpec::Adjacency(s) => build_adjacency(s),
        }
    }
}

/// Accumulates declarations and keeps node edge lists in sync.
#[derive(Debug, Default)]
pub(crate) struct Assembler {
    nodes: FxIndexMap<String, Node>,
    edges: Vec<Edge>,
    rules: Vec<NavigationRule>,
    universal: Vec<String>,
}

impl Assembler {
    pub fn with_capacity(nodes: usize, edges: usize) -> Self {
        Assembler {
            nodes: FxIndexMap::with_capacity_and_hasher(nodes, Default::default()),
            edges: Vec::with_capacity(edges),
            ..Default::default()
        }
    }

    /// Adds a node and returns its position.
    pub fn add_node(&mut self, node: Node) -> Result<usize, BuildError> {
        match self.nodes.entry(node.id.as_str().to_string()) {
            indexmap::map::Entry::Occupied(e) => Err(BuildError::DuplicateId(e.key().clone())),
            indexmap::map::Entry::Vacant(e) => {
                let at = e.index();
                e.insert(node);
                Ok(at)
            }
        }
    }

    pub fn id_at(&self, at: usize) -> &str {
        self.nodes.get_index(at).map_or("", |(k, _)| k.as_str())
    }

    pub fn rule(&mut self, binding: &RuleBinding, direction: Direction) {
        self.rules.push(
            NavigationRule::new(&binding.name, direction).bound_to(binding.bindings.iter().cloned()),
        );
    }

    /// Adds a literal edge and lists it on both endpoint nodes.
    pub fn link(&mut self, kind: &str, source: &str, target: &str, rules: &[&str]) {
        let mut id = String::with_capacity(kind.len() + source.len() + target.len() + 2);
        for part in [kind, ":", source, ">", target] {
            id.push_str(part);
        }
        self.edges.push(Edge::new(
            id.clone(),
            Endpoint::literal(source),
            Endpoint::literal(target),
            rules.iter().copied(),
        ));
        self.attach(source, &id);
        if source != target {
            self.attach(target, &id);
        }
    }

    /// [`Assembler::link`] by node position, skipping the id lookups.
    pub fn link_at(&mut self, kind: &str, source: usize, target: usize, rules: &[&str]) {
        let (src, tgt) = (self.id_at(source), self.id_at(target));
        let mut id = String::with_capacity(kind.len() + src.len() + tgt.len() + 2);
        for part in [kind, ":", src, ">", tgt] {
            id.push_str(part);
        }
        let edge = Edge::new(
            id.as_str(),
            Endpoint::literal(src),
            Endpoint::literal(tgt),
            rules.iter().copied(),
        );
        self.edges.push(edge);
        if source != target {
            if let Some((_, n)) = self.nodes.get_index_mut(target) {
                n.edges.push(id.clone());
            }
        }
        if let Some((_, n)) = self.nodes.get_index_mut(source) {
            n.edges.push(id);
        }
    }

    /// Adds a resolver-based edge without attaching it anywhere.
    pub fn generic(&mut self, id: &str, source: &str, target: &str, rules: &[&str]) {
        self.edges.push(Edge::new(
            id,
            Endpoint::resolver(source),
            Endpoint::resolver(target),
            rules.iter().copied(),
        ));
    }

    pub fn attach(&mut self, node: &str, edge: &str) {
        if let Some(n) = self.nodes.get_mut(node) {
            n.edges.push(edge.to_string());
        }
    }

    pub fn standard(&mut self, std: &StandardRules) {
        self.rule(&std.exit, Direction::TowardTarget);
        self.rule(&std.undo, Direction::TowardTarget);
        self.generic(EXIT_EDGE, "current", "exit", &[&std.exit.name]);
        self.generic(RETURN_EDGE, "current", "previous", &[&std.undo.name]);
        self.universal.push(EXIT_EDGE.to_string());
        self.universal.push(RETURN_EDGE.to_string());
    }

    pub fn into_decl(self, entry: &str, exit_target: Option<String>, drill_rule: &str) -> GraphDecl {
        let mut decl = GraphDecl::new(entry);
        decl.nodes = self.nodes.into_values().collect();
        decl.edges = self.edges;
        decl.rules = self.rules;
        decl.universal_edges = self.universal;
        decl.exit_target = exit_target;
        decl.drill_rule = drill_rule.to_string();
        decl
    }

    pub fn finish(
        self,
        entry: &str,
        exit_target: Option<String>,
        drill_rule: &str,
    ) -> Result<Graph, BuildError> {
        Ok(build_graph(self.into_decl(entry, exit_target, drill_rule))?)
    }
}

/// Links `ids` in sequence with `forward`/`backward` on each edge; closes the
/// loop when `circular` and there are at least two items.
pub(crate) fn chain(
    asm: &mut Assembler,
    kind: &str,
    ids: &[&str],
    forward: &str,
    backward: &str,
    circular: bool,
) {
    for pair in ids.windows(2) {
        asm.link(kind, pair[0], pair[1], &[forward, backward]);
    }
    if circular && ids.len() > 1 {
        asm.link(kind, ids[ids.len() - 1], ids[0], &[forward, backward]);
    }
}

pub(crate) fn chain_at(
    asm: &mut Assembler,
    kind: &str,
    at: &[usize],
    forward: &str,
    backward: &str,
    circular: bool,
) {
    for pair in at.windows(2) {
        asm.link_at(kind, pair[0], pair[1], &[forward, backward]);
    }
    if circular && at.len() > 1 {
        asm.link_at(kind, at[at.len() - 1], at[0], &[forward, backward]);
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use std::collections::{BTreeSet, VecDeque};

    use crate::graph::{Graph, NodeId, ResolverContext};

    /// Reachability by brute-force BFS over every (node, rule) pair. Kept
    /// separate from `validate` so the two can check each other.
    pub fn reachable(graph: &Graph) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([graph.entry().clone()]);
        seen.insert(graph.entry().clone());
        while let Some(n) = queue.pop_front() {
            for rule in graph.rules() {
                let ctx = ResolverContext::new(&n, &[], graph.entry());
                for t in graph.applicable_edges(&n, &rule.name, &ctx) {
                    if !t.destination.is_exit() && seen.insert(t.destination.clone()) {
                        queue.push_back(t.destination);
                    }
                }
            }
        }
        seen
    }
}
