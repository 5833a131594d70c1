//! Scene-spec ingestion: extract nodes, describe them, infer edges, build.
//!
//! A scene spec is a frozen JSON description of a rendered chart:
//!
//! ```json
//! {
//!   "title": "Trophies by team",
//!   "axes": [{"axisId": "x", "orientation": "bottom", "title": "Team", "ticks": ["Arsenal"]}],
//!   "marks": [{"markId": "m1", "markType": "rect",
//!              "bounds": {"x": 10, "y": 20, "width": 30, "height": 40},
//!              "datum": {"team": "Arsenal", "value": 3}, "group": "BPL"}],
//!   "legend": {"legendId": "legend", "title": "Contest", "entries": ["BPL"]}
//! }
//! ```
//!
//! Every key except `marks[].markId`, `markType` and `bounds` is optional.
//! Node order is title, axes, marks, legend, legend entries.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::builders::{chain_at, Assembler, BuildError, RuleBinding, StandardRules};
use crate::exec::Execution;
use crate::graph::{build_graph, Direction, Graph, GraphDecl, GraphError, Node, NodeId};
use crate::render::{Geometry, RenderSpec, Role, SemanticsPayload};

pub const MARKS_GROUP: &str = "group:marks";
pub const AXES_GROUP: &str = "group:axes";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractError {
    #[error("scene has no title, marks, axes or legend")]
    EmptyScene,
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("mark `{mark}` has invalid bounds: {reason}")]
    InvalidBounds { mark: String, reason: String },
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("malformed template: {0}")]
    MalformedTemplate(String),
    #[error("node `{node}` has no field `{field}` required by the template")]
    MissingTemplateField { node: String, field: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl From<BuildError> for ExtractError {
    fn from(e: BuildError) -> Self {
        match e {
            BuildError::DuplicateId(id) => ExtractError::DuplicateId(id),
            BuildError::Graph(g) => ExtractError::Graph(g),
            other => ExtractError::MalformedTemplate(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MarkSpec {
    pub mark_id: String,
    pub mark_type: String,
    pub bounds: Bounds,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub datum: BTreeMap<String, Value>,
    /// Series or category the mark belongs to; used as its group label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Top,
    Bottom,
    Left,
    Right,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Top => "Top",
            Orientation::Bottom => "Bottom",
            Orientation::Left => "Left",
            Orientation::Right => "Right",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AxisSpec {
    pub axis_id: String,
    pub orientation: Orientation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ticks: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LegendSpec {
    pub legend_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default)]
    pub entries: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SceneSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub axes: Vec<AxisSpec>,
    #[serde(default)]
    pub marks: Vec<MarkSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legend: Option<LegendSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One forward/backward chain in render order.
    #[default]
    Flat,
    /// Axes, marks and legend entries each nested under a group node.
    Grouped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtractionOptions {
    #[serde(default)]
    pub mode: Mode,
    /// A template id (`default`, `values`, `position`) or literal template
    /// text containing `{field}` placeholders.
    #[serde(default = "default_template")]
    pub description_template: String,
}

fn default_template() -> String {
    "default".to_string()
}

impl Default for ExtractionOptions {
    fn default() -> Self {
        ExtractionOptions {
            mode: Mode::Flat,
            description_template: default_template(),
        }
    }
}

impl ExtractionOptions {
    pub fn new(mode: Mode) -> Self {
        ExtractionOptions {
            mode,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneNodeKind {
    Title,
    Axis,
    Mark,
    Legend,
    LegendEntry,
}

/// An extracted node with the scene context edges and templates need.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneNode<'a> {
    pub kind: SceneNodeKind,
    pub node: Node,
    /// Borrowed from the scene; empty for scaffold nodes.
    pub group: &'a str,
    pub mark_type: &'a str,
    /// 1-based position among nodes of the same kind.
    pub ordinal: (usize, usize),
}

fn value_text(v: &Value) -> String {
    let mut out = String::new();
    push_value(&mut out, v);
    out
}

fn push_value(out: &mut String, v: &Value) {
    match v {
        Value::String(s) => out.push_str(s),
        Value::Number(n) => push_display(out, n),
        other => push_display(out, other),
    }
}

fn push_display(out: &mut String, v: impl std::fmt::Display) {
    use std::fmt::Write;
    let _ = write!(out, "{v}");
}

fn check_bounds(mark: &MarkSpec) -> Result<(), ExtractError> {
    let b = mark.bounds;
    let bad = |reason: &str| ExtractError::InvalidBounds {
        mark: mark.mark_id.clone(),
        reason: reason.to_string(),
    };
    if ![b.x, b.y, b.width, b.height].iter().all(|v| v.is_finite()) {
        return Err(bad("non-finite value"));
    }
    if b.x < 0.0 || b.y < 0.0 || b.width < 0.0 || b.height < 0.0 {
        return Err(bad("negative value"));
    }
    Ok(())
}

pub fn extract_nodes(scene: &SceneSpec) -> Result<Vec<SceneNode<'_>>, ExtractError> {
    extract_nodes_with(scene, Execution::default())
}

pub fn extract_nodes_with(
    scene: &SceneSpec,
    exec: Execution,
) -> Result<Vec<SceneNode<'_>>, ExtractError> {
    if scene.title.is_none() && scene.marks.is_empty() && scene.axes.is_empty() && scene.legend.is_none()
    {
        return Err(ExtractError::EmptyScene);
    }
    let mut out = Vec::with_capacity(scene.marks.len() + scene.axes.len() + 4);
    let scaffold = |kind, node: Node, ordinal| SceneNode {
        kind,
        node,
        group: "",
        mark_type: "",
        ordinal,
    };

    if let Some(title) = &scene.title {
        let node = Node::new("title").with_semantics(SemanticsPayload::new(Role::Text, title));
        out.push(scaffold(SceneNodeKind::Title, node, (1, 1)));
    }
    let n_axes = scene.axes.len();
    for (i, axis) in scene.axes.iter().enumerate() {
        let label = axis.title.clone().unwrap_or_else(|| axis.axis_id.clone());
        let mut description = format!("{} axis", axis.orientation);
        if let (Some(first), Some(last)) = (axis.ticks.first(), axis.ticks.last()) {
            description.push_str(&format!(
                ", {} to {}",
                value_text(first),
                value_text(last)
            ));
        }
        let node = Node::new(axis.axis_id.as_str()).with_semantics(
            SemanticsPayload::new(Role::Group, label)
                .described(description)
                .at(i + 1, n_axes),
        );
        out.push(scaffold(SceneNodeKind::Axis, node, (i + 1, n_axes)));
    }

    let n_marks = scene.marks.len();
    exec.try_extend_indexed(&mut out, &scene.marks, |i, mark| -> Result<_, ExtractError> {
        check_bounds(mark)?;
        let b = mark.bounds;
        let node = Node {
            id: NodeId::new(&mark.mark_id),
            edges: Vec::new(),
            render_spec: Some(RenderSpec::new(Geometry::rect(b.x, b.y, b.width, b.height))),
            semantics: SemanticsPayload::new(Role::Image, mark.mark_id.clone()),
            datum: mark.datum.clone(),
        };
        Ok(SceneNode {
            kind: SceneNodeKind::Mark,
            node,
            group: mark.group.as_deref().unwrap_or(&mark.mark_type),
            mark_type: &mark.mark_type,
            ordinal: (i + 1, n_marks),
        })
    })?;

    if let Some(legend) = &scene.legend {
        let n = legend.entries.len();
        let label = legend.title.clone().unwrap_or_else(|| "Legend".to_string());
        let noun = if n == 1 { "entry" } else { "entries" };
        let node = Node::new(legend.legend_id.as_str()).with_semantics(
            SemanticsPayload::new(Role::Group, label).described(format!("Legend, {n} {noun}")),
        );
        out.push(scaffold(SceneNodeKind::Legend, node, (1, 1)));
        for (i, entry) in legend.entries.iter().enumerate() {
            let id = format!("{}/{}", legend.legend_id, i + 1);
            let node = Node::new(id)
                .with_semantics(SemanticsPayload::new(Role::Listitem, entry).at(i + 1, n));
            out.push(scaffold(SceneNodeKind::LegendEntry, node, (i + 1, n)));
        }
    }

    let mut seen = HashSet::with_capacity_and_hasher(out.len(), FxBuildHasher);
    for n in &out {
        if !seen.insert(n.node.id.as_str()) {
            return Err(ExtractError::DuplicateId(n.node.id.to_string()));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Field(String),
}

/// A parsed description template. `{name}` is a placeholder and `{{` / `}}`
/// are literal braces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pieces: Vec<Piece>,
}

pub const TEMPLATE_IDS: &[&str] = &["default", "values", "position"];

impl Template {
    /// Resolves a template id, or parses the argument as template text when
    /// it contains a brace.
    pub fn resolve(id_or_text: &str) -> Result<Self, ExtractError> {
        let text = match id_or_text {
            "default" => "{group}. {values}. {index} of {count}.",
            "values" => "{values}.",
            "position" => "{index} of {count}.",
            t if t.contains('{') => t,
            other => return Err(ExtractError::UnknownTemplate(other.to_string())),
        };
        Self::parse(text)
    }

    pub fn parse(text: &str) -> Result<Self, ExtractError> {
        let mut pieces = Vec::new();
        let mut lit = String::new();
        let mut chars = text.chars().peekable();
        while let Some(c) = chars.next() {
            match c {
                '{' if chars.peek() == Some(&'{') => {
                    chars.next();
                    lit.push('{');
                }
                '}' if chars.peek() == Some(&'}') => {
                    chars.next();
                    lit.push('}');
                }
                '{' => {
                    let mut name = String::new();
                    loop {
                        match chars.next() {
                            Some('}') => break,
                            Some('{') | None => {
                                return Err(ExtractError::MalformedTemplate(format!(
                                    "unclosed placeholder in `{text}`"
                                )))
                            }
                            Some(ch) => name.push(ch),
                        }
                    }
                    let name = name.trim().to_string();
                    if name.is_empty() {
                        return Err(ExtractError::MalformedTemplate(format!(
                            "empty placeholder in `{text}`"
                        )));
                    }
                    if !lit.is_empty() {
                        pieces.push(Piece::Text(std::mem::take(&mut lit)));
                    }
                    pieces.push(Piece::Field(name));
                }
                '}' => {
                    return Err(ExtractError::MalformedTemplate(format!(
                        "stray `}}` in `{text}`"
                    )))
                }
                other => lit.push(other),
            }
        }
        if !lit.is_empty() {
            pieces.push(Piece::Text(lit));
        }
        Ok(Template { pieces })
    }

    /// Built-in fields: `index`, `count`, `group`, `type`, `id` and `values`
    /// (all datum fields as `key: value`, comma separated). Anything else is
    /// looked up in the datum.
    pub fn render(&self, node: &SceneNode) -> Result<String, ExtractError> {
        let mut out = String::with_capacity(64);
        for piece in &self.pieces {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Field(f) => match f.as_str() {
                    "index" => push_display(&mut out, node.ordinal.0),
                    "count" => push_display(&mut out, node.ordinal.1),
                    "group" => out.push_str(node.group),
                    "type" => out.push_str(node.mark_type),
                    "id" => out.push_str(node.node.id.as_str()),
                    "values" => {
                        for (i, (k, v)) in node.node.datum.iter().enumerate() {
                            if i > 0 {
                                out.push_str(", ");
                            }
                            out.push_str(k);
                            out.push_str(": ");
                            push_value(&mut out, v);
                        }
                    }
                    field => match node.node.datum.get(field) {
                        Some(v) => push_value(&mut out, v),
                        None => {
                            return Err(ExtractError::MissingTemplateField {
                                node: node.node.id.to_string(),
                                field: field.to_string(),
                            })
                        }
                    },
                },
            }
        }
        Ok(out)
    }
}

/// Fills mark descriptions from the template. Scaffold nodes keep the
/// descriptions extraction gave them.
pub fn describe_nodes(
    nodes: &mut [SceneNode],
    template: &Template,
    exec: Execution,
) -> Result<(), ExtractError> {
    exec.try_for_each_mut(nodes, |_, n| {
        if n.kind == SceneNodeKind::Mark {
            n.node.semantics.description = template.render(n)?;
        }
        Ok(())
    })
}

pub fn flat_rules() -> (RuleBinding, RuleBinding) {
    (
        RuleBinding::new("forward", &["ArrowRight", "ArrowDown"]),
        RuleBinding::new("backward", &["ArrowLeft", "ArrowUp"]),
    )
}

/// Connects extracted nodes. Flat mode chains everything in order; grouped
/// mode chains the top level (title, axes group, marks group, legend) and
/// nests each group's members behind `drill` / `up`.
pub fn infer_edges(nodes: Vec<SceneNode>, mode: Mode) -> Result<GraphDecl, ExtractError> {
    let (forward, backward) = flat_rules();
    let drill = RuleBinding::new("drill", &["Enter"]);
    let up = RuleBinding::new("up", &["Backspace"]);
    // grouped mode adds two group nodes and up to twice as many edges
    let mut asm = Assembler::with_capacity(nodes.len() + 2, 2 * nodes.len() + 4);
    asm.rule(&forward, Direction::TowardTarget);
    asm.rule(&backward, Direction::TowardSource);
    let (fw, bw) = (forward.name.as_str(), backward.name.as_str());

    let entry_at = match mode {
        Mode::Flat => {
            let n = nodes.len();
            for sn in nodes {
                asm.add_node(sn.node)?;
            }
            let all: Vec<usize> = (0..n).collect();
            chain_at(&mut asm, "seq", &all, fw, bw, false);
            0
        }
        Mode::Grouped => {
            asm.rule(&drill, Direction::TowardTarget);
            asm.rule(&up, Direction::TowardSource);
            let n = nodes.len();
            let count = |k| nodes.iter().filter(|n| n.kind == k).count();
            let (n_axes, n_marks) = (count(SceneNodeKind::Axis), count(SceneNodeKind::Mark));
            let legend_at = nodes.iter().position(|n| n.kind == SceneNodeKind::Legend);
            // parent id -> (parent position, member positions)
            let mut members: BTreeMap<String, (usize, Vec<usize>)> = BTreeMap::new();
            let mut top: Vec<usize> = Vec::new();
            let mut group_nodes: Vec<Node> = Vec::new();
            for (at, sn) in nodes.iter().enumerate() {
                let parent = match sn.kind {
                    SceneNodeKind::Title | SceneNodeKind::Legend => {
                        top.push(at);
                        continue;
                    }
                    SceneNodeKind::LegendEntry => {
                        let Some(legend) = legend_at else { continue };
                        members
                            .entry(nodes[legend].node.id.to_string())
                            .or_insert_with(|| (legend, Vec::new()))
                            .1
                            .push(at);
                        continue;
                    }
                    SceneNodeKind::Axis => AXES_GROUP,
                    SceneNodeKind::Mark => MARKS_GROUP,
                };
                if !members.contains_key(parent) {
                    let parent_at = n + group_nodes.len();
                    top.push(parent_at);
                    let (label, description) = if parent == AXES_GROUP {
                        ("Axes", format!("{n_axes} axes"))
                    } else {
                        ("Data marks", format!("{n_marks} marks"))
                    };
                    group_nodes.push(Node::new(parent).with_semantics(
                        SemanticsPayload::new(Role::Group, label).described(description),
                    ));
                    members.insert(parent.to_string(), (parent_at, Vec::new()));
                }
                members.get_mut(parent).expect("inserted above").1.push(at);
            }
            for sn in nodes {
                asm.add_node(sn.node)?;
            }
            for g in group_nodes {
                asm.add_node(g)?;
            }
            chain_at(&mut asm, "seq", &top, fw, bw, false);
            for (parent, kids) in members.values() {
                asm.link_at("drill", *parent, kids[0], &[&drill.name]);
                for &kid in kids {
                    asm.link_at("up", *parent, kid, &[&up.name]);
                }
                chain_at(&mut asm, "seq", kids, fw, bw, false);
            }
            top[0]
        }
    };
    let entry = asm.id_at(entry_at).to_string();
    asm.standard(&StandardRules::default());
    Ok(asm.into_decl(&entry, None, &drill.name))
}

pub fn ingest(scene: &SceneSpec, options: &ExtractionOptions) -> Result<Graph, ExtractError> {
    ingest_with(scene, options, Execution::default())
}

pub fn ingest_with(
    scene: &SceneSpec,
    options: &ExtractionOptions,
    exec: Execution,
) -> Result<Graph, ExtractError> {
    let template = Template::resolve(&options.description_template)?;
    let mut nodes = extract_nodes_with(scene, exec)?;
    describe_nodes(&mut nodes, &template, exec)?;
    let decl = infer_edges(nodes, options.mode)?;
    Ok(build_graph(decl)?)
}

/// A scatter plot with `n` point marks, two axes and a one-entry legend.
/// Coordinates come from a seeded generator, so equal seeds give equal scenes.
pub fn synthetic_scatter(n: usize, seed: u64) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let round = |v: f64| (v * 100.0).round() / 100.0;
    let marks = (0..n)
        .map(|i| {
            let x = round(rng.random_range(0.0..100.0));
            let y = round(rng.random_range(0.0..100.0));
            let mut datum = BTreeMap::new();
            datum.insert("x".to_string(), Value::from(x));
            datum.insert("y".to_string(), Value::from(y));
            MarkSpec {
                mark_id: format!("point-{}", i + 1),
                mark_type: "symbol".to_string(),
                bounds: Bounds {
                    x: round(40.0 + x * 4.0),
                    y: round(400.0 - y * 4.0),
                    width: 4.0,
                    height: 4.0,
                },
                datum,
                group: Some("Series A".to_string()),
            }
        })
        .collect();
    SceneSpec {
        title: Some(format!("Synthetic scatter, {n} points")),
        axes: vec![
            AxisSpec {
                axis_id: "x-axis".to_string(),
                orientation: Orientation::Bottom,
                title: Some("x".to_string()),
                ticks: vec![Value::from(0), Value::from(100)],
            },
            AxisSpec {
                axis_id: "y-axis".to_string(),
                orientation: Orientation::Left,
                title: Some("y".to_string()),
                ticks: vec![Value::from(0), Value::from(100)],
            },
        ],
        marks,
        legend: Some(LegendSpec {
            legend_id: "legend".to_string(),
            title: Some("Series".to_string()),
            entries: vec!["Series A".to_string()],
        }),
    }
}
