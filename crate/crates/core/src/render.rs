//! Semantics, geometry and render planning.
//!
//! The engine never touches a visual substrate. Moves are turned into
//! [`RenderPlan`]s that tell a host which focusable element to drop, which
//! to materialize (with geometry and accessible semantics), and where focus
//! goes next. Hosts map [`Role`] tokens onto their own accessibility
//! vocabulary; on the web that is ARIA:
//!
//! | token      | ARIA role   |
//! |------------|-------------|
//! | `image`    | `img`       |
//! | `button`   | `button`    |
//! | `link`     | `link`      |
//! | `group`    | `group`     |
//! | `listitem` | `listitem`  |
//! | `text`     | `note`      |
//! | `figure`   | `figure`    |

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{MoveResult, MoveStatus};
use crate::graph::{Graph, Node, NodeId};

/// Style class emitted when a node does not name its own.
pub const DEFAULT_STYLE_TOKEN: &str = "dn-focus";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Image,
    Button,
    Link,
    Group,
    Listitem,
    #[default]
    Text,
    Figure,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Image => "image",
            Role::Button => "button",
            Role::Link => "link",
            Role::Group => "group",
            Role::Listitem => "listitem",
            Role::Text => "text",
            Role::Figure => "figure",
        }
    }

    pub fn aria(self) -> &'static str {
        match self {
            Role::Image => "img",
            Role::Text => "note",
            other => other.as_str(),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// 1-based structural position among siblings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Position {
    pub index: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SemanticsPayload {
    #[serde(default)]
    pub role: Role,
    #[serde(default)]
    pub label: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Position>,
}

impl SemanticsPayload {
    pub fn new(role: Role, label: impl Into<String>) -> Self {
        SemanticsPayload {
            role,
            label: label.into(),
            ..Default::default()
        }
    }

    pub fn described(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn at(mut self, index: usize, count: usize) -> Self {
        self.position = Some(Position { index, count });
        self
    }

    pub fn linking_to(mut self, target: impl Into<String>) -> Self {
        self.external_ref = Some(target.into());
        self
    }
}

/// Outline geometry in chart pixel coordinates. Paths use SVG path syntax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Geometry {
    Path {
        d: String,
    },
    Rect {
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    },
    Point {
        x: f64,
        y: f64,
    },
}

impl Geometry {
    pub fn rect(x: f64, y: f64, width: f64, height: f64) -> Self {
        Geometry::Rect {
            x,
            y,
            width,
            height,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        let coords: &[f64] = match self {
            Geometry::Path { d } => {
                return if d.trim().is_empty() {
                    Err("path text is empty".to_string())
                } else {
                    Ok(())
                };
            }
            Geometry::Rect {
                x,
                y,
                width,
                height,
            } => &[*x, *y, *width, *height],
            Geometry::Point { x, y } => &[*x, *y],
        };
        match coords.iter().find(|c| !c.is_finite() || **c < 0.0) {
            Some(c) => Err(format!("coordinate {c} is not finite and non-negative")),
            None => Ok(()),
        }
    }
}

/// Render information a node carries in the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RenderSpec {
    pub geometry: Geometry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style_token: Option<String>,
}

impl RenderSpec {
    pub fn new(geometry: Geometry) -> Self {
        RenderSpec {
            geometry,
            style_token: None,
        }
    }
}

/// A focusable element the host should materialize. `geometry` is absent
/// for non-visual entries (nodes without a render spec).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RenderedNode {
    pub id: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
    pub style_token: String,
    pub semantics: SemanticsPayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FocusTarget {
    Node {
        id: NodeId,
    },
    /// Focus leaves the structure; `target` is the host element to focus.
    Exit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RenderPlan {
    pub removals: Vec<NodeId>,
    pub additions: Vec<RenderedNode>,
    pub focus_target: FocusTarget,
}

impl RenderPlan {
    /// Net change in the number of live rendered nodes.
    pub fn net_live(&self) -> isize {
        self.additions.len() as isize - self.removals.len() as isize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RenderMode {
    /// Only the focused node exists; the previous one is dropped.
    #[default]
    OnDemand,
    /// Everything is rendered up front; plans only move focus.
    PreRendered,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("node `{0}` has no render spec and no label to fall back on")]
    MissingRenderSpec(String),
    #[error("node `{0}` is not in the graph")]
    UnknownNode(String),
}

/// Builds the rendered element for a node, falling back to a non-visual
/// entry when the node has no geometry.
pub fn rendered_node(node: &Node) -> Result<RenderedNode, RenderError> {
    if node.render_spec.is_none() && node.semantics.label.trim().is_empty() {
        return Err(RenderError::MissingRenderSpec(node.id.to_string()));
    }
    let style_token = node
        .render_spec
        .as_ref()
        .and_then(|s| s.style_token.clone())
        .unwrap_or_else(|| DEFAULT_STYLE_TOKEN.to_string());
    Ok(RenderedNode {
        id: node.id.clone(),
        geometry: node.render_spec.as_ref().map(|s| s.geometry.clone()),
        style_token,
        semantics: node.semantics.clone(),
    })
}

/// Turns a move into host instructions.
pub fn plan_render(
    graph: &Graph,
    result: &MoveResult,
    mode: RenderMode,
) -> Result<RenderPlan, RenderError> {
    let lookup = |id: &NodeId| {
        graph
            .node(id.as_str())
            .ok_or_else(|| RenderError::UnknownNode(id.to_string()))
    };
    let exit_focus = || FocusTarget::Exit {
        target: graph.exit_target().map(str::to_string),
    };

    let (removals, additions, focus_target) = match result.status {
        MoveStatus::Exited => {
            let removals = match (&result.from, mode) {
                (Some(from), RenderMode::OnDemand) => vec![from.clone()],
                _ => Vec::new(),
            };
            (removals, Vec::new(), exit_focus())
        }
        MoveStatus::Blocked => {
            let focus = match &result.from {
                Some(from) => FocusTarget::Node { id: from.clone() },
                None => exit_focus(),
            };
            (Vec::new(), Vec::new(), focus)
        }
        MoveStatus::Moved | MoveStatus::Entered => {
            let to = result
                .to
                .as_ref()
                .ok_or_else(|| RenderError::UnknownNode("<none>".to_string()))?;
            let rendered = rendered_node(lookup(to)?)?;
            let focus = FocusTarget::Node { id: to.clone() };
            match mode {
                RenderMode::PreRendered => (Vec::new(), Vec::new(), focus),
                RenderMode::OnDemand => {
                    let removals = match (&result.from, result.status) {
                        (Some(from), MoveStatus::Moved) => vec![from.clone()],
                        _ => Vec::new(),
                    };
                    (removals, vec![rendered], focus)
                }
            }
        }
    };

    Ok(RenderPlan {
        removals,
        additions,
        focus_target,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verbosity {
    Terse,
    #[default]
    Default,
    Verbose,
}

/// Text for a node, in a fixed order: label, description, position.
/// Terse is the label alone; verbose adds the role after the label and any
/// link target at the end. Missing parts are skipped.
pub fn describe(node: &Node, verbosity: Verbosity) -> String {
    let sem = &node.semantics;
    let label = sem.label.trim();
    if verbosity == Verbosity::Terse {
        return label.to_string();
    }

    let mut parts: Vec<String> = Vec::with_capacity(4);
    match (verbosity, label.is_empty()) {
        (Verbosity::Verbose, false) => parts.push(format!("{label}, {}", sem.role)),
        (Verbosity::Verbose, true) => parts.push(sem.role.to_string()),
        (_, false) => parts.push(label.to_string()),
        (_, true) => {}
    }
    let description = sem.description.trim();
    if !description.is_empty() {
        parts.push(description.to_string());
    }
    if let Some(pos) = sem.position {
        parts.push(format!("{} of {}", pos.index, pos.count));
    }
    if verbosity == Verbosity::Verbose {
        if let Some(target) = &sem.external_ref {
            parts.push(format!("Links to {target}"));
        }
    }

    let mut text = String::new();
    for part in parts {
        if !text.is_empty() {
            text.push(' ');
        }
        text.push_str(&part);
        if !part.ends_with(['.', '!', '?']) {
            text.push('.');
        }
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fa_cup() -> Node {
        Node::new("FA Cup").with_semantics(
            SemanticsPayload::new(Role::Group, "FA Cup")
                .described("Contest group")
                .at(2, 3),
        )
    }

    #[test]
    fn describe_default_orders_label_description_position() {
        assert_eq!(
            describe(&fa_cup(), Verbosity::Default),
            "FA Cup. Contest group. 2 of 3."
        );
    }

    #[test]
    fn describe_terse_is_label_only() {
        let node = Node::new("n").with_semantics(SemanticsPayload::new(Role::Text, "Only label"));
        assert_eq!(describe(&node, Verbosity::Terse), "Only label");
        assert_eq!(describe(&fa_cup(), Verbosity::Terse), "FA Cup");
    }

    #[test]
    fn describe_verbose_renders_role() {
        let text = describe(&fa_cup(), Verbosity::Verbose);
        assert_eq!(text, "FA Cup, group. Contest group. 2 of 3.");
        assert!(text.contains("group"));
    }

    #[test]
    fn describe_verbose_mentions_link_target() {
        let node = Node::new("counties").with_semantics(
            SemanticsPayload::new(Role::Link, "Counties").linking_to("#alabama-counties"),
        );
        assert_eq!(
            describe(&node, Verbosity::Verbose),
            "Counties, link. Links to #alabama-counties."
        );
    }

    #[test]
    fn describe_skips_missing_parts() {
        let node = Node::new("bare");
        assert_eq!(describe(&node, Verbosity::Default), "");
        assert_eq!(describe(&node, Verbosity::Verbose), "text.");
    }

    #[test]
    fn geometry_checks() {
        assert!(Geometry::rect(0.0, 1.0, 2.0, 3.0).check().is_ok());
        assert!(Geometry::rect(-1.0, 1.0, 2.0, 3.0).check().is_err());
        assert!(Geometry::Point { x: f64::NAN, y: 0.0 }.check().is_err());
        assert!(Geometry::Path { d: "  ".into() }.check().is_err());
        assert!(Geometry::Path { d: "M0 0L1 1Z".into() }.check().is_ok());
    }

    #[test]
    fn geometry_wire_shape() {
        let g = Geometry::rect(1.0, 2.0, 3.0, 4.0);
        assert_eq!(
            serde_json::to_string(&g).unwrap(),
            r#"{"kind":"rect","x":1.0,"y":2.0,"width":3.0,"height":4.0}"#
        );
    }

    #[test]
    fn missing_render_spec_only_without_label() {
        assert!(matches!(
            rendered_node(&Node::new("x")),
            Err(RenderError::MissingRenderSpec(_))
        ));
        let fallback = rendered_node(&fa_cup()).unwrap();
        assert_eq!(fallback.geometry, None);
        assert_eq!(fallback.style_token, DEFAULT_STYLE_TOKEN);
    }
}
