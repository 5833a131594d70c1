//! Navigation-graph engine for accessible chart exploration.
//!
//! A chart (or any visual) is described as a graph of focusable nodes joined
//! by edges. Edges carry named navigation rules ("left", "drill", "exit"),
//! and any input modality that can produce a token can invoke those rules.
//! The engine tracks a single focus position and emits render plans that a
//! host applies to whatever visual substrate it owns.
//!
//! Module map:
//!
//! - [`graph`]: nodes, edges, rules, dynamic endpoint resolvers, validation
//!   and the canonical JSON file format.
//! - [`engine`]: the focus state machine.
//! - [`input`]: token to rule bindings with user remapping.
//! - [`builders`]: list, tree, dual-hierarchy and adjacency constructors.
//! - [`extract`]: scene-spec ingestion (nodes, edges, descriptions).
//! - [`render`]: semantics, geometry, render planning and text descriptions.
//! - [`protocol`]: newline-delimited JSON sessions over stdio or TCP.
//! - [`walk`]: batched random-walk checks over a graph.
//! - [`perf`]: timing harness and least-squares fit used by `bench`.

#![forbid(unsafe_code)]

pub mod builders;
pub mod engine;
pub mod exec;
pub mod extract;
pub mod graph;
pub mod input;
pub mod perf;
pub mod protocol;
pub mod render;
pub mod walk;

pub use engine::{EngineError, MoveResult, MoveStatus, Session};
pub use exec::Execution;
pub use graph::{
    Diagnostic, Direction, Edge, Endpoint, Graph, GraphDecl, GraphError, NavigationRule, Node,
    NodeId, Severity, EXIT,
};
pub use input::{BindingTable, InputError};
pub use render::{
    describe, plan_render, Geometry, RenderMode, RenderPlan, Role, SemanticsPayload, Verbosity,
};
