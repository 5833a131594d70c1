//! Canonical JSON form: UTF-8, sorted object keys, two-space indent,
//! trailing newline. Arrays keep declaration order.

use super::{Graph, GraphBuilder, GraphDecl, GraphError};

pub fn serialize(graph: &Graph) -> String {
    serialize_decl(&graph.to_decl())
}

pub(crate) fn serialize_decl(decl: &GraphDecl) -> String {
    // serde_json::Value objects are BTreeMap-backed, which sorts keys.
    let value = serde_json::to_value(decl).expect("graph declarations are always representable");
    let mut text =
        serde_json::to_string_pretty(&value).expect("json values are always serializable");
    text.push('\n');
    text
}

pub fn deserialize(text: &str) -> Result<Graph, GraphError> {
    deserialize_with(&GraphBuilder::new(), text)
}

pub fn deserialize_with(builder: &GraphBuilder, text: &str) -> Result<Graph, GraphError> {
    let decl = parse_decl(text)?;
    builder.build(decl)
}

pub(crate) fn parse_decl(text: &str) -> Result<GraphDecl, GraphError> {
    serde_json::from_str(text).map_err(|e| GraphError::Parse {
        line: e.line().max(1),
        column: e.column().max(1),
        message: e.to_string(),
    })
}
