#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use navgraph::graph::deserialize;
use navgraph::Graph;

pub const FIXTURES: &[&str] = &["stacked_bar", "set_diagram", "parallel_vectors", "us_states"];

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn read(name: &str) -> String {
    let path = fixture_dir().join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn graph(name: &str) -> Arc<Graph> {
    Arc::new(deserialize(&read(&format!("{name}.json"))).unwrap())
}
