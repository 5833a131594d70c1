#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use navgraph::graph::deserialize;
use navgraph::Graph;

pub const FIXTURES: &[&str] = &["stacked_bar", "set_diagram", "parallel_vectors", "us_states"];

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn graph_path(name: &str) -> PathBuf {
    fixtures().join(format!("{name}.json"))
}

pub fn graph(name: &str) -> Arc<Graph> {
    Arc::new(deserialize(&std::fs::read_to_string(graph_path(name)).unwrap()).unwrap())
}

/// (script stem, graph name) for every script under fixtures/scripts.
pub fn scripts() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(fixtures().join("scripts"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| {
            let stem = p.file_stem().unwrap().to_string_lossy().to_string();
            let graph = stem.split('.').next().unwrap().to_string();
            (stem, graph)
        })
        .collect();
    out.sort();
    out
}

pub fn script_path(stem: &str) -> PathBuf {
    fixtures().join("scripts").join(format!("{stem}.json"))
}

pub fn golden(stem: &str) -> String {
    std::fs::read_to_string(fixtures().join("golden").join(format!("{stem}.trace"))).unwrap()
}

pub fn navgraph<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_navgraph"))
        .args(args)
        .env("DN_NO_COLOR", "1")
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}
