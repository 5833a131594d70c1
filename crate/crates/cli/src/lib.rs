//! Command implementations behind the `navgraph` binary.
//!
//! Every command returns its output as a string plus an exit code so the
//! binary stays a thin shell and tests can call commands directly.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use navgraph::builders::BuildSpec;
use navgraph::extract::{ingest, ExtractionOptions, Mode, SceneSpec};
use navgraph::graph::{self, error_count, validate, Diagnostic};
use navgraph::input::BindingTable;
use navgraph::perf::{self, Timing};
use navgraph::protocol::run_transcript;
use navgraph::{
    describe, plan_render, EngineError, Execution, Graph, MoveResult, MoveStatus, RenderMode,
    Session, Severity, Verbosity,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

/// Finished command: what to print and how to exit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            stdout,
            code: EXIT_OK,
        }
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    let text = read_text(path)?;
    graph::deserialize(&text).with_context(|| format!("cannot load graph {}", path.display()))
}

fn color_for(severity: Severity) -> &'static str {
    match severity {
        Severity::Error => "\x1b[31m",
        Severity::Warning => "\x1b[33m",
    }
}

pub fn validate_report(graph: &Graph, format: Format, color: bool) -> Outcome {
    let diags = validate(graph);
    let errors = error_count(&diags);
    let stdout = match format {
        Format::Json => {
            let body = json!({
                "nodes": graph.node_count(),
                "edges": graph.edge_count(),
                "errors": errors,
                "warnings": diags.len() - errors,
                "diagnostics": diags,
            });
            pretty(&body)
        }
        Format::Text | Format::Csv => {
            let mut out = String::new();
            for d in &diags {
                out.push_str(&paint(d, color));
                out.push('\n');
            }
            let _ = writeln!(
                out,
                "{} nodes, {} edges: {} error(s), {} warning(s)",
                graph.node_count(),
                graph.edge_count(),
                errors,
                diags.len() - errors
            );
            out
        }
    };
    Outcome {
        stdout,
        code: if errors == 0 { EXIT_OK } else { EXIT_INVALID },
    }
}

fn paint(d: &Diagnostic, color: bool) -> String {
    if color {
        format!("{}{d}\x1b[0m", color_for(d.severity))
    } else {
        d.to_string()
    }
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn cmd_validate(path: &Path, format: Format, color: bool) -> Result<Outcome> {
    let graph = load_graph(path)?;
    Ok(validate_report(&graph, format, color))
}

/// Builds a graph from a builder spec and returns its canonical JSON.
pub fn build_from_spec(text: &str) -> Result<Graph> {
    let spec: BuildSpec = serde_json::from_str(text).context("invalid build spec")?;
    Ok(spec.build()?)
}

pub fn cmd_build(spec_path: &Path) -> Result<Outcome> {
    let graph = build_from_spec(&read_text(spec_path)?)
        .with_context(|| format!("cannot build {}", spec_path.display()))?;
    finish_graph(graph)
}

pub fn cmd_ingest(scene_path: &Path, mode: Mode, template: &str) -> Result<Outcome> {
    let scene: SceneSpec =
        serde_json::from_str(&read_text(scene_path)?).context("invalid scene spec")?;
    let options = ExtractionOptions {
        mode,
        description_template: template.to_string(),
    };
    finish_graph(ingest(&scene, &options)?)
}

fn finish_graph(graph: Graph) -> Result<Outcome> {
    let code = if error_count(&validate(&graph)) == 0 {
        EXIT_OK
    } else {
        EXIT_INVALID
    };
    Ok(Outcome {
        stdout: graph::serialize(&graph),
        code,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Rule,
    Key,
    Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Step {
    /// A bare token: key binding first, then command word.
    Token(String),
    Typed { kind: StepKind, value: String },
}

impl Step {
    pub fn token(&self) -> &str {
        match self {
            Step::Token(t) => t,
            Step::Typed { value, .. } => value,
        }
    }
}

/// A navigation script. `start` overrides the graph entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScript {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<String>,
    pub steps: Vec<Step>,
}

pub fn parse_script(text: &str) -> Result<SimScript> {
    let value: Value = serde_json::from_str(text).context("script is not JSON")?;
    let script: SimScript = if value.is_array() {
        SimScript {
            start: None,
            steps: serde_json::from_value(value).context("invalid script steps")?,
        }
    } else {
        serde_json::from_value(value).context("invalid script")?
    };
    if script.steps.is_empty() {
        bail!("script has no steps");
    }
    Ok(script)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub token: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    pub description: String,
}

impl StepRecord {
    pub fn line(&self) -> String {
        let dash = |s: &Option<String>| s.clone().unwrap_or_else(|| "-".to_string());
        format!(
            "{} {} {} {} -> {} | {}",
            self.step,
            self.token,
            self.status,
            dash(&self.from),
            dash(&self.to),
            self.description
        )
        .trim_end()
        .to_string()
    }

    fn from_move(step: usize, token: &str, m: &MoveResult, description: String) -> Self {
        let to = match m.status {
            MoveStatus::Blocked => m.from.clone(),
            _ => m.to.clone(),
        };
        StepRecord {
            step,
            token: token.to_string(),
            status: m.status.to_string(),
            from: m.from.as_ref().map(|n| n.to_string()),
            to: to.map(|n| n.to_string()),
            description,
        }
    }

    fn simple(step: usize, token: &str, status: &str, description: String) -> Self {
        StepRecord {
            step,
            token: token.to_string(),
            status: status.to_string(),
            from: None,
            to: None,
            description,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simulation {
    pub records: Vec<StepRecord>,
    /// Rendered nodes alive after each record (enter included).
    pub live: Vec<isize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub mode: RenderMode,
    pub verbosity: Verbosity,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            mode: RenderMode::OnDemand,
            verbosity: Verbosity::Default,
        }
    }
}

/// Runs a script against a graph. Stops after a step hits an exited
/// session.
pub fn simulate(
    graph: Arc<Graph>,
    bindings: &BindingTable,
    script: &SimScript,
    opts: SimOptions,
) -> Result<Simulation> {
    let (mut session, entered) = Session::enter(graph.clone(), script.start.as_deref())?;
    let mut live = 0isize;
    let mut sim = Simulation {
        records: Vec::new(),
        live: Vec::new(),
    };
    let describe_current = |s: &Session| {
        s.current_node()
            .map(|n| describe(n, opts.verbosity))
            .unwrap_or_default()
    };
    live += plan_render(&graph, &entered, opts.mode)?.net_live();
    sim.records.push(StepRecord::from_move(
        0,
        "enter",
        &entered,
        describe_current(&session),
    ));
    sim.live.push(live);

    for (i, step) in script.steps.iter().enumerate() {
        let n = i + 1;
        let token = step.token();
        let rule = match step {
            Step::Typed {
                kind: StepKind::Rule,
                value,
            } => Some(value.clone()),
            Step::Typed {
                kind: StepKind::Command,
                value,
            } => bindings.parse_command(value).map(str::to_string),
            Step::Typed {
                kind: StepKind::Key,
                value,
            }
            | Step::Token(value) => bindings.lookup(value).map(str::to_string),
        };
        let record = match rule {
            None if session.is_active() => {
                StepRecord::simple(n, token, "ignored", String::new())
            }
            None => StepRecord::simple(n, token, "inactive", EngineError::InactiveSession.to_string()),
            Some(rule) => match session.navigate(&rule) {
                Ok(m) => {
                    live += plan_render(&graph, &m, opts.mode)?.net_live();
                    let description = if m.status == MoveStatus::Exited {
                        String::new()
                    } else {
                        describe_current(&session)
                    };
                    StepRecord::from_move(n, token, &m, description)
                }
                Err(EngineError::InactiveSession) => {
                    StepRecord::simple(n, token, "inactive", EngineError::InactiveSession.to_string())
                }
                Err(e) => StepRecord::simple(n, token, "error", e.to_string()),
            },
        };
        let halt = record.status == "inactive";
        sim.records.push(record);
        sim.live.push(live);
        if halt {
            break;
        }
    }
    Ok(sim)
}

pub fn render_trace(sim: &Simulation, format: Format) -> String {
    match format {
        Format::Json => pretty(&sim.records),
        _ => {
            let mut out = String::new();
            for r in &sim.records {
                out.push_str(&r.line());
                out.push('\n');
            }
            out
        }
    }
}

pub fn cmd_simulate(
    graph_path: &Path,
    script_path: &Path,
    format: Format,
    opts: SimOptions,
    prefs: Option<&Path>,
) -> Result<Outcome> {
    let graph = Arc::new(load_graph(graph_path)?);
    let script = parse_script(&read_text(script_path)?)?;
    let mut bindings = BindingTable::from_graph(graph.clone())?;
    if let Some(p) = prefs {
        bindings = bindings.apply_preferences(&read_text(p)?)?;
    }
    let sim = simulate(graph, &bindings, &script, opts)?;
    Ok(Outcome::ok(render_trace(&sim, format)))
}

/// The protocol requests equivalent to a script: init, enter, then one
/// request per step.
pub fn script_requests(script: &SimScript, opts: SimOptions) -> Vec<String> {
    let mut out = vec![
        json!({"id": 0, "op": "init", "args": {
            "protocol": navgraph::protocol::PROTOCOL_VERSION,
            "mode": opts.mode,
            "verbosity": opts.verbosity,
        }})
        .to_string(),
        json!({"id": 1, "op": "enter", "args": {"node": script.start}}).to_string(),
    ];
    for (i, step) in script.steps.iter().enumerate() {
        let id = i + 2;
        let req = match step {
            Step::Typed {
                kind: StepKind::Rule,
                value,
            } => json!({"id": id, "op": "move", "args": {"rule": value}}),
            Step::Typed {
                kind: StepKind::Command,
                value,
            } => json!({"id": id, "op": "command", "args": {"text": value}}),
            Step::Typed {
                kind: StepKind::Key,
                value,
            }
            | Step::Token(value) => json!({"id": id, "op": "input", "args": {"token": value}}),
        };
        out.push(req.to_string());
    }
    out
}

/// Protocol transcript for a script over a preloaded graph.
pub fn script_transcript(graph: Arc<Graph>, script: &SimScript, opts: SimOptions) -> Vec<String> {
    let requests = script_requests(script, opts);
    run_transcript(Some(graph), requests.iter().map(String::as_str))
}

/// Reads a transcript produced by [`script_transcript`] back into step
/// records, so it can be compared with [`simulate`].
pub fn records_from_transcript(script: &SimScript, lines: &[String]) -> Result<Vec<StepRecord>> {
    let mut out = Vec::new();
    let tokens = std::iter::once("enter").chain(script.steps.iter().map(Step::token));
    for (n, (line, token)) in lines.iter().skip(1).zip(tokens).enumerate() {
        let v: Value = serde_json::from_str(line)?;
        let record = if v["ok"] == true {
            let result = &v["result"];
            if result["ignored"] == true {
                StepRecord::simple(n, token, "ignored", String::new())
            } else {
                let m: MoveResult = serde_json::from_value(result["move"].clone())?;
                let description = result["description"].as_str().unwrap_or("").to_string();
                StepRecord::from_move(n, token, &m, description)
            }
        } else {
            let code = v["error"]["code"].as_str().unwrap_or("");
            let message = v["error"]["message"].as_str().unwrap_or("").to_string();
            if code == "InactiveSession" {
                StepRecord::simple(n, token, "inactive", message)
            } else {
                StepRecord::simple(n, token, "error", message)
            }
        };
        let halt = record.status == "inactive";
        out.push(record);
        if halt {
            break;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<Timing>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<perf::LinearFit>,
}

pub fn run_bench(
    sizes: &[usize],
    reps: usize,
    mode: Mode,
    exec: Execution,
    fit: bool,
) -> Result<BenchReport> {
    let opts = ExtractionOptions::new(mode);
    let rows = sizes
        .iter()
        .map(|&n| perf::time_ingest(n, reps, &opts, exec))
        .collect::<Result<Vec<_>, _>>()?;
    let fit = if fit { perf::fit_timings(&rows) } else { None };
    Ok(BenchReport { rows, fit })
}

pub fn render_bench(report: &BenchReport, format: Format) -> String {
    match format {
        Format::Json => pretty(report),
        Format::Csv => {
            let mut out = String::from("size,reps,ingest_ms,build_ms,total_ms\n");
            for r in &report.rows {
                let _ = writeln!(
                    out,
                    "{},{},{:.4},{:.4},{:.4}",
                    r.size, r.reps, r.ingest_ms, r.build_ms, r.total_ms
                );
            }
            if let Some(f) = report.fit {
                let _ = writeln!(out, "# fit slope_ms_per_mark={:.6e} intercept_ms={:.4} r2={:.5}", f.slope, f.intercept, f.r_squared);
            }
            out
        }
        Format::Text => {
            let mut out = String::new();
            for r in &report.rows {
                let _ = writeln!(
                    out,
                    "{:>8} marks  ingest {:>9.3} ms  build {:>9.3} ms  total {:>9.3} ms  (median of {})",
                    r.size, r.ingest_ms, r.build_ms, r.total_ms, r.reps
                );
            }
            if let Some(f) = report.fit {
                let _ = writeln!(
                    out,
                    "linear fit: {:.3e} ms/mark + {:.3} ms, R² = {:.4}",
                    f.slope, f.intercept, f.r_squared
                );
            }
            out
        }
    }
}
