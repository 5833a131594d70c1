//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//! Exits non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::Arc;

use navgraph::extract::{ingest, synthetic_scatter, ExtractionOptions, Mode};
use navgraph::walk::{random_walks, WalkConfig};
use navgraph::{BindingTable, Execution, Graph, MoveStatus, NodeId, RenderMode, Session};
use navgraph_cli::{parse_script, script_requests, simulate, SimOptions, SimScript, Step};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn spec(name: &str) -> Value {
    let text = std::fs::read_to_string(fixtures().join(format!("{name}.spec.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn scene_graph() -> Arc<Graph> {
    let text = std::fs::read_to_string(fixtures().join("stacked_bar.scene.graph.json")).unwrap();
    Arc::new(navgraph::graph::deserialize(&text).unwrap())
}

/// All committed graphs: the four builder fixtures plus the ingested scene.
fn all_graphs() -> Vec<(String, Arc<Graph>)> {
    let mut out: Vec<(String, Arc<Graph>)> =
        FIXTURES.iter().map(|n| (n.to_string(), graph(n))).collect();
    out.push(("stacked_bar.scene".into(), scene_graph()));
    out
}

fn rule_for_key(g: &Graph, key: &str) -> String {
    g.rules()
        .find(|r| r.bindings.iter().any(|b| b == key))
        .map(|r| r.name.clone())
        .unwrap_or_else(|| panic!("no rule bound to {key}"))
}

fn step(g: &Arc<Graph>, from: &str, rule: &str) -> (MoveStatus, String) {
    let (mut s, _) = Session::enter(g.clone(), Some(from)).unwrap();
    let r = s.navigate(rule).unwrap();
    (r.status, s.current().to_string())
}

fn goldens_for(prefix: &str) -> Result<usize, String> {
    let mut n = 0;
    for (stem, graph) in scripts() {
        if !stem.starts_with(prefix) {
            continue;
        }
        let o = navgraph(["simulate", p(&graph_path(&graph)), p(&script_path(&stem))]);
        ensure(o.status.success(), || format!("{stem}: simulate failed"))?;
        ensure(stdout(&o) == golden(&stem), || format!("{stem}: trace differs from golden"))?;
        n += 1;
    }
    ensure(n > 0, || format!("no {prefix} scripts"))?;
    Ok(n)
}

fn dual_hierarchy() -> Outcome {
    let goldens = goldens_for("stacked_bar.")?;
    let g = graph("stacked_bar");
    let s = spec("stacked_bar");
    let down = rule_for_key(&g, "ArrowDown");
    let enter = rule_for_key(&g, "Enter");
    let key_l = rule_for_key(&g, "KeyL");
    let backspace = rule_for_key(&g, "Backspace");
    let contests: Vec<String> = s["dimA"]["categories"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["id"].as_str().unwrap().to_string())
        .collect();
    let first_team = s["dimB"]["categories"][0]["id"].as_str().unwrap().to_string();
    let cells = s["cells"].as_array().unwrap();

    // (a) three downs come back to the start, through distinct nodes
    let mut starts: Vec<String> = contests.clone();
    starts.extend(cells.iter().map(|c| c["id"].as_str().unwrap().to_string()));
    for start in &starts {
        let (mut sess, _) = Session::enter(g.clone(), Some(start)).unwrap();
        let mut seen = BTreeSet::new();
        for _ in 0..3 {
            let r = sess.navigate(&down).unwrap();
            ensure(r.status == MoveStatus::Moved, || format!("down blocked at {start}"))?;
            seen.insert(sess.current().to_string());
        }
        ensure(sess.current().as_str() == start && seen.len() == 3, || {
            format!("down x3 from {start} ended at {}", sess.current())
        })?;
    }
    // (b) drilling a contest lands in the first team's column
    for contest in &contests {
        let (status, at) = step(&g, contest, &enter);
        let cell = cells.iter().find(|c| c["id"] == at.as_str());
        ensure(
            status == MoveStatus::Moved
                && cell.is_some_and(|c| c["a"] == contest.as_str() && c["b"] == first_team.as_str()),
            || format!("Enter at {contest} went to {at}"),
        )?;
    }
    // (c) KeyL to the contest, Backspace to the team, from every cell
    for c in cells {
        let id = c["id"].as_str().unwrap();
        let (_, a) = step(&g, id, &key_l);
        let (_, b) = step(&g, id, &backspace);
        ensure(a == c["a"].as_str().unwrap() && b == c["b"].as_str().unwrap(), || {
            format!("{id}: KeyL -> {a}, Backspace -> {b}")
        })?;
    }
    Ok(format!(
        "{goldens} golden traces exact; {} cycle starts, {} contest drills, {} cells lifted",
        starts.len(),
        contests.len(),
        cells.len()
    ))
}

fn generic_edges() -> Outcome {
    let cfg = WalkConfig::default();
    ensure(cfg.walks == 1000 && cfg.max_len == 50, || "walk config drifted".into())?;
    let mut total_moves = 0;
    let mut total_undo = 0;
    let mut total_root = 0;
    for (name, g) in all_graphs() {
        let report = random_walks(g, &cfg, Execution::default());
        ensure(report.violations.is_empty(), || {
            format!("{name}: {} violations, first {:?}", report.violations.len(), report.violations[0])
        })?;
        ensure(report.undo_checks > 0 && report.root_checks >= cfg.walks, || {
            format!("{name}: walks did not exercise undo")
        })?;
        total_moves += report.moves;
        total_undo += report.undo_checks;
        total_root += report.root_checks;
    }
    Ok(format!(
        "0 violations; {total_moves} moves, {total_undo} undo checks, {total_root} depth-0 checks"
    ))
}

fn universal_exit() -> Outcome {
    let mut checked = 0;
    for (name, g) in all_graphs() {
        for node in g.nodes() {
            let (status, _) = step(&g, node.id.as_str(), "exit");
            ensure(status == MoveStatus::Exited, || format!("{name}/{}: {status}", node.id))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} nodes across {} graphs exit", all_graphs().len()))
}

fn adjacency() -> Outcome {
    let g = graph("us_states");
    let s = spec("us_states");
    let mut oracle: BTreeMap<String, BTreeSet<String>> = s["regions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["id"].as_str().unwrap().to_string(), BTreeSet::new()))
        .collect();
    for pair in s["borders"].as_array().unwrap() {
        let (a, b) = (pair[0].as_str().unwrap(), pair[1].as_str().unwrap());
        oracle.get_mut(a).unwrap().insert(b.to_string());
        oracle.get_mut(b).unwrap().insert(a.to_string());
    }
    let regions = oracle.len();
    let duplicated: usize = oracle.values().map(|n| 1 + n.len()).sum();
    ensure(g.node_count() == regions + 1, || {
        format!("{} nodes for {regions} regions + 1 root", g.node_count())
    })?;
    ensure(g.node_count() < duplicated, || {
        format!("{} nodes not below {duplicated}", g.node_count())
    })?;

    let neighbors = rule_for_key(&g, "KeyN");
    let next = rule_for_key(&g, "ArrowRight");
    for (region, expected) in &oracle {
        let (mut sess, _) = Session::enter(g.clone(), Some(region)).unwrap();
        let r = sess.navigate(&neighbors).unwrap();
        if r.status == MoveStatus::Blocked {
            ensure(expected.is_empty(), || format!("{region}: ring blocked"))?;
            continue;
        }
        let first = sess.current().to_string();
        let mut ring = vec![first.clone()];
        for _ in 0..regions {
            sess.navigate(&next).unwrap();
            if sess.current().as_str() == first {
                break;
            }
            ring.push(sess.current().to_string());
        }
        let got: BTreeSet<String> = ring.iter().cloned().collect();
        ensure(got.len() == ring.len() && &got == expected, || {
            format!("{region}: ring {ring:?} != {expected:?}")
        })?;
    }
    Ok(format!(
        "{} nodes = {regions} regions + 1 root < {duplicated}; {} rings equal the border list",
        g.node_count(),
        regions
    ))
}

/// Fewest moves from the entry to each node, found by driving sessions.
fn engine_distances(g: &Arc<Graph>) -> BTreeMap<NodeId, usize> {
    let rules: Vec<String> = g
        .rules()
        .map(|r| r.name.clone())
        .filter(|r| r != "exit" && r != "undo")
        .collect();
    let mut dist = BTreeMap::from([(g.entry().clone(), 0)]);
    let mut queue = VecDeque::from([g.entry().clone()]);
    while let Some(at) = queue.pop_front() {
        let d = dist[&at];
        for rule in &rules {
            let (status, to) = step(g, at.as_str(), rule);
            let to = NodeId::new(to);
            if status == MoveStatus::Moved && !dist.contains_key(&to) {
                dist.insert(to.clone(), d + 1);
                queue.push_back(to);
            }
        }
    }
    dist
}

fn extraction() -> Outcome {
    let scene = synthetic_scatter(406, 406);
    let flat = Arc::new(ingest(&scene, &ExtractionOptions::new(Mode::Flat)).map_err(|e| e.to_string())?);
    let n = flat.node_count();
    let (mut sess, _) = Session::enter(flat.clone(), None).unwrap();
    let mut visited = BTreeSet::from([sess.current().clone()]);
    let mut moves = 0;
    while sess.navigate("forward").unwrap().status == MoveStatus::Moved {
        moves += 1;
        visited.insert(sess.current().clone());
    }
    ensure(moves == n - 1 && visited.len() == n, || {
        format!("flat: {moves} forward moves over {n} nodes, {} visited", visited.len())
    })?;

    let grouped = Arc::new(ingest(&scene, &ExtractionOptions::new(Mode::Grouped)).map_err(|e| e.to_string())?);
    let dist = engine_distances(&grouped);
    let legend = dist.get(&NodeId::new("legend")).copied();
    ensure(legend.is_some_and(|d| d <= 3), || format!("legend at {legend:?} moves"))?;
    let marks: Vec<String> = scene.marks.iter().map(|m| m.mark_id.clone()).collect();
    ensure(marks.iter().all(|m| dist.contains_key(&NodeId::new(m.as_str()))), || {
        "some marks unreachable".into()
    })?;
    // the marks group drills to the first mark and the chain covers the rest
    let (mut sess, _) = Session::enter(grouped.clone(), Some("group:marks")).unwrap();
    sess.navigate("drill").unwrap();
    let mut reached = vec![sess.current().to_string()];
    while sess.navigate("forward").unwrap().status == MoveStatus::Moved {
        reached.push(sess.current().to_string());
    }
    ensure(reached == marks, || "drill + forward does not cover the marks in order".into())?;
    Ok(format!(
        "flat: {moves} moves over {n} nodes; grouped: legend in {} moves, {} marks via drill",
        legend.unwrap(),
        marks.len()
    ))
}

fn bench_json(args: &[&str]) -> Result<Value, String> {
    let mut full = vec!["bench", "--format", "json"];
    full.extend_from_slice(args);
    let o = navgraph(&full);
    ensure(o.status.success(), || format!("bench failed: {}", String::from_utf8_lossy(&o.stderr)))?;
    serde_json::from_slice(&o.stdout).map_err(|e| e.to_string())
}

fn performance() -> Outcome {
    let big = bench_json(&["--sizes", "20300", "--reps", "30"])?;
    let total = big["rows"][0]["total_ms"].as_f64().unwrap();
    let fit = bench_json(&["--sizes", "1000,5000,10000,20000", "--reps", "15", "--fit"])?;
    let r2 = fit["fit"]["r_squared"].as_f64().unwrap();
    let detail = format!("20,300 marks median {total:.2} ms (< 50); R² {r2:.4} (>= 0.98)");
    ensure(total < 50.0 && r2 >= 0.98, || detail.clone())?;
    Ok(detail)
}

fn random_script(g: &Graph, rng: &mut ChaCha8Rng) -> SimScript {
    let mut tokens: Vec<String> = g
        .rules()
        .flat_map(|r| r.bindings.iter().cloned())
        .collect();
    tokens.sort();
    tokens.dedup();
    tokens.push("F13".into());
    let len = rng.random_range(1..=40);
    let steps = (0..len)
        .map(|_| Step::Token(tokens[rng.random_range(0..tokens.len())].clone()))
        .collect();
    SimScript { start: None, steps }
}

fn on_demand() -> Outcome {
    let mut scripts_run = 0;
    let mut check = |name: &str, g: &Arc<Graph>, script: &SimScript| -> Result<(), String> {
        let bindings = BindingTable::from_graph(g.clone()).unwrap();
        let opts = SimOptions {
            mode: RenderMode::OnDemand,
            ..Default::default()
        };
        let sim = simulate(g.clone(), &bindings, script, opts).map_err(|e| e.to_string())?;
        let mut exited = false;
        for (rec, live) in sim.records.iter().zip(&sim.live) {
            exited |= rec.status == "exited";
            let want = if exited { 0 } else { 1 };
            ensure(*live == want, || {
                format!("{name}: step {} ({}) leaves {live} live nodes", rec.step, rec.token)
            })?;
        }
        scripts_run += 1;
        Ok(())
    };
    for (stem, graph_name) in scripts() {
        let script = parse_script(&std::fs::read_to_string(script_path(&stem)).unwrap()).unwrap();
        check(&stem, &graph(&graph_name), &script)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x0d_e3a4d);
    for (name, g) in all_graphs() {
        for _ in 0..200 {
            let script = random_script(&g, &mut rng);
            check(&name, &g, &script)?;
        }
    }
    Ok(format!("{scripts_run} scripts, net live 1 at every step (0 after exit)"))
}

fn set_diagram() -> Outcome {
    let goldens = goldens_for("set_diagram.")?;
    let g = graph("set_diagram");
    let left = rule_for_key(&g, "ArrowLeft");
    let enter = rule_for_key(&g, "Enter");
    let (status, _) = step(&g, "set-a", &left);
    ensure(status == MoveStatus::Blocked, || format!("left at set-a: {status}"))?;
    for (set, part) in [("set-a", "a-only"), ("set-b", "b-only")] {
        let (_, at) = step(&g, set, &enter);
        ensure(at == part, || format!("drill from {set} reached {at}"))?;
        for key in ["Escape", "Backspace"] {
            let rule = rule_for_key(&g, key);
            let (_, up1) = step(&g, part, &rule);
            let (_, up2) = step(&g, &up1, &rule);
            ensure(up1 == set && up2 == "diagram", || {
                format!("{key} from {part}: {up1} then {up2}")
            })?;
        }
    }
    Ok(format!(
        "{goldens} golden traces exact; left blocked at set-a, drills reach exclusive parts, Escape/Backspace climb to the root"
    ))
}

fn serve_transcript(graph_name: &str, requests: &[String]) -> Result<Vec<u8>, String> {
    let mut child = Command::new(env!("CARGO_BIN_EXE_navgraph"))
        .args(["serve", "--stdio", "--graph", p(&graph_path(graph_name))])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .map_err(|e| e.to_string())?;
    {
        let mut stdin = child.stdin.take().unwrap();
        for r in requests {
            writeln!(stdin, "{r}").map_err(|e| e.to_string())?;
        }
    }
    let out = child.wait_with_output().map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("serve exited with {}", out.status))?;
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let mut pairs = 0;
    for (stem, graph_name) in scripts() {
        let (gp, sp) = (graph_path(&graph_name), script_path(&stem));
        let args = ["simulate", p(&gp), p(&sp)];
        let first = navgraph(args).stdout;
        let script = parse_script(&std::fs::read_to_string(script_path(&stem)).unwrap()).unwrap();
        let requests = script_requests(&script, SimOptions::default());
        let first_t = serve_transcript(&graph_name, &requests)?;
        ensure(!first.is_empty() && !first_t.is_empty(), || format!("{stem}: empty output"))?;
        for run in 2..=5 {
            ensure(navgraph(args).stdout == first, || format!("{stem}: simulate run {run} differs"))?;
            ensure(serve_transcript(&graph_name, &requests)? == first_t, || {
                format!("{stem}: transcript run {run} differs")
            })?;
        }
        pairs += 1;
    }
    Ok(format!("{pairs} fixture/script pairs byte-identical over 5 runs (simulate and protocol)"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("dual-hierarchy", dual_hierarchy),
        ("generic-edges", generic_edges),
        ("universal-exit", universal_exit),
        ("adjacency", adjacency),
        ("extraction", extraction),
        ("performance", performance),
        ("on-demand", on_demand),
        ("set-diagram", set_diagram),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = std::panic::catch_unwind(check)
            .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>())));
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL {name}: {reason}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
