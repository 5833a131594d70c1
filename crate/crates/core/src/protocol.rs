//! Newline-delimited JSON sessions, version 1.
//!
//! Each line is one request `{"id": .., "op": .., "args": {..}}` and gets one
//! response line `{"id": .., "ok": true, "result": ..}` or
//! `{"id": .., "ok": false, "error": {"code": .., "message": ..}}`, in
//! arrival order. A connection owns at most one session.
//!
//! | op         | args                                                   |
//! |------------|--------------------------------------------------------|
//! | `init`     | `graph` path (optional if preloaded), `protocol`, `mode`, `verbosity`, `remap` |
//! | `enter`    | `node` (optional)                                      |
//! | `move`     | `rule`                                                 |
//! | `input`    | `token`                                                |
//! | `command`  | `text`                                                 |
//! | `undo`     |                                                        |
//! | `describe` | `verbosity` (optional)                                 |
//! | `state`    |                                                        |
//! | `shutdown` |                                                        |
//!
//! Move-like ops return `{"move", "plan", "description"}`. Unbound input
//! tokens and unknown command words return `{"ignored": true}`.

use std::collections::BTreeMap;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::engine::{EngineError, MoveResult, MoveStatus, Session};
use crate::graph::{deserialize, Graph};
use crate::input::{BindingTable, InputError};
use crate::render::{describe, plan_render, RenderMode, Verbosity};

pub const PROTOCOL_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    #[serde(default)]
    pub id: Value,
    pub op: String,
    #[serde(default)]
    pub args: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorCode {
    BadRequest,
    UnknownSession,
    UnknownRule,
    InactiveSession,
    LoadError,
    RenderError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: Value,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

impl Response {
    fn ok(id: Value, result: Value) -> Self {
        Response {
            id,
            ok: true,
            result: Some(result),
            error: None,
        }
    }

    fn err(id: Value, code: ErrorCode, message: impl Into<String>) -> Self {
        Response {
            id,
            ok: false,
            result: None,
            error: Some(ErrorBody {
                code,
                message: message.into(),
            }),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("response serializes")
    }
}

struct OpError(ErrorCode, String);

type OpResult = Result<Value, OpError>;

fn bad(message: impl Into<String>) -> OpError {
    OpError(ErrorCode::BadRequest, message.into())
}

impl From<EngineError> for OpError {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::UnknownRule(_) => ErrorCode::UnknownRule,
            EngineError::InactiveSession => ErrorCode::InactiveSession,
            EngineError::UnknownEntry(_) => ErrorCode::BadRequest,
        };
        OpError(code, e.to_string())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitArgs {
    #[serde(default)]
    graph: Option<String>,
    #[serde(default)]
    protocol: Option<u64>,
    #[serde(default)]
    mode: RenderMode,
    #[serde(default)]
    verbosity: Verbosity,
    #[serde(default)]
    remap: BTreeMap<String, String>,
    #[serde(default)]
    session: Option<String>,
}

struct Loaded {
    id: String,
    bindings: BindingTable,
    mode: RenderMode,
    verbosity: Verbosity,
    session: Option<Session>,
}

/// Protocol state for one connection.
pub struct Connection {
    preloaded: Option<Arc<Graph>>,
    loaded: Option<Loaded>,
    inits: usize,
    closed: bool,
}

impl Connection {
    pub fn new(preloaded: Option<Arc<Graph>>) -> Self {
        Connection {
            preloaded,
            loaded: None,
            inits: 0,
            closed: false,
        }
    }

    /// True once a `shutdown` request has been handled.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Parses and handles one request line.
    pub fn handle_line(&mut self, line: &str) -> Response {
        match serde_json::from_str::<Request>(line) {
            Ok(req) => self.handle(&req),
            Err(e) => {
                // salvage the id if the line is at least an object
                let id = serde_json::from_str::<Value>(line)
                    .ok()
                    .and_then(|v| v.get("id").cloned())
                    .unwrap_or(Value::Null);
                Response::err(id, ErrorCode::BadRequest, format!("malformed request: {e}"))
            }
        }
    }

    pub fn handle(&mut self, req: &Request) -> Response {
        let id = req.id.clone();
        match self.dispatch(req) {
            Ok(v) => Response::ok(id, v),
            Err(OpError(code, message)) => Response::err(id, code, message),
        }
    }

    fn dispatch(&mut self, req: &Request) -> OpResult {
        let args = match &req.args {
            Value::Null => Value::Object(Default::default()),
            Value::Object(_) => req.args.clone(),
            _ => return Err(bad("args must be an object")),
        };
        if req.op == "init" {
            return self.init(args);
        }
        if req.op == "shutdown" {
            self.closed = true;
            return Ok(json!({"shutdown": true}));
        }
        let loaded = self.loaded.as_mut().ok_or_else(|| {
            OpError(
                ErrorCode::UnknownSession,
                "no session; send init first".to_string(),
            )
        })?;
        if let Some(s) = args.get("session") {
            if s.as_str() != Some(loaded.id.as_str()) {
                return Err(OpError(ErrorCode::UnknownSession, format!("unknown session {s}")));
            }
        }
        match req.op.as_str() {
            "enter" => {
                let node = opt_str(&args, "node")?;
                let graph = loaded.bindings.graph().clone();
                let (session, result) = Session::enter(graph, node)?;
                loaded.session = Some(session);
                move_payload(loaded, &result)
            }
            "move" => {
                let rule = req_str(&args, "rule")?;
                let result = active(loaded)?.navigate(rule)?;
                move_payload(loaded, &result)
            }
            "input" => {
                let token = req_str(&args, "token")?;
                active(loaded)?;
                match loaded.bindings.lookup(token).map(str::to_string) {
                    Some(rule) => {
                        let result = active(loaded)?.navigate(&rule)?;
                        move_payload(loaded, &result)
                    }
                    None => Ok(json!({"ignored": true, "token": token})),
                }
            }
            "command" => {
                let text = req_str(&args, "text")?;
                active(loaded)?;
                match loaded.bindings.parse_command(text).map(str::to_string) {
                    Some(rule) => {
                        let result = active(loaded)?.navigate(&rule)?;
                        move_payload(loaded, &result)
                    }
                    None => Ok(json!({"ignored": true, "text": text})),
                }
            }
            "undo" => {
                let result = active(loaded)?.undo()?;
                move_payload(loaded, &result)
            }
            "describe" => {
                let verbosity = match args.get("verbosity") {
                    None => loaded.verbosity,
                    Some(v) => serde_json::from_value(v.clone())
                        .map_err(|e| bad(format!("verbosity: {e}")))?,
                };
                let session = active(loaded)?;
                let node = session.current_node()?;
                Ok(json!({"node": node.id, "description": describe(node, verbosity)}))
            }
            "state" => Ok(match &loaded.session {
                Some(s) => json!({
                    "current": s.current(),
                    "depth": s.depth(),
                    "active": s.is_active(),
                }),
                None => json!({"current": null, "depth": 0, "active": false}),
            }),
            other => Err(bad(format!("unknown op `{other}`"))),
        }
    }

    fn init(&mut self, args: Value) -> OpResult {
        let args: InitArgs =
            serde_json::from_value(args).map_err(|e| bad(format!("init args: {e}")))?;
        if let Some(p) = args.protocol {
            if p != PROTOCOL_VERSION {
                return Err(bad(format!(
                    "protocol {p} not supported (server speaks {PROTOCOL_VERSION})"
                )));
            }
        }
        let graph = match (&args.graph, &self.preloaded) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| OpError(ErrorCode::LoadError, format!("{path}: {e}")))?;
                Arc::new(
                    deserialize(&text)
                        .map_err(|e| OpError(ErrorCode::LoadError, format!("{path}: {e}")))?,
                )
            }
            (None, Some(g)) => g.clone(),
            (None, None) => return Err(bad("init needs a graph path")),
        };
        let load_err = |e: InputError| OpError(ErrorCode::LoadError, e.to_string());
        let mut bindings = BindingTable::from_graph(graph.clone()).map_err(load_err)?;
        for (token, rule) in &args.remap {
            bindings = bindings.remap(token, rule).map_err(load_err)?;
        }
        self.inits += 1;
        let id = args.session.unwrap_or_else(|| format!("s{}", self.inits));
        let result = json!({
            "session": id,
            "protocol": PROTOCOL_VERSION,
            "entry": graph.entry(),
            "nodes": graph.node_count(),
            "rules": graph.rules().map(|r| r.name.as_str()).collect::<Vec<_>>(),
        });
        self.loaded = Some(Loaded {
            id,
            bindings,
            mode: args.mode,
            verbosity: args.verbosity,
            session: None,
        });
        Ok(result)
    }
}

fn active(loaded: &mut Loaded) -> Result<&mut Session, OpError> {
    match loaded.session.as_mut() {
        Some(s) if s.is_active() => Ok(s),
        Some(_) => Err(EngineError::InactiveSession.into()),
        None => Err(OpError(
            ErrorCode::InactiveSession,
            "no focus yet; send enter first".to_string(),
        )),
    }
}

fn req_str<'a>(args: &'a Value, key: &str) -> Result<&'a str, OpError> {
    args.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| bad(format!("missing string argument `{key}`")))
}

fn opt_str<'a>(args: &'a Value, key: &str) -> Result<Option<&'a str>, OpError> {
    match args.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(bad(format!("argument `{key}` must be a string"))),
    }
}

fn move_payload(loaded: &Loaded, result: &MoveResult) -> OpResult {
    let graph = loaded.bindings.graph();
    let plan = plan_render(graph, result, loaded.mode)
        .map_err(|e| OpError(ErrorCode::RenderError, e.to_string()))?;
    let description = match (result.status, &loaded.session) {
        (MoveStatus::Exited, _) | (_, None) => String::new(),
        (_, Some(s)) => s
            .current_node()
            .map(|n| describe(n, loaded.verbosity))
            .unwrap_or_default(),
    };
    Ok(json!({"move": result, "plan": plan, "description": description}))
}

/// Serves one connection until EOF or `shutdown`. Blank lines are skipped.
pub fn serve_lines<R: BufRead, W: Write>(
    conn: &mut Connection,
    reader: R,
    mut writer: W,
) -> io::Result<()> {
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = conn.handle_line(&line);
        writeln!(writer, "{}", response.to_line())?;
        writer.flush()?;
        if conn.is_closed() {
            break;
        }
    }
    Ok(())
}

/// Runs `requests` through a fresh connection and returns the response
/// lines. Used for transcripts and tests.
pub fn run_transcript<'a, I>(preloaded: Option<Arc<Graph>>, requests: I) -> Vec<String>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut conn = Connection::new(preloaded);
    let mut out = Vec::new();
    for line in requests {
        out.push(conn.handle_line(line).to_line());
        if conn.is_closed() {
            break;
        }
    }
    out
}

/// Accepts localhost connections, one thread and one session each. A
/// `shutdown` request on any connection stops the accept loop after that
/// connection closes; other open connections keep running until EOF.
pub struct TcpServer {
    listener: TcpListener,
    preloaded: Option<Arc<Graph>>,
    stop: Arc<AtomicBool>,
}

impl TcpServer {
    pub fn bind(port: u16, preloaded: Option<Arc<Graph>>) -> io::Result<Self> {
        let listener = TcpListener::bind(("127.0.0.1", port))?;
        Ok(TcpServer {
            listener,
            preloaded,
            stop: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn run(self) -> io::Result<()> {
        let addr = self.listener.local_addr()?;
        for stream in self.listener.incoming() {
            if self.stop.load(Ordering::SeqCst) {
                break;
            }
            let stream = match stream {
                Ok(s) => s,
                Err(_) => continue,
            };
            let preloaded = self.preloaded.clone();
            let stop = self.stop.clone();
            thread::spawn(move || {
                let mut conn = Connection::new(preloaded);
                let _ = handle_stream(&mut conn, stream);
                if conn.is_closed() {
                    stop.store(true, Ordering::SeqCst);
                    // wake the accept loop
                    let _ = TcpStream::connect(addr);
                }
            });
        }
        Ok(())
    }
}

fn handle_stream(conn: &mut Connection, stream: TcpStream) -> io::Result<()> {
    let reader = BufReader::new(stream.try_clone()?);
    serve_lines(conn, reader, stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_list, ItemDecl, ListSpec};

    fn graph() -> Arc<Graph> {
        let spec = ListSpec {
            items: ["a", "b", "c"].iter().map(|s| ItemDecl::new(*s)).collect(),
            ..Default::default()
        };
        Arc::new(build_list(&spec).unwrap())
    }

    fn parse(line: &str) -> Value {
        serde_json::from_str(line).unwrap()
    }

    #[test]
    fn init_enter_move() {
        let lines = run_transcript(
            Some(graph()),
            [
                r#"{"id":1,"op":"init","args":{"protocol":1}}"#,
                r#"{"id":2,"op":"enter"}"#,
                r#"{"id":3,"op":"input","args":{"token":"ArrowRight"}}"#,
                r#"{"id":4,"op":"state"}"#,
            ],
        );
        assert_eq!(parse(&lines[0])["result"]["session"], "s1");
        assert_eq!(parse(&lines[1])["result"]["move"]["status"], "entered");
        assert_eq!(parse(&lines[2])["result"]["move"]["to"], "b");
        assert_eq!(parse(&lines[2])["result"]["description"], "b. 2 of 3.");
        assert_eq!(
            parse(&lines[3])["result"],
            json!({"current": "b", "depth": 1, "active": true})
        );
    }

    #[test]
    fn errors_leave_state_alone() {
        let lines = run_transcript(
            Some(graph()),
            [
                r#"{"id":1,"op":"move","args":{"rule":"forward"}}"#,
                r#"{"id":2,"op":"init"}"#,
                r#"{"id":3,"op":"enter"}"#,
                r#"{"id":4,"op":"move","args":{"rule":"warp"}}"#,
                r#"not json"#,
                r#"{"id":6,"op":"fly"}"#,
                r#"{"id":7,"op":"state"}"#,
            ],
        );
        assert_eq!(parse(&lines[0])["error"]["code"], "UnknownSession");
        assert_eq!(parse(&lines[3])["error"]["code"], "UnknownRule");
        assert_eq!(parse(&lines[4])["error"]["code"], "BadRequest");
        assert_eq!(parse(&lines[4])["id"], Value::Null);
        assert_eq!(parse(&lines[5])["error"]["code"], "BadRequest");
        assert_eq!(parse(&lines[6])["result"]["current"], "a");
    }

    #[test]
    fn exit_then_inactive() {
        let lines = run_transcript(
            Some(graph()),
            [
                r#"{"id":1,"op":"init"}"#,
                r#"{"id":2,"op":"enter"}"#,
                r#"{"id":3,"op":"command","args":{"text":"Exit"}}"#,
                r#"{"id":4,"op":"input","args":{"token":"ArrowRight"}}"#,
            ],
        );
        let exited = parse(&lines[2]);
        assert_eq!(exited["result"]["move"]["status"], "exited");
        assert_eq!(exited["result"]["plan"]["focusTarget"]["kind"], "exit");
        assert_eq!(parse(&lines[3])["error"]["code"], "InactiveSession");
    }

    #[test]
    fn unbound_input_is_ignored() {
        let lines = run_transcript(
            Some(graph()),
            [
                r#"{"id":1,"op":"init"}"#,
                r#"{"id":2,"op":"enter"}"#,
                r#"{"id":3,"op":"input","args":{"token":"F13"}}"#,
            ],
        );
        assert_eq!(parse(&lines[2])["result"]["ignored"], true);
    }

    #[test]
    fn remap_and_protocol_check() {
        let lines = run_transcript(
            Some(graph()),
            [
                r#"{"id":1,"op":"init","args":{"protocol":2}}"#,
                r#"{"id":2,"op":"init","args":{"remap":{"KeyJ":"forward"}}}"#,
                r#"{"id":3,"op":"enter"}"#,
                r#"{"id":4,"op":"input","args":{"token":"KeyJ"}}"#,
            ],
        );
        assert_eq!(parse(&lines[0])["error"]["code"], "BadRequest");
        assert_eq!(parse(&lines[3])["result"]["move"]["to"], "b");
    }

    #[test]
    fn shutdown_stops_reading() {
        let input = "{\"id\":1,\"op\":\"shutdown\"}\n{\"id\":2,\"op\":\"state\"}\n";
        let mut out = Vec::new();
        let mut conn = Connection::new(None);
        serve_lines(&mut conn, input.as_bytes(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1);
    }
}
