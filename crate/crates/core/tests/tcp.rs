mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::thread;

use navgraph::protocol::TcpServer;
use serde_json::{json, Value};

struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Client {
    fn connect(addr: std::net::SocketAddr) -> Self {
        let writer = TcpStream::connect(addr).unwrap();
        Client {
            reader: BufReader::new(writer.try_clone().unwrap()),
            writer,
        }
    }

    fn call(&mut self, req: Value) -> Value {
        writeln!(self.writer, "{req}").unwrap();
        let mut line = String::new();
        self.reader.read_line(&mut line).unwrap();
        serde_json::from_str(&line).unwrap()
    }
}

#[test]
fn two_connections_keep_separate_focus() {
    let server = TcpServer::bind(0, Some(common::graph("set_diagram"))).unwrap();
    let addr = server.local_addr().unwrap();
    let handle = thread::spawn(move || server.run());

    let mut a = Client::connect(addr);
    let mut b = Client::connect(addr);
    for c in [&mut a, &mut b] {
        assert_eq!(c.call(json!({"id": 1, "op": "init"}))["ok"], true);
        assert_eq!(c.call(json!({"id": 2, "op": "enter"}))["ok"], true);
    }
    a.call(json!({"id": 3, "op": "input", "args": {"token": "Enter"}}));
    a.call(json!({"id": 4, "op": "input", "args": {"token": "ArrowRight"}}));
    let sa = a.call(json!({"id": 5, "op": "state"}));
    let sb = b.call(json!({"id": 5, "op": "state"}));
    assert_eq!(sa["result"]["current"], "intersection-ab");
    assert_eq!(sa["result"]["depth"], 2);
    assert_eq!(sb["result"]["current"], "diagram");
    assert_eq!(sb["result"]["depth"], 0);

    let bye = b.call(json!({"id": 6, "op": "shutdown"}));
    assert_eq!(bye["result"]["shutdown"], true);
    drop(b);
    // the other connection is still served after shutdown was requested
    let d = a.call(json!({"id": 7, "op": "describe"}));
    assert_eq!(d["result"]["node"], "intersection-ab");
    drop(a);
    handle.join().unwrap().unwrap();
}
