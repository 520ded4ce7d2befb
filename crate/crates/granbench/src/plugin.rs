//! External predictors driven over a JSON-lines pipe.
//!
//! The child reads one request per line on stdin and answers each with one
//! line on stdout:
//!
//! ```text
//! {"op":"init","granularity":"day","val_span_seconds":86400,"warmup":[[src,dst,t],...]}  -> {"ok":true}
//! {"op":"score","now":t,"candidates":[[src,dst],...]}                                      -> {"scores":[...]}
//! {"op":"update","events":[[src,dst,t],...]}                                               -> {"ok":true}
//! ```
//!
//! Timestamps are bucketed. Any reply carrying `"error"` aborts the cell.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use granbench_core::edgebank::{InitContext, LinkPredictor};
use granbench_core::stream::{EdgeStream, Event};
use granbench_core::{Edge, Error as CoreError, Timestamp};
use serde::{Deserialize, Serialize};

use crate::config::ExternalMethod;
use crate::error::{HarnessError, Result};

#[derive(Serialize)]
#[serde(tag = "op", rename_all = "lowercase")]
enum Request<'a> {
    Init {
        granularity: &'a str,
        val_span_seconds: Timestamp,
        warmup: Vec<(u32, u32, Timestamp)>,
    },
    Score {
        now: Timestamp,
        candidates: &'a [Edge],
    },
    Update {
        events: Vec<(u32, u32, Timestamp)>,
    },
}

#[derive(Deserialize)]
struct Reply {
    #[serde(default)]
    scores: Option<Vec<f64>>,
    #[serde(default)]
    error: Option<String>,
}

struct Pipe {
    stdin: BufWriter<ChildStdin>,
    stdout: BufReader<ChildStdout>,
    line: String,
}

pub struct SubprocessPredictor {
    name: String,
    child: Child,
    pipe: Mutex<Pipe>,
}

fn triples(events: &[Event]) -> Vec<(u32, u32, Timestamp)> {
    events
        .iter()
        .map(|e| (e.src, e.dst, e.t_bucketed))
        .collect()
}

impl SubprocessPredictor {
    pub fn spawn(method: &ExternalMethod) -> Result<Self> {
        let plugin_err = |message: String| HarnessError::Plugin {
            name: method.name.clone(),
            message,
        };
        let (program, args) = method
            .command
            .split_first()
            .ok_or_else(|| plugin_err("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| plugin_err(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Ok(SubprocessPredictor {
            name: method.name.clone(),
            child,
            pipe: Mutex::new(Pipe {
                stdin: BufWriter::new(stdin),
                stdout: BufReader::new(stdout),
                line: String::new(),
            }),
        })
    }

    fn call(&self, req: &Request<'_>) -> granbench_core::Result<Reply> {
        let fail = |msg: String| CoreError::Predictor(format!("{}: {msg}", self.name));
        let mut pipe = self
            .pipe
            .lock()
            .map_err(|_| fail("pipe lock poisoned".into()))?;
        let Pipe {
            stdin,
            stdout,
            line,
        } = &mut *pipe;
        serde_json::to_writer(&mut *stdin, req).map_err(|e| fail(e.to_string()))?;
        stdin
            .write_all(b"\n")
            .and_then(|_| stdin.flush())
            .map_err(|e| fail(format!("write failed: {e}")))?;
        line.clear();
        let n = stdout
            .read_line(line)
            .map_err(|e| fail(format!("read failed: {e}")))?;
        if n == 0 {
            return Err(fail("process closed its output".into()));
        }
        let reply: Reply =
            serde_json::from_str(line.trim_end()).map_err(|e| fail(format!("bad reply: {e}")))?;
        match reply.error {
            Some(msg) => Err(fail(msg)),
            None => Ok(reply),
        }
    }
}

impl LinkPredictor for SubprocessPredictor {
    fn name(&self) -> &str {
        &self.name
    }

    fn init(&mut self, warmup: &EdgeStream, ctx: &InitContext) -> granbench_core::Result<()> {
        self.call(&Request::Init {
            granularity: ctx.granularity.label(),
            val_span_seconds: ctx.val_span_seconds,
            warmup: triples(warmup.events()),
        })
        .map(drop)
    }

    fn score_batch(&self, candidates: &[Edge], now: Timestamp) -> granbench_core::Result<Vec<f64>> {
        self.call(&Request::Score { now, candidates })?
            .scores
            .ok_or_else(|| CoreError::Predictor(format!("{}: reply has no scores", self.name)))
    }

    fn update(&mut self, observed: &[Event]) -> granbench_core::Result<()> {
        self.call(&Request::Update {
            events: triples(observed),
        })
        .map(drop)
    }
}

impl Drop for SubprocessPredictor {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use granbench_core::stream::Granularity;

    const ECHO_MEMORY: &str = r#"
import json, sys
seen = set()
for line in sys.stdin:
    req = json.loads(line)
    op = req["op"]
    if op == "init":
        seen = {(s, d) for s, d, _ in req["warmup"]}
        print(json.dumps({"ok": True}))
    elif op == "score":
        c = req["candidates"]
        if len(c) == 1 and c[0] == [99, 99]:
            print(json.dumps({"error": "refused"}))
        else:
            print(json.dumps({"scores": [1.0 if (s, d) in seen else 0.0 for s, d in c]}))
    else:
        seen |= {(s, d) for s, d, _ in req["events"]}
        print(json.dumps({"ok": True}))
    sys.stdout.flush()
"#;

    fn python_available() -> bool {
        Command::new("python3").arg("--version").output().is_ok()
    }

    #[test]
    fn protocol_roundtrip() {
        if !python_available() {
            eprintln!("python3 not found; skipping");
            return;
        }
        let m = ExternalMethod {
            name: "memo".into(),
            command: vec!["python3".into(), "-c".into(), ECHO_MEMORY.into()],
        };
        let mut p = SubprocessPredictor::spawn(&m).unwrap();
        let warm = EdgeStream::from_triples([(1, 2, 5)], false);
        let ctx = InitContext {
            granularity: Granularity::Second,
            val_span_seconds: 10,
        };
        p.init(&warm, &ctx).unwrap();
        assert_eq!(p.score_batch(&[(1, 2), (2, 3)], 6).unwrap(), vec![1.0, 0.0]);
        let next = EdgeStream::from_triples([(2, 3, 7)], false);
        p.update(next.events()).unwrap();
        assert_eq!(p.score_batch(&[(2, 3)], 8).unwrap(), vec![1.0]);
        let err = p.score_batch(&[(99, 99)], 8).unwrap_err();
        assert!(err.to_string().contains("refused"));
    }

    #[test]
    fn missing_program_is_plugin_error() {
        let m = ExternalMethod {
            name: "ghost".into(),
            command: vec!["/nonexistent/predictor".into()],
        };
        assert!(matches!(
            SubprocessPredictor::spawn(&m),
            Err(HarnessError::Plugin { .. })
        ));
    }
}
