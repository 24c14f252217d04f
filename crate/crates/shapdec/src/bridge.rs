//! Models running in another process, spoken to in line-delimited JSON.
//!
//! ```text
//! > {"op":"hello","version":1,"n_features":M}
//! < {"ok":true}
//! > {"op":"predict","inputs":[[...],...]}
//! < {"outputs":[...]}
//! ```
//! A reply carrying `"error"` aborts the computation.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use shapdec_core::models::Predictor;
use shapdec_core::{Error, Result, Rows};

pub const PROTOCOL_VERSION: u64 = 1;
const STDERR_CAP: usize = 16 * 1024;

struct Process {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    stderr_reader: Option<JoinHandle<()>>,
}

pub struct ExternalModel {
    cmd: Vec<String>,
    n_features: usize,
    // one request in flight per process
    process: Mutex<Option<Process>>,
    stderr: Arc<Mutex<String>>,
}

impl fmt::Debug for ExternalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExternalModel").field("cmd", &self.cmd).field("n_features", &self.n_features).finish()
    }
}

impl ExternalModel {
    /// Starts `cmd` and performs the handshake.
    pub fn spawn(cmd: &[String], n_features: usize) -> Result<Self> {
        let (program, args) = cmd.split_first().ok_or_else(|| Error::Model("bridge: empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Model(format!("bridge: cannot start {program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let stderr = Arc::new(Mutex::new(String::new()));
        let stderr_reader = child.stderr.take().map(|mut pipe| {
            let sink = Arc::clone(&stderr);
            thread::spawn(move || {
                let mut buf = [0u8; 4096];
                while let Ok(n) = pipe.read(&mut buf) {
                    if n == 0 {
                        break;
                    }
                    let mut s = sink.lock().unwrap_or_else(|p| p.into_inner());
                    if s.len() < STDERR_CAP {
                        s.push_str(&String::from_utf8_lossy(&buf[..n]));
                    }
                }
            })
        });
        let model = ExternalModel {
            cmd: cmd.to_vec(),
            n_features,
            process: Mutex::new(Some(Process { child, stdin, stdout, stderr_reader })),
            stderr,
        };
        let reply = model.request(&json!({"op": "hello", "version": PROTOCOL_VERSION, "n_features": n_features}))?;
        if reply.get("ok") != Some(&Value::Bool(true)) {
            return Err(model.failure(&format!("handshake refused: {reply}")));
        }
        Ok(model)
    }

    pub fn command(&self) -> &[String] {
        &self.cmd
    }

    fn failure(&self, what: &str) -> Error {
        if let Some(mut p) = self.process.lock().unwrap_or_else(|p| p.into_inner()).take() {
            let _ = p.child.kill();
            let _ = p.child.wait();
            // the pipe closes with the child unless a grandchild still holds it
            if let Some(reader) = p.stderr_reader {
                let deadline = Instant::now() + Duration::from_millis(500);
                while !reader.is_finished() && Instant::now() < deadline {
                    thread::sleep(Duration::from_millis(2));
                }
                if reader.is_finished() {
                    let _ = reader.join();
                }
            }
        }
        let diag = self.stderr.lock().unwrap_or_else(|p| p.into_inner()).trim().to_owned();
        if diag.is_empty() {
            Error::Model(format!("bridge {}: {what}", self.cmd[0]))
        } else {
            Error::Model(format!("bridge {}: {what}; stderr: {diag}", self.cmd[0]))
        }
    }

    fn request(&self, message: &Value) -> Result<Value> {
        let outcome = {
            let mut guard = self.process.lock().unwrap_or_else(|p| p.into_inner());
            let Some(p) = guard.as_mut() else {
                return Err(Error::Model(format!("bridge {}: process is gone", self.cmd[0])));
            };
            exchange(p, message)
        };
        let reply = outcome.map_err(|e| self.failure(&e))?;
        if let Some(err) = reply.get("error") {
            return Err(self.failure(&format!("model reported {err}")));
        }
        Ok(reply)
    }
}

fn exchange(p: &mut Process, message: &Value) -> std::result::Result<Value, String> {
    let mut line = message.to_string();
    line.push('\n');
    p.stdin
        .write_all(line.as_bytes())
        .and_then(|_| p.stdin.flush())
        .map_err(|e| format!("write failed: {e}"))?;
    let mut reply = String::new();
    match p.stdout.read_line(&mut reply) {
        Ok(0) => Err("process closed its output".into()),
        Ok(_) => serde_json::from_str(&reply).map_err(|e| format!("malformed reply {:?}: {e}", reply.trim_end())),
        Err(e) => Err(format!("read failed: {e}")),
    }
}

impl Predictor for ExternalModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_batch(&self, rows: &Rows) -> Result<Vec<f64>> {
        if rows.width() != self.n_features {
            return Err(Error::Dimension { expected: self.n_features, got: rows.width() });
        }
        let inputs: Vec<&[f64]> = rows.iter().collect();
        let reply = self.request(&json!({"op": "predict", "inputs": inputs}))?;
        let outputs = reply
            .get("outputs")
            .and_then(Value::as_array)
            .ok_or_else(|| self.failure("reply has no outputs"))?;
        if outputs.len() != rows.len() {
            return Err(self.failure(&format!("expected {} outputs, got {}", rows.len(), outputs.len())));
        }
        outputs
            .iter()
            .map(|v| v.as_f64().filter(|f| f.is_finite()).ok_or_else(|| self.failure(&format!("bad output {v}"))))
            .collect()
    }

    fn id(&self) -> String {
        format!("external({})", self.cmd.join(" "))
    }
}

impl Drop for ExternalModel {
    fn drop(&mut self) {
        if let Some(mut p) = self.process.get_mut().unwrap_or_else(|p| p.into_inner()).take() {
            drop(p.stdin);
            if !matches!(p.child.try_wait(), Ok(Some(_))) {
                let _ = p.child.kill();
            }
            let _ = p.child.wait();
        }
    }
}
