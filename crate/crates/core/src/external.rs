//! Black boxes evaluated by a child process.
//!
//! The child reads one request per line on stdin,
//! `{"point": {"x": [...], "z": [...], "c": [...]}}`, and answers each with
//! one line `{"f": <real>, "g": [<real>, ...]}` on stdout. A timeout, a
//! malformed answer or an exited child fails that evaluation; the process is
//! restarted for the next one.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::Evaluation;
use crate::sego::{BlackBox, Problem, Reference};
use crate::space::{MixedPoint, MixedSpace};

#[derive(Serialize)]
struct Request<'a> {
    point: &'a MixedPoint,
}

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Running {
    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    /// Closes stdin so a well-behaved child can exit, then kills stragglers.
    fn close(self) {
        let Running { mut child, stdin, .. } = self;
        drop(stdin);
        for _ in 0..20 {
            if let Ok(Some(_)) = child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(5));
        }
        let _ = child.kill();
        let _ = child.wait();
    }
}

pub struct ExternalBlackBox {
    command: Vec<String>,
    working_dir: Option<PathBuf>,
    n_constraints: usize,
    timeout: Duration,
    state: Mutex<Option<Running>>,
}

impl ExternalBlackBox {
    pub fn new(command: Vec<String>, n_constraints: usize, timeout: Duration) -> Result<Self> {
        if command.is_empty() {
            return Err(Error::Config("empty black-box command".into()));
        }
        Ok(Self { command, working_dir: None, n_constraints, timeout, state: Mutex::new(None) })
    }

    pub fn in_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.working_dir = Some(dir.into());
        self
    }

    fn spawn(&self) -> Result<Running> {
        let mut cmd = Command::new(&self.command[0]);
        cmd.args(&self.command[1..]).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::inherit());
        if let Some(dir) = &self.working_dir {
            cmd.current_dir(dir);
        }
        let mut child = cmd
            .spawn()
            .map_err(|e| Error::Evaluation(format!("cannot start {:?}: {e}", self.command[0])))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Running { child, stdin, lines: rx })
    }

    fn exchange(&self, run: &mut Running, w: &MixedPoint) -> Result<Evaluation> {
        let mut line = serde_json::to_string(&Request { point: w })?;
        line.push('\n');
        run.stdin
            .write_all(line.as_bytes())
            .and_then(|_| run.stdin.flush())
            .map_err(|e| Error::Evaluation(format!("cannot send request: {e}")))?;
        let answer = match run.lines.recv_timeout(self.timeout) {
            Ok(Ok(a)) => a,
            Ok(Err(e)) => return Err(Error::Evaluation(format!("cannot read answer: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                return Err(Error::Evaluation(format!("no answer within {:?}", self.timeout)))
            }
            Err(RecvTimeoutError::Disconnected) => {
                let status = run.child.wait().map(|s| s.to_string()).unwrap_or_else(|e| e.to_string());
                return Err(Error::Evaluation(format!("black box exited ({status})")));
            }
        };
        let eval: Evaluation = serde_json::from_str(answer.trim())
            .map_err(|e| Error::Evaluation(format!("malformed answer {answer:?}: {e}")))?;
        if eval.g.len() != self.n_constraints {
            return Err(Error::Evaluation(format!(
                "answer has {} constraint values, expected {}",
                eval.g.len(),
                self.n_constraints
            )));
        }
        Ok(eval)
    }
}

impl BlackBox for ExternalBlackBox {
    fn n_constraints(&self) -> usize {
        self.n_constraints
    }

    fn evaluate(&self, w: &MixedPoint) -> Result<Evaluation> {
        let mut state = self.state.lock().unwrap_or_else(|p| p.into_inner());
        let mut run = match state.take() {
            Some(r) => r,
            None => self.spawn()?,
        };
        match self.exchange(&mut run, w) {
            Ok(e) => {
                *state = Some(run);
                Ok(e)
            }
            Err(e) => {
                run.kill();
                Err(e)
            }
        }
    }
}

impl Drop for ExternalBlackBox {
    fn drop(&mut self) {
        if let Some(run) = self.state.get_mut().ok().and_then(Option::take) {
            run.close();
        }
    }
}

fn default_timeout_ms() -> u64 {
    60_000
}

/// JSON description of a problem evaluated by an external command.
///
/// A relative `command[0]` containing a path separator, and the working
/// directory, are resolved against the description file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExternalProblemSpec {
    pub name: String,
    pub space: MixedSpace,
    #[serde(default)]
    pub n_constraints: usize,
    pub command: Vec<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub reference: Option<f64>,
}

impl ExternalProblemSpec {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn into_problem(self, base_dir: &Path) -> Result<Problem> {
        let mut command = self.command;
        if let Some(first) = command.first_mut() {
            if first.contains('/') && Path::new(first.as_str()).is_relative() {
                *first = base_dir.join(&*first).to_string_lossy().into_owned();
            }
        }
        let bb = ExternalBlackBox::new(command, self.n_constraints, Duration::from_millis(self.timeout_ms))?
            .in_dir(base_dir);
        let mut p = Problem::new(&self.name, self.space, Arc::new(bb));
        if let Some(value) = self.reference {
            p = p.with_reference(Reference { value, point: None });
        }
        Ok(p)
    }
}
