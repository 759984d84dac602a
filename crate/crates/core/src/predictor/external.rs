//! Predictor backed by a child process speaking a newline-delimited protocol
//! over its standard streams:
//!
//! ```text
//! engine -> XQP/1 <m> <col1,...,colm>
//! model  -> OK
//! engine -> PREDICT <n>
//! engine -> <n CSV rows of m fields>
//! model  -> <n lines, one finite decimal number each>
//! ...
//! engine -> QUIT
//! ```
//!
//! Responses are cached per distinct batch. The first time a batch is seen
//! again it is re-sent and the answers compared, which catches models that
//! are not deterministic.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use super::{check_rows, Predictor};
use crate::error::{Error, Result};
use crate::tabular::{ColumnMeta, Matrix};

pub const DEFAULT_RESPONSE_TIMEOUT: Duration = Duration::from_secs(30);

const PROTOCOL_HEADER: &str = "XQP/1";

pub struct ExternalModel {
    signature: Vec<ColumnMeta>,
    argv: Vec<String>,
    session: Mutex<Session>,
}

struct CachedBatch {
    scores: Vec<f64>,
    verified: bool,
}

struct Session {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    lines_read: usize,
    timeout: Duration,
    cache: HashMap<Vec<u64>, CachedBatch>,
    failed: Option<String>,
}

/// Spawns `argv` and performs the handshake for the given feature columns.
pub fn connect_external(argv: &[String], signature: Vec<ColumnMeta>) -> Result<ExternalModel> {
    ExternalModel::spawn(argv, signature, DEFAULT_RESPONSE_TIMEOUT)
}

impl ExternalModel {
    pub fn spawn(argv: &[String], signature: Vec<ColumnMeta>, timeout: Duration) -> Result<Self> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| Error::External("empty command".into()))?;
        if signature.iter().any(|c| c.name.contains([',', ' ', '\n'])) {
            return Err(Error::External(
                "column names sent in the handshake may not contain commas, spaces or newlines".into(),
            ));
        }
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::External(format!("cannot spawn '{program}': {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });

        let mut session = Session {
            child,
            stdin,
            lines: rx,
            lines_read: 0,
            timeout,
            cache: HashMap::new(),
            failed: None,
        };
        let names: Vec<&str> = signature.iter().map(|c| c.name.as_str()).collect();
        session.send(&format!("{PROTOCOL_HEADER} {} {}\n", names.len(), names.join(",")))?;
        let (line, reply) = session.read_line()?;
        if reply.trim_end() != "OK" {
            return Err(Error::Protocol {
                line,
                content: reply,
                message: "handshake expected 'OK'".into(),
            });
        }
        Ok(Self {
            signature,
            argv: argv.to_vec(),
            session: Mutex::new(session),
        })
    }

    pub fn command(&self) -> &[String] {
        &self.argv
    }

    /// Sends `QUIT` and waits for the process to exit.
    pub fn shutdown(self) -> Result<()> {
        let mut session = self.session.into_inner().unwrap_or_else(|p| p.into_inner());
        session.quit();
        Ok(())
    }

    fn encode_batch(&self, rows: &Matrix) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        for row in rows.rows() {
            w.write_record(self.signature.iter().zip(row).map(|(c, &v)| c.format_cell(v)))?;
        }
        let body = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
        let mut msg = format!("PREDICT {}\n", rows.n_rows());
        msg.push_str(&String::from_utf8_lossy(&body));
        Ok(msg)
    }
}

impl Session {
    fn send(&mut self, text: &str) -> Result<()> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| Error::External("session already closed".into()))?;
        stdin
            .write_all(text.as_bytes())
            .and_then(|()| stdin.flush())
            .map_err(|e| Error::External(format!("model stopped reading its input: {e}")))
    }

    /// Next response line with its 1-based position in the response stream.
    fn read_line(&mut self) -> Result<(usize, String)> {
        let line_no = self.lines_read + 1;
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => {
                self.lines_read = line_no;
                Ok((line_no, line))
            }
            Ok(Err(e)) => Err(Error::Protocol {
                line: line_no,
                content: String::new(),
                message: format!("unreadable output: {e}"),
            }),
            Err(RecvTimeoutError::Disconnected) => Err(Error::Protocol {
                line: line_no,
                content: String::new(),
                message: "model closed its output (process exited mid-session)".into(),
            }),
            Err(RecvTimeoutError::Timeout) => Err(Error::Protocol {
                line: line_no,
                content: String::new(),
                message: format!("no response within {:?}", self.timeout),
            }),
        }
    }

    fn query(&mut self, request: &str, n: usize) -> Result<Vec<f64>> {
        self.send(request)?;
        let mut scores = Vec::with_capacity(n);
        for got in 0..n {
            let (line, text) = self.read_line().map_err(|e| match e {
                Error::Protocol { line, content, message } => Error::Protocol {
                    line,
                    content,
                    message: format!("{message}; expected {n} score lines, received {got}"),
                },
                other => other,
            })?;
            match text.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => scores.push(v),
                Ok(_) => {
                    return Err(Error::Protocol {
                        line,
                        content: text,
                        message: "score is not finite".into(),
                    })
                }
                Err(_) => {
                    return Err(Error::Protocol {
                        line,
                        content: text,
                        message: "expected a decimal number".into(),
                    })
                }
            }
        }
        Ok(scores)
    }

    fn quit(&mut self) {
        if let Some(mut stdin) = self.stdin.take() {
            let _ = stdin.write_all(b"QUIT\n");
            let _ = stdin.flush();
        }
        let deadline = Instant::now() + Duration::from_secs(2);
        loop {
            match self.child.try_wait() {
                Ok(Some(_)) => return,
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
                _ => break,
            }
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        self.quit();
    }
}

fn batch_key(rows: &Matrix) -> Vec<u64> {
    let mut key = Vec::with_capacity(rows.as_slice().len() + 1);
    key.push(rows.n_cols() as u64);
    key.extend(rows.as_slice().iter().map(|v| v.to_bits()));
    key
}

impl Predictor for ExternalModel {
    fn signature(&self) -> &[ColumnMeta] {
        &self.signature
    }

    fn predict_batch(&self, rows: &Matrix) -> Result<Vec<f64>> {
        check_rows(&self.signature, rows)?;
        if rows.n_rows() == 0 {
            return Ok(Vec::new());
        }
        let key = batch_key(rows);
        let mut session = self.session.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(msg) = &session.failed {
            return Err(Error::External(format!("session unusable after earlier failure: {msg}")));
        }
        if let Some(hit) = session.cache.get(&key) {
            if hit.verified {
                return Ok(hit.scores.clone());
            }
        }
        let request = self.encode_batch(rows)?;
        let fresh = match session.query(&request, rows.n_rows()) {
            Ok(s) => s,
            Err(e) => {
                session.failed = Some(e.to_string());
                return Err(e);
            }
        };
        match session.cache.get_mut(&key) {
            Some(entry) => {
                if let Some(row) = entry
                    .scores
                    .iter()
                    .zip(&fresh)
                    .position(|(a, b)| a.to_bits() != b.to_bits())
                {
                    return Err(Error::PurityViolation {
                        rows: rows.n_rows(),
                        row,
                    });
                }
                entry.verified = true;
            }
            None => {
                session.cache.insert(
                    key,
                    CachedBatch {
                        scores: fresh.clone(),
                        verified: false,
                    },
                );
            }
        }
        Ok(fresh)
    }
}
