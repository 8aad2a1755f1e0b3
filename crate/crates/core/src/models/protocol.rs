//! Line protocol for out-of-process predictors.
//!
//! Newline-delimited UTF-8 over the server's stdin/stdout:
//!
//! ```text
//! client: HELLO v1 <cls|reg> <d>
//! client: <comma-separated feature names>
//! server: READY
//! client: PREDICT <n>
//! client: <n lines of d comma-separated reals>
//! server: <n lines, one real each>
//! server: END
//! client: QUIT
//! ```
//!
//! A server line starting with `ERR ` aborts the current exchange. Reals are
//! written in shortest round-trip decimal form without exponent, and
//! integral values without a fractional part (`1`, not `1.0`).

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use super::{ModelHandle, ModelKind, Task};
use crate::error::{Error, Result};

pub const PROTOCOL_VERSION: &str = "v1";

fn read_line<R: BufRead>(reader: &mut R) -> Result<Option<String>> {
    let mut line = String::new();
    let read = reader
        .read_line(&mut line)
        .map_err(|e| Error::Protocol(format!("read failed: {e}")))?;
    if read == 0 {
        return Ok(None);
    }
    while line.ends_with('\n') || line.ends_with('\r') {
        line.pop();
    }
    Ok(Some(line))
}

fn write_line<W: Write>(writer: &mut W, line: &str) -> Result<()> {
    writer
        .write_all(line.as_bytes())
        .and_then(|_| writer.write_all(b"\n"))
        .map_err(|e| Error::Protocol(format!("write failed: {e}")))
}

fn flush<W: Write>(writer: &mut W) -> Result<()> {
    writer
        .flush()
        .map_err(|e| Error::Protocol(format!("flush failed: {e}")))
}

fn format_row(row: &[f64]) -> String {
    row.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Client half of the protocol over any reader/writer pair.
#[derive(Debug)]
pub struct ProtocolClient<R, W> {
    reader: R,
    writer: W,
    task: Task,
}

impl<R: BufRead, W: Write> ProtocolClient<R, W> {
    /// Sends `HELLO` and the feature names, then waits for `READY`.
    pub fn handshake(mut reader: R, mut writer: W, task: Task, feature_names: &[String]) -> Result<Self> {
        write_line(
            &mut writer,
            &format!(
                "HELLO {PROTOCOL_VERSION} {} {}",
                task.wire_name(),
                feature_names.len()
            ),
        )?;
        write_line(&mut writer, &feature_names.join(","))?;
        flush(&mut writer)?;
        match read_line(&mut reader)?.as_deref() {
            Some("READY") => Ok(Self { reader, writer, task }),
            Some(line) if line.starts_with("ERR ") => Err(Error::Protocol(line[4..].to_string())),
            Some(line) => Err(Error::Protocol(format!("expected READY, got `{line}`"))),
            None => Err(Error::Protocol("server closed during handshake".into())),
        }
    }

    /// One `PREDICT` exchange for row-major `values` of width `d`.
    pub fn predict(&mut self, values: &[f64], d: usize) -> Result<Vec<f64>> {
        let n = values.len() / d;
        write_line(&mut self.writer, &format!("PREDICT {n}"))?;
        for row in values.chunks_exact(d) {
            write_line(&mut self.writer, &format_row(row))?;
        }
        flush(&mut self.writer)?;
        let mut out = Vec::with_capacity(n);
        loop {
            let line = read_line(&mut self.reader)?
                .ok_or_else(|| Error::Protocol("server closed mid-batch".into()))?;
            if let Some(msg) = line.strip_prefix("ERR ") {
                return Err(Error::Protocol(msg.to_string()));
            }
            if line == "END" {
                break;
            }
            let v: f64 = line
                .trim()
                .parse()
                .map_err(|_| Error::Protocol(format!("malformed prediction `{line}`")))?;
            if !v.is_finite() || (self.task == Task::Classification && v != 0.0 && v != 1.0) {
                return Err(Error::Protocol(format!("invalid {} prediction {v}", self.task)));
            }
            out.push(v);
        }
        if out.len() != n {
            return Err(Error::Protocol(format!(
                "expected {n} predictions, got {}",
                out.len()
            )));
        }
        Ok(out)
    }

    pub fn quit(&mut self) -> Result<()> {
        write_line(&mut self.writer, "QUIT")?;
        flush(&mut self.writer)
    }
}

#[derive(Debug)]
struct Session {
    child: Child,
    client: ProtocolClient<BufReader<ChildStdout>, BufWriter<ChildStdin>>,
}

/// A predictor running as a child process. Requests are serialized: one
/// batch in flight per handle.
#[derive(Debug)]
pub struct ExternalModel {
    pub command: String,
    session: Mutex<Session>,
}

impl ExternalModel {
    /// Starts `command` through `sh -c` and performs the handshake.
    pub fn spawn(command: &str, task: Task, feature_names: &[String]) -> Result<ModelHandle> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Model(format!("cannot start `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let client =
            ProtocolClient::handshake(BufReader::new(stdout), BufWriter::new(stdin), task, feature_names)?;
        Ok(ModelHandle {
            name: format!("external({command})"),
            kind: ModelKind::External(ExternalModel {
                command: command.to_string(),
                session: Mutex::new(Session { child, client }),
            }),
            task,
            feature_names: feature_names.to_vec(),
        })
    }

    pub fn predict(&self, values: &[f64], d: usize) -> Result<Vec<f64>> {
        if values.is_empty() {
            return Ok(Vec::new());
        }
        let mut session = self
            .session
            .lock()
            .map_err(|_| Error::Model("external model session poisoned".into()))?;
        session.client.predict(values, d)
    }
}

impl Drop for ExternalModel {
    fn drop(&mut self) {
        if let Ok(session) = self.session.get_mut() {
            let _ = session.client.quit();
            let _ = session.child.wait();
        }
    }
}

/// Serves `model` until `QUIT` or end of input.
pub fn serve<R: BufRead, W: Write>(model: &ModelHandle, mut reader: R, mut writer: W) -> Result<()> {
    let d = model.d();
    let mut ready = false;
    while let Some(line) = read_line(&mut reader)? {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("HELLO") => {
                let names = read_line(&mut reader)?.unwrap_or_default();
                let fields: Vec<&str> = parts.collect();
                let reply = match fields.as_slice() {
                    [version, ..] if *version != PROTOCOL_VERSION => {
                        format!("ERR unsupported version `{version}`")
                    }
                    [_, task, dim] => match (Task::from_wire(task), dim.parse::<usize>()) {
                        (Err(_), _) => format!("ERR unknown task `{task}`"),
                        (Ok(t), _) if t != model.task => format!("ERR model task is {}", model.task),
                        (_, Err(_)) => format!("ERR bad dimension `{dim}`"),
                        (Ok(_), Ok(n)) if n == d && names.split(',').count() == d => {
                            ready = true;
                            "READY".to_string()
                        }
                        (Ok(_), Ok(_)) => format!("ERR expected d={d} features"),
                    },
                    _ => "ERR malformed HELLO".to_string(),
                };
                write_line(&mut writer, &reply)?;
            }
            Some("PREDICT") => {
                let count = parts.next().and_then(|c| c.parse::<usize>().ok());
                let Some(count) = count else {
                    write_line(&mut writer, &format!("ERR malformed PREDICT `{line}`"))?;
                    flush(&mut writer)?;
                    continue;
                };
                let mut values = Vec::with_capacity(count * d);
                let mut problem = None;
                for i in 0..count {
                    let row = read_line(&mut reader)?
                        .ok_or_else(|| Error::Protocol("client closed mid-batch".into()))?;
                    if problem.is_some() {
                        continue;
                    }
                    let parsed: std::result::Result<Vec<f64>, _> =
                        row.split(',').map(|c| c.trim().parse::<f64>()).collect();
                    match parsed {
                        Ok(r) if r.len() == d && r.iter().all(|v| v.is_finite()) => values.extend(r),
                        Ok(r) if r.len() != d => {
                            problem = Some(format!("row {i}: expected d={d} values, got {}", r.len()))
                        }
                        _ => problem = Some(format!("row {i}: malformed `{row}`")),
                    }
                }
                if !ready {
                    problem = Some("PREDICT before handshake".into());
                }
                match problem {
                    Some(msg) => write_line(&mut writer, &format!("ERR {msg}"))?,
                    None => match model.predict_values(&values) {
                        Ok(batch) => {
                            for v in batch.values {
                                write_line(&mut writer, &v.to_string())?;
                            }
                            write_line(&mut writer, "END")?;
                        }
                        Err(e) => write_line(&mut writer, &format!("ERR {e}"))?,
                    },
                }
            }
            Some("QUIT") => {
                flush(&mut writer)?;
                return Ok(());
            }
            None => continue,
            Some(other) => write_line(&mut writer, &format!("ERR unknown command `{other}`"))?,
        }
        flush(&mut writer)?;
    }
    flush(&mut writer)
}
