//! Newline-delimited JSON protocol to an external tagger process.
//!
//! Every request is one line `{"id": n, "kind": ..., ...}` and is answered by
//! one line echoing `id`:
//!
//! | kind       | request fields | response fields             |
//! |------------|----------------|-----------------------------|
//! | `hello`    |                | `labels`, `special_ids`     |
//! | `tokenize` | `word`         | `ids`                       |
//! | `forward`  | `batch`        | `scores` (`[row][word][label]`) |
//!
//! Failures are answered with `{"id": n, "error": {"code", "message"}}`; a
//! request that cannot be parsed gets `"id": null`. The connection stays
//! open after an error.

use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::bio::BioTag;
use crate::encoding::{BackendError, Scores, SpecialIds, TaggerBackend};
use crate::inference::Batch;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Request {
    Hello,
    Tokenize { word: String },
    Forward { batch: Batch },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub id: u64,
    #[serde(flatten)]
    pub request: Request,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireError {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub special_ids: Option<SpecialIds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Scores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<WireError>,
}

/// Error codes sent by [`serve`].
pub mod codes {
    pub const BAD_REQUEST: &str = "bad_request";
    pub const BACKEND: &str = "backend_error";
}

/// A [`TaggerBackend`] that forwards every call over the protocol.
pub struct BridgeBackend {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    next_id: u64,
    labels: Vec<BioTag>,
    specials: SpecialIds,
    child: Option<Child>,
}

impl std::fmt::Debug for BridgeBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BridgeBackend")
            .field("next_id", &self.next_id)
            .field("labels", &self.labels.len())
            .field("specials", &self.specials)
            .finish_non_exhaustive()
    }
}

impl BridgeBackend {
    /// Performs the handshake over an existing stream pair.
    pub fn over(reader: Box<dyn BufRead + Send>, writer: Box<dyn Write + Send>) -> Result<Self, BackendError> {
        let mut bridge = BridgeBackend {
            reader,
            writer,
            next_id: 0,
            labels: Vec::new(),
            specials: SpecialIds::BERT,
            child: None,
        };
        let hello = bridge.call(Request::Hello)?;
        let labels = hello
            .labels
            .ok_or_else(|| BackendError::Protocol("hello response has no labels".to_string()))?;
        if labels.is_empty() {
            return Err(BackendError::Protocol("empty label vocabulary".to_string()));
        }
        bridge.labels = labels
            .iter()
            .map(|l| {
                l.parse()
                    .map_err(|e| BackendError::Protocol(format!("bad label `{l}`: {e}")))
            })
            .collect::<Result<_, _>>()?;
        if let Some(s) = hello.special_ids {
            bridge.specials = SpecialIds::new(s.cls, s.sep, s.pad)?;
        }
        Ok(bridge)
    }

    /// Connects to `host:port`, or spawns `exec:<shell command>` and talks
    /// to it over stdin/stdout.
    pub fn connect(address: &str) -> Result<Self, BackendError> {
        if let Some(cmd) = address.strip_prefix("exec:") {
            let mut child = Command::new("sh")
                .arg("-c")
                .arg(cmd)
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::inherit())
                .spawn()?;
            let stdin = child.stdin.take().expect("stdin is piped");
            let stdout = child.stdout.take().expect("stdout is piped");
            let mut bridge =
                match BridgeBackend::over(Box::new(BufReader::new(stdout)), Box::new(BufWriter::new(stdin))) {
                    Ok(b) => b,
                    Err(e) => {
                        let _ = child.kill();
                        let _ = child.wait();
                        return Err(e);
                    }
                };
            bridge.child = Some(child);
            return Ok(bridge);
        }
        let stream = TcpStream::connect(address)?;
        stream.set_nodelay(true)?;
        let reader = BufReader::new(stream.try_clone()?);
        BridgeBackend::over(Box::new(reader), Box::new(BufWriter::new(stream)))
    }

    fn call(&mut self, request: Request) -> Result<Response, BackendError> {
        let id = self.next_id;
        self.next_id += 1;
        let line =
            serde_json::to_string(&Envelope { id, request }).map_err(|e| BackendError::Protocol(e.to_string()))?;
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        let mut reply = String::new();
        if self.reader.read_line(&mut reply)? == 0 {
            return Err(BackendError::Io(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                "bridge closed the connection",
            )));
        }
        let response: Response =
            serde_json::from_str(&reply).map_err(|e| BackendError::Protocol(format!("unparseable response: {e}")))?;
        if let Some(err) = response.error {
            return Err(BackendError::Remote {
                code: err.code,
                message: err.message,
            });
        }
        if response.id != Some(id) {
            return Err(BackendError::Protocol(format!(
                "response id {:?} does not match request {id}",
                response.id
            )));
        }
        Ok(response)
    }
}

impl Drop for BridgeBackend {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            // closing stdin asks the child to exit
            self.writer = Box::new(io::sink());
            let _ = child.wait();
        }
    }
}

impl TaggerBackend for BridgeBackend {
    fn special_ids(&self) -> SpecialIds {
        self.specials
    }

    fn labels(&self) -> &[BioTag] {
        &self.labels
    }

    fn tokenize(&mut self, word: &str) -> Result<Vec<u32>, BackendError> {
        self.call(Request::Tokenize { word: word.to_string() })?
            .ids
            .ok_or_else(|| BackendError::Protocol("tokenize response has no ids".to_string()))
    }

    fn forward(&mut self, batch: &Batch) -> Result<Scores, BackendError> {
        self.call(Request::Forward { batch: batch.clone() })?
            .scores
            .ok_or_else(|| BackendError::Protocol("forward response has no scores".to_string()))
    }
}

fn answer<B: TaggerBackend + ?Sized>(backend: &mut B, line: &str) -> Response {
    let envelope: Envelope = match serde_json::from_str(line) {
        Ok(e) => e,
        Err(e) => {
            let id = serde_json::from_str::<serde_json::Value>(line)
                .ok()
                .and_then(|v| v.get("id").and_then(serde_json::Value::as_u64));
            return Response {
                id,
                error: Some(WireError {
                    code: codes::BAD_REQUEST.to_string(),
                    message: e.to_string(),
                }),
                ..Response::default()
            };
        }
    };
    let mut response = Response {
        id: Some(envelope.id),
        ..Response::default()
    };
    let outcome = match envelope.request {
        Request::Hello => {
            response.labels = Some(backend.labels().iter().map(ToString::to_string).collect());
            response.special_ids = Some(backend.special_ids());
            Ok(())
        }
        Request::Tokenize { word } => backend.tokenize(&word).map(|ids| response.ids = Some(ids)),
        Request::Forward { batch } => backend.forward(&batch).map(|s| response.scores = Some(s)),
    };
    if let Err(e) = outcome {
        response.error = Some(WireError {
            code: codes::BACKEND.to_string(),
            message: e.to_string(),
        });
    }
    response
}

/// Answers requests from `reader` until end of input.
pub fn serve<B, R, W>(backend: &mut B, reader: R, mut writer: W) -> io::Result<()>
where
    B: TaggerBackend + ?Sized,
    R: BufRead,
    W: Write,
{
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = answer(backend, &line);
        serde_json::to_writer(&mut writer, &response)?;
        writer.write_all(b"\n")?;
        writer.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::mock_backend;

    fn exchange(lines: &str) -> Vec<Response> {
        let mut out = Vec::new();
        serve(&mut mock_backend(1), lines.as_bytes(), &mut out).unwrap();
        String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    }

    #[test]
    fn request_wire_shape() {
        let line = serde_json::to_string(&Envelope {
            id: 3,
            request: Request::Tokenize { word: "go".into() },
        })
        .unwrap();
        assert_eq!(line, r#"{"id":3,"kind":"tokenize","word":"go"}"#);
    }

    #[test]
    fn serves_hello_and_tokenize() {
        let replies =
            exchange("{\"id\":0,\"kind\":\"hello\"}\n{\"id\":1,\"kind\":\"tokenize\",\"word\":\"temperament\"}\n");
        let labels = replies[0].labels.as_ref().unwrap();
        assert!(labels.contains(&"B-ARG0".to_string()) && labels.contains(&"O".to_string()));
        assert_eq!(replies[0].special_ids, Some(SpecialIds::BERT));
        assert_eq!(replies[1].id, Some(1));
        assert_eq!(replies[1].ids.as_ref().unwrap().len(), 3);
    }

    #[test]
    fn errors_keep_the_connection() {
        let replies = exchange("garbage\n{\"id\":7,\"kind\":\"dance\"}\n{\"id\":8,\"kind\":\"hello\"}\n");
        assert_eq!(replies.len(), 3);
        assert_eq!(replies[0].id, None);
        assert_eq!(replies[0].error.as_ref().unwrap().code, codes::BAD_REQUEST);
        assert_eq!(replies[1].id, Some(7));
        assert!(replies[1].error.is_some());
        assert!(replies[2].labels.is_some());
    }
}
