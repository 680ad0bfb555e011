//! External pedagogical-soundness scorer protocol.
//!
//! Request: `{"response_text": "...", "scenario": {...}}` on one line.
//! Reply: `{"praise": 0|1|null, "error_response": 0|1|null}`.
//! Transport is a persistent subprocess (line-delimited JSON over
//! stdin/stdout) or HTTP POST, selected by config. Scorer failures leave
//! ratings missing; they are never fabricated.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;
use tutorbench_core::quality::SoundnessScore;
use tutorbench_core::scenario::TutoringScenario;
use tutorbench_core::stats::stable_hash;

use crate::config::{ScorerConfig, ScorerKind};

#[derive(Debug, thiserror::Error)]
pub enum ScorerError {
    #[error("scorer process error: {0}")]
    Process(String),
    #[error("scorer timeout after {0:?}")]
    Timeout(Duration),
    #[error("malformed scorer reply: {0}")]
    Malformed(String),
    #[error("scorer http error: {0}")]
    Http(String),
}

#[derive(Debug, Deserialize)]
struct ScorerReply {
    praise: Option<u8>,
    error_response: Option<u8>,
}

pub trait SoundnessScorer {
    fn scorer_id(&self) -> &str;

    /// Scores one response in its scenario context. The caller decides
    /// applicability; the scorer just rates.
    fn score(
        &mut self,
        response_text: &str,
        scenario: &TutoringScenario,
    ) -> Result<SoundnessScore, ScorerError>;
}

/// Deterministic offline scorer: a hash-derived binary rating, biased toward
/// "sound" so aggregate tables look realistic.
pub struct MockScorer;

impl SoundnessScorer for MockScorer {
    fn scorer_id(&self) -> &str {
        "mock"
    }

    fn score(
        &mut self,
        response_text: &str,
        scenario: &TutoringScenario,
    ) -> Result<SoundnessScore, ScorerError> {
        let h = stable_hash(&format!("{}|{}", scenario.scenario_id, response_text));
        Ok(SoundnessScore {
            praise_rating: Some(u8::from(h % 4 != 0)),
            error_response_rating: Some(u8::from((h >> 8) % 4 != 0)),
            scorer_id: self.scorer_id().to_string(),
        })
    }
}

fn request_line(response_text: &str, scenario: &TutoringScenario) -> String {
    let mut line = json!({
        "response_text": response_text,
        "scenario": scenario,
    })
    .to_string();
    line.push('\n');
    line
}

fn reply_to_score(reply: ScorerReply, scorer_id: &str) -> Result<SoundnessScore, ScorerError> {
    let check = |r: Option<u8>| match r {
        Some(v) if v > 1 => Err(ScorerError::Malformed(format!("rating {v} not in 0/1"))),
        other => Ok(other),
    };
    Ok(SoundnessScore {
        praise_rating: check(reply.praise)?,
        error_response_rating: check(reply.error_response)?,
        scorer_id: scorer_id.to_string(),
    })
}

/// Persistent subprocess scorer. A reader thread feeds replies through a
/// channel so each request can honor the configured timeout.
pub struct SubprocessScorer {
    id: String,
    child: Child,
    stdin: std::process::ChildStdin,
    replies: mpsc::Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl SubprocessScorer {
    pub fn spawn(command: &[String], timeout: Duration) -> Result<Self, ScorerError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| ScorerError::Process("empty scorer command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| ScorerError::Process(format!("spawn {program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(SubprocessScorer {
            id: format!("subprocess:{program}"),
            child,
            stdin,
            replies: rx,
            timeout,
        })
    }
}

impl SoundnessScorer for SubprocessScorer {
    fn scorer_id(&self) -> &str {
        &self.id
    }

    fn score(
        &mut self,
        response_text: &str,
        scenario: &TutoringScenario,
    ) -> Result<SoundnessScore, ScorerError> {
        self.stdin
            .write_all(request_line(response_text, scenario).as_bytes())
            .map_err(|e| ScorerError::Process(format!("write request: {e}")))?;
        self.stdin
            .flush()
            .map_err(|e| ScorerError::Process(format!("flush request: {e}")))?;
        let line = match self.replies.recv_timeout(self.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(ScorerError::Process(format!("read reply: {e}"))),
            Err(mpsc::RecvTimeoutError::Timeout) => return Err(ScorerError::Timeout(self.timeout)),
            Err(mpsc::RecvTimeoutError::Disconnected) => {
                return Err(ScorerError::Process("scorer closed stdout".into()))
            }
        };
        let reply: ScorerReply =
            serde_json::from_str(&line).map_err(|e| ScorerError::Malformed(e.to_string()))?;
        reply_to_score(reply, &self.id.clone())
    }
}

impl Drop for SubprocessScorer {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// HTTP POST scorer speaking the same JSON protocol.
pub struct HttpScorer {
    id: String,
    url: String,
}

impl HttpScorer {
    pub fn new(url: String) -> Self {
        HttpScorer {
            id: format!("http:{url}"),
            url,
        }
    }
}

impl SoundnessScorer for HttpScorer {
    fn scorer_id(&self) -> &str {
        &self.id
    }

    fn score(
        &mut self,
        response_text: &str,
        scenario: &TutoringScenario,
    ) -> Result<SoundnessScore, ScorerError> {
        let body = json!({"response_text": response_text, "scenario": scenario});
        let mut response = ureq::post(&self.url)
            .send_json(body)
            .map_err(|e| ScorerError::Http(e.to_string()))?;
        let reply: ScorerReply = response
            .body_mut()
            .read_json()
            .map_err(|e| ScorerError::Malformed(e.to_string()))?;
        reply_to_score(reply, &self.id.clone())
    }
}

/// Builds the configured scorer, or `None` when scoring is disabled.
pub fn build_scorer(cfg: &ScorerConfig) -> Result<Option<Box<dyn SoundnessScorer>>, ScorerError> {
    match cfg.kind {
        ScorerKind::None => Ok(None),
        ScorerKind::Mock => Ok(Some(Box::new(MockScorer))),
        ScorerKind::Subprocess => Ok(Some(Box::new(SubprocessScorer::spawn(
            &cfg.command,
            Duration::from_millis(cfg.timeout_ms),
        )?))),
        ScorerKind::Http => Ok(Some(Box::new(HttpScorer::new(cfg.url.clone())))),
    }
}
