//! Line protocol spoken with external detector backends over stdin/stdout.
//!
//! ```text
//! harness -> backend   DETECT <image-path>
//! backend -> harness   TIME <seconds>
//!                      DET <category> <confidence> <xmin> <ymin> <xmax> <ymax>   (zero or more)
//!                      END
//! backend -> harness   OOM | ERR <message>
//!                      END
//! harness -> backend   QUIT
//! ```

use std::io::BufRead;
use std::path::Path;

use crate::annotation::parse_detection_fields;
use crate::model::Detection;

pub fn detect_request(path: &Path) -> String {
    format!("DETECT {}\n", path.display())
}

pub const QUIT: &str = "QUIT\n";

#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Detections {
        detect_seconds: f64,
        detections: Vec<Detection>,
    },
    Oom,
    Error(String),
    /// Malformed or truncated response.
    Violation(String),
}

/// Reads one response, consuming input up to and including `END` even when
/// the response is malformed so the next request starts in sync. Returns
/// `None` when the stream is already at EOF.
pub fn read_response<R: BufRead>(reader: &mut R) -> std::io::Result<Option<Response>> {
    let mut state = Parse::Start;
    let mut violation: Option<String> = None;
    let mut saw_line = false;
    let mut buf = String::new();
    loop {
        buf.clear();
        if reader.read_line(&mut buf)? == 0 {
            if !saw_line {
                return Ok(None);
            }
            return Ok(Some(Response::Violation(
                violation.unwrap_or_else(|| "stream ended before END".into()),
            )));
        }
        saw_line = true;
        let line = buf.trim_end_matches(['\n', '\r']);
        if line == "END" {
            if let Some(v) = violation {
                return Ok(Some(Response::Violation(v)));
            }
            return Ok(Some(match state {
                Parse::Start => Response::Violation("END without a status line".into()),
                Parse::Dets { time, dets } => Response::Detections {
                    detect_seconds: time,
                    detections: dets,
                },
                Parse::Oom => Response::Oom,
                Parse::Err(msg) => Response::Error(msg),
            }));
        }
        if violation.is_some() {
            continue;
        }
        state = match step(state, line) {
            Ok(next) => next,
            Err(msg) => {
                violation = Some(msg);
                Parse::Start
            }
        };
    }
}

enum Parse {
    Start,
    Dets { time: f64, dets: Vec<Detection> },
    Oom,
    Err(String),
}

fn step(state: Parse, line: &str) -> Result<Parse, String> {
    let (keyword, rest) = line.split_once(' ').unwrap_or((line, ""));
    match (state, keyword) {
        (Parse::Start, "TIME") => {
            let t: f64 = rest
                .trim()
                .parse()
                .map_err(|_| format!("bad TIME value {rest:?}"))?;
            if !t.is_finite() || t < 0.0 {
                return Err(format!("bad TIME value {rest:?}"));
            }
            Ok(Parse::Dets {
                time: t,
                dets: Vec::new(),
            })
        }
        (Parse::Start, "OOM") if rest.is_empty() => Ok(Parse::Oom),
        (Parse::Start, "ERR") => Ok(Parse::Err(rest.to_string())),
        (Parse::Dets { time, mut dets }, "DET") => {
            let fields: Vec<&str> = rest.split_whitespace().collect();
            let det = parse_detection_fields(&fields, dets.len() + 1)
                .map_err(|e| format!("bad DET line {line:?}: {e}"))?;
            dets.push(det);
            Ok(Parse::Dets { time, dets })
        }
        _ => Err(format!("unexpected line {line:?}")),
    }
}
