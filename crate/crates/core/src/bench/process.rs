//! External detector process speaking the line protocol.

use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, ChildStdout, Command, ExitStatus, Stdio};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::backend::{Backend, RunReport};
use super::memory::{MemoryReading, MemorySampler, DEFAULT_INTERVAL};
use super::protocol::{detect_request, read_response, Response, QUIT};
use super::Outcome;
use crate::error::{Error, Result};
use crate::model::ImageRecord;

const EXIT_GRACE: Duration = Duration::from_secs(5);

struct Session {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    stderr: Arc<Mutex<String>>,
}

impl Session {
    fn spawn(command: &[String]) -> std::io::Result<Self> {
        let mut child = Command::new(&command[0])
            .args(&command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let stderr = Arc::new(Mutex::new(String::new()));
        if let Some(mut err) = child.stderr.take() {
            let sink = Arc::clone(&stderr);
            thread::spawn(move || {
                let mut buf = String::new();
                let _ = err.read_to_string(&mut buf);
                if let Ok(mut s) = sink.lock() {
                    s.push_str(&buf);
                }
            });
        }
        Ok(Self {
            child,
            stdin,
            stdout,
            stderr,
        })
    }

    fn pid(&self) -> u32 {
        self.child.id()
    }

    fn send(&mut self, line: &str) -> std::io::Result<()> {
        self.stdin.write_all(line.as_bytes())?;
        self.stdin.flush()
    }

    /// Waits for exit, killing the process after the grace period.
    fn wait(&mut self) -> Option<ExitStatus> {
        let deadline = Instant::now() + EXIT_GRACE;
        loop {
            match self.child.try_wait() {
                Ok(Some(status)) => return Some(status),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                _ => {
                    let _ = self.child.kill();
                    return self.child.wait().ok();
                }
            }
        }
    }

    fn quit(mut self) -> Option<ExitStatus> {
        let _ = self.send(QUIT);
        self.wait()
    }

    fn stderr_text(&self) -> String {
        // give the reader thread a moment to drain after exit
        thread::sleep(Duration::from_millis(10));
        self.stderr.lock().map(|s| s.clone()).unwrap_or_default()
    }
}

/// Whether an abnormal exit looks like memory exhaustion: killed by SIGKILL
/// (the kernel OOM killer) or an allocator / resource-exhausted message on
/// stderr.
pub fn exit_indicates_oom(status: Option<ExitStatus>, stderr: &str) -> bool {
    #[cfg(unix)]
    {
        use std::os::unix::process::ExitStatusExt;
        if status.and_then(|s| s.signal()) == Some(9) {
            return true;
        }
    }
    let _ = status;
    let lower = stderr.to_ascii_lowercase();
    ["out of memory", "memoryerror", "resourceexhausted", "resource exhausted"]
        .iter()
        .any(|needle| lower.contains(needle))
        || lower
            .split(|c: char| !c.is_ascii_alphanumeric())
            .any(|tok| tok == "oom")
}

pub struct ExternalProcessBackend {
    id: String,
    command: Vec<String>,
    persistent: bool,
    interval: Duration,
    session: Option<Session>,
}

impl ExternalProcessBackend {
    pub fn new(id: String, command: Vec<String>, persistent: bool) -> Result<Self> {
        if command.is_empty() {
            return Err(Error::Config("empty backend command".into()));
        }
        Ok(Self {
            id,
            command,
            persistent,
            interval: DEFAULT_INTERVAL,
            session: None,
        })
    }

    pub fn with_interval(mut self, interval: Duration) -> Self {
        self.interval = interval;
        self
    }

    fn spawn(&self) -> Result<Session> {
        Session::spawn(&self.command)
            .map_err(|e| Error::Backend(format!("cannot start {:?}: {e}", self.command[0])))
    }

    fn exchange(&mut self, session: &mut Session, path: &Path, fresh: bool) -> (Option<Response>, MemoryReading) {
        let sampler = MemorySampler::start(session.pid(), self.interval, fresh);
        let response = match session.send(&detect_request(path)) {
            Ok(()) => read_response(&mut session.stdout).ok().flatten(),
            Err(_) => None,
        };
        (response, sampler.finish())
    }
}

fn failure_outcome(response: Option<Response>, status: Option<ExitStatus>, stderr: &str) -> Outcome {
    if exit_indicates_oom(status, stderr) {
        return Outcome::Oom;
    }
    let detail = match response {
        Some(Response::Violation(msg)) => msg,
        _ => "backend closed its output".into(),
    };
    match status {
        Some(s) if !s.success() => Outcome::BackendError(format!("{detail} ({s})")),
        _ => Outcome::BackendError(detail),
    }
}

impl Backend for ExternalProcessBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn prepare(&mut self, _image_ids: &[String]) -> Result<()> {
        let session = self.spawn()?;
        if self.persistent {
            self.session = Some(session);
            return Ok(());
        }
        let stderr = session.stderr.clone();
        match session.quit() {
            Some(status) if status.success() => Ok(()),
            status => Err(Error::Backend(format!(
                "{:?} failed its startup probe ({}): {}",
                self.command[0],
                status.map_or("no status".into(), |s| s.to_string()),
                stderr.lock().map(|s| s.trim().to_string()).unwrap_or_default()
            ))),
        }
    }

    fn run(&mut self, _image: &ImageRecord, path: Option<&Path>) -> RunReport {
        let start = Instant::now();
        let fail = |outcome, start: Instant| RunReport {
            outcome,
            reported_time: None,
            harness_time: start.elapsed().as_secs_f64(),
            peak_rss: None,
            final_swap: None,
        };
        let Some(path) = path else {
            return fail(Outcome::BackendError("no image file for this image".into()), start);
        };

        let (mut session, fresh) = match self.session.take() {
            Some(s) => (s, false),
            None => match self.spawn() {
                Ok(s) => (s, true),
                Err(e) => return fail(Outcome::BackendError(e.to_string()), start),
            },
        };
        let (response, memory) = self.exchange(&mut session, path, fresh || !self.persistent);
        let harness_time = start.elapsed().as_secs_f64();

        let (outcome, reported_time, keep) = match response {
            Some(Response::Detections {
                detect_seconds,
                detections,
            }) => (Outcome::Ok(detections), Some(detect_seconds), true),
            Some(Response::Oom) => (Outcome::Oom, None, true),
            Some(Response::Error(msg)) => (Outcome::BackendError(msg), None, true),
            other @ (Some(Response::Violation(_)) | None) => {
                // the stream may be unusable; inspect how the process ended
                let alive = matches!(session.child.try_wait(), Ok(None));
                if alive && matches!(other, Some(Response::Violation(_))) {
                    (failure_outcome(other, None, ""), None, true)
                } else {
                    let stderr_probe = session.stderr.clone();
                    let status = session.quit();
                    thread::sleep(Duration::from_millis(10));
                    let stderr = stderr_probe.lock().map(|s| s.clone()).unwrap_or_default();
                    let report = RunReport {
                        outcome: failure_outcome(other, status, &stderr),
                        reported_time: None,
                        harness_time,
                        peak_rss: memory.peak_rss,
                        final_swap: memory.final_swap,
                    };
                    return report;
                }
            }
        };

        if self.persistent && keep {
            self.session = Some(session);
        } else {
            let status = session.quit();
            if outcome.is_ok() && status.is_some_and(|s| !s.success()) {
                log::warn!("backend {} exited with {:?} after QUIT", self.id, status);
            }
        }
        RunReport {
            outcome,
            reported_time,
            harness_time,
            peak_rss: memory.peak_rss,
            final_swap: memory.final_swap,
        }
    }

    fn shutdown(&mut self) -> Result<()> {
        if let Some(session) = self.session.take() {
            let stderr = session.stderr_text();
            match session.quit() {
                Some(s) if s.success() => {}
                other => log::warn!("backend {} quit with {other:?}: {}", self.id, stderr.trim()),
            }
        }
        Ok(())
    }

    fn persistent(&self) -> bool {
        self.persistent
    }
}

impl Drop for ExternalProcessBackend {
    fn drop(&mut self) {
        if let Some(s) = self.session.take() {
            let _ = s.quit();
        }
    }
}
