//! Periodic resident-memory and swap sampling of a running process.
//!
//! Reads `/proc/<pid>/status` and `/proc/meminfo`; on platforms without them
//! every reading is `None`.

use std::fs;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

pub const DEFAULT_INTERVAL: Duration = Duration::from_millis(50);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MemoryReading {
    pub peak_rss: Option<u64>,
    pub final_swap: Option<u64>,
}

fn kib_field(text: &str, key: &str) -> Option<u64> {
    text.lines().find_map(|l| {
        let rest = l.strip_prefix(key)?.strip_prefix(':')?;
        let kib: u64 = rest.split_whitespace().next()?.parse().ok()?;
        Some(kib * 1024)
    })
}

/// Resident set size and high-water mark of `pid`, in bytes.
pub fn process_rss(pid: u32) -> Option<(u64, Option<u64>)> {
    let status = fs::read_to_string(format!("/proc/{pid}/status")).ok()?;
    let rss = kib_field(&status, "VmRSS")?;
    Some((rss, kib_field(&status, "VmHWM")))
}

/// System-wide swap in use, in bytes.
pub fn swap_in_use() -> Option<u64> {
    let info = fs::read_to_string("/proc/meminfo").ok()?;
    let total = kib_field(&info, "SwapTotal")?;
    let free = kib_field(&info, "SwapFree")?;
    Some(total.saturating_sub(free))
}

const UNSEEN: u64 = u64::MAX;

/// Background sampler bound to one process. The peak is kept as an atomic
/// snapshot readable while sampling continues.
pub struct MemorySampler {
    peak: Arc<AtomicU64>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MemorySampler {
    /// `use_high_water_mark` folds the kernel's lifetime peak into the
    /// samples; only meaningful when the process was started for this run.
    pub fn start(pid: u32, interval: Duration, use_high_water_mark: bool) -> Self {
        let peak = Arc::new(AtomicU64::new(UNSEEN));
        let stop = Arc::new(AtomicBool::new(false));
        let handle = {
            let peak = Arc::clone(&peak);
            let stop = Arc::clone(&stop);
            thread::spawn(move || loop {
                match process_rss(pid) {
                    Some((rss, hwm)) => {
                        let v = match hwm {
                            Some(h) if use_high_water_mark => h.max(rss),
                            _ => rss,
                        };
                        let _ = peak.fetch_update(Ordering::Relaxed, Ordering::Relaxed, |cur| {
                            (cur == UNSEEN || v > cur).then_some(v)
                        });
                    }
                    None => return,
                }
                if stop.load(Ordering::Relaxed) {
                    return;
                }
                thread::sleep(interval);
            })
        };
        Self {
            peak,
            stop,
            handle: Some(handle),
        }
    }

    /// Highest RSS seen so far.
    pub fn peak(&self) -> Option<u64> {
        match self.peak.load(Ordering::Relaxed) {
            UNSEEN => None,
            v => Some(v),
        }
    }

    /// Stops sampling and takes the closing swap reading.
    pub fn finish(mut self) -> MemoryReading {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
        MemoryReading {
            peak_rss: self.peak(),
            final_swap: swap_in_use(),
        }
    }
}

impl Drop for MemorySampler {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_kib_fields() {
        let text = "Name:\tx\nVmHWM:\t  2048 kB\nVmRSS:\t  1024 kB\n";
        assert_eq!(kib_field(text, "VmRSS"), Some(1024 * 1024));
        assert_eq!(kib_field(text, "VmHWM"), Some(2048 * 1024));
        assert_eq!(kib_field(text, "VmSwap"), None);
    }

    #[test]
    fn missing_process_is_unavailable() {
        let s = MemorySampler::start(u32::MAX - 1, Duration::from_millis(5), true);
        assert_eq!(s.finish().peak_rss, None);
    }
}
