//! Sample file: one tab-separated record per run.
//!
//! Columns, in order: `image_id run_index outcome wall_time_s
//! peak_rss_bytes final_swap_bytes discarded timing [message]`.
//! `outcome` is `ok`, `oom` or `error`; unavailable memory readings are
//! written as `NA`; `discarded` is `1` for the warm-up run; `timing` says who
//! measured `wall_time_s` (`backend` or `harness`); `message` appears only on
//! `error` records. Lines starting with `#` are comments.

use std::fmt::Write as _;

use super::{BenchSample, Outcome, TimingSource};
use crate::error::{Error, Result};

pub const HEADER: &str =
    "# image_id\trun_index\toutcome\twall_time_s\tpeak_rss_bytes\tfinal_swap_bytes\tdiscarded\ttiming\tmessage";

fn opt(v: Option<u64>) -> String {
    v.map_or_else(|| "NA".into(), |v| v.to_string())
}

pub fn write_samples(samples: &[BenchSample]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for s in samples {
        let _ = write!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.image_id,
            s.run_index,
            s.outcome.label(),
            s.wall_time,
            opt(s.peak_rss),
            opt(s.final_swap),
            u8::from(s.discarded),
            match s.timing {
                TimingSource::Backend => "backend",
                TimingSource::Harness => "harness",
            }
        );
        if let Outcome::BackendError(msg) = &s.outcome {
            let clean: String = msg
                .chars()
                .map(|c| if c.is_control() { ' ' } else { c })
                .collect();
            let _ = write!(out, "\t{clean}");
        }
        out.push('\n');
    }
    out
}

/// Reads a sample file. Successful runs come back with empty detection lists;
/// detections live in their own files.
pub fn parse_samples(text: &str) -> Result<Vec<BenchSample>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::InvalidParameter(format!("sample line {}: bad {what}", idx + 1));
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 7 {
            return Err(bad("column count"));
        }
        let mem = |s: &str, what: &str| -> Result<Option<u64>> {
            if s == "NA" {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(what))
            }
        };
        let outcome = match cols[2] {
            "ok" => Outcome::Ok(Vec::new()),
            "oom" => Outcome::Oom,
            "error" => Outcome::BackendError(cols.get(8).unwrap_or(&"").to_string()),
            _ => return Err(bad("outcome")),
        };
        let wall_time: f64 = cols[3].parse().map_err(|_| bad("wall time"))?;
        out.push(BenchSample {
            image_id: cols[0].to_string(),
            run_index: cols[1].parse().map_err(|_| bad("run index"))?,
            outcome,
            wall_time,
            harness_time: wall_time,
            timing: match cols.get(7).copied() {
                Some("harness") => TimingSource::Harness,
                Some("backend") | None => TimingSource::Backend,
                Some(_) => return Err(bad("timing")),
            },
            peak_rss: mem(cols[4], "peak rss")?,
            final_swap: mem(cols[5], "final swap")?,
            discarded: match cols[6] {
                "1" => true,
                "0" => false,
                _ => return Err(bad("discarded flag")),
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_then_parse() {
        let samples = vec![
            BenchSample {
                image_id: "P2310".into(),
                run_index: 0,
                outcome: Outcome::Ok(vec![]),
                wall_time: 1.2345678901,
                harness_time: 1.2345678901,
                timing: TimingSource::Backend,
                peak_rss: Some(1 << 30),
                final_swap: None,
                discarded: true,
            },
            BenchSample {
                image_id: "P1854".into(),
                run_index: 1,
                outcome: Outcome::BackendError("bad\tthing".into()),
                wall_time: 0.5,
                harness_time: 0.5,
                timing: TimingSource::Harness,
                peak_rss: None,
                final_swap: Some(42),
                discarded: false,
            },
        ];
        let text = write_samples(&samples);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "P2310\t0\tok\t1.2345678901\t1073741824\tNA\t1\tbackend");
        assert_eq!(lines[2], "P1854\t1\terror\t0.5\tNA\t42\t0\tharness\tbad thing");
        let back = parse_samples(&text).unwrap();
        assert_eq!(back[0], samples[0]);
        assert_eq!(back[1].outcome, Outcome::BackendError("bad thing".into()));
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(parse_samples("a\t1\tmaybe\t1\tNA\tNA\t0").is_err());
        assert!(parse_samples("a\t1\tok").is_err());
    }
}
