use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use edgebench::annotation::{load_label_map, LabelMap};
use edgebench::bench::BackendSpec;
use edgebench::report::{
    bench::render_bench_table, cmd_bench, cmd_compare, cmd_eval, cmd_index, cmd_preprocess,
    compare::render_compare_text, Config,
};

#[derive(Parser)]
#[command(name = "edgebench", version, about = "Benchmark and evaluate object detectors on large aerial images")]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Label map file, overriding the configuration.
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Index a dataset directory (images/ and labelTxt/) and print statistics.
    Index {
        root: PathBuf,
        /// Print the statistics as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Write scaled, recompressed and tiled copies of every original image.
    Preprocess {
        root: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the measurement protocol against a detector backend.
    Bench {
        root: PathBuf,
        /// `synthetic:limit=..,coeff=..,overhead=..`, `replay:<dir>`,
        /// `exec:<command>` or `exec-persistent:<command>`, optionally
        /// prefixed with `<id>=`.
        #[arg(long)]
        backend: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a detections directory against ground truth.
    Eval {
        root: PathBuf,
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-image deltas between two bench output directories.
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<(Config, LabelMap)> {
    let config = match &cli.config {
        Some(p) => Config::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => Config::default(),
    };
    let labels = match &cli.labels {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            load_label_map(&text)?
        }
        None => config.labels()?,
    };
    Ok((config, labels))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn run(cli: Cli) -> Result<()> {
    let (config, labels) = load_config(&cli)?;
    match cli.command {
        Command::Index { root, json } => {
            let (_, stats) = cmd_index(&root, &labels)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&stats)?);
            } else {
                print!("{stats}");
            }
        }
        Command::Preprocess { root, out } => {
            let (dataset, _) = cmd_index(&root, &labels)?;
            ensure_dir(&out)?;
            let records = cmd_preprocess(&dataset, &config.preprocess, &out)?;
            println!("{} derived images written to {}", records.len(), out.display());
        }
        Command::Bench { root, backend, out } => {
            let (dataset, _) = cmd_index(&root, &labels)?;
            let spec = BackendSpec::parse(&backend)?;
            let mut backend = spec.build()?;
            ensure_dir(&out)?;
            let (run, _) = cmd_bench(&dataset, backend.as_mut(), &config, &labels, &out)?;
            print!("{}", render_bench_table(&run).split_once('\n').map_or("", |(_, t)| t));
        }
        Command::Eval {
            root,
            detections,
            out,
        } => {
            let (dataset, _) = cmd_index(&root, &labels)?;
            ensure_dir(&out)?;
            let result = cmd_eval(&dataset, &detections, &config, Some(&out))?;
            let r = &result.report;
            for c in &r.classes {
                let ap = c.ap.map_or_else(|| "NA".into(), |v| format!("{v:.4}"));
                println!("{:<20} gt={:<6} tp={:<6} ap={ap}", c.class, c.num_ground_truth, c.counts.tp);
            }
            println!("mAP {:.4}  COCO AP {:.4}", r.map, r.coco.ap);
            println!(
                "accuracy {}/{} ({:.1}%)",
                r.accuracy.accurate,
                r.accuracy.total,
                100.0 * r.accuracy.fraction()
            );
        }
        Command::Compare { run_a, run_b, out } => {
            ensure_dir(&out)?;
            let cmp = cmd_compare(&run_a, &run_b, &config, &out)?;
            print!("{}", render_compare_text(&cmp).split_once('\n').map_or("", |(_, t)| t));
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
