//! `cancellab`: batch runner over the cancellation-sequence library.
//!
//! Every command takes an optional JSON config (`--config`) whose `params`
//! block is overridden field by field by the command-line flags, and writes
//! into a fresh `--out` directory together with a `manifest.json` that can be
//! fed back to `cancellab run`.

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use cancellab_cli::commands::{self, Outputs};
use cancellab_cli::config::{Params, RawConfig};
use cancellab_cli::error::CliError;
use cancellab_cli::report;

#[derive(Parser)]
#[command(name = "cancellab", version, about = "Experiments on cancellation sequences")]
struct Cli {
    /// Cap on worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config; flags override its `params`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; must not exist.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a sequence into `seq.bin` + `seq.json`.
    Gen {
        #[command(flatten)]
        common: Common,
        /// rotation, sqrt_rotation or iid.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Phase of a rotation, in turns.
        #[arg(long)]
        phase: Option<f64>,
        #[arg(long = "T")]
        t: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// symmetric-two-point, uniform-disk or complex-gaussian.
        #[arg(long)]
        dist: Option<String>,
        /// Also write `seq.csv`.
        #[arg(long)]
        csv: bool,
    },
    /// Fourier-Bohr scan on a uniform grid.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long = "Ts", value_delimiter = ',')]
        ts: Option<Vec<usize>>,
    },
    /// Windowed auto-correlation profile.
    Autocorr {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long = "Ns", value_delimiter = ',')]
        ns: Option<Vec<usize>>,
        #[arg(long = "tau-max")]
        tau_max: Option<usize>,
    },
    /// Density of lags with a large correlation somewhere in a window range.
    Density {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long = "N-lo")]
        n_lo: Option<usize>,
        #[arg(long = "N-hi")]
        n_hi: Option<usize>,
        #[arg(long = "T")]
        t: Option<usize>,
        /// sampled or dense.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Empirical cancellation against a stationary process.
    Cancel {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x: Option<PathBuf>,
        /// Process spec as inline JSON, or `@file.json`.
        #[arg(long)]
        process: Option<String>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long = "Ts", value_delimiter = ',')]
        ts: Option<Vec<usize>>,
        #[arg(long)]
        ensemble: Option<usize>,
    },
    /// Weyl sum of `(nβ, √n·α)` on the 2-torus.
    Torus {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        m1: Option<i64>,
        #[arg(long, allow_hyphen_values = true)]
        m2: Option<i64>,
        #[arg(long = "N")]
        n: Option<usize>,
    },
    /// Genericity, cover and pruning checks on words.
    Symbolic {
        #[command(flatten)]
        common: Common,
        /// generic, strong, lemma10, cover or prune.
        #[arg(long)]
        op: Option<String>,
        #[arg(long)]
        word: Option<String>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        m: Option<u64>,
    },
    /// Build a point from a cover schedule and measure its pair orbits.
    Hochman {
        #[command(flatten)]
        common: Common,
        /// Schedule JSON file.
        #[arg(long)]
        covers: Option<PathBuf>,
        /// Periodic point for the built-in schedule.
        #[arg(long)]
        u: Option<String>,
        #[arg(long)]
        scales: Option<usize>,
        #[arg(long = "T")]
        t: Option<u64>,
        /// simple or split.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Summary table over run directories.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 0..)]
        dirs: Option<Vec<PathBuf>>,
    },
    /// Re-run a config or manifest.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn start(common: &Common, command: &str) -> Result<RawConfig, CliError> {
    let mut raw = match &common.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::empty(command),
    };
    if raw.command != command {
        return Err(CliError::schema(
            Some("command"),
            format!("config is for `{}`, not `{command}`", raw.command),
        ));
    }
    if let Some(out) = &common.out {
        raw.out = Some(out.clone());
    }
    Ok(raw)
}

fn set<T: Into<Value>>(raw: &mut RawConfig, path: &[&str], v: Option<T>) {
    if let Some(v) = v {
        raw.set(path, v.into());
    }
}

fn json_arg(text: &str, field: &str) -> Result<Value, CliError> {
    let body = match text.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {path}: {e}")))?,
        None => text.to_string(),
    };
    serde_json::from_str(&body).map_err(|e| CliError::schema(Some(&format!("params.{field}")), e.to_string()))
}

fn path_value(p: Option<PathBuf>) -> Option<Value> {
    p.map(|p| Value::from(p.to_string_lossy().into_owned()))
}

fn raw_config(command: Command) -> Result<RawConfig, CliError> {
    let raw = match command {
        Command::Gen {
            common,
            family,
            alpha,
            phase,
            t,
            seed,
            dist,
            csv,
        } => {
            let mut raw = start(&common, "gen")?;
            set(&mut raw, &["sequence", "family"], family);
            set(&mut raw, &["sequence", "alpha"], alpha);
            set(&mut raw, &["sequence", "len"], t);
            set(&mut raw, &["sequence", "seed"], seed);
            set(&mut raw, &["sequence", "dist"], dist);
            if let Some(turns) = phase {
                let z = cancellab::cis_turns(turns);
                raw.set(&["sequence", "phase"], json!([z.re, z.im]));
            }
            let family = raw.get(&["sequence", "family"]).and_then(Value::as_str).map(str::to_string);
            if family.as_deref() == Some("rotation") && raw.get(&["sequence", "phase"]).is_none() {
                raw.set(&["sequence", "phase"], json!([1.0, 0.0]));
            }
            if family.as_deref() == Some("iid") && raw.get(&["sequence", "dist"]).is_none() {
                raw.set(&["sequence", "dist"], json!("symmetric-two-point"));
            }
            if csv {
                raw.set(&["csv"], json!(true));
            }
            raw
        }
        Command::Spectrum { common, input, grid, ts } => {
            let mut raw = start(&common, "spectrum")?;
            set(&mut raw, &["input"], path_value(input));
            set(&mut raw, &["grid"], grid);
            set(&mut raw, &["ts"], ts);
            raw
        }
        Command::Autocorr {
            common,
            input,
            ns,
            tau_max,
        } => {
            let mut raw = start(&common, "autocorr")?;
            set(&mut raw, &["input"], path_value(input));
            set(&mut raw, &["ns"], ns);
            set(&mut raw, &["tau_max"], tau_max);
            raw
        }
        Command::Density {
            common,
            input,
            epsilon,
            n_lo,
            n_hi,
            t,
            mode,
        } => {
            let mut raw = start(&common, "density")?;
            set(&mut raw, &["input"], path_value(input));
            set(&mut raw, &["epsilon"], epsilon);
            set(&mut raw, &["n_lo"], n_lo);
            set(&mut raw, &["n_hi"], n_hi);
            set(&mut raw, &["t"], t);
            set(&mut raw, &["mode"], mode);
            raw
        }
        Command::Cancel {
            common,
            x,
            process,
            seeds,
            ts,
            ensemble,
        } => {
            let mut raw = start(&common, "cancel")?;
            set(&mut raw, &["x"], path_value(x));
            if let Some(p) = process {
                raw.set(&["process"], json_arg(&p, "process")?);
            }
            set(&mut raw, &["seeds"], seeds);
            set(&mut raw, &["ts"], ts);
            set(&mut raw, &["ensemble"], ensemble);
            raw
        }
        Command::Torus {
            common,
            beta,
            alpha,
            m1,
            m2,
            n,
        } => {
            let mut raw = start(&common, "torus")?;
            set(&mut raw, &["beta"], beta);
            set(&mut raw, &["alpha"], alpha);
            set(&mut raw, &["m1"], m1);
            set(&mut raw, &["m2"], m2);
            set(&mut raw, &["n"], n);
            raw
        }
        Command::Symbolic {
            common,
            op,
            word,
            epsilon,
            m,
        } => {
            let mut raw = start(&common, "symbolic")?;
            set(&mut raw, &["op"], op);
            set(&mut raw, &["word"], word);
            set(&mut raw, &["epsilon"], epsilon);
            set(&mut raw, &["m"], m);
            raw
        }
        Command::Hochman {
            common,
            covers,
            u,
            scales,
            t,
            mode,
        } => {
            let mut raw = start(&common, "hochman")?;
            set(&mut raw, &["covers"], path_value(covers));
            set(&mut raw, &["u"], u);
            set(&mut raw, &["scales"], scales);
            set(&mut raw, &["t"], t);
            set(&mut raw, &["mode"], mode);
            raw
        }
        Command::Report { common, dirs } => {
            let mut raw = start(&common, "report")?;
            if let Some(d) = dirs {
                raw.set(&["dirs"], json!(d));
            } else if raw.get(&["dirs"]).is_none() {
                raw.set(&["dirs"], json!([]));
            }
            raw
        }
        Command::Run { config, out } => {
            let mut raw = RawConfig::load(&config)?;
            if out.is_some() {
                raw.out = out;
            }
            raw
        }
    };
    Ok(raw)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::schema(Some("threads"), "--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(format!("cannot size the thread pool: {e}")))?;
    }
    let raw = raw_config(cli.command)?;
    let params = raw.resolve()?;
    let Some(dir) = raw.out.clone() else {
        if let Params::Report(p) = &params {
            let rows = report::collect(&p.dirs);
            report::write_csv(io::stdout().lock(), &rows)?;
            return Ok(());
        }
        return Err(CliError::schema(Some("out"), "an output directory (--out) is required"));
    };
    let mut out = Outputs::create(&dir)?;
    match commands::execute(&params, &mut out) {
        Ok(summary) => {
            if let Params::Report(_) = &params {
                let text = std::fs::read_to_string(out.dir().join("report.csv"))?;
                print!("{text}");
            }
            out.finish(&params, &summary)
        }
        Err(e) => {
            out.write_error(&e);
            Err(e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
