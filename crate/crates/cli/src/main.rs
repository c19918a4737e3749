//! `backflow-lab`: reproduces the backflow and phase-space figures from
//! JSON configs.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure. Errors
//! go to stderr as one JSON line.

mod commands;
mod config;
mod svg;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{Format, RunConfig};

#[derive(Parser)]
#[command(name = "backflow-lab", version, about = "Quantum backflow and Wigner negativity of Gaussian cat states")]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Subcommand)]
enum CommandArgs {
    /// Probability P(t) and current j(t) at the origin.
    Trace(Common),
    /// Backflow beta, its interval, and the negativity Delta.
    Backflow(Common),
    /// beta and Delta over parameter grids.
    Scan(Common),
    /// beta under Gaussian phase-space smoothing, and the negative current depth.
    Smooth(Common),
    /// Negative flux of the smeared current eta against Delta.
    Eta(Common),
    /// Phase-space grid of the Wigner function with the backflow sector.
    Wigner(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Comma-separated subset of csv,json,svg,bin.
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Trace,
    Backflow,
    Scan,
    Smooth,
    Eta,
    Wigner,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Trace => "trace",
            Command::Backflow => "backflow",
            Command::Scan => "scan",
            Command::Smooth => "smooth",
            Command::Eta => "eta",
            Command::Wigner => "wigner",
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(backflow_core::Error),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) | Failure::Io(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Failure::Config(m) => json!({"error": "config", "message": m}),
            Failure::Io(m) => json!({"error": "io", "message": m}),
            Failure::Numerical(e) => json!({"error": e.kind(), "message": e.to_string()}),
        }
    }
}

impl From<backflow_core::Error> for Failure {
    fn from(e: backflow_core::Error) -> Self {
        use backflow_core::Error as E;
        match e {
            E::InvalidParameter(_) | E::DegenerateState { .. } | E::Unattainable(_) => Failure::Config(e.to_string()),
            other => Failure::Numerical(other),
        }
    }
}

/// Destination directory plus the enabled formats.
pub struct Output {
    dir: PathBuf,
    formats: BTreeSet<Format>,
    pub written: Vec<PathBuf>,
}

impl Output {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    pub fn write(&mut self, format: Format, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
        if !self.wants(format) {
            return Ok(());
        }
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
        text.push('\n');
        self.write(Format::Json, name, text)
    }
}

/// Prints a non-fatal warning as one JSON line on stderr.
pub fn warn(message: impl Into<String>) {
    eprintln!("{}", json!({"warning": message.into()}));
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (cmd, common) = match cli.command {
        CommandArgs::Trace(c) => (Command::Trace, c),
        CommandArgs::Backflow(c) => (Command::Backflow, c),
        CommandArgs::Scan(c) => (Command::Scan, c),
        CommandArgs::Smooth(c) => (Command::Smooth, c),
        CommandArgs::Eta(c) => (Command::Eta, c),
        CommandArgs::Wigner(c) => (Command::Wigner, c),
    };
    let cfg = RunConfig::load(&common.config).map_err(Failure::Config)?;
    cfg.validate(cmd).map_err(Failure::Config)?;

    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("cannot set up thread pool: {e}")))?;
    }

    let formats: BTreeSet<Format> = common
        .format
        .or_else(|| cfg.formats.clone())
        .unwrap_or_else(|| Format::ALL.to_vec())
        .into_iter()
        .collect();
    let dir = common.out.or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
    let mut out = Output {
        dir,
        formats,
        written: Vec::new(),
    };

    match cmd {
        Command::Trace => commands::trace(&cfg, &mut out)?,
        Command::Backflow => commands::backflow(&cfg, &mut out)?,
        Command::Scan => commands::scan(&cfg, &mut out)?,
        Command::Smooth => commands::smooth(&cfg, &mut out)?,
        Command::Eta => commands::eta(&cfg, &mut out)?,
        Command::Wigner => commands::wigner(&cfg, &mut out)?,
    }
    for p in &out.written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", json!({"error": "usage", "message": first}));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code())
        }
    }
}
