//! `propa`: exact property-A invariants of finite graphs from the command line.
//!
//! JSON goes to stdout (or `--out`), diagnostics to stderr. Exit codes:
//! 0 success, 1 negative verification, 2 bad input, 3 size ceiling or
//! enumeration cap, 4 internal certificate mismatch.

mod commands;
mod input;
mod verify;

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use propa_core::invariants::InvariantError;
use propa_core::problems::DEFAULT_SUBSET_CAP;
use serde_json::Value;

#[derive(Parser, Debug)]
#[command(name = "propa", version, about = "Exact property-A invariants of finite graphs")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Generator spec: hypercube:N, grid:RxC, ladder:K, heawood, petersen, cycle:K, path:K, union:A+B
    #[arg(long, global = true, value_name = "SPEC", conflicts_with = "graph")]
    pub gen: Option<String>,
    /// Graph file, text (`p n` / `e u v`) or JSON
    #[arg(long, global = true, value_name = "FILE")]
    pub graph: Option<PathBuf>,
    /// Ball radius, or a JSON scale file
    #[arg(long, global = true, value_name = "R|FILE", default_value = "1")]
    pub scale: String,
    /// Worker threads for per-vertex flows and sequence items
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Write the JSON here instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Largest dual-scale set enumerated exhaustively
    #[arg(long, global = true, default_value_t = DEFAULT_SUBSET_CAP)]
    pub cap: usize,
    /// Keep wall-clock solve times in the output (breaks byte-identical reruns)
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Minimal variation of probability measures at the scale
    Epsilon {
        #[arg(long, default_value = "primal")]
        method: String,
    },
    /// Cheeger constant at the scale, with a minimizing set
    Cheeger {
        #[arg(long, default_value = "brute")]
        method: String,
        /// Write the witness as Graphviz DOT
        #[arg(long, value_name = "FILE")]
        dot: Option<PathBuf>,
    },
    /// Uniform-flows LP optimum
    Uniform,
    /// Mean property A LP optimum
    Mean,
    /// Sparsest cut at the scale for given capacities
    Sparsest {
        #[arg(long, value_name = "FILE")]
        kappa: PathBuf,
        #[arg(long, value_name = "FILE")]
        dot: Option<PathBuf>,
    },
    /// Build a flow certificate from demands and capacities, or report a violated set
    Lift {
        #[arg(long, value_name = "FILE")]
        eta: PathBuf,
        #[arg(long, value_name = "FILE")]
        kappa: PathBuf,
        #[arg(long, value_name = "FILE")]
        dot: Option<PathBuf>,
    },
    /// Check any JSON this tool emits, or a hand-written certificate
    Verify {
        #[arg(long, value_name = "FILE")]
        certificate: PathBuf,
    },
    /// Closed-form values
    Formula {
        family: FormulaFamily,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        s: Option<u32>,
        #[arg(long)]
        d: Option<u32>,
        #[arg(long)]
        k: Option<u32>,
        /// Compare with the LP value (cube: Q_n; girth: the --gen/--graph graph)
        #[arg(long)]
        check: bool,
    },
    /// ε along a graph family
    Sequence {
        family: SequenceFamily,
        #[arg(long)]
        max_n: usize,
        #[arg(long)]
        min_n: Option<usize>,
        #[arg(long, default_value = "separation")]
        method: String,
    },
    /// Print the graph
    Generate {
        #[arg(long, value_enum, default_value_t = GraphFormat::Text)]
        format: GraphFormat,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormulaFamily {
    Cube,
    Girth,
    Tree,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceFamily {
    Cubes,
    Cycles,
    Ladders,
}

impl SequenceFamily {
    pub fn name(self) -> &'static str {
        match self {
            SequenceFamily::Cubes => "cubes",
            SequenceFamily::Cycles => "cycles",
            SequenceFamily::Ladders => "ladders",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Text,
    Json,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError { code: 2, msg: msg.into() }
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError { code: 4, msg: msg.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl From<InvariantError> for CliError {
    fn from(e: InvariantError) -> Self {
        let code = if e.is_resource_limit() {
            3
        } else if matches!(e, InvariantError::Verification(_)) {
            4
        } else {
            2
        };
        CliError { code, msg: e.to_string() }
    }
}

/// What a command produced: a document and its exit code (0 or 1).
pub enum Output {
    Json(Value, u8),
    Text(String),
}

fn strip_timings(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("millis");
            m.values_mut().for_each(strip_timings);
        }
        Value::Array(xs) => xs.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

fn emit(global: &Global, out: Output) -> Result<u8, CliError> {
    let (text, code) = match out {
        Output::Json(mut v, code) => {
            if !global.timings {
                strip_timings(&mut v);
            }
            let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::internal(e.to_string()))?;
            s.push('\n');
            (s, code)
        }
        Output::Text(s) => (s, 0),
    };
    match &global.out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(code)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    if cli.global.cap == 0 {
        return Err(CliError::config("--cap must be positive"));
    }
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            return Err(CliError::config("--jobs must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::internal(e.to_string()))?;
    }
    let out = commands::dispatch(&cli.global, &cli.command)?;
    emit(&cli.global, out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("propa: {e}");
            ExitCode::from(e.code)
        }
    }
}
