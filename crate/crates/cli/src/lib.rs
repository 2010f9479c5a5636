//! Scenario-driven command line for curvature, Chern density and lattice
//! computations.
//!
//! Exit codes: 0 success, 1 validation failure (bad scenario, invalid family
//! data, metric outside its flatness pattern in `inspect`), 2 numerical or
//! I/O fault.

pub mod commands;
pub mod ini;
pub mod output;
pub mod scenario;

use std::path::{Path, PathBuf};

use chern_core::lattice::Rational;
use clap::{Args, Parser, Subcommand};

use crate::output::{write_outcome, Outcome};
use crate::scenario::{default_refinements, parse_resolution, Command, ConventionChoice, Scenario};

pub const OUT_DIR_ENV: &str = "CHERN_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) | CliError::Io(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "chern",
    version,
    about = "Chern densities of Hermitian metrics over complex surfaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "chern-out")]
    pub out: PathBuf,
    /// Grid resolution, `N` or `n1xn2xn3xn4`; refinements follow it.
    #[arg(long, value_parser = parse_resolution)]
    pub grid_override: Option<chern_core::metricfield::Grid>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, value_enum)]
    pub convention: Option<ConventionChoice>,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Flatness pattern of the second-derivative blocks.
    Inspect(Common),
    /// Curvature tensor and Chern densities at sample points.
    Curvature(Common),
    /// Integrated second Chern densities.
    C2(Common),
    /// Determinant formula against the Chern densities, with refinement table.
    Verify(Common),
    /// Restriction bound, from flags or the scenario's [lattice] section.
    Bound(BoundArgs),
    /// Family and moduli-section validation.
    Family(Common),
    /// Bundle earlier outputs in the output directory.
    Report(Common),
    /// Every command listed in the scenario's [run] section.
    Run(Common),
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub common: Common,
    /// Rank r >= 2.
    #[arg(long)]
    pub r: Option<u32>,
    /// Positive constant R (integer or p/q).
    #[arg(long = "R", value_parser = parse_rational_arg)]
    pub big_r: Option<Rational>,
    /// Discriminant delta >= 0 (integer or p/q).
    #[arg(long, value_parser = parse_rational_arg)]
    pub delta: Option<Rational>,
    /// Multiple n >= 1.
    #[arg(long)]
    pub n: Option<u64>,
}

fn parse_rational_arg(s: &str) -> Result<Rational, String> {
    let bad = || format!("expected an integer or p/q, found `{s}`");
    match s.split_once('/') {
        Some((a, b)) => {
            let a: i64 = a.trim().parse().map_err(|_| bad())?;
            let b: i64 = b.trim().parse().map_err(|_| bad())?;
            if b == 0 {
                return Err(bad());
            }
            Ok(Rational::new(a, b))
        }
        None => s
            .trim()
            .parse()
            .map(Rational::from_integer)
            .map_err(|_| bad()),
    }
}

pub fn load_scenario(common: &Common) -> Result<Scenario, CliError> {
    let mut s = match &common.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            Scenario::parse(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        }
        None => Scenario::parse("").expect("empty scenario parses"),
    };
    if let Some(g) = common.grid_override {
        s.grid.resolution = g;
        s.grid.refinements = default_refinements(g);
    }
    if let Some(t) = common.tolerance {
        s.grid.tolerance = t;
    }
    if let Some(c) = common.convention {
        s.run.convention = c;
    }
    Ok(s)
}

fn run_one(cmd: Command, s: &Scenario, out_dir: &Path) -> Result<Outcome, CliError> {
    let conventions = s.run.convention.conventions();
    match cmd {
        Command::Inspect => commands::inspect(s),
        Command::Curvature => commands::curvature(s, &conventions),
        Command::C2 => commands::c2(s, &conventions),
        Command::Verify => commands::verify(s, &conventions),
        Command::Bound => match &s.lattice {
            Some(l) => commands::lattice(l),
            None => Err(CliError::Validation(
                "bound needs --r --R --delta --n or a [lattice] section".into(),
            )),
        },
        Command::Family => commands::family(s),
        Command::Report => {
            let (outcome, summaries) = commands::report(out_dir)?;
            let mut json = serde_json::to_string_pretty(&summaries)
                .map_err(|e| CliError::Io(e.to_string()))?;
            json.push('\n');
            std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(e.to_string()))?;
            std::fs::write(out_dir.join("summary.json"), json)
                .map_err(|e| CliError::Io(e.to_string()))?;
            Ok(outcome)
        }
    }
}

fn finish(outcome: Outcome, out_dir: &Path) -> Result<i32, CliError> {
    write_outcome(out_dir, &outcome)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    for m in &outcome.messages {
        println!("{}: {m}", outcome.command);
    }
    Ok(outcome.exit_code)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let (cmds, common): (Vec<Command>, &Common) = match &cli.command {
        CliCommand::Inspect(c) => (vec![Command::Inspect], c),
        CliCommand::Curvature(c) => (vec![Command::Curvature], c),
        CliCommand::C2(c) => (vec![Command::C2], c),
        CliCommand::Verify(c) => (vec![Command::Verify], c),
        CliCommand::Family(c) => (vec![Command::Family], c),
        CliCommand::Report(c) => (vec![Command::Report], c),
        CliCommand::Run(c) => (Vec::new(), c),
        CliCommand::Bound(b) => {
            let flags = (b.r, b.big_r, b.delta, b.n);
            if let (Some(r), Some(big_r), Some(delta), Some(n)) = flags {
                return finish(commands::bound_query(r, big_r, delta, n)?, &b.common.out);
            }
            if flags != (None, None, None, None) {
                return Err(CliError::Validation(
                    "bound needs all of --r --R --delta --n".into(),
                ));
            }
            (vec![Command::Bound], &b.common)
        }
    };
    let scenario = load_scenario(common)?;
    let cmds = if cmds.is_empty() {
        if scenario.run.commands.is_empty() {
            return Err(CliError::Validation("[run] lists no commands".into()));
        }
        scenario.run.commands.clone()
    } else {
        cmds
    };
    let mut code = 0;
    for cmd in cmds {
        code = code.max(finish(run_one(cmd, &scenario, &common.out)?, &common.out)?);
    }
    Ok(code)
}

/// Runs the command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
