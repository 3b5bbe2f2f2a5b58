use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use pdge::study::{emit_convergence_csv, emit_csv, emit_json, run_study_with, RunConfig, RunReport};

#[derive(Parser)]
#[command(name = "pdge", version, about = "IPDG heat equation solver with a posteriori error estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a refinement study described by a TOML config.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Directory for the output files (created if missing).
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Inclusive range of level indices to run, e.g. `2..5`.
    #[arg(long)]
    levels: Option<String>,
    /// Override a config entry, e.g. `problem.degree=2`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// Failure classes mapped to process exit codes.
enum Failure {
    Config(anyhow::Error),
    Solver(anyhow::Error),
    Output(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Output(_) => 1,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Solver(e) | Failure::Output(e) => e,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("PDGE_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow!("PDGE_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let raw = raw.trim();
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(table: &mut toml::Table, spec: &str) -> anyhow::Result<()> {
    let (key, value) = spec.split_once('=').ok_or_else(|| anyhow!("override {spec:?} is not KEY=VALUE"))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = path.split_last().unwrap();
    let mut node = table;
    for part in parents {
        node = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| anyhow!("override {key:?}: {part:?} is not a section"))?;
    }
    node.insert(last.to_string(), parse_value(value));
    Ok(())
}

fn parse_levels(spec: &str) -> anyhow::Result<(usize, usize)> {
    let (a, b) = spec.split_once("..").ok_or_else(|| anyhow!("--levels expects i..j, got {spec:?}"))?;
    let first = a.trim().parse().with_context(|| format!("bad level index {a:?}"))?;
    let last = b.trim().trim_start_matches('=').parse().with_context(|| format!("bad level index {b:?}"))?;
    Ok((first, last))
}

fn load_config(args: &RunArgs) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing {}", args.config.display()))?;
    for o in &args.overrides {
        apply_override(&mut table, o)?;
    }
    let mut config: RunConfig = toml::Value::Table(table).try_into().context("invalid configuration")?;
    if let Some(spec) = &args.levels {
        let (first, last) = parse_levels(spec)?;
        config.select_levels(first, last)?;
    }
    config.validate()?;
    Ok(config)
}

fn write_outputs(report: &RunReport, out_dir: &Path) -> anyhow::Result<()> {
    let out = &report.config.output;
    emit_csv(report, &out_dir.join(&out.steps_csv))?;
    emit_convergence_csv(report, &out_dir.join(&out.convergence_csv))?;
    emit_json(report, &out_dir.join(&out.report_json))?;
    Ok(())
}

fn print_table(report: &RunReport) {
    let f = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
    println!(
        "{:>5} {:>5} {:>10} {:>8} {:>12} {:>12} {:>12} {:>8} {:>8} {:>8} {:>8}",
        "level", "n", "h", "steps", "error", "parest", "ellest", "inv_ei", "eoc_err", "eoc_par", "eoc_ell"
    );
    for r in &report.table.rows {
        println!(
            "{:>5} {:>5} {:>10.4e} {:>8} {:>12.4e} {:>12.4e} {:>12.4e} {:>8} {:>8} {:>8} {:>8}",
            r.level,
            r.subdivisions,
            r.h,
            r.steps,
            r.error.unwrap_or(f64::NAN),
            r.parest,
            r.ellest,
            f(r.inverse_ei),
            f(r.eoc_error),
            f(r.eoc_parest),
            f(r.eoc_ellest)
        );
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    configure_threads().map_err(Failure::Config)?;
    let config = load_config(&args).map_err(Failure::Config)?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .map_err(Failure::Output)?;
    let out_dir = args.out_dir.clone();
    let report = run_study_with(&config, |level| {
        eprintln!("level {} (n = {}) finished: {} steps", level.level, level.subdivisions, level.records.len());
        let partial = out_dir.join(format!("level-{}.json", level.level));
        if let Err(e) = emit_json(level, &partial) {
            eprintln!("warning: could not write {}: {e}", partial.display());
        }
    })
    .map_err(|e| match e {
        pdge::Error::Config(_) => Failure::Config(e.into()),
        other => Failure::Solver(other.into()),
    })?;
    write_outputs(&report, &args.out_dir).map_err(Failure::Output)?;
    print_table(&report);
    if let Some(t) = report.wall_time {
        eprintln!("wall time: {:.2} s", t.as_secs_f64());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_paths_create_sections() {
        let mut t: toml::Table = toml::from_str("[problem]\ndegree = 1").unwrap();
        apply_override(&mut t, "problem.degree=3").unwrap();
        apply_override(&mut t, "solver.tolerance = 1e-11").unwrap();
        apply_override(&mut t, "problem.benchmark=u2").unwrap();
        assert_eq!(t["problem"]["degree"].as_integer(), Some(3));
        assert_eq!(t["solver"]["tolerance"].as_float(), Some(1e-11));
        assert_eq!(t["problem"]["benchmark"].as_str(), Some("u2"));
        assert!(apply_override(&mut t, "novalue").is_err());
        assert!(apply_override(&mut t, "problem.degree.x=1").is_err());
    }

    #[test]
    fn level_ranges() {
        assert_eq!(parse_levels("2..5").unwrap(), (2, 5));
        assert_eq!(parse_levels("0..=3").unwrap(), (0, 3));
        assert!(parse_levels("3").is_err());
    }
}
