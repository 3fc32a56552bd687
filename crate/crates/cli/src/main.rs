use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cfspace::dsl::{compile_source, parse_query, parse_space, run, serialize_space, ModelKind, SpaceDocument};
use cfspace::repro::{self, SPACES};
use cfspace::Error;

const USAGE: u8 = 5;

/// Exact counterfactual probability and causal spaces.
#[derive(Parser)]
#[command(name = "cfspace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the axioms of a space, including the cross-world condition.
    Check { space: PathBuf },
    /// Run a query script against a space and print the transcript.
    Run { space: PathBuf, script: PathBuf },
    /// Compile a model file into a space.
    Compile {
        #[arg(value_parser = ["scm", "bscm", "po"])]
        kind: String,
        model: PathBuf,
        /// Output file; standard output if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Recompute the bundled example values and compare them with the expectation table.
    Repro {
        #[arg(value_parser = repro_names())]
        name: String,
    },
}

fn repro_names() -> Vec<&'static str> {
    let mut v = SPACES.to_vec();
    v.push("all");
    v
}

/// A failure with its exit code, already formatted for standard error.
struct Failure(u8, String);

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(USAGE, format!("{}: {e}", path.display())))
}

fn located(path: &Path, e: Error) -> Failure {
    let code = e.exit_code() as u8;
    match e {
        Error::Parse { .. } | Error::Semantic { .. } => Failure(code, format!("{}:{e}", path.display())),
        e => Failure(code, format!("{}: {e}", path.display())),
    }
}

fn load(path: &Path) -> Result<SpaceDocument, Failure> {
    parse_space(&read(path)?).map_err(|e| located(path, e))
}

fn check(path: &Path, out: &mut impl Write) -> Result<u8, Failure> {
    let doc = load(path)?;
    let space = &doc.space;
    let report = space.check_all();
    let _ = writeln!(
        out,
        "space {}: {} outcomes, {} worlds, {} kernels",
        doc.name,
        space.schema().size(),
        space.schema().worlds().len(),
        space.mechanism().len()
    );
    for line in report.describe(space.schema()) {
        let _ = writeln!(out, "{line}");
    }
    if report.is_clean() {
        let _ = writeln!(out, "axioms: ok");
        Ok(0)
    } else {
        let _ = writeln!(out, "axioms: {} violations", report.violations.len());
        Ok(1)
    }
}

fn run_script(space: &Path, script: &Path, out: &mut impl Write) -> Result<u8, Failure> {
    let doc = load(space)?;
    let parsed = parse_query(&read(script)?).map_err(|e| located(script, e))?;
    let mirror = doc.world_mirror().map_err(|e| located(space, e))?;
    let result = run(&doc.space, &parsed, mirror.as_ref());
    for line in &result.lines {
        let _ = writeln!(out, "{line}");
    }
    match result.error {
        Some(e) => Err(located(script, e)),
        None => Ok(result.status as u8),
    }
}

fn compile(kind: &str, model: &Path, output: Option<&Path>, out: &mut impl Write) -> Result<u8, Failure> {
    let kind: ModelKind = kind.parse().map_err(|e| Failure(USAGE, format!("{e}")))?;
    let space = compile_source(kind, &read(model)?).map_err(|e| located(model, e))?;
    let name = model.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    let mut doc = SpaceDocument::new(name, space);
    if kind != ModelKind::Po {
        doc.mirror = Some(("F".into(), "CF".into()));
    }
    let text = serialize_space(&doc);
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Failure(USAGE, format!("{}: {e}", p.display())))?,
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    Ok(0)
}

fn reproduce(name: &str, out: &mut impl Write) -> Result<u8, Failure> {
    let lines = repro::reproduce(name).map_err(|e| Failure(2, e.to_string()))?;
    let passed = lines.iter().filter(|l| l.pass).count();
    for l in &lines {
        let _ = writeln!(out, "{}", l.render());
    }
    let _ = writeln!(out, "{passed}/{} passed", lines.len());
    Ok(if passed == lines.len() { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = match &cli.command {
        Command::Check { space } => check(space, &mut out),
        Command::Run { space, script } => run_script(space, script, &mut out),
        Command::Compile { kind, model, output } => compile(kind, model, output.as_deref(), &mut out),
        Command::Repro { name } => reproduce(name, &mut out),
    };
    let _ = out.flush();
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("cfspace: {msg}");
            ExitCode::from(code)
        }
    }
}
