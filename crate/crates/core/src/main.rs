//! Command line front end: check, run, analyze, and emit-chisel over Core
//! Chisel source files.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use corechisel::analysis;
use corechisel::chisel::{emit_chisel, output_file_name, EmitterConfig};
use corechisel::diag::Diagnostic;
use corechisel::interp::{run_with, MemInit, RunConfig, RunStatus};
use corechisel::{parse_program, validate_program, Program, Severity};

const EXIT_OK: u8 = 0;
const EXIT_DIAGNOSTICS: u8 = 1;
const EXIT_MAX_CYCLES: u8 = 2;
const EXIT_RUNTIME_ERROR: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "corechisel",
    about = "Parse, simulate, and analyze Core Chisel designs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a design and report diagnostics.
    Check {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interpret a design cycle by cycle until it stabilizes.
    Run {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Stop after this many cycles without stabilization.
        #[arg(long, default_value_t = 10_000)]
        max_cycles: u64,
        /// Record every cycle instead of only the first and last.
        #[arg(long)]
        trace: bool,
        /// Initialize memory cells to the bank size instead of zero.
        #[arg(long)]
        paper_literal_meminit: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute all reachable channel/state configurations.
    Analyze {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        paper_literal_meminit: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Translate a design to standard Chisel (Scala source).
    EmitChisel {
        input: PathBuf,
        /// Output file; defaults to `<top module>.scala`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    ExitCode::from(run_cli(Cli::parse()))
}

fn run_cli(cli: Cli) -> u8 {
    match cli.command {
        Command::Check { input, format, out } => check_cmd(&input, format, out.as_deref()),
        Command::Run { input, format, max_cycles, trace, paper_literal_meminit, out } => {
            run_cmd(&input, format, max_cycles, trace, paper_literal_meminit, out.as_deref())
        }
        Command::Analyze { input, format, out, .. } => analyze_cmd(&input, format, out.as_deref()),
        Command::EmitChisel { input, out } => emit_cmd(&input, out.as_deref()),
    }
}

fn read_source(path: &Path) -> Result<String, u8> {
    match std::fs::read(path) {
        Ok(bytes) => Ok(String::from_utf8_lossy(&bytes).into_owned()),
        Err(e) => {
            eprintln!("error: cannot read {}: {}", path.display(), e);
            Err(EXIT_IO)
        }
    }
}

fn write_output(out: Option<&Path>, content: &str) -> Result<(), u8> {
    match out {
        None => {
            print!("{}", content);
            std::io::stdout().flush().ok();
            Ok(())
        }
        Some(path) => std::fs::write(path, content).map_err(|e| {
            eprintln!("error: cannot write {}: {}", path.display(), e);
            EXIT_IO
        }),
    }
}

fn print_diagnostics(file: &str, diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{}", d.render(file));
    }
}

/// Parses and validates; on success returns the program plus any warnings.
fn load(path: &Path) -> Result<(Program, Vec<Diagnostic>), u8> {
    let source = read_source(path)?;
    let file = path.display().to_string();
    let result = parse_program(&source);
    match result.program {
        None => {
            print_diagnostics(&file, &result.diagnostics);
            Err(EXIT_DIAGNOSTICS)
        }
        Some(program) => {
            let mut diags = result.diagnostics;
            diags.extend(validate_program(&program));
            if diags.iter().any(|d| d.severity == Severity::Error) {
                print_diagnostics(&file, &diags);
                Err(EXIT_DIAGNOSTICS)
            } else {
                Ok((program, diags))
            }
        }
    }
}

fn check_cmd(input: &Path, format: Format, out: Option<&Path>) -> u8 {
    let source = match read_source(input) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let file = input.display().to_string();
    let result = parse_program(&source);
    let mut diags = result.diagnostics;
    if let Some(program) = &result.program {
        diags.extend(validate_program(program));
        corechisel::diag::sort_diagnostics(&mut diags);
    }
    let has_errors = diags.iter().any(|d| d.severity == Severity::Error);

    match format {
        Format::Text => {
            print_diagnostics(&file, &diags);
            if has_errors {
                return EXIT_DIAGNOSTICS;
            }
            if let Err(code) = write_output(out, "ok\n") {
                return code;
            }
        }
        Format::Json => {
            let payload = serde_json::json!({
                "file": file,
                "ok": !has_errors,
                "diagnostics": diags,
            });
            if let Err(code) = write_output(out, &format!("{}\n", payload)) {
                return code;
            }
            if has_errors {
                return EXIT_DIAGNOSTICS;
            }
        }
    }
    EXIT_OK
}

fn run_cmd(
    input: &Path,
    format: Format,
    max_cycles: u64,
    trace: bool,
    paper_literal_meminit: bool,
    out: Option<&Path>,
) -> u8 {
    let file = input.display().to_string();
    let (program, warnings) = match load(input) {
        Ok(loaded) => loaded,
        Err(code) => return code,
    };
    print_diagnostics(&file, &warnings);

    let cfg = RunConfig {
        max_cycles,
        full_trace: trace,
        mem_init: if paper_literal_meminit { MemInit::BankSize } else { MemInit::Zero },
    };
    let result = run_with(&program, &cfg);
    for w in &result.warnings {
        eprintln!("{}: warning: {}", file, w);
    }
    let rendered = match format {
        Format::Text => result.to_text(),
        Format::Json => result.to_json_lines(),
    };
    if let Err(code) = write_output(out, &rendered) {
        return code;
    }
    match result.status {
        RunStatus::Stable => EXIT_OK,
        RunStatus::MaxCyclesReached => EXIT_MAX_CYCLES,
        RunStatus::RuntimeError(_) => EXIT_RUNTIME_ERROR,
    }
}

fn analyze_cmd(input: &Path, format: Format, out: Option<&Path>) -> u8 {
    let file = input.display().to_string();
    let (program, warnings) = match load(input) {
        Ok(loaded) => loaded,
        Err(code) => return code,
    };
    print_diagnostics(&file, &warnings);

    let (_, report) = analysis::analyze(&program);
    let rendered = match format {
        Format::Text => report.to_text(),
        Format::Json => format!("{}\n", serde_json::json!(report)),
    };
    if let Err(code) = write_output(out, &rendered) {
        return code;
    }
    EXIT_OK
}

fn emit_cmd(input: &Path, out: Option<&Path>) -> u8 {
    let file = input.display().to_string();
    let (program, warnings) = match load(input) {
        Ok(loaded) => loaded,
        Err(code) => return code,
    };
    print_diagnostics(&file, &warnings);

    let cfg = EmitterConfig::default();
    let scala = emit_chisel(&program, &cfg);
    let path = out.map(PathBuf::from).unwrap_or_else(|| PathBuf::from(output_file_name(&cfg)));
    if let Err(e) = std::fs::write(&path, scala) {
        eprintln!("error: cannot write {}: {}", path.display(), e);
        return EXIT_IO;
    }
    eprintln!("wrote {}", path.display());
    EXIT_OK
}
