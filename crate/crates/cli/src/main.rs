use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hamforge_core::report::{parse_gauge_map, run_pipeline, Method, Modes, PipelineError, PipelineOptions};

#[derive(Parser)]
#[command(name = "hamforge", version, about = "Dirac and Faddeev-Jackiw constraint analysis of field theories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analysis pipeline on a theory file.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "both", value_parser = str::parse::<Method>)]
        method: Method,
        /// `symbolic`, or `k=<N>` to also evaluate counts for N retained modes.
        #[arg(long, default_value = "symbolic", value_parser = str::parse::<Modes>)]
        modes: Modes,
        /// Gauge-fixing blocks per sector, e.g. `zero_mode=coulomb,kk_mode=axial`.
        #[arg(long, default_value = "")]
        gauge: String,
        /// Certify operator inverses on an N³ periodic lattice.
        #[arg(long, value_name = "N")]
        verify_lattice: Option<usize>,
        /// Largest accepted lattice residual.
        #[arg(long, default_value_t = hamforge_core::report::LATTICE_TOLERANCE)]
        lattice_tolerance: f64,
        /// Directory for report.txt / report.json; without it the report goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_INPUT: u8 = 2;

fn main() -> ExitCode {
    let Command::Analyze {
        input,
        method,
        modes,
        gauge,
        verify_lattice,
        lattice_tolerance,
        out,
        format,
    } = Cli::parse().command;

    let src = match std::fs::read_to_string(&input) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", input.display());
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let gauges = match parse_gauge_map(&gauge) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let opts = PipelineOptions {
        method,
        modes,
        gauges,
        lattice: verify_lattice,
        lattice_tolerance,
    };
    let report = match run_pipeline(&src, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                PipelineError::Parse(_)
                | PipelineError::UnknownSector(_)
                | PipelineError::UnknownGauge(_)
                | PipelineError::Lattice(_) => EXIT_INPUT,
                PipelineError::Kk(_) | PipelineError::Dirac { .. } => EXIT_RUNTIME,
            };
            return ExitCode::from(code);
        }
    };

    let text = matches!(format, Format::Text | Format::Both).then(|| report.to_text());
    let json = matches!(format, Format::Json | Format::Both).then(|| report.to_json());
    match &out {
        Some(dir) => {
            let write = |name: &str, body: &str| {
                std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join(name), body))
            };
            for (name, body) in [("report.txt", &text), ("report.json", &json)] {
                if let Some(body) = body {
                    if let Err(e) = write(name, body) {
                        eprintln!("error: cannot write {}: {e}", dir.join(name).display());
                        return ExitCode::from(EXIT_RUNTIME);
                    }
                }
            }
            println!("{}: {:?} (exit {})", report.theory, report.status, report.exit_code);
        }
        None => {
            if let Some(t) = &text {
                print!("{t}");
            }
            if let Some(j) = &json {
                print!("{j}");
            }
        }
    }
    for s in &report.sectors {
        for c in s.checks.iter().filter(|c| !c.passed) {
            eprintln!("{}: {} failed{}", s.name, c.name, c.detail.as_ref().map(|d| format!(": {d}")).unwrap_or_default());
        }
        for l in s.lattice.iter().filter(|l| !l.passed) {
            eprintln!("{}: lattice {} at {} failed (residual {:.3e})", s.name, l.name, l.point, l.residual);
        }
    }
    ExitCode::from(report.exit_code as u8)
}
