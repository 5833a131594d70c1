#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

use std::io::{self, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand, ValueEnum};

use navgraph::extract::Mode;
use navgraph::protocol::{serve_lines, Connection, TcpServer};
use navgraph::{Execution, RenderMode, Verbosity};
use navgraph_cli::{
    cmd_build, cmd_ingest, cmd_simulate, cmd_validate, load_graph, render_bench, run_bench,
    Format, Outcome, SimOptions, EXIT_USAGE,
};

#[derive(Parser)]
#[command(name = "navgraph", version, about = "Build, check and drive chart navigation graphs")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Flat,
    Grouped,
}

#[derive(Clone, Copy, ValueEnum)]
enum RenderArg {
    OnDemand,
    PreRendered,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerbosityArg {
    Terse,
    Default,
    Verbose,
}

#[derive(Subcommand)]
enum Command {
    /// Check a graph file and report diagnostics.
    Validate { graph: PathBuf },
    /// Build a graph from a list/tree/dual-hierarchy/adjacency spec.
    Build {
        spec: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Turn a scene spec into a navigable graph.
    Ingest {
        scene: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Grouped)]
        mode: ModeArg,
        /// Built-in template name (default, values, position) or raw text.
        #[arg(long, default_value = "default")]
        template: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run an input script and print one trace line per step.
    Simulate {
        graph: PathBuf,
        script: PathBuf,
        #[arg(long, value_enum, default_value_t = RenderArg::OnDemand)]
        render: RenderArg,
        #[arg(long, value_enum, default_value_t = VerbosityArg::Default)]
        verbosity: VerbosityArg,
        /// JSON object of token -> rule remappings.
        #[arg(long)]
        prefs: Option<PathBuf>,
    },
    /// Speak the session protocol on stdio or a TCP port.
    Serve {
        #[arg(long, conflicts_with = "port")]
        stdio: bool,
        #[arg(long)]
        port: Option<u16>,
        /// Graph used when init names none.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Time ingest of synthetic scatter scenes.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [406usize, 20300])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Flat)]
        mode: ModeArg,
        #[arg(long)]
        sequential: bool,
        /// Also report a least-squares line through the medians.
        #[arg(long)]
        fit: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    let format = match cli.format {
        FormatArg::Text => Format::Text,
        FormatArg::Json => Format::Json,
        FormatArg::Csv => Format::Csv,
    };
    let outcome = match cli.command {
        Command::Validate { graph } => {
            let color = std::env::var_os("DN_NO_COLOR").is_none() && io::stdout().is_terminal();
            cmd_validate(&graph, format, color)?
        }
        Command::Build { spec, out } => write_out(cmd_build(&spec)?, out)?,
        Command::Ingest {
            scene,
            mode,
            template,
            out,
        } => write_out(cmd_ingest(&scene, mode.into(), &template)?, out)?,
        Command::Simulate {
            graph,
            script,
            render,
            verbosity,
            prefs,
        } => {
            let opts = SimOptions {
                mode: match render {
                    RenderArg::OnDemand => RenderMode::OnDemand,
                    RenderArg::PreRendered => RenderMode::PreRendered,
                },
                verbosity: match verbosity {
                    VerbosityArg::Terse => Verbosity::Terse,
                    VerbosityArg::Default => Verbosity::Default,
                    VerbosityArg::Verbose => Verbosity::Verbose,
                },
            };
            cmd_simulate(&graph, &script, format, opts, prefs.as_deref())?
        }
        Command::Serve { stdio, port, graph } => {
            let preloaded = graph.map(|p| load_graph(&p)).transpose()?.map(Arc::new);
            match (stdio, port) {
                (true, _) => {
                    let stdin = io::stdin();
                    let stdout = io::stdout();
                    serve_lines(&mut Connection::new(preloaded), stdin.lock(), stdout.lock())?;
                }
                (false, Some(port)) => {
                    let server = TcpServer::bind(port, preloaded)?;
                    eprintln!("listening on {}", server.local_addr()?);
                    server.run()?;
                }
                (false, None) => bail!("serve needs --stdio or --port"),
            }
            return Ok(0);
        }
        Command::Bench {
            sizes,
            reps,
            mode,
            sequential,
            fit,
        } => {
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::default()
            };
            let report = run_bench(&sizes, reps, mode.into(), exec, fit)?;
            Outcome {
                stdout: render_bench(&report, format),
                code: 0,
            }
        }
    };
    let mut stdout = io::stdout().lock();
    stdout.write_all(outcome.stdout.as_bytes())?;
    stdout.flush()?;
    Ok(outcome.code)
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Flat => Mode::Flat,
            ModeArg::Grouped => Mode::Grouped,
        }
    }
}

fn write_out(outcome: Outcome, out: Option<PathBuf>) -> Result<Outcome> {
    match out {
        None => Ok(outcome),
        Some(path) => {
            std::fs::write(&path, &outcome.stdout)?;
            Ok(Outcome {
                stdout: String::new(),
                code: outcome.code,
            })
        }
    }
}
