use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hap_cli::commands::{self, Format, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "hap", version, about = "Task sequencing with ε-GHA subspace decompositions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Summary printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Build the task graph, decompose it and write a verified artifact.
    Decompose {
        /// Scenario JSON.
        #[arg(long)]
        scenario: PathBuf,
        /// Artifact to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sequence a task list against an artifact and adapt every leg.
    Sequence {
        /// Decomposition artifact.
        #[arg(long)]
        artifact: PathBuf,
        /// Task list JSON.
        #[arg(long)]
        tasks: PathBuf,
        /// Plan record to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the randomised comparison sweep.
    Bench {
        /// Scenario JSON; its `bench` block sets the sweep.
        #[arg(long)]
        scenario: PathBuf,
        /// Report to write. Rows stream to `<out>.partial.jsonl` meanwhile.
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw an artifact or plan record as SVG.
    Render {
        /// Artifact or plan record.
        #[arg(long)]
        artifact: PathBuf,
        /// SVG to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run the distortion checks on every map of an artifact.
    Verify {
        /// Artifact to check.
        #[arg(long)]
        artifact: PathBuf,
        /// Optional report file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = match cli.format {
        OutFormat::Json => Format::Json,
        OutFormat::Table => Format::Table,
    };
    let result = match &cli.command {
        Command::Decompose { scenario, out } => commands::decompose(scenario, out, cli.seed, format),
        Command::Sequence { artifact, tasks, out } => commands::sequence(artifact, tasks, out, cli.seed, format),
        Command::Bench { scenario, out } => commands::bench(scenario, out, cli.seed, format),
        Command::Render { artifact, out } => commands::render(artifact, out),
        Command::Verify { artifact, out } => commands::verify(artifact, out.as_deref(), format),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
