use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use manifold_cli::report::{self, TableKind};
use manifold_cli::{run, CliResult, ExperimentConfig, Stage};

/// Output directory override; `--out` still wins.
const OUT_ENV: &str = "MANIFOLD_OUT";

#[derive(Parser)]
#[command(name = "manifold", version, about = "Embedding manifold experiments")]
struct Cli {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides MANIFOLD_OUT and `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the symbolic scene world and its triples.
    GenCci,
    /// Embed every scene as an image and a text vector.
    Embed,
    /// Rigidly align text and image embeddings.
    Align,
    /// Build the epsilon graph over the aligned vertices.
    BuildGraph,
    /// Few-shot label retrieval, Euclidean vs geodesic.
    LabelRetrieval,
    /// Fit text vectors with the ranking loss.
    FitText,
    /// Count smooth shortest paths on the built graph.
    CountSmoothPaths,
    /// Full smooth-path sweep over thresholds and feature spaces.
    Sweep,
    /// Render report.json files as one CSV table on stdout.
    Report {
        files: Vec<PathBuf>,
        /// Table layout used when no files are given.
        #[arg(long, value_enum, default_value_t = Kind::Label)]
        kind: Kind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Label,
    Path,
}

impl Command {
    fn stage(&self) -> Option<Stage> {
        Some(match self {
            Command::GenCci => Stage::GenCci,
            Command::Embed => Stage::Embed,
            Command::Align => Stage::Align,
            Command::BuildGraph => Stage::BuildGraph,
            Command::LabelRetrieval => Stage::LabelRetrieval,
            Command::FitText => Stage::FitText,
            Command::CountSmoothPaths => Stage::CountSmoothPaths,
            Command::Sweep => Stage::Sweep,
            Command::Report { .. } => return None,
        })
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| manifold_core::Error::InvalidArgument(format!("thread pool: {e}")))?;
    let Some(stage) = cli.command.stage() else {
        let Command::Report { files, kind } = &cli.command else {
            unreachable!()
        };
        let kind = match kind {
            Kind::Label => TableKind::Label,
            Kind::Path => TableKind::Path,
        };
        print!("{}", pool.install(|| report::render(files, kind))?);
        return Ok(());
    };
    // The override is not part of the hashed config, so moving the output
    // does not change the manifest's config digest.
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| cfg.output.dir.clone());
    let manifest = pool.install(|| run(stage, &cfg, &out, pool.current_num_threads()))?;
    log::info!(
        "{} finished in {:.2}s, {} files in {}",
        manifest.command,
        manifest.wall_time_seconds,
        manifest.outputs.len(),
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
