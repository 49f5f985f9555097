/// `print!` that reports write errors (a closed pipe, say) instead of
/// panicking.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        write!(std::io::stdout().lock(), $($t)*)?;
    }};
}

macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        writeln!(std::io::stdout().lock(), $($t)*)?;
    }};
}

mod commands;
mod econ;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hawkdove::scoring::ScoreScheme;

/// Taxonomy-guided hawkish/dovish classification of central-bank text.
#[derive(Debug, Parser)]
#[command(name = "hawkdove", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration. Defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Taxonomy JSON. The bundled reference taxonomy when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub taxonomy: Option<PathBuf>,
    /// Overrides `decoding.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `backend.kind`.
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendArg>,
    /// Mock script JSON; overrides `backend.mock_script`.
    #[arg(long, global = true, value_name = "PATH")]
    pub mock_script: Option<PathBuf>,
    /// More log output on stderr (repeatable). RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Http,
    Mock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Three,
    Five,
}

impl From<SchemeArg> for ScoreScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Three => ScoreScheme::ThreeClass,
            SchemeArg::Five => ScoreScheme::FiveClass,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify every document of a JSONL corpus; writes one result JSON per
    /// document and a run manifest.
    Classify {
        #[arg(long, value_name = "PATH")]
        corpus: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Paragraph-level worker threads. Output does not depend on it.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        jobs: u16,
    },
    /// Render self-contained HTML reports from result JSON files.
    Report {
        #[arg(required = true, value_name = "RESULT")]
        results: Vec<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// JavaScript inlined after the drill-down marker.
        #[arg(long, value_name = "PATH")]
        script: Option<PathBuf>,
    },
    /// Split the stance-bearing sentences of NEW into similar and new
    /// points relative to OLD.
    Diff {
        #[arg(value_name = "NEW")]
        new: PathBuf,
        #[arg(value_name = "OLD")]
        old: PathBuf,
        /// Similarity threshold in [0, 1]; overrides `diff.tau`.
        #[arg(long)]
        tau: Option<f64>,
        /// Stance classes to compare, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "hawkish,leaning hawkish")]
        stance: Vec<String>,
        /// Ask the backend to summarise the new points.
        #[arg(long)]
        summarize: bool,
        /// Write JSON here instead of standard output.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Build a score series CSV from result JSON files, directories of them,
    /// or existing series CSVs.
    Series {
        #[arg(required = true, value_name = "INPUT")]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "five")]
        scheme: SchemeArg,
        /// Trailing moving-average window.
        #[arg(long, default_value_t = 1)]
        window: usize,
        /// Z-score over the whole series before averaging.
        #[arg(long)]
        normalize: bool,
        /// Keep only documents of this type.
        #[arg(long)]
        doc_type: Option<String>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Show the topic ranking for one paragraph.
    Retrieve {
        /// Paragraph text, or `-` for standard input.
        paragraph: String,
        #[arg(long)]
        json: bool,
    },
    /// Print the grammar compiled from one topic's decision tree.
    CompileGrammar {
        mnemonic: String,
        /// Print the nonterminal to tree-node map as JSON instead.
        #[arg(long)]
        node_map: bool,
    },
    /// Policy reaction functions, market regressions and Granger tests.
    Econ {
        #[command(subcommand)]
        model: econ::EconCommand,
    },
    /// Check the taxonomy and configuration and list every problem.
    Validate,
    /// Print the effective configuration as TOML.
    Config,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe))
}
