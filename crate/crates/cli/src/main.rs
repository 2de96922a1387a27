//! `credal`: solve, check and audit minimax decisions over finitely generated credal sets.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use credal::problem_file::ProblemFile;

/// Exit status when `--strict` is set and the analysis verdict is negative.
const EXIT_NEGATIVE: u8 = 1;
/// Exit status for usage and input errors.
const EXIT_INPUT: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "credal",
    version,
    about = "Exact minimax decisions under credal sets"
)]
struct Cli {
    /// Exit with status 1 when the verdict is negative (inconsistent, not calibrated, ...).
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the a priori game: value, rule, bookie mixture and optimal face.
    Solve { file: PathBuf },
    /// Solve the a posteriori game at every observation.
    Posterior { file: PathBuf },
    /// Verify a saddle point of the a priori game (defaults to the solver's own).
    Saddle {
        file: PathBuf,
        /// Rule as `x→a, x→[a:w, b:w]` (`=` or `->` also accepted).
        #[arg(long)]
        rule: Option<String>,
        /// Bookie mixture as `i:w, j:w` over zero-based generator indices.
        #[arg(long)]
        mixture: Option<String>,
    },
    /// Build the hull from the X-marginals and conditionals.
    Hull {
        file: PathBuf,
        /// Print the hull as a problem file.
        #[arg(long)]
        json: bool,
    },
    /// Structural checks on the credal set.
    Check {
        #[arg(value_enum)]
        what: CheckKind,
        file: PathBuf,
    },
    /// Time, weak time or dynamic consistency.
    Consistency {
        #[arg(value_enum)]
        kind: ConsistencyArg,
        file: PathBuf,
        /// Random rules tried by the dynamic falsifier after the exhaustive families.
        #[arg(long, default_value_t = 20)]
        budget: usize,
    },
    /// Calibration of an update rule.
    Calibrate {
        file: PathBuf,
        /// `standard`, `ignore` or `partition:a,b|c`.
        #[arg(long, default_value = "standard")]
        rule: String,
        /// Also decide sharp calibration (convex sets only).
        #[arg(long)]
        sharp: bool,
    },
    /// Grid oracle bounds on the a priori value.
    Oracle {
        file: PathBuf,
        #[arg(long)]
        grid: usize,
    },
    /// The bundled worked examples.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Subcommand, Debug)]
enum CorpusAction {
    /// Replay every recorded expectation.
    Run {
        /// Read cases from this directory instead of the bundled copies.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CheckKind {
    Rect,
    Conservative,
    Dilation,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ConsistencyArg {
    Time,
    Weak,
    Dynamic,
}

/// Text to print and the verdict it carries.
pub struct Report {
    pub text: String,
    /// Negative analysis verdict; exit 1 under `--strict`.
    pub negative: bool,
    /// A check that must pass did not (corpus replay); exit 1 regardless of `--strict`.
    pub failed: bool,
}

/// Tries `path`, then `path.json`.
fn resolve(path: &Path) -> PathBuf {
    if path.exists() {
        return path.to_path_buf();
    }
    let mut with_ext = path.as_os_str().to_owned();
    with_ext.push(".json");
    let with_ext = PathBuf::from(with_ext);
    if with_ext.exists() {
        with_ext
    } else {
        path.to_path_buf()
    }
}

fn load(path: &Path) -> credal::Result<ProblemFile> {
    ProblemFile::read(&resolve(path))
}

fn execute(command: Command) -> credal::Result<Report> {
    let seed = credal::sampling::seed_from_env();
    match command {
        Command::Solve { file } => report::solve(&load(&file)?.problem()?),
        Command::Posterior { file } => report::posterior(&load(&file)?.problem()?),
        Command::Saddle {
            file,
            rule,
            mixture,
        } => report::saddle(
            &load(&file)?.problem()?,
            rule.as_deref(),
            mixture.as_deref(),
        ),
        Command::Hull { file, json } => report::hull(&load(&file)?.credal()?, json),
        Command::Check { what, file } => {
            let p = load(&file)?.credal()?;
            match what {
                CheckKind::Rect => report::rectangular(&p),
                CheckKind::Conservative => Ok(report::conservative(&p)),
                CheckKind::Dilation => report::dilation(&p),
            }
        }
        Command::Consistency { kind, file, budget } => {
            let dp = load(&file)?.problem()?;
            match kind {
                ConsistencyArg::Time => {
                    report::consistency(&dp, credal::consistency::check_time_consistency(&dp)?)
                }
                ConsistencyArg::Weak => {
                    report::consistency(&dp, credal::consistency::check_weak_time_consistency(&dp)?)
                }
                ConsistencyArg::Dynamic => report::consistency(
                    &dp,
                    credal::consistency::falsify_dynamic_consistency(&dp, budget, seed)?,
                ),
            }
        }
        Command::Calibrate { file, rule, sharp } => {
            report::calibrate(&load(&file)?.credal()?, &rule, sharp)
        }
        Command::Oracle { file, grid } => report::oracle(&load(&file)?.problem()?, grid),
        Command::Corpus {
            action: CorpusAction::Run { dir },
        } => report::corpus(dir.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(report) => {
            print!("{}", report.text);
            if report.failed || (cli.strict && report.negative) {
                ExitCode::from(EXIT_NEGATIVE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
