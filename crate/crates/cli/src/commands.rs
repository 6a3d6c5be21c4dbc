//! Command-line front end.

use std::ffi::OsString;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use prtail::pagerank::solve_directed;
use prtail::tail::{default_k_top, empirical_ccdf, integer_grid, ratio_bound_report};
use prtail::{Digraph, Graph, SeedStream};

use crate::config::{validate, ExperimentConfig, ExperimentKind, SolverMethod};
use crate::error::CliError;
use crate::run::{self, SeedLedger};

#[derive(Debug, Parser)]
#[command(name = "prtail", version, about = "PageRank versus degree experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Experiment config file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (or file for `pagerank`); overrides the config file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for replications and tree sampling.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a graph and write it as an edge list.
    Generate {
        kind: Option<ExperimentKind>,
    },
    /// Compute PageRank of an edge-list file.
    Pagerank {
        /// Edge-list file: `n m` header, then one `u v` pair per line.
        graph: PathBuf,
        #[arg(long)]
        directed: bool,
        #[arg(long, default_value_t = 0.85)]
        damping: f64,
        #[arg(long, value_enum, default_value_t = SolverMethod::Power)]
        method: SolverMethod,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Run a full experiment and write its artifacts and manifest.
    Experiment {
        kind: Option<ExperimentKind>,
    },
    /// Tail statistics of one numeric CSV column.
    Analyze {
        /// CSV file with a header row.
        input: PathBuf,
        #[arg(long, default_value = "pagerank")]
        column: String,
        /// Compare against this column with `P(X > k) / P(Y > beta k)`.
        #[arg(long)]
        against: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long)]
        hill_k_top: Option<usize>,
    },
    /// Check a config file without running it.
    Validate {
        kind: Option<ExperimentKind>,
    },
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(global: &GlobalArgs, kind: Option<ExperimentKind>) -> Result<ExperimentConfig, CliError> {
    let mut config = match (&global.config, kind) {
        (Some(path), _) => ExperimentConfig::from_path(path)?,
        (None, Some(k)) => ExperimentConfig::new(k),
        (None, None) => return Err(CliError::Validation(vec!["kind: give a kind or --config".into()])),
    };
    if let Some(k) = kind {
        match config.kind {
            Some(existing) if existing != k => {
                return Err(CliError::Validation(vec![format!(
                    "kind: config file is for {existing}, command asked for {k}"
                )]))
            }
            _ => config.kind = Some(k),
        }
    }
    if let Some(seed) = global.seed {
        config.seeds.master = seed;
    }
    if let Some(out) = &global.out {
        config.out = out.clone();
    }
    Ok(config)
}

fn print_validation(config: &ExperimentConfig) -> Result<(), CliError> {
    let report = validate(config);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if report.is_ok() {
        Ok(())
    } else {
        Err(CliError::Validation(report.violations))
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.global.threads {
        // Only the first call can configure the global pool; later calls keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match cli.command {
        Command::Generate { kind } => {
            let config = load_config(&cli.global, kind)?;
            print_validation(&config)?;
            let ledger = SeedLedger::default();
            let instance = run::generate(&config, SeedStream::new(config.seeds.master).index(0), &ledger, "")?;
            let path = config.out.join("graph.txt");
            run::write_file(&path, &instance.edge_list())?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Pagerank {
            graph,
            directed,
            damping,
            method,
            tol,
        } => {
            let mut config = ExperimentConfig::new(ExperimentKind::Cm);
            config.solver.damping = damping;
            config.solver.method = method;
            config.solver.tol = tol;
            let file = std::fs::File::open(&graph).map_err(|e| CliError::io(&graph, e))?;
            let reader = BufReader::new(file);
            let bytes = if directed {
                let d = Digraph::read_edge_list(reader)?;
                let pr = solve_directed(&d, run::damping(&config)?, &prtail::SolverOptions::with_tol(tol))?;
                let mut buf = Vec::new();
                pr.write_directed_csv(&d, &mut buf).expect("in-memory write");
                buf
            } else {
                let g = Graph::read_edge_list(reader)?;
                let pr = run::solve(&g, &config)?;
                let mut buf = Vec::new();
                pr.write_csv(&g, &mut buf).expect("in-memory write");
                buf
            };
            emit(cli.global.out.as_deref(), &bytes)
        }
        Command::Experiment { kind } => {
            let config = load_config(&cli.global, kind)?;
            print_validation(&config)?;
            let manifest = run::run(&config)?;
            for c in &manifest.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("manifest: {}", config.out.join("manifest.json").display());
            Ok(())
        }
        Command::Analyze {
            input,
            column,
            against,
            beta,
            hill_k_top,
        } => {
            let text = std::fs::read_to_string(&input).map_err(|e| CliError::io(&input, e))?;
            let values = read_column(&text, &column)?;
            let max = values.iter().copied().fold(0.0, f64::max).ceil() as usize;
            let grid = integer_grid(max);
            let k_top = hill_k_top.unwrap_or_else(|| default_k_top(values.len()));
            let mut report = empirical_ccdf(&values, &grid)?.with_hill(&values, &[k_top]);
            if let Some(other) = against {
                let denom = read_column(&text, &other)?;
                report = report.with_ratios(ratio_bound_report(&values, &denom, beta, &grid, 0.1)?);
            }
            let dir = cli.global.out.unwrap_or_else(|| PathBuf::from("."));
            let mut csv = Vec::new();
            report.write_csv(&mut csv).expect("in-memory write");
            run::write_file(&dir.join(format!("{column}_ccdf.csv")), &csv)?;
            run::write_file(&dir.join(format!("{column}_tail.json")), report.to_json().as_bytes())?;
            for h in &report.hill {
                println!("hill k_top={} estimate={:.4} se={:.4}", h.k_top, h.estimate, h.std_error);
            }
            Ok(())
        }
        Command::Validate { kind } => {
            let config = load_config(&cli.global, kind)?;
            print_validation(&config)?;
            println!("ok");
            Ok(())
        }
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => run::write_file(path, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

/// Extracts a numeric column from CSV text with a header row.
pub fn read_column(text: &str, column: &str) -> Result<Vec<f64>, CliError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::Validation(vec!["input: empty file".into()]))?;
    let idx = header
        .split(',')
        .position(|h| h.trim() == column)
        .ok_or_else(|| CliError::Validation(vec![format!("input: no column named {column:?}")]))?;
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.split(',')
                .nth(idx)
                .and_then(|f| f.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    CliError::Core(prtail::Error::Parse {
                        line: i + 2,
                        message: format!("missing or non-numeric {column:?} field"),
                    })
                })
        })
        .collect()
}
