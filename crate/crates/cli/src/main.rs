use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use meshcop_core::dump::{render_trace, replay};
use meshcop_core::harness::run_schedule;
use meshcop_core::queries::{counterexample_file, list_queries, render_report, run_suite, Format, Report};
use meshcop_core::{ExplorationConfig, Mode, Mutation, Scenario};

#[derive(Parser)]
#[command(name = "meshcop", about = "Symbolic analysis of Thread MeshCoP commissioning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explore a scenario and evaluate the query suite.
    Run(RunArgs),
    /// Print every registered query.
    ListQueries,
    /// Re-execute a dumped trace and check that it reproduces exactly.
    Replay { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Commissioner,
    Joiner,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Honest,
    Adversarial,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Structured,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "full")]
    scenario: ScenarioArg,
    #[arg(long, value_enum, default_value = "adversarial")]
    mode: ModeArg,
    /// Comma-separated protocol mutations.
    #[arg(long, value_delimiter = ',', value_parser = parse_mutation)]
    mutations: Vec<Mutation>,
    #[arg(long, default_value_t = 2)]
    sessions: usize,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Maximum attacker actions per run.
    #[arg(long, default_value_t = 3)]
    schedule: usize,
    /// Seeds for random walks; without --random they are recorded only.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Take seeded random walks instead of enumerating every schedule.
    #[arg(long, requires = "seeds")]
    random: bool,
    #[arg(long, default_value_t = 64)]
    walks: usize,
    /// Comma-separated query ids; all queries when absent.
    #[arg(long, value_delimiter = ',')]
    queries: Vec<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Directory for counterexample and witness trace files.
    #[arg(long)]
    dump_traces: Option<PathBuf>,
}

fn parse_mutation(s: &str) -> Result<Mutation, String> {
    s.parse()
}

impl RunArgs {
    fn config(&self) -> ExplorationConfig {
        ExplorationConfig {
            scenario: match self.scenario {
                ScenarioArg::Commissioner => Scenario::Commissioner,
                ScenarioArg::Joiner => Scenario::Joiner,
                ScenarioArg::Full => Scenario::Full,
            },
            mode: match self.mode {
                ModeArg::Honest => Mode::Honest,
                ModeArg::Adversarial => Mode::Adversarial,
            },
            mutations: self.mutations.iter().copied().collect(),
            sessions: self.sessions,
            depth_bound: self.depth,
            schedule_bound: self.schedule,
            seeds: self.seeds.clone(),
            systematic: !self.random,
            walks_per_seed: self.walks,
        }
    }
}

fn dump(cfg: &ExplorationConfig, report: &Report, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for row in &report.rows {
        let (Some(ev), Some(name)) = (&row.verdict.evidence, counterexample_file(row)) else { continue };
        let trace = run_schedule(cfg, &ev.world, &ev.schedule)?;
        let path = dir.join(name);
        fs::write(&path, render_trace(cfg, &trace)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run(args: &RunArgs) -> Result<ExitCode> {
    let cfg = args.config();
    let report = run_suite(&cfg, &args.queries)?;
    let format = match args.format {
        FormatArg::Text => Format::Text,
        FormatArg::Structured => Format::Structured,
    };
    let dir = args.dump_traces.as_ref().map(|d| d.display().to_string());
    print!("{}", render_report(&report, format, dir.as_deref()));
    if let Some(d) = &args.dump_traces {
        dump(&cfg, &report, d)?;
    }
    Ok(if report.mismatches() == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::ListQueries => {
            print!("{}", list_queries());
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay { file } => fs::read_to_string(file)
            .with_context(|| format!("reading {}", file.display()))
            .and_then(|text| Ok(replay(&text)?))
            .map(|r| {
                println!("world: {}", r.trace.world.id());
                println!("outcome: {}", r.trace.outcome);
                println!("steps: {}", r.trace.steps.len());
                if r.identical {
                    println!("replay: identical");
                    ExitCode::SUCCESS
                } else {
                    println!("replay: differs");
                    ExitCode::from(1)
                }
            }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}
