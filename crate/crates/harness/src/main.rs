use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use reprl::lower::{mdp_from_rademacher, read_means};
use reprl::mdp::{combination_lock, random_mdp, write_mdp, RandomMdpSpec};
use reprl::SharedSeed;
use reprl_harness::report::{write_outputs, Summary};
use reprl_harness::run::{agreement, run_paired, run_single, sweep, RunOptions};
use reprl_harness::verify::{run_suite, SUITES};
use reprl_harness::{ExperimentConfig, SweepConfig};

#[derive(Parser)]
#[command(name = "reprl", version, about = "Replicability and optimality experiments on tabular MDPs")]
struct Cli {
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Directory for results.csv and summary.json.
    #[arg(short, long, default_value = "results")]
    out: PathBuf,
    /// Record wall time per run (outputs stop being reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Independent trials of one config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Paired trials sharing internal randomness; reports agreement.
    Paired {
        config: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Cartesian grid over a base config.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Writes a generated MDP in the JSON file format.
    MakeMdp {
        #[arg(value_enum)]
        kind: Generator,
        #[arg(long, default_value_t = 3)]
        states: usize,
        #[arg(long, default_value_t = 2)]
        actions: usize,
        #[arg(long, default_value_t = 2)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Newline-delimited means (rademacher-reduction).
        #[arg(long)]
        means: Option<PathBuf>,
        /// Keep raw rewards in [-2, 1] (rademacher-reduction).
        #[arg(long)]
        raw: bool,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Runs invariant suites.
    Verify {
        /// Suites to run; all when omitted.
        suites: Vec<String>,
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Random,
    CombinationLock,
    RademacherReduction,
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn report(summary: &Summary) {
    let mut line = format!("{} {}: {} runs", summary.config_hash, summary.name, summary.runs);
    if let Some(r) = summary.success_rate {
        line += &format!(", success {r:.3}");
    }
    if let Some(g) = summary.mean_gap {
        line += &format!(", mean gap {g:.4}");
    }
    if let (Some(a), Some(lo), Some(hi)) = (summary.agreement_rate, summary.agreement_low, summary.agreement_high) {
        line += &format!(", agreement {a:.3} [{lo:.3}, {hi:.3}]");
    }
    if let Some(e) = &summary.error {
        line += &format!(", error: {e}");
    }
    eprintln!("{line}");
}

fn execute(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Run { config, output } => {
            let cfg = ExperimentConfig::load(&config)?;
            let records = run_single(&cfg, &base_dir(&config), RunOptions { timing: output.timing })?;
            let summary = Summary::from_records(&cfg, false, &records);
            write_outputs(&output.out, &records, std::slice::from_ref(&summary))?;
            report(&summary);
            Ok(true)
        }
        Command::Paired { config, output } => {
            let cfg = ExperimentConfig::load(&config)?;
            let records = run_paired(&cfg, &base_dir(&config), RunOptions { timing: output.timing })?;
            let summary = Summary::from_records(&cfg, true, &records);
            debug_assert_eq!(Some(agreement(&records).1), summary.pairs);
            write_outputs(&output.out, &records, std::slice::from_ref(&summary))?;
            report(&summary);
            Ok(true)
        }
        Command::Sweep { config, output } => {
            let grid = SweepConfig::load(&config)?;
            let cells = sweep(&grid, &base_dir(&config), RunOptions { timing: output.timing });
            let records: Vec<_> = cells.iter().flat_map(|c| c.records.iter().cloned()).collect();
            let summaries: Vec<_> = cells.iter().map(|c| c.summary.clone()).collect();
            write_outputs(&output.out, &records, &summaries)?;
            summaries.iter().for_each(report);
            Ok(summaries.iter().all(|s| s.error.is_none()))
        }
        Command::MakeMdp { kind, states, actions, horizon, seed, means, raw, out } => {
            let mut rng = SharedSeed::new(seed).child("mdp").stream();
            let mdp = match kind {
                Generator::Random => random_mdp(&RandomMdpSpec::new(states, actions, horizon), &mut rng),
                Generator::CombinationLock => combination_lock(states, actions, horizon, &mut rng),
                Generator::RademacherReduction => {
                    let path = means.context("rademacher-reduction needs --means")?;
                    let f = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
                    let p = read_means(io::BufReader::new(f))?;
                    mdp_from_rademacher(&p, states, actions, horizon, !raw)?
                }
            };
            match out {
                Some(path) => {
                    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    write_mdp(&mdp, BufWriter::new(f))?;
                }
                None => {
                    let mut stdout = io::stdout().lock();
                    write_mdp(&mdp, &mut stdout)?;
                    writeln!(stdout)?;
                }
            }
            Ok(true)
        }
        Command::Verify { suites, instances, seed } => {
            let names: Vec<String> = if suites.is_empty() { SUITES.iter().map(|s| s.to_string()).collect() } else { suites };
            let mut all = true;
            for name in names {
                let r = run_suite(&name, instances, seed)?;
                println!("{} {} ({} instances): {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.checked, r.detail);
                all &= r.passed;
            }
            Ok(all)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
