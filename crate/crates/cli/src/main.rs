use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use veb_core::pipeline::{self, ExperimentConfig, Method, SweepKind, SweepTable};
use veb_core::selection::MetricKind;

/// Learn opponent policy trees from an interaction history and evaluate
/// best responses against them.
#[derive(Parser)]
#[command(name = "veb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Methods to compare (overrides the config).
    #[arg(long = "method", num_args = 1..)]
    methods: Vec<String>,
    /// Top-K size (overrides the config).
    #[arg(long)]
    k: Option<usize>,
    /// Selection metric (overrides the config).
    #[arg(long)]
    metric: Option<MetricArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Mdf,
    Icd,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepArg {
    /// K against the MDF and ICD of the selected set.
    KRange,
    /// Normalized metric against mean reward.
    MetricVsReward,
}

#[derive(Subcommand)]
enum Command {
    /// Record an interaction history from the generator policy.
    Simulate(Common),
    /// Rebuild incomplete policy trees from the history.
    Reconstruct(Common),
    /// Train the VAE variants the configured methods need.
    Train(Common),
    /// Generate trees from the trained networks.
    Generate(Common),
    /// Pick each method's tree set.
    Select(Common),
    /// Solve best responses and score them against the true opponent.
    Evaluate(Common),
    /// Run every stage end to end.
    Run(Common),
    /// Sweep K and write a table.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "k-range")]
        kind: SweepArg,
        /// First K of the range.
        #[arg(long, default_value_t = 1)]
        from: usize,
        /// Last K of the range (defaults to the configured K).
        #[arg(long)]
        to: Option<usize>,
    },
    /// Print the default configuration as TOML.
    DefaultConfig,
}

fn resolve(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &c.out {
        cfg.out_dir = out.clone();
    }
    if !c.methods.is_empty() {
        cfg.methods = c
            .methods
            .iter()
            .map(|m| m.parse::<Method>())
            .collect::<veb_core::Result<_>>()?;
    }
    if let Some(k) = c.k {
        cfg.k = k;
    }
    if let Some(m) = c.metric {
        cfg.metric = match m {
            MetricArg::Mdf => MetricKind::Mdf,
            MetricArg::Icd => MetricKind::Icd,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_report(report: &pipeline::Report) {
    println!("method,K,metric,mean_reward,stderr");
    for r in &report.rows {
        println!("{},{},{},{:.4},{:.4}", r.method, r.k, r.metric, r.mean_reward, r.stderr);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = resolve(&c)?;
            let h = pipeline::cmd_simulate(&cfg)?;
            println!("wrote {} steps to {}", h.len(), cfg.out_dir.display());
        }
        Command::Reconstruct(c) => {
            let cfg = resolve(&c)?;
            let trees = pipeline::cmd_reconstruct(&cfg)?;
            let incomplete = trees.iter().filter(|t| !t.is_complete()).count();
            println!("reconstructed {} trees ({incomplete} incomplete)", trees.len());
        }
        Command::Train(c) => {
            let cfg = resolve(&c)?;
            for t in pipeline::cmd_train(&cfg)? {
                println!(
                    "trained {:?} network: {} epochs, final loss {:.6}",
                    t.config.weighting,
                    t.epochs(),
                    t.final_loss()
                );
            }
        }
        Command::Generate(c) => {
            let cfg = resolve(&c)?;
            for trees in pipeline::cmd_generate(&cfg)? {
                let incomplete = trees.iter().filter(|t| !t.is_complete()).count();
                println!("generated {} trees ({incomplete} incomplete)", trees.len());
            }
        }
        Command::Select(c) => {
            let cfg = resolve(&c)?;
            for s in pipeline::cmd_select(&cfg)? {
                println!("{}: {} trees, {} EMPTY nodes filled", s.method, s.trees.len(), s.filled_nodes);
            }
        }
        Command::Evaluate(c) => {
            let cfg = resolve(&c)?;
            print_report(&pipeline::cmd_evaluate(&cfg)?);
        }
        Command::Run(c) => {
            let cfg = resolve(&c)?;
            let summary = pipeline::cmd_run(&cfg)?;
            for s in summary.selections.iter().filter(|s| s.filled_nodes > 0) {
                eprintln!("note: {} filled {} EMPTY nodes with the fallback action", s.method, s.filled_nodes);
            }
            print_report(&summary.report);
        }
        Command::Sweep { common, kind, from, to } => {
            let cfg = resolve(&common)?;
            let kind = match kind {
                SweepArg::KRange => SweepKind::KRange,
                SweepArg::MetricVsReward => SweepKind::MetricVsReward,
            };
            match pipeline::cmd_sweep(&cfg, kind, from, to.unwrap_or(cfg.k))? {
                SweepTable::K(rows) => {
                    println!("k,selector,mdf,icd");
                    for r in rows {
                        println!("{},{},{:.4},{:.4}", r.k, r.selector, r.mdf, r.icd);
                    }
                }
                SweepTable::Reward(rows) => {
                    println!("selector,k,metric,d_bar,mean_reward,stderr");
                    for r in rows {
                        println!(
                            "{},{},{:.4},{:.4},{:.4},{:.4}",
                            r.selector, r.k, r.metric, r.d_bar, r.mean_reward, r.stderr
                        );
                    }
                }
            }
        }
        Command::DefaultConfig => {
            print!("{}", ExperimentConfig::default().to_toml());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()).context("veb failed") {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
