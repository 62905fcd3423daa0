use std::path::PathBuf;
use std::process::ExitCode;

use aisdd_cli::{analyze_dir, output_root, parse_value, run_experiment, RunConfig};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aisdd", version, about = "Run stochastic dual descent experiments")]
struct Cli {
    /// Worker threads for runs and Monte Carlo estimates.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    config: PathBuf,
    /// Replace the configured seed list with this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; overrides AISDD_OUT_DIR and output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Validate and print the resolved configuration without running.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every variant and seed of a configuration.
    Run(RunArgs),
    /// Run a configuration crossed with alternative values of some keys.
    Sweep {
        #[command(flatten)]
        args: RunArgs,
        /// `section.key=v1,v2,...`; repeat to cross several keys.
        #[arg(long, required = true)]
        vary: Vec<String>,
    },
    /// Rebuild plot tables and a summary from an experiment directory.
    Analyze { dir: PathBuf },
    /// Check a configuration and print it with defaults filled in.
    Validate { config: PathBuf },
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<RunConfig> {
    let config = RunConfig::from_path(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    Ok(match seed {
        Some(s) => config.with_seed(s),
        None => config,
    })
}

fn split_vary(spec: &str) -> Result<(&str, Vec<toml::Value>)> {
    let (key, values) = spec.split_once('=').with_context(|| format!("--vary {spec}: expected key=v1,v2,..."))?;
    let values: Vec<toml::Value> = values.split(',').filter(|v| !v.trim().is_empty()).map(parse_value).collect();
    if values.is_empty() {
        bail!("--vary {spec}: no values");
    }
    Ok((key.trim(), values))
}

fn execute(config: RunConfig, args: &RunArgs) -> Result<ExitCode> {
    if args.dry_run {
        print!("{}", config.emit());
        println!("# config_hash={}", config.hash());
        return Ok(ExitCode::SUCCESS);
    }
    let root = output_root(&config, args.out.as_deref());
    let report = run_experiment(&config, &root)?;
    for v in &report.variants {
        let mut line = format!(
            "{:<24} engine={:<12} running objective {:.6} ± {:.6}",
            v.label, v.engine, v.final_running_objective.mean, v.final_running_objective.ci95
        );
        if let Some(g) = &v.final_dual_gap {
            line += &format!("  dual gap {:.3e} ± {:.1e}", g.mean, g.ci95);
        }
        if let Some(p) = &v.avg_power {
            line += &format!("  power {:.4} ± {:.4}", p.mean, p.ci95);
        }
        println!("{line}");
    }
    for a in &report.assertions {
        println!(
            "{} {} [{}]: {} (threshold {})",
            if a.passed { "PASS" } else { "FAIL" },
            a.name,
            a.variant,
            a.value,
            a.threshold
        );
    }
    println!("artifacts: {}", root.join(&config.name).display());
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = (|| -> Result<ExitCode> {
        if let Some(n) = cli.threads {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
        match &cli.command {
            Command::Run(args) => execute(load(&args.config, args.seed)?, args),
            Command::Sweep { args, vary } => {
                let mut config = load(&args.config, args.seed)?;
                for spec in vary {
                    let (key, values) = split_vary(spec)?;
                    config = config.vary(key, &values).map_err(|e| anyhow::anyhow!("{e}"))?;
                }
                execute(config, args)
            }
            Command::Analyze { dir } => {
                let a = analyze_dir(dir)?;
                for v in &a.variants {
                    println!(
                        "{:<24} runs={} T={} running objective {:.6} ± {:.6}",
                        v.variant, v.runs, v.horizon, v.final_running_objective.mean, v.final_running_objective.ci95
                    );
                }
                Ok(ExitCode::SUCCESS)
            }
            Command::Validate { config } => {
                let c = load(config, None)?;
                print!("{}", c.emit());
                println!("# config_hash={}", c.hash());
                Ok(ExitCode::SUCCESS)
            }
        }
    })();
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
