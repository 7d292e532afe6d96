use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spde_lab::config::RunConfig;
use spde_lab::runner::{self, RunOptions};

#[derive(Parser)]
#[command(name = "spde-lab", version, about = "Heat vs Allen-Cahn SPDE experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an ensemble and write terminal-slice summaries.
    Simulate(RunArgs),
    /// Reweight a heat ensemble and compare against direct target runs.
    TransferCheck(RunArgs),
    /// Epsilon-support profiles across a list of gamma values.
    SupportScan(RunArgs),
    /// Weighted KS test between two stored summaries.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Serial execution; outputs are byte-identical across runs.
    #[arg(long)]
    deterministic: bool,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    allow_unstable_grid: bool,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    /// Value column to compare; a `weight` column is used when present.
    #[arg(long, default_value = "u_obs")]
    column: String,
    #[arg(long, default_value_t = 1000)]
    permutations: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Accepted for symmetry with the other subcommands.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    deterministic: bool,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> spde_lab::Result<(RunConfig, RunOptions)> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load_unvalidated(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        cfg.allow_unstable |= self.allow_unstable_grid;
        cfg.validate()?;
        let opts = RunOptions {
            workers: self.workers,
            deterministic: self.deterministic,
        };
        Ok((cfg, opts))
    }
}

fn run(cli: Cli) -> spde_lab::Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let (cfg, opts) = args.resolve()?;
            let out = runner::run_simulate(&cfg, &opts)?;
            println!(
                "simulate: {} paths, {} files in {}",
                out.summaries.len(),
                out.files.len(),
                cfg.out_dir.display()
            );
        }
        Command::TransferCheck(args) => {
            let (cfg, opts) = args.resolve()?;
            let report = runner::run_transfer_check(&cfg, &opts)?;
            println!("n\tsurv_heat\tsurv_direct\tnorm_z\tf_reweighted\tf_direct\tf_z\tks_p\tess");
            for l in &report.levels {
                println!(
                    "{}\t{:.4}\t{:.4}\t{:.2}\t{:.4}\t{:.4}\t{:.2}\t{}\t{:.1}",
                    l.n,
                    l.heat_survival,
                    l.direct_survival,
                    l.normalization.z,
                    l.functional.reweighted,
                    l.functional.direct,
                    l.functional.z,
                    l.ks.map_or("-".into(), |k| format!("{:.3}", k.p_value)),
                    l.ess
                );
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::SupportScan(args) => {
            let (cfg, opts) = args.resolve()?;
            let report = runner::run_support_scan(&cfg, &opts)?;
            println!("gamma\tmedian_width\tcontained\ttouched");
            for g in &report.gammas {
                println!(
                    "{}\t{:.4}\t{:.3}\t{:.3}",
                    g.gamma, g.median_width, g.containment_rate, g.touched_fraction
                );
            }
            for c in &report.comparisons {
                println!(
                    "gamma {} < {}: width sign p = {:.3e}, containment sign p = {:.3e}",
                    c.gamma_low, c.gamma_high, c.width.p_value, c.containment.p_value
                );
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Compare(args) => {
            if let Some(n) = args.workers {
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
            }
            let _ = args.deterministic;
            let record = runner::run_compare(&args.a, &args.b, &args.column, args.permutations, args.seed)?;
            let text = serde_json::to_string_pretty(&record)? + "\n";
            if let Some(dir) = &args.out {
                let path = dir.join("compare.json");
                std::fs::create_dir_all(dir)
                    .and_then(|_| std::fs::write(&path, &text))
                    .map_err(|e| spde_lab::Error::Io { path: path.clone(), source: e })?;
            }
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
