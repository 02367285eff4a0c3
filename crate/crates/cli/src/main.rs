//! `spdnn`: simulate, train, tune, replicate and report from the command line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use spdnn_core::dgp::simulate_with;
use spdnn_core::harness::grid::{design, write_grid_table};
use spdnn_core::harness::report::read_results;
use spdnn_core::harness::{
    grid_search, replicate, write_report, ExperimentConfig, ReplicationConfig,
};
use spdnn_core::optim::train;
use spdnn_core::penalty::{effective_l0, PenaltyParams, EFFECTIVE_SPARSITY_TOL};
use spdnn_core::seeds::{stream_seed, StreamTag};
use spdnn_core::theory::{rate_curve, RateTask, ScheduleExponents};
use spdnn_core::{SimulationConfig, Trajectory};

#[derive(Parser)]
#[command(name = "spdnn", version, about = "Sparse-penalized DNN estimation for time series")]
struct Cli {
    /// Key/value experiment file; command-line flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a trajectory and write it as CSV.
    Simulate {
        #[arg(long)]
        dgp: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        sim: SimFlags,
    },
    /// Fit one network with a fixed (lambda, tau) to a trajectory CSV.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output network file.
        #[arg(long, default_value = "network.txt")]
        out: PathBuf,
        /// Output per-epoch history CSV.
        #[arg(long, default_value = "history.csv")]
        history: PathBuf,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Grid-search (lambda, tau) on fresh train/validation trajectories.
    Tune {
        #[arg(long)]
        dgp: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "tune-out")]
        out_dir: PathBuf,
        #[command(flatten)]
        model: ModelFlags,
        #[command(flatten)]
        grid: GridFlags,
        #[command(flatten)]
        sim: SimFlags,
    },
    /// Monte-Carlo comparison of SPDNN and NPDNN; writes tables and boxplots.
    Replicate {
        /// One or more processes, comma separated.
        #[arg(long, value_delimiter = ',')]
        dgp: Vec<String>,
        /// One or more training sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        base_seed: Option<u64>,
        #[arg(long, default_value = "replicate-out")]
        out_dir: PathBuf,
        #[arg(long)]
        test_size: Option<usize>,
        /// Report test MSE against the targets instead of the L2 distance to the true mean.
        #[arg(long)]
        vs_targets: bool,
        #[command(flatten)]
        model: ModelFlags,
        #[command(flatten)]
        grid: GridFlags,
        #[command(flatten)]
        sim: SimFlags,
    },
    /// Print the convergence-rate bound as a two-column table `n,bound`.
    Rates {
        #[arg(long, default_value = "regression")]
        task: String,
        #[arg(long, default_value_t = 1e6)]
        n_max: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long)]
        nu4: Option<f64>,
        #[arg(long)]
        nu6: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild the summary table and boxplots from a results CSV.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "report-out")]
        out_dir: PathBuf,
    },
}

#[derive(Args, Default)]
struct ModelFlags {
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Number of lagged responses fed to the network.
    #[arg(long)]
    input_lags: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    /// `training_loss` or `penalized_objective`.
    #[arg(long)]
    monitor: Option<String>,
}

#[derive(Args, Default)]
struct GridFlags {
    #[arg(long, value_delimiter = ',')]
    grid_i: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    grid_j: Option<Vec<u32>>,
}

#[derive(Args, Default)]
struct SimFlags {
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    exog_phi: Option<f64>,
}

impl ModelFlags {
    fn write_into(&self, cfg: &mut ExperimentConfig) {
        cfg.hidden_widths = self.hidden.clone();
        cfg.input_lags = self.input_lags;
        cfg.learning_rate = self.learning_rate;
        cfg.batch_size = self.batch_size;
        cfg.patience = self.patience;
        cfg.max_epochs = self.max_epochs;
        cfg.monitor = self.monitor.clone();
    }
}

impl GridFlags {
    fn write_into(&self, cfg: &mut ExperimentConfig) {
        cfg.grid_i = self.grid_i.clone();
        cfg.grid_j = self.grid_j.clone();
    }
}

impl SimFlags {
    fn write_into(&self, cfg: &mut ExperimentConfig) {
        cfg.burn_in = self.burn_in;
        cfg.exog_phi = self.exog_phi;
    }
}

fn file_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

/// File config overlaid with the flags; `dgp` and `n` come from whichever sets them.
fn merged(file: &ExperimentConfig, flags: &ExperimentConfig) -> ExperimentConfig {
    let mut cfg = file.clone();
    cfg.overlay(flags);
    cfg
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn run(cli: Cli) -> Result<()> {
    let file = file_config(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate {
            dgp,
            n,
            seed,
            out,
            sim,
        } => {
            let mut flags = ExperimentConfig {
                dgp,
                n,
                ..Default::default()
            };
            sim.write_into(&mut flags);
            let cfg = merged(&file, &flags);
            let kind = cfg.dgp_kind()?.context("--dgp is required")?;
            let n = cfg.n.context("--n is required")?;
            let defaults = SimulationConfig::default();
            let sim_cfg = SimulationConfig {
                burn_in: cfg.burn_in.unwrap_or(defaults.burn_in),
                exog_phi: cfg.exog_phi.unwrap_or(defaults.exog_phi),
                ..defaults
            };
            let traj = simulate_with(kind, n, seed, &sim_cfg)?;
            traj.write_csv(create(&out)?)?;
            log::info!("wrote {n} rows of {kind} to {}", out.display());
        }
        Command::Train {
            data,
            lambda,
            tau,
            seed,
            out,
            history,
            model,
        } => {
            let traj = Trajectory::load(&data).with_context(|| format!("reading {}", data.display()))?;
            let mut flags = ExperimentConfig {
                dgp: Some(traj.kind().to_string()),
                n: Some(traj.len().max(2)),
                ..Default::default()
            };
            model.write_into(&mut flags);
            let cfg = merged(&file, &flags);
            let mut rc = ReplicationConfig::new(traj.kind(), traj.len().max(2), 1, seed);
            cfg.apply(&mut rc)?;
            let arch = rc.architecture()?;
            let train_cfg = rc.train_config(seed, PenaltyParams::new(lambda, tau)?);
            let (net, hist) = train(&design(&traj, &arch)?, &train_cfg, &arch)?;
            net.save(&out)?;
            hist.write_csv(create(&history)?)?;
            let best = hist.best_record();
            println!(
                "epochs={} best_epoch={} train_loss={} penalty={} sparsity={}",
                hist.epochs(),
                hist.best_epoch,
                best.train_loss,
                best.penalty_value,
                effective_l0(net.flatten(), EFFECTIVE_SPARSITY_TOL)
            );
        }
        Command::Tune {
            dgp,
            n,
            seed,
            out_dir,
            model,
            grid,
            sim,
        } => {
            let mut flags = ExperimentConfig {
                dgp,
                n,
                ..Default::default()
            };
            model.write_into(&mut flags);
            grid.write_into(&mut flags);
            sim.write_into(&mut flags);
            let rc = merged(&file, &flags).to_replication_config()?;
            let sim_traj = |tag| simulate_with(rc.dgp, rc.n, stream_seed(seed, tag), &rc.simulation);
            let (train_traj, valid_traj) = (sim_traj(StreamTag::Train)?, sim_traj(StreamTag::Valid)?);
            let arch = rc.architecture()?;
            let outcome = grid_search(
                &train_traj,
                &valid_traj,
                &rc.grid()?,
                &rc.train_config(seed, PenaltyParams::none()),
                &arch,
            )?;
            std::fs::create_dir_all(&out_dir)?;
            write_grid_table(&outcome.table, create(&out_dir.join("grid.csv"))?)?;
            outcome.best_net.save(out_dir.join("best_network.txt"))?;
            outcome
                .best_history
                .write_csv(create(&out_dir.join("best_history.csv"))?)?;
            let row = outcome.best_row();
            println!(
                "best i={} j={} lambda={} tau={} validation_loss={} sparsity={}",
                row.point.i, row.point.j, row.lambda, row.tau, row.score, row.sparsity
            );
        }
        Command::Replicate {
            dgp,
            n,
            reps,
            base_seed,
            out_dir,
            test_size,
            vs_targets,
            model,
            grid,
            sim,
        } => {
            let mut flags = ExperimentConfig {
                reps,
                base_seed,
                test_size,
                metric: vs_targets.then(|| "targets".to_string()),
                ..Default::default()
            };
            model.write_into(&mut flags);
            grid.write_into(&mut flags);
            sim.write_into(&mut flags);
            let base = merged(&file, &flags);
            let dgps: Vec<Option<String>> = if dgp.is_empty() {
                vec![base.dgp.clone()]
            } else {
                dgp.into_iter().map(Some).collect()
            };
            let ns: Vec<Option<usize>> = if n.is_empty() {
                vec![base.n]
            } else {
                n.into_iter().map(Some).collect()
            };
            let mut results = Vec::new();
            for d in &dgps {
                for &size in &ns {
                    let mut cfg = base.clone();
                    cfg.dgp = d.clone();
                    cfg.n = size;
                    let rc = cfg.to_replication_config()?;
                    log::info!("{} n={} reps={}", rc.dgp, rc.n, rc.reps);
                    results.extend(replicate(&rc)?);
                }
            }
            for path in write_report(&results, &out_dir)? {
                println!("{}", path.display());
            }
        }
        Command::Rates {
            task,
            n_max,
            points,
            nu4,
            nu6,
            kappa,
            out,
        } => {
            let task: RateTask = task.parse()?;
            let mut exp = ScheduleExponents::default();
            exp.nu4 = nu4.unwrap_or(exp.nu4);
            exp.nu6 = nu6.unwrap_or(exp.nu6);
            exp.kappa = kappa.unwrap_or(exp.kappa);
            let curve = rate_curve(task, &exp, n_max, points)?;
            let mut w: Box<dyn Write> = match &out {
                Some(p) => Box::new(create(p)?),
                None => Box::new(io::stdout().lock()),
            };
            writeln!(w, "n,bound")?;
            for (n, b) in curve {
                writeln!(w, "{n},{b}")?;
            }
            w.flush()?;
        }
        Command::Report { input, out_dir } => {
            let results = read_results(
                File::open(&input).with_context(|| format!("opening {}", input.display()))?,
            )?;
            if results.iter().any(|r| !r.error.is_finite()) {
                bail!("results table contains non-finite errors");
            }
            for path in write_report(&results, &out_dir)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
