use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use resetlab::env::{make_env, max_return, ENV_IDS};
use resetlab::harness::{
    run_sweep, run_to_dir, Experiment, RunConfig, RunLog, SweepGrid, LOG_FILE, META_FILE,
};
use resetlab::reset::{recommended_schedule, ResetSchedule};
use resetlab::rng::rng_from_seed;
use resetlab::stats::{
    aggregate_curves, emit_curve_plot, emit_interval_plot, stratified_bootstrap_ci, CurvePlotSeries,
    ScoreMatrix, Statistic,
};
use resetlab::{Error, Result};

/// Eval points averaged into a run's final score.
const FINAL_SCORE_WINDOW: usize = 5;

#[derive(Parser)]
#[command(name = "resetlab", about = "Desk-scale SAC with periodic resets: training, sweeps, and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value config file (dotted keys, e.g. sac.gamma=0.99).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Environment id (see `envs`).
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Replay ratio: gradient updates per env step.
    #[arg(long)]
    rr: Option<u32>,
    /// n-step TD horizon.
    #[arg(long)]
    nstep: Option<usize>,
    /// "on" applies the recommended reset schedule, "off" disables resets.
    #[arg(long)]
    resets: Option<String>,
    /// Total env steps (defaults to the task's desk-scale budget).
    #[arg(long)]
    steps: Option<u64>,
    /// Output directory for log.csv, run.meta, buffer.snap, agent.ckpt.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra key=value overrides applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Standard SAC training run.
    Train(RunArgs),
    /// Heavy-priming experiment: many updates on a tiny early buffer.
    Prime {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 100)]
        prime_after: usize,
        #[arg(long, default_value_t = 20_000)]
        prime_updates: u64,
    },
    /// Fresh agent initialized with a donor run's replay buffer.
    Transplant {
        #[command(flatten)]
        run: RunArgs,
        /// Donor run directory containing buffer.snap.
        #[arg(long)]
        donor: PathBuf,
    },
    /// Cross-product sweep over replay ratios, n-steps, resets, and seeds.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,9,32")]
        rr_grid: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        nstep_grid: Vec<usize>,
        /// Reset arms: on, off, or both.
        #[arg(long, default_value = "both")]
        resets_grid: String,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seeds: Vec<u64>,
        /// Parallel workers (defaults to the rayon global pool size).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the environment catalog.
    Envs,
    /// Aggregate final scores from run logs into a point estimate with a
    /// stratified bootstrap confidence interval.
    Aggregate {
        /// Run directories (with run.meta) or bare log.csv files.
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "iqm")]
        stat: String,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[arg(long, default_value_t = 2000)]
        resamples: u32,
        #[arg(long, default_value_t = 0)]
        bootstrap_seed: u64,
        /// Report scores as return / max_return.
        #[arg(long)]
        normalize: bool,
        /// Output CSV path (stdout too).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render learning curves (mean +/- std, reset markers) or aggregate
    /// interval plots as standalone SVG with a sidecar CSV.
    Plot {
        /// curves: run directories / log CSVs; intervals: aggregate CSVs.
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "curves")]
        kind: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
}

fn build_config(args: &RunArgs) -> Result<RunConfig> {
    // The env decides the desk-scale defaults, so resolve it first.
    let mut env_id = args.env.clone();
    if env_id.is_none() {
        if let Some(path) = &args.config {
            let text = std::fs::read_to_string(path)?;
            for line in text.lines() {
                if let Some((k, v)) = line.split_once('=') {
                    if matches!(k.trim(), "env_id" | "env") {
                        env_id = Some(v.trim().to_string());
                    }
                }
            }
        }
    }
    let mut config = RunConfig::desk_default(env_id.as_deref().unwrap_or("pendulum_dense"))?;
    if let Some(path) = &args.config {
        config.apply_config_file(path)?;
    }
    if let Some(env) = &args.env {
        config.apply_kv("env", env)?;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(rr) = args.rr {
        config.replay_ratio = rr;
    }
    if let Some(n) = args.nstep {
        config.n_step = n;
    }
    if let Some(steps) = args.steps {
        config.total_steps = steps;
    }
    for kv in &args.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        config.apply_kv(k.trim(), v.trim())?;
    }
    if let Some(mode) = &args.resets {
        config.schedule = match mode.as_str() {
            "on" => recommended_schedule(config.total_steps, config.sac.hidden_sizes.len() + 1),
            "off" => ResetSchedule::disabled(),
            other => return Err(Error::Config(format!("--resets expects on|off, got '{other}'"))),
        };
    }
    Ok(config)
}

fn out_dir_or_default(args: &RunArgs, kind: &str, config: &RunConfig) -> PathBuf {
    args.out.clone().unwrap_or_else(|| {
        PathBuf::from("runs").join(format!(
            "{kind}_{}_rr{}_n{}_seed{}",
            config.env_id, config.replay_ratio, config.n_step, config.seed
        ))
    })
}

fn finish_run(config: &RunConfig, dir: &Path) -> Result<()> {
    let out = run_to_dir(config, dir)?;
    let final_score = out.log.final_score(FINAL_SCORE_WINDOW);
    let best = out.log.best_eval();
    println!(
        "run complete: {} steps, {} updates, {} resets -> {}",
        config.total_steps,
        out.updates_done,
        out.log.reset_steps().len(),
        dir.display()
    );
    if let Some(s) = final_score {
        println!("final score (mean of last {FINAL_SCORE_WINDOW} evals): {s:.2}");
    }
    if let Some((step, v)) = best {
        println!("best eval return: {v:.2} at step {step}");
    }
    if let Some(reason) = &out.log.aborted {
        println!("run aborted early: {reason}");
    }
    for s in &out.log.skipped_resets {
        println!("reset at step {s} skipped (too close to run end)");
    }
    Ok(())
}

/// A labeled run: its log plus the task and seed recovered from run.meta.
struct LoadedRun {
    label: String,
    env_id: Option<String>,
    seed: Option<u64>,
    log: RunLog,
}

fn load_run(path: &Path) -> Result<LoadedRun> {
    let (dir, log_path) = if path.is_dir() {
        (Some(path), path.join(LOG_FILE))
    } else {
        (path.parent(), path.to_path_buf())
    };
    let log = RunLog::read_csv_file(&log_path)?;
    let mut env_id = None;
    let mut seed = None;
    if let Some(dir) = dir {
        let meta = dir.join(META_FILE);
        if meta.exists() {
            let text = std::fs::read_to_string(&meta)?;
            for line in text.lines() {
                if let Some((k, v)) = line.split_once('=') {
                    match k.trim() {
                        "env_id" => env_id = Some(v.trim().to_string()),
                        "seed" => seed = v.trim().parse().ok(),
                        _ => {}
                    }
                }
            }
        }
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(LoadedRun {
        label,
        env_id,
        seed,
        log,
    })
}

fn cmd_aggregate(
    inputs: &[PathBuf],
    stat: Statistic,
    confidence: f64,
    resamples: u32,
    bootstrap_seed: u64,
    normalize: bool,
    out: Option<&Path>,
) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::Config("no run logs given".into()));
    }
    // Group final scores by task.
    let mut by_task: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for input in inputs {
        let run = load_run(input)?;
        let task = run.env_id.clone().unwrap_or_else(|| "unknown".to_string());
        let mut score = run.log.final_score(FINAL_SCORE_WINDOW).ok_or_else(|| {
            Error::Config(format!("{} has no eval rows to score", input.display()))
        })?;
        if normalize {
            score /= max_return(&task)?;
        }
        by_task.entry(task).or_default().push(score);
    }
    let tasks: Vec<String> = by_task.keys().cloned().collect();
    let rows: Vec<Vec<f64>> = by_task.values().cloned().collect();
    let matrix = ScoreMatrix::new(tasks.clone(), rows)?;
    if matrix.is_degenerate() {
        eprintln!("warning: single task with a single seed; the interval collapses to the point");
    }
    let mut rng = rng_from_seed(bootstrap_seed);
    let result = stratified_bootstrap_ci(&matrix, stat, confidence, resamples, &mut rng)?;
    let csv = format!(
        "statistic,point,ci_low,ci_high,tasks,seeds\n{},{},{},{},{},{}\n",
        result.statistic,
        result.point,
        result.ci_low,
        result.ci_high,
        tasks.len(),
        matrix.total_scores()
    );
    print!("{csv}");
    if let Some(path) = out {
        std::fs::write(path, csv)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_plot_curves(inputs: &[PathBuf], title: &str, out: &Path) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::Config("no inputs to plot".into()));
    }
    // Group runs by (env, everything but the seed) so seeds aggregate into
    // one mean +/- std band per configuration.
    let mut groups: BTreeMap<String, Vec<LoadedRun>> = BTreeMap::new();
    for input in inputs {
        let run = load_run(input)?;
        let key = match (&run.env_id, run.seed) {
            (Some(env), Some(_)) => {
                // Strip the seed suffix convention ("..._seedN") if present.
                let base = run
                    .label
                    .rfind("_seed")
                    .map(|i| run.label[..i].to_string())
                    .unwrap_or_else(|| run.label.clone());
                format!("{env}:{base}")
            }
            _ => run.label.clone(),
        };
        groups.entry(key).or_default().push(run);
    }
    let mut series = Vec::new();
    for (label, runs) in &groups {
        let eval_series: Vec<_> = runs
            .iter()
            .map(|r| r.log.eval_series(&r.label))
            .collect();
        let table = aggregate_curves(&eval_series)?;
        series.push(CurvePlotSeries {
            label: label.clone(),
            table,
            reset_steps: runs[0].log.reset_steps(),
        });
    }
    emit_curve_plot(&series, title, out)?;
    println!("wrote {} and sidecar CSV", out.display());
    Ok(())
}

fn cmd_plot_intervals(inputs: &[PathBuf], title: &str, out: &Path) -> Result<()> {
    let mut entries = Vec::new();
    for input in inputs {
        let text = std::fs::read_to_string(input)?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if !header.starts_with("statistic,point,ci_low,ci_high") {
            return Err(Error::Format(format!(
                "{} is not an aggregate CSV",
                input.display()
            )));
        }
        let row = lines
            .next()
            .ok_or_else(|| Error::Format(format!("{} has no data row", input.display())))?;
        let parts: Vec<&str> = row.split(',').collect();
        if parts.len() < 4 {
            return Err(Error::Format(format!("{} has a short data row", input.display())));
        }
        let stat: Statistic = parts[0].parse()?;
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Format(format!("bad float '{s}'")))
        };
        let label = input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        entries.push((
            label,
            resetlab::stats::AggregateResult {
                statistic: stat,
                point: parse(parts[1])?,
                ci_low: parse(parts[2])?,
                ci_high: parse(parts[3])?,
                confidence: 0.95,
                resamples: 0,
                degenerate: false,
            },
        ));
    }
    emit_interval_plot(&entries, title, out)?;
    println!("wrote {} and sidecar CSV", out.display());
    Ok(())
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train(args) => {
            let config = build_config(&args)?;
            let dir = out_dir_or_default(&args, "train", &config);
            finish_run(&config, &dir)
        }
        Command::Prime {
            run,
            prime_after,
            prime_updates,
        } => {
            let mut config = build_config(&run)?;
            config.experiment = Experiment::HeavyPriming {
                prime_after,
                prime_updates,
            };
            let dir = out_dir_or_default(&run, "prime", &config);
            finish_run(&config, &dir)
        }
        Command::Transplant { run, donor } => {
            let mut config = build_config(&run)?;
            config.experiment = Experiment::BufferTransplant { donor_dir: donor };
            let dir = out_dir_or_default(&run, "transplant", &config);
            finish_run(&config, &dir)
        }
        Command::Sweep {
            run,
            rr_grid,
            nstep_grid,
            resets_grid,
            seeds,
            workers,
        } => {
            if let Some(w) = workers {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(w)
                    .build_global()
                    .map_err(|e| Error::Config(format!("rayon pool: {e}")))?;
            }
            let base = build_config(&run)?;
            let resets = match resets_grid.as_str() {
                "on" => vec![true],
                "off" => vec![false],
                "both" => vec![false, true],
                other => {
                    return Err(Error::Config(format!(
                        "--resets-grid expects on|off|both, got '{other}'"
                    )))
                }
            };
            let grid = SweepGrid {
                replay_ratios: rr_grid,
                n_steps: nstep_grid,
                resets,
                seeds,
            };
            let out_root = run
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("runs").join("sweep"));
            println!("sweep: {} runs -> {}", grid.len(), out_root.display());
            let results = run_sweep(&grid, &base, Some(&out_root))?;
            let mut failures = 0;
            for (key, outcome) in &results {
                match outcome {
                    Ok(log) => {
                        let score = log
                            .final_score(FINAL_SCORE_WINDOW)
                            .map_or("-".to_string(), |s| format!("{s:.2}"));
                        println!("{}: final {}", key.dir_name(), score);
                    }
                    Err(e) => {
                        failures += 1;
                        println!("{}: FAILED ({e})", key.dir_name());
                    }
                }
            }
            if failures > 0 {
                println!("{failures} of {} runs failed", results.len());
            }
            Ok(())
        }
        Command::Envs => {
            println!("{:<18} {:>7} {:>7} {:>11} {:>9} {:>10}", "id", "obs_dim", "act_dim", "episode_len", "dt", "max_return");
            for id in ENV_IDS {
                let spec = make_env(id)?.spec();
                println!(
                    "{:<18} {:>7} {:>7} {:>11} {:>9} {:>10}",
                    spec.id,
                    spec.obs_dim,
                    spec.act_dim,
                    spec.episode_len,
                    spec.dt,
                    max_return(id)?
                );
            }
            Ok(())
        }
        Command::Aggregate {
            inputs,
            stat,
            confidence,
            resamples,
            bootstrap_seed,
            normalize,
            out,
        } => cmd_aggregate(
            &inputs,
            stat.parse()?,
            confidence,
            resamples,
            bootstrap_seed,
            normalize,
            out.as_deref(),
        ),
        Command::Plot {
            inputs,
            kind,
            out,
            title,
        } => {
            let title = title.unwrap_or_else(|| kind.clone());
            match kind.as_str() {
                "curves" => cmd_plot_curves(&inputs, &title, &out),
                "intervals" => cmd_plot_intervals(&inputs, &title, &out),
                other => Err(Error::Config(format!("--kind expects curves|intervals, got '{other}'"))),
            }
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
