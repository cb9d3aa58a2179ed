//! Subcommand bodies. Each run directory ends up with the resolved config,
//! the epoch log, a summary CSV and a checkpoint, or with a `FAILED` marker
//! holding the error line.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::panic::AssertUnwindSafe;
use std::path::{Path, PathBuf};

use log::{debug, info, warn};
use rmgd_core::bandit::default_beta;
use rmgd_core::data::Dataset;
use rmgd_core::regret::{run_bandit_with_floor, write_regret_csv, CostEnvironment};
use rmgd_core::trainer::{
    plan_grid, read_jsonl, run_grid_search, write_summary_csv, Beta, Checkpoint, JsonlWriter, Run, RunMode, RunSummary,
    SummaryRow,
};
use rmgd_core::EpochRecord;
use serde::Serialize;

use crate::args::{Cli, Command, RegretArgs, TraceArgs, TrainArgs};
use crate::config::{parse_config, ExperimentConfig};
use crate::error::{CliError, Result};

pub const RESOLVED_CONFIG: &str = "config.resolved.json";
pub const EPOCH_LOG: &str = "epochs.jsonl";
pub const SUMMARY: &str = "summary.csv";
pub const CHECKPOINT: &str = "checkpoint.json";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const FAILED: &str = "FAILED";

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Rmgd(args) => {
            let (cfg, data) = prepare(&args, None)?;
            let summary = train(&cfg, &data, RunMode::Rmgd, args.resume.as_deref())?;
            print_json(&summary)
        }
        Command::Mgd {
            train: args,
            batch_size,
        } => {
            let (cfg, data) = prepare(&args, batch_size)?;
            let mode = RunMode::Mgd {
                batch_size: cfg.mgd_batch_size()?,
            };
            let summary = train(&cfg, &data, mode, args.resume.as_deref())?;
            print_json(&summary)
        }
        Command::Grid {
            train: args,
            parallel,
            dry_run,
        } => {
            if args.resume.is_some() {
                return Err(CliError::Usage("grid does not support --resume".into()));
            }
            let (cfg, data) = prepare(&args, None)?;
            grid(&cfg, &data, usize::from(parallel), dry_run)
        }
        Command::Regret(args) => regret(&args),
        Command::EmitTrace(args) => emit_trace(&args),
    }
}

/// Parses the config, applies flags, builds the dataset and resolves.
pub fn prepare(args: &TrainArgs, batch_size: Option<usize>) -> Result<(ExperimentConfig, Dataset)> {
    let mut cfg = parse_config(&args.config)?;
    let mut overrides = args.overrides();
    overrides.batch_size = batch_size;
    cfg.apply(&overrides)?;
    let data = cfg.load_dataset()?;
    let cfg = cfg.resolve(&data)?;
    Ok((cfg, data))
}

/// Runs `body` with `dir` as the run directory. A failure, including a
/// panic, leaves a `FAILED` marker holding the error line.
fn in_run_dir<T>(dir: &Path, body: impl FnOnce() -> Result<T>) -> Result<T> {
    fs::create_dir_all(dir).map_err(|e| CliError::file(dir, e))?;
    let marker = dir.join(FAILED);
    if marker.exists() {
        fs::remove_file(&marker).map_err(|e| CliError::file(&marker, e))?;
    }
    let result = std::panic::catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(CliError::Panic(msg))
    });
    if let Err(e) = &result {
        if let Err(io) = fs::write(&marker, format!("{}\n", e.to_json_line())) {
            warn!("could not write {}: {io}", marker.display());
        }
    }
    result
}

/// Writes through a temporary file so readers never see half a document.
fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    let bytes = serde_json::to_vec_pretty(value).map_err(rmgd_core::Error::from)?;
    fs::write(&tmp, bytes).map_err(|e| CliError::file(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::file(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::file(path, e))
}

fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut out = create(path)?;
    write_summary_csv(rows, &mut out)?;
    out.flush().map_err(|e| CliError::file(path, e))
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string(value).map_err(rmgd_core::Error::from)?);
    Ok(())
}

/// Keeps the first `epochs` lines of an existing log, byte for byte, and
/// returns them parsed.
fn truncate_log(path: &Path, epochs: usize) -> Result<Vec<EpochRecord>> {
    if !path.exists() {
        if epochs > 0 {
            warn!(
                "{} is missing; the resumed log starts at epoch {epochs}",
                path.display()
            );
        }
        File::create(path).map_err(|e| CliError::file(path, e))?;
        return Ok(Vec::new());
    }
    let file = File::open(path).map_err(|e| CliError::file(path, e))?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| CliError::file(path, e))?;
    let kept: Vec<&String> = lines.iter().filter(|l| !l.trim().is_empty()).take(epochs).collect();
    if kept.len() < epochs {
        return Err(CliError::Usage(format!(
            "{} has {} records but the checkpoint is after epoch {epochs}",
            path.display(),
            kept.len()
        )));
    }
    let text: String = kept.iter().map(|l| format!("{l}\n")).collect();
    let records = read_jsonl(text.as_bytes())?;
    if let Some((i, r)) = records.iter().enumerate().find(|(i, r)| r.epoch != *i) {
        return Err(CliError::Usage(format!(
            "{} line {} holds epoch {}, expected {i}",
            path.display(),
            i + 1,
            r.epoch
        )));
    }
    fs::write(path, text).map_err(|e| CliError::file(path, e))?;
    Ok(records)
}

fn train(cfg: &ExperimentConfig, data: &Dataset, mode: RunMode, resume: Option<&Path>) -> Result<RunSummary> {
    let dir = cfg.output_dir.clone();
    in_run_dir(&dir, || {
        write_json(&dir.join(RESOLVED_CONFIG), cfg)?;
        let run_cfg = cfg.run_config()?;
        let log_path = dir.join(EPOCH_LOG);

        let (mut run, mut records) = match resume {
            None => {
                File::create(&log_path).map_err(|e| CliError::file(&log_path, e))?;
                let run = match mode {
                    RunMode::Rmgd => Run::rmgd(&run_cfg, data)?,
                    RunMode::Mgd { batch_size } => Run::mgd(&run_cfg, data, batch_size)?,
                };
                (run, Vec::new())
            }
            Some(path) => {
                let ckpt = Checkpoint::load(path)?;
                if ckpt.mode != mode {
                    return Err(CliError::Usage(format!(
                        "checkpoint was written by a {:?} run, not {mode:?}",
                        ckpt.mode
                    )));
                }
                info!("resuming from {} after epoch {}", path.display(), ckpt.epoch);
                let records = truncate_log(&log_path, ckpt.epoch)?;
                (Run::resume(&run_cfg, data, ckpt)?, records)
            }
        };

        let file = OpenOptions::new()
            .append(true)
            .open(&log_path)
            .map_err(|e| CliError::file(&log_path, e))?;
        let mut log = JsonlWriter::new(BufWriter::new(file), cfg.log_wall_time);
        while !run.is_done() {
            let record = run.step()?;
            log.write(&record)?;
            let done = record.epoch + 1;
            if done % cfg.log_every == 0 || run.is_done() {
                info!(
                    "epoch {done}/{}: batch {} val_loss {:.6} val_acc {:.4} cost {}",
                    cfg.epochs, record.batch_size, record.val_loss, record.val_accuracy, record.cost
                );
            }
            debug!("epoch {done}: probs {:?}", record.probs_snapshot);
            if cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0 && !run.is_done() {
                let ckpt_dir = dir.join(CHECKPOINT_DIR);
                fs::create_dir_all(&ckpt_dir).map_err(|e| CliError::file(&ckpt_dir, e))?;
                write_json(&ckpt_dir.join(format!("epoch-{done:05}.json")), run.checkpoint())?;
            }
            records.push(record);
        }
        drop(log);

        let outcome = run.finish(records)?;
        write_json(&dir.join(CHECKPOINT), &outcome.checkpoint)?;
        let s = &outcome.summary;
        let row = SummaryRow {
            algorithm: match mode {
                RunMode::Rmgd => "RMGD".into(),
                RunMode::Mgd { .. } => "MGD".into(),
            },
            batch_size: match mode {
                RunMode::Rmgd => None,
                RunMode::Mgd { batch_size } => Some(batch_size),
            },
            iterations: s.iterations,
            wall_time_s: s.wall_time_s,
            final_val_loss: Some(s.final_val_loss),
            test_accuracy: s.test_accuracy,
            best_val_test_accuracy: s.best_val_test_accuracy,
            error: None,
        };
        write_summary(&dir.join(SUMMARY), &[row])?;
        Ok(outcome.summary)
    })
}

fn grid(cfg: &ExperimentConfig, data: &Dataset, parallel: usize, dry_run: bool) -> Result<()> {
    let dir = cfg.output_dir.clone();
    in_run_dir(&dir, || {
        write_json(&dir.join(RESOLVED_CONFIG), cfg)?;
        if dry_run {
            let plan = plan_grid(data.m(), &cfg.arms, cfg.epochs);
            let mut rows: Vec<SummaryRow> = plan
                .iter()
                .map(|&(b, iters)| planned_row("MGD", Some(b), iters))
                .collect();
            let total = plan.iter().map(|p| p.1).sum();
            rows.push(planned_row("MGD (total)", None, total));
            write_summary(&dir.join(SUMMARY), &rows)?;
            return print_json(&serde_json::json!({ "total_iterations": total, "planned": true }));
        }

        let run_cfg = cfg.run_config()?;
        let report = run_grid_search(&run_cfg, data, &cfg.arms, parallel)?;
        let mut failed = 0;
        for arm in &report.arms {
            let sub = dir.join(format!("b{}", arm.batch_size));
            fs::create_dir_all(&sub).map_err(|e| CliError::file(&sub, e))?;
            match &arm.outcome {
                Ok(outcome) => {
                    let path = sub.join(EPOCH_LOG);
                    let mut log = JsonlWriter::new(create(&path)?, cfg.log_wall_time);
                    for r in &outcome.records {
                        log.write(r)?;
                    }
                    write_json(&sub.join(CHECKPOINT), &outcome.checkpoint)?;
                    info!(
                        "batch {}: val_loss {:.6} test_acc {:?}",
                        arm.batch_size, outcome.summary.final_val_loss, outcome.summary.test_accuracy
                    );
                }
                Err(msg) => {
                    failed += 1;
                    let line = serde_json::json!({ "error": "arm_failed", "message": msg }).to_string();
                    fs::write(sub.join(FAILED), format!("{line}\n")).map_err(|e| CliError::file(&sub, e))?;
                }
            }
        }
        write_summary(&dir.join(SUMMARY), &report.summary_rows())?;
        if failed > 0 {
            return Err(CliError::ArmsFailed {
                failed,
                total: report.arms.len(),
            });
        }
        print_json(&serde_json::json!({
            "total_iterations": report.total_iterations(),
            "best_batch_size": report.best_arm().map(|i| report.arms[i].batch_size),
        }))
    })
}

fn planned_row(algorithm: &str, batch_size: Option<usize>, iterations: u64) -> SummaryRow {
    SummaryRow {
        algorithm: algorithm.into(),
        batch_size,
        iterations,
        wall_time_s: 0.0,
        final_val_loss: None,
        test_accuracy: None,
        best_val_test_accuracy: None,
        error: None,
    }
}

#[derive(Debug, Serialize)]
struct RegretPlan {
    #[serde(skip_serializing_if = "Option::is_none")]
    means: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rigged: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    winner: Option<usize>,
    horizons: Vec<usize>,
    betas: Vec<f64>,
    repeats: usize,
    prob_floor: f64,
    seed: u64,
}

fn regret(args: &RegretArgs) -> Result<()> {
    in_run_dir(&args.output, || {
        let mut plan = RegretPlan {
            means: args.rigged.is_none().then(|| args.means.clone()),
            rigged: args.rigged,
            winner: args.rigged.map(|_| args.winner),
            horizons: args.horizons.clone(),
            betas: Vec::new(),
            repeats: args.repeats,
            prob_floor: args.prob_floor,
            seed: args.seed,
        };
        let mut envs = Vec::new();
        for &horizon in &args.horizons {
            let env = match args.rigged {
                Some(k) => CostEnvironment::rigged(k, args.winner, horizon)?,
                None => CostEnvironment::stochastic(args.means.clone(), horizon)?,
            };
            let beta = match args.beta {
                Beta::Fixed(b) => b,
                Beta::Auto => default_beta(env.arms(), horizon).map_err(|e| CliError::config("beta", e))?,
            };
            plan.betas.push(beta);
            envs.push(env);
        }
        write_json(&args.output.join(RESOLVED_CONFIG), &plan)?;

        let mut summaries = Vec::new();
        for (env, &beta) in envs.iter().zip(&plan.betas) {
            let s = run_bandit_with_floor(env, beta, args.seed, args.repeats, args.prob_floor)?;
            info!(
                "K={} T={} beta={beta:.5}: mean regret {:.2}, bound {:.2}",
                s.k, s.horizon, s.mean_regret, s.bound
            );
            summaries.push(s);
        }
        let path = args.output.join("regret.csv");
        let mut out = create(&path)?;
        write_regret_csv(&summaries, &mut out)?;
        out.flush().map_err(|e| CliError::file(&path, e))?;

        let path = args.output.join(SUMMARY);
        let mut out = create(&path)?;
        let io = |e| CliError::file(&path, e);
        writeln!(
            out,
            "k,horizon,beta,repeats,mean_regret,mean_expected_regret,bound,within_bound"
        )
        .map_err(io)?;
        for s in &summaries {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.k,
                s.horizon,
                s.beta,
                s.reports.len(),
                s.mean_regret,
                s.mean_expected_regret,
                s.bound,
                s.mean_regret <= s.bound
            )
            .map_err(io)?;
        }
        out.flush().map_err(io)?;
        for s in &summaries {
            print_json(&serde_json::json!({
                "k": s.k,
                "horizon": s.horizon,
                "beta": s.beta,
                "mean_regret": s.mean_regret,
                "bound": s.bound,
            }))?;
        }
        Ok(())
    })
}

/// `epoch,chosen,p_1..p_K` with 1-based epochs and arm numbers, one row per
/// log record. Probabilities are the ones the arm was drawn from.
fn emit_trace(args: &TraceArgs) -> Result<()> {
    let file = File::open(&args.log).map_err(|e| CliError::file(&args.log, e))?;
    let records = read_jsonl(BufReader::new(file))?;
    let k = records.first().map_or(0, |r| r.probs_snapshot.len());
    if let Some(r) = records.iter().find(|r| r.probs_snapshot.len() != k) {
        return Err(CliError::Usage(format!(
            "epoch {} has {} probabilities, expected {k}",
            r.epoch,
            r.probs_snapshot.len()
        )));
    }
    let mut out: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    let target: PathBuf = args.output.clone().unwrap_or_else(|| "-".into());
    let io = |e| CliError::file(&target, e);
    let header: Vec<String> = std::iter::once("epoch".to_string())
        .chain(std::iter::once("chosen".to_string()))
        .chain((1..=k).map(|i| format!("p_{i}")))
        .collect();
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for r in &records {
        let probs: Vec<String> = r.probs_snapshot.iter().map(f64::to_string).collect();
        writeln!(out, "{},{},{}", r.epoch + 1, r.arm_index + 1, probs.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}
