//! The subcommands and the artifacts they write.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use cirauth::channel::{
    gen_mobile_dataset, gen_static_dataset, import_csv, load_dataset, save_dataset, Dataset,
};
use cirauth::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use cirauth::protocol::{evaluate, fit, write_history, AuthReport};

use crate::config::{ConfigError, ExperimentConfig, Scenario};

pub const CONFIG_FILE: &str = "config.txt";
pub const DATASET_FILE: &str = "dataset.cir";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const HISTORY_FILE: &str = "loss_history.csv";
pub const PAIRS_FILE: &str = "pairs.csv";
pub const VERDICTS_FILE: &str = "verdicts.csv";
pub const THRESHOLD_FILE: &str = "threshold_sweep.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] cirauth::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for configuration problems, 3 for numeric failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use cirauth::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Config(_) | E::InvalidNode { .. }) => 2,
            CliError::Core(E::NonFinite { .. } | E::Domain(_)) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Generates the configured dataset, or loads it for `file:` scenarios.
pub fn dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let d = match &cfg.scenario {
        Scenario::File(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => {
            import_csv(p)?
        }
        Scenario::File(p) => load_dataset(p)?,
        Scenario::Static => gen_static_dataset(
            &cfg.scenario_params().expect("generated"),
            cfg.seed,
            cfg.samples_per_node,
        )?,
        Scenario::Mobile => gen_mobile_dataset(
            &cfg.scenario_params().expect("generated"),
            cfg.seed,
            cfg.samples_per_node,
            cfg.eve_interval,
        )?,
    };
    Ok(d)
}

fn protocol(cfg: &ExperimentConfig) -> cirauth::protocol::ProtocolConfig {
    let mut p = cfg.protocol.clone();
    p.models.hvae.train.seed = cfg.seed;
    p
}

fn prepare(cfg: &ExperimentConfig) -> Result<&Path> {
    cfg.validate()?;
    let out = cfg.require_output_dir()?;
    fs::create_dir_all(out)?;
    fs::write(out.join(CONFIG_FILE), cfg.render())?;
    Ok(out)
}

fn create(path: impl AsRef<Path>) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_reports(dir: &Path, dataset: &Dataset, report: &AuthReport) -> Result<()> {
    report.write_history(create(dir.join(HISTORY_FILE))?)?;
    report.write_pairs(create(dir.join(PAIRS_FILE))?)?;
    report.write_verdicts(dataset, create(dir.join(VERDICTS_FILE))?)?;
    report.write_summary(create(dir.join(SUMMARY_FILE))?)?;
    if report.threshold.is_some() {
        report.write_threshold_curve(create(dir.join(THRESHOLD_FILE))?)?;
    }
    Ok(())
}

pub fn gen(cfg: &ExperimentConfig) -> Result<()> {
    let out = prepare(cfg)?;
    if matches!(cfg.scenario, Scenario::File(_)) {
        return Err(ConfigError("gen needs scenario = static or mobile".into()).into());
    }
    save_dataset(&dataset(cfg)?, out.join(DATASET_FILE))?;
    Ok(())
}

pub fn train(cfg: &ExperimentConfig) -> Result<()> {
    let out = prepare(cfg)?;
    let (checkpoint, history) = fit(&dataset(cfg)?, &protocol(cfg))?;
    save_checkpoint(&checkpoint, out.join(CHECKPOINT_FILE))?;
    write_history(&history, create(out.join(HISTORY_FILE))?)?;
    Ok(())
}

pub fn auth(cfg: &ExperimentConfig) -> Result<AuthReport> {
    let out = prepare(cfg)?;
    let checkpoint: Checkpoint = load_checkpoint(cfg.require_checkpoint()?)?;
    let d = dataset(cfg)?;
    let report = evaluate(&d, &checkpoint, &protocol(cfg), Vec::new())?;
    write_reports(out, &d, &report)?;
    Ok(report)
}

/// Generates (or loads) data, trains, authenticates and writes every artifact.
pub fn experiment(cfg: &ExperimentConfig) -> Result<AuthReport> {
    let out = prepare(cfg)?;
    run_in(cfg, out, true)
}

fn run_in(cfg: &ExperimentConfig, out: &Path, keep_dataset: bool) -> Result<AuthReport> {
    let d = dataset(cfg)?;
    if keep_dataset && !matches!(cfg.scenario, Scenario::File(_)) {
        save_dataset(&d, out.join(DATASET_FILE))?;
    }
    let p = protocol(cfg);
    let (checkpoint, history) = fit(&d, &p)?;
    save_checkpoint(&checkpoint, out.join(CHECKPOINT_FILE))?;
    let report = evaluate(&d, &checkpoint, &p, history)?;
    write_reports(out, &d, &report)?;
    Ok(report)
}

/// Worker count for sweeps: `CIR_AUTH_THREADS` if set, else all cores.
pub fn sweep_threads(var: Option<&str>) -> std::result::Result<usize, ConfigError> {
    match var {
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(ConfigError(format!(
                "CIR_AUTH_THREADS must be a positive integer, got `{v}`"
            ))),
        },
    }
}

/// Runs every point of the sweep grid in `out/run_NNN` and tabulates the
/// results in `out/sweep.csv`.
pub fn sweep(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<AuthReport>> {
    let out = cfg.require_output_dir()?.clone();
    let runs = cfg.expand()?;
    for (_, c) in &runs {
        c.validate()?;
    }
    fs::create_dir_all(&out)?;
    fs::write(out.join(CONFIG_FILE), cfg.render())?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    let reports: Vec<Result<AuthReport>> = pool.install(|| {
        runs.par_iter()
            .enumerate()
            .map(|(i, (_, c))| {
                let dir = out.join(format!("run_{i:03}"));
                let mut c = c.clone();
                c.output_dir = Some(dir.clone());
                fs::create_dir_all(&dir)?;
                fs::write(dir.join(CONFIG_FILE), c.render())?;
                run_in(&c, &dir, false)
            })
            .collect()
    });
    let reports: Vec<AuthReport> = reports.into_iter().collect::<Result<_>>()?;

    let mut w = csv::Writer::from_writer(create(out.join(SWEEP_FILE))?);
    let model_swept = cfg.sweep.iter().any(|(k, _)| k == "model");
    let mut header = vec!["run".to_string()];
    header.extend(cfg.sweep.iter().map(|(k, _)| k.clone()));
    if !model_swept {
        header.push("model".into());
    }
    header.extend(["average_f1", "tl", "fa", "fl", "ta"].map(String::from));
    w.write_record(&header).map_err(cirauth::Error::from)?;
    for (i, ((labels, _), r)) in runs.iter().zip(&reports).enumerate() {
        let c = r.total_confusion();
        let mut row = vec![i.to_string()];
        row.extend(labels.iter().map(|(_, v)| v.clone()));
        if !model_swept {
            row.push(r.kind.name().to_string());
        }
        row.extend([
            r.average_f1().to_string(),
            c.tl.to_string(),
            c.fa.to_string(),
            c.fl.to_string(),
            c.ta.to_string(),
        ]);
        w.write_record(&row).map_err(cirauth::Error::from)?;
    }
    w.flush()?;
    Ok(reports)
}

pub fn print_summary(report: &AuthReport, mut out: impl Write) -> std::io::Result<()> {
    let c = report.total_confusion();
    writeln!(
        out,
        "{}: average F1 {:.4} over {} pairs (TL {} FA {} FL {} TA {})",
        report.kind,
        report.average_f1(),
        report.pairs.len(),
        c.tl,
        c.fa,
        c.fl,
        c.ta
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_variable() {
        assert_eq!(sweep_threads(Some("3")).unwrap(), 3);
        assert!(sweep_threads(Some("0")).is_err());
        assert!(sweep_threads(Some("lots")).is_err());
        assert!(sweep_threads(None).unwrap() >= 1);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(ConfigError("x".into())).exit_code(), 2);
        assert_eq!(
            CliError::from(cirauth::Error::Domain("nan".into())).exit_code(),
            3
        );
        assert_eq!(
            CliError::from(cirauth::Error::NonFinite {
                epoch: 0,
                batch: 0,
                term: "l1"
            })
            .exit_code(),
            3
        );
        assert_eq!(CliError::from(cirauth::Error::Untrained).exit_code(), 1);
    }
}
