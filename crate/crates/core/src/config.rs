//! Resolved run configurations.
//!
//! Every CLI command is first turned into a [`RunConfig`] holding all of its
//! parameters with defaults filled in. The config is written to the output
//! directory as `run_config.json` before any work starts, and a saved config
//! can be executed again with [`execute`] to reproduce the run.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::discrepancy::{DiscrepancyKind, DiscrepancyParams};
use crate::em::{fit, FitConfig, FittedModel, DEFAULT_ALPHA, DEFAULT_GAMMA};
use crate::error::{Error, Result};
use crate::genotype::{load_dataset, write_genotypes, write_labels};
use crate::ppc::{run_ppc, PpcResult, PpcSpec, STAR_THRESHOLDS};
use crate::replicate::replicate_batch;
use crate::report::{render_report, ReportFormat};
use crate::simulate::{simulate_dataset, SimulationConfig};
use crate::tsv;

pub const RUN_CONFIG_FILE: &str = "run_config.json";
pub const RESULTS_FILE: &str = "results.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub tool_version: String,
    /// Seconds since the Unix epoch when the config was resolved.
    pub created_unix: u64,
    /// Thread count; `None` lets the pool pick.
    pub workers: Option<usize>,
    pub format: ReportFormat,
    pub command: Command,
}

impl RunConfig {
    pub fn new(command: Command, workers: Option<usize>, format: ReportFormat) -> Self {
        let created_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        RunConfig {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix,
            workers,
            format,
            command,
        }
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Command {
    Simulate(SimulateConfig),
    Fit(FitCommand),
    Replicate(ReplicateConfig),
    Ppc(PpcConfig),
    Report(ReportConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub simulation: SimulationConfig,
    pub inject_ld: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCommand {
    pub genotypes: PathBuf,
    pub labels: Option<PathBuf>,
    #[serde(rename = "K")]
    pub k: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub fit: FitConfig,
}

impl FitCommand {
    pub fn new(genotypes: PathBuf, labels: Option<PathBuf>, k: usize, fit: FitConfig) -> Self {
        FitCommand {
            genotypes,
            labels,
            k,
            alpha: DEFAULT_ALPHA,
            gamma: DEFAULT_GAMMA,
            fit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateConfig {
    pub model: PathBuf,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpcRun {
    pub discrepancy: DiscrepancyKind,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpcConfig {
    pub genotypes: PathBuf,
    pub labels: Option<PathBuf>,
    pub model: PathBuf,
    pub runs: Vec<PpcRun>,
    pub params: DiscrepancyParams,
    pub seed: u64,
    pub per_lag_bf: bool,
    pub sigma_floor: f64,
    pub star_thresholds: [f64; 3],
}

impl PpcConfig {
    pub fn spec(&self, kind: DiscrepancyKind) -> PpcSpec {
        PpcSpec {
            kind,
            params: self.params.clone(),
            per_lag_bf: self.per_lag_bf,
            sigma_floor: self.sigma_floor,
        }
    }
}

pub fn default_star_thresholds() -> [f64; 3] {
    STAR_THRESHOLDS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub results: PathBuf,
}

/// Fails unless `dir` is absent or an empty directory, then creates it.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        if !dir.is_dir() {
            return Err(Error::Config(format!("{} exists and is not a directory", dir.display())));
        }
        let mut entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        if entries.next().is_some() {
            return Err(Error::Config(format!(
                "output directory {} is not empty; use a fresh directory",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Prepares `out`, echoes the config into it and runs the command. Returns
/// the files written, the config echo first.
pub fn execute(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    prepare_output_dir(out)?;
    let echo = out.join(RUN_CONFIG_FILE);
    config.save(&echo)?;
    let mut written = vec![echo];
    match &config.command {
        Command::Simulate(c) => cmd_simulate(c, out, &mut written)?,
        Command::Fit(c) => cmd_fit(c, out, &mut written)?,
        Command::Replicate(c) => cmd_replicate(c, out, &mut written)?,
        Command::Ppc(c) => cmd_ppc(c, config.format, out, &mut written)?,
        Command::Report(c) => cmd_report(c, config.format, out, &mut written)?,
    }
    Ok(written)
}

fn cmd_simulate(c: &SimulateConfig, out: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let (ds, truth) = simulate_dataset(&c.simulation)?;
    let path = out.join("genotypes.txt");
    write_genotypes(&path, &ds)?;
    written.push(path);
    let path = out.join("labels.txt");
    write_labels(&path, ds.labels().unwrap_or_default())?;
    written.push(path);
    if let Some(block) = c.inject_ld {
        let path = out.join("genotypes_ld.txt");
        write_genotypes(&path, &ds.inject_ld(block)?)?;
        written.push(path);
    }

    let truth_dir = out.join("truth");
    fs::create_dir_all(&truth_dir).map_err(|e| Error::io(&truth_dir, e))?;
    for (name, m) in [("theta.tsv", &truth.theta), ("phi.tsv", &truth.phi)] {
        let path = truth_dir.join(name);
        tsv::write_matrix(&path, m)?;
        written.push(path);
    }
    let path = truth_dir.join("z.tsv");
    let width = 2 * ds.l();
    let mut text = String::with_capacity(truth.z.len() * 3);
    for row in truth.z.chunks_exact(width) {
        let cells: Vec<String> = row.iter().map(|&z| (z + 1).to_string()).collect();
        text.push_str(&cells.join("\t"));
        text.push('\n');
    }
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn cmd_fit(c: &FitCommand, out: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let ds = load_dataset(&c.genotypes, c.labels.as_deref())?;
    let model = fit(&ds, c.k, &c.fit)?;
    model.save(out)?;
    for name in ["theta.tsv", "phi.tsv", "zmap.tsv", "meta.json"] {
        written.push(out.join(name));
    }
    Ok(())
}

fn cmd_replicate(c: &ReplicateConfig, out: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let model = FittedModel::load(&c.model)?;
    let set = replicate_batch(&model, c.replicates, c.seed)?;
    set.dump(out)?;
    written.extend((1..=c.replicates).map(|r| out.join(format!("rep_{r}.txt"))));
    Ok(())
}

fn cmd_ppc(c: &PpcConfig, format: ReportFormat, out: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    if !(c.sigma_floor > 0.0 && c.sigma_floor.is_finite()) {
        return Err(Error::Config(format!("sigma floor must be positive, got {}", c.sigma_floor)));
    }
    if c.star_thresholds != STAR_THRESHOLDS {
        return Err(Error::Config(format!(
            "star thresholds are fixed at {STAR_THRESHOLDS:?}, config has {:?}",
            c.star_thresholds
        )));
    }
    let ds = load_dataset(&c.genotypes, c.labels.as_deref())?;
    let model = FittedModel::load(&c.model)?;
    let results = c
        .runs
        .iter()
        .map(|run| run_ppc(&model, &ds, &c.spec(run.discrepancy), run.replicates, c.seed))
        .collect::<Result<Vec<PpcResult>>>()?;
    let path = out.join(RESULTS_FILE);
    write_results(&path, &results)?;
    written.push(path);
    written.extend(render_report(&results, out, format)?);
    Ok(())
}

fn cmd_report(c: &ReportConfig, format: ReportFormat, out: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let results = read_results(&c.results)?;
    written.extend(render_report(&results, out, format)?);
    Ok(())
}

pub fn write_results(path: &Path, results: &[PpcResult]) -> Result<()> {
    let json = serde_json::to_string_pretty(results).map_err(|e| Error::json(path, e))?;
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_results(path: &Path) -> Result<Vec<PpcResult>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::PhiSpec;

    fn simulate_config(seed: u64) -> RunConfig {
        RunConfig::new(
            Command::Simulate(SimulateConfig {
                simulation: SimulationConfig {
                    n: 6,
                    l: 10,
                    k: 2,
                    alpha: 1.0,
                    phi: PhiSpec::default(),
                    seed,
                },
                inject_ld: Some(5),
            }),
            None,
            ReportFormat::Json,
        )
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = simulate_config(3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        cfg.save(&path).unwrap();
        assert_eq!(RunConfig::load(&path).unwrap(), cfg);
    }

    #[test]
    fn refuses_non_empty_output() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("x"), "1").unwrap();
        assert!(matches!(prepare_output_dir(dir.path()), Err(Error::Config(_))));
        prepare_output_dir(&dir.path().join("fresh")).unwrap();
    }

    #[test]
    fn simulate_writes_echo_first() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sim");
        let written = execute(&simulate_config(1), &out).unwrap();
        assert_eq!(written[0], out.join(RUN_CONFIG_FILE));
        for f in ["genotypes.txt", "labels.txt", "genotypes_ld.txt", "truth/z.tsv"] {
            assert!(out.join(f).exists(), "{f}");
        }
    }
}
