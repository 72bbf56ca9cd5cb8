use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ppc_admix::config::{
    default_star_thresholds, execute, Command, FitCommand, PpcConfig, PpcRun, ReplicateConfig, ReportConfig,
    RunConfig, SimulateConfig,
};
use ppc_admix::discrepancy::{
    DiscrepancyKind, DiscrepancyParams, DEFAULT_MAX_LAG, DEFAULT_MAX_SNPS, DEFAULT_MIN_SHARED,
    DEFAULT_PHENOTYPE_DRAWS, DEFAULT_RISK_HIGH, DEFAULT_RISK_LOW, DEFAULT_SMOOTHING,
};
use ppc_admix::em::{FitConfig, DEFAULT_ITERATIONS, INIT_PHI_CLAMP, UPDATE_PHI_CLAMP};
use ppc_admix::ppc::{default_replicates, DEFAULT_SIGMA_FLOOR};
use ppc_admix::replicate::DEFAULT_REPLICATES;
use ppc_admix::simulate::{PhiSpec, SimulationConfig};
use ppc_admix::ReportFormat;

/// Admixture model fitting and posterior predictive checks.
#[derive(Parser)]
#[command(name = "ppc-admix", version)]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "PPC_ADMIX_WORKERS")]
    workers: Option<usize>,
    /// Summary format.
    #[arg(long, global = true, default_value = "json", value_parser = parse_format)]
    format: ReportFormat,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate genotypes from the admixture model.
    Simulate(SimulateArgs),
    /// Fit the admixture model by EM.
    Fit(FitArgs),
    /// Draw replicate datasets from a fitted model.
    Replicate(ReplicateArgs),
    /// Run posterior predictive checks.
    Ppc(PpcArgs),
    /// Render a report from a saved results.json.
    Report(ReportArgs),
    /// Execute a saved run_config.json again into a new directory.
    Rerun(RerunArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    l: usize,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Dirichlet concentration of the ancestry proportions.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Symmetric Beta shape of the allele frequencies.
    #[arg(long, default_value_t = 1.0, conflicts_with = "phi_means")]
    phi_shape: f64,
    /// Per-population mean frequencies, comma separated.
    #[arg(long, value_delimiter = ',')]
    phi_means: Option<Vec<f64>>,
    /// Concentration around --phi-means.
    #[arg(long, default_value_t = 20.0, requires = "phi_means")]
    phi_concentration: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write genotypes_ld.txt with LD blocks of this length.
    #[arg(long)]
    inject_ld: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    genotypes: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplicateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PpcArgs {
    #[arg(long)]
    genotypes: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated subset of ibs, mi, fst, entropy, association.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind,
          default_value = "ibs,mi,fst,entropy,association")]
    discrepancies: Vec<DiscrepancyKind>,
    /// Replicates per discrepancy; defaults to 100, or 30 for ibs.
    #[arg(long)]
    replicates: Option<usize>,
    /// MI lags as a..b (inclusive) and/or comma-separated values.
    #[arg(long, value_parser = parse_lags)]
    lags: Option<Lags>,
    #[arg(long, default_value_t = DEFAULT_MIN_SHARED)]
    min_shared: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_SNPS)]
    max_snps: usize,
    /// Phenotype draws for the association discrepancy.
    #[arg(long, default_value_t = DEFAULT_PHENOTYPE_DRAWS)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also score each MI lag on its own.
    #[arg(long)]
    per_lag_bf: bool,
    /// Lower bound on the fitted sd in the deviation Bayes factor.
    #[arg(long, default_value_t = DEFAULT_SIGMA_FLOOR)]
    sigma_floor: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RerunArgs {
    /// A run_config.json written by an earlier run.
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone)]
struct Lags(Vec<usize>);

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: ppc_admix::Error| e.to_string())
}

fn parse_kind(s: &str) -> Result<DiscrepancyKind, String> {
    s.parse().map_err(|e: ppc_admix::Error| e.to_string())
}

fn parse_lags(s: &str) -> Result<Lags, String> {
    let mut lags = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("bad lag {v:?}"));
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
                if a > b {
                    return Err(format!("empty lag range {part}"));
                }
                lags.extend(a..=b);
            }
            None => lags.push(num(part)?),
        }
    }
    if lags.is_empty() || lags.contains(&0) {
        return Err("lags must be integers >= 1".into());
    }
    lags.sort_unstable();
    lags.dedup();
    Ok(Lags(lags))
}

fn resolve(cli: Cli) -> ppc_admix::Result<(RunConfig, PathBuf)> {
    let (command, out) = match cli.command {
        Cmd::Simulate(a) => {
            let phi = match a.phi_means {
                Some(means) => PhiSpec::Means {
                    means,
                    concentration: a.phi_concentration,
                },
                None => PhiSpec::Beta { shape: a.phi_shape },
            };
            let simulation = SimulationConfig {
                n: a.n,
                l: a.l,
                k: a.k as usize,
                alpha: a.alpha,
                phi,
                seed: a.seed,
            };
            (
                Command::Simulate(SimulateConfig {
                    simulation,
                    inject_ld: a.inject_ld,
                }),
                a.out,
            )
        }
        Cmd::Fit(a) => {
            let fit = FitConfig {
                iterations: a.iterations,
                seed: a.seed,
                init_clamp: INIT_PHI_CLAMP,
                update_clamp: UPDATE_PHI_CLAMP,
            };
            (Command::Fit(FitCommand::new(a.genotypes, a.labels, a.k as usize, fit)), a.out)
        }
        Cmd::Replicate(a) => (
            Command::Replicate(ReplicateConfig {
                model: a.model,
                replicates: a.replicates,
                seed: a.seed,
            }),
            a.out,
        ),
        Cmd::Ppc(a) => {
            let mut kinds = a.discrepancies;
            kinds.dedup();
            let runs = kinds
                .into_iter()
                .map(|kind| PpcRun {
                    discrepancy: kind,
                    replicates: a.replicates.unwrap_or_else(|| default_replicates(kind)),
                })
                .collect();
            let params = DiscrepancyParams {
                min_shared: a.min_shared,
                max_snps: a.max_snps,
                lags: a.lags.map_or_else(|| (1..=DEFAULT_MAX_LAG).collect(), |l| l.0),
                draws: a.draws,
                risk_high: DEFAULT_RISK_HIGH,
                risk_low: DEFAULT_RISK_LOW,
                smoothing: DEFAULT_SMOOTHING,
            };
            params.validate()?;
            (
                Command::Ppc(PpcConfig {
                    genotypes: a.genotypes,
                    labels: a.labels,
                    model: a.model,
                    runs,
                    params,
                    seed: a.seed,
                    per_lag_bf: a.per_lag_bf,
                    sigma_floor: a.sigma_floor,
                    star_thresholds: default_star_thresholds(),
                }),
                a.out,
            )
        }
        Cmd::Report(a) => (Command::Report(ReportConfig { results: a.results }), a.out),
        Cmd::Rerun(a) => {
            let saved = RunConfig::load(&a.config)?;
            let workers = cli.workers.or(saved.workers);
            let format = saved.format;
            return Ok((RunConfig::new(saved.command, workers, format), a.out));
        }
    };
    Ok((RunConfig::new(command, cli.workers, cli.format), out))
}

fn run(cli: Cli) -> ppc_admix::Result<()> {
    let (config, out) = resolve(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        if w == 0 {
            return Err(ppc_admix::Error::Config("--workers must be >= 1".into()));
        }
        pool = pool.num_threads(w);
    }
    let pool = pool
        .build()
        .map_err(|e| ppc_admix::Error::Config(format!("cannot start worker pool: {e}")))?;
    let written = pool.install(|| execute(&config, &out))?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
