//! Posterior predictive checks.
//!
//! The observed discrepancy is compared with its distribution over `R`
//! replicates through per-population z-scores. How far the z-scores sit from
//! a standard normal is scored by `2 ln BF`: the likelihood of the z-scores
//! under a normal fitted by maximum likelihood against the standard normal.
//! Stars mark `2 ln BF` above 2, 6 and 10.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrepancy::{
    evaluate, DiscrepancyContext, DiscrepancyKind, DiscrepancyParams, DiscrepancyVector, LabelIndex, PhenotypePanel,
};
use crate::em::FittedModel;
use crate::error::{Error, Result};
use crate::genotype::GenotypeDataset;
use crate::replicate::{replicate_once, replicate_seed, DEFAULT_REPLICATES, DEFAULT_SIMILARITY_REPLICATES};

/// `2 ln BF` thresholds for one, two and three stars.
pub const STAR_THRESHOLDS: [f64; 3] = [2.0, 6.0, 10.0];
/// Floor on the replicate standard deviation in a z-score denominator.
pub const REPLICATE_SD_FLOOR: f64 = 1e-12;
/// Lower bound on the fitted standard deviation in the deviation BF. At 1 the
/// alternative can only shift or widen the standard normal.
pub const DEFAULT_SIGMA_FLOOR: f64 = 1.0;

pub fn default_replicates(kind: DiscrepancyKind) -> usize {
    match kind {
        DiscrepancyKind::Ibs => DEFAULT_SIMILARITY_REPLICATES,
        _ => DEFAULT_REPLICATES,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScores {
    pub mean: Vec<Option<f64>>,
    pub sd: Vec<Option<f64>>,
    pub z: Vec<Option<f64>>,
}

/// `z_k = (observed_k - mean_k) / max(sd_k, 1e-12)` with the sample (n - 1)
/// standard deviation over replicates where population `k` is defined.
/// Needs at least two defined replicate values.
pub fn z_scores(observed: &DiscrepancyVector, replicated: &[DiscrepancyVector]) -> ZScores {
    let k = observed.k();
    let mut out = ZScores {
        mean: vec![None; k],
        sd: vec![None; k],
        z: vec![None; k],
    };
    for pop in 0..k {
        let column: Vec<f64> = replicated.iter().filter_map(|r| r.values[pop]).collect();
        if column.is_empty() {
            continue;
        }
        let m = column.len() as f64;
        let mean = column.iter().sum::<f64>() / m;
        out.mean[pop] = Some(mean);
        if column.len() < 2 {
            continue;
        }
        let var = column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let sd = var.sqrt();
        out.sd[pop] = Some(sd);
        if let Some(obs) = observed.values[pop] {
            out.z[pop] = Some((obs - mean) / sd.max(REPLICATE_SD_FLOOR));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationBf {
    pub two_log_bf: f64,
    pub stars: u8,
    /// Maximum-likelihood mean and (floored) standard deviation.
    pub mu: f64,
    pub sigma: f64,
    /// Set when fewer than two z-scores were available.
    pub low_confidence: bool,
}

pub fn stars(two_log_bf: f64) -> u8 {
    STAR_THRESHOLDS.iter().filter(|&&t| two_log_bf > t).count() as u8
}

/// Deviation BF of `z` from N(0, 1). The alternative is N(mu, sigma) with
/// the maximum-likelihood mean and the biased (1/K) standard deviation,
/// raised to `sigma_floor` when smaller. `None` for an empty input.
pub fn deviation_bayes_factor(z: &[f64], sigma_floor: f64) -> Option<DeviationBf> {
    if z.is_empty() {
        return None;
    }
    let k = z.len() as f64;
    let mu = z.iter().sum::<f64>() / k;
    let var = z.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / k;
    let sigma = var.sqrt().max(sigma_floor);
    // the 0.5 ln(2 pi) terms cancel
    let fitted: f64 = z
        .iter()
        .map(|v| -sigma.ln() - (v - mu).powi(2) / (2.0 * sigma * sigma))
        .sum();
    let standard: f64 = z.iter().map(|v| -v * v / 2.0).sum();
    // a degenerate fit (all z equal, no floor) has unbounded likelihood
    let two_log_bf = if sigma > 0.0 { 2.0 * (fitted - standard) } else { f64::INFINITY };
    Some(DeviationBf {
        two_log_bf,
        stars: stars(two_log_bf),
        mu,
        sigma,
        low_confidence: z.len() < 2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpcSpec {
    pub kind: DiscrepancyKind,
    pub params: DiscrepancyParams,
    /// Score each MI lag separately in addition to the pooled score.
    pub per_lag_bf: bool,
    pub sigma_floor: f64,
}

impl PpcSpec {
    pub fn new(kind: DiscrepancyKind) -> Self {
        PpcSpec {
            kind,
            params: DiscrepancyParams::default(),
            per_lag_bf: false,
            sigma_floor: DEFAULT_SIGMA_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpcPanel {
    pub lag: Option<usize>,
    pub observed: DiscrepancyVector,
    /// `R` replicate vectors.
    pub replicated: Vec<DiscrepancyVector>,
    pub scores: ZScores,
    /// Per-panel score, only with `per_lag_bf`.
    pub bf: Option<DeviationBf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpcResult {
    pub discrepancy: DiscrepancyKind,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub seed: u64,
    pub panels: Vec<PpcPanel>,
    /// Score pooled over every defined z-score of every panel.
    pub bf: Option<DeviationBf>,
    /// No population produced a z-score.
    pub inconclusive: bool,
    pub spec: PpcSpec,
}

impl PpcResult {
    pub fn two_log_bf(&self) -> Option<f64> {
        self.bf.map(|b| b.two_log_bf)
    }

    pub fn stars(&self) -> u8 {
        self.bf.map_or(0, |b| b.stars)
    }

    pub fn pooled_z(&self) -> Vec<f64> {
        self.panels
            .iter()
            .flat_map(|p| p.scores.z.iter().flatten().copied())
            .collect()
    }
}

/// Runs one PPC: the discrepancy on the observed data and on `r` replicates
/// drawn from `fitted`, with latent assignments held fixed throughout.
pub fn run_ppc(
    fitted: &FittedModel,
    observed: &GenotypeDataset,
    spec: &PpcSpec,
    r: usize,
    seed: u64,
) -> Result<PpcResult> {
    spec.params.validate()?;
    if r == 0 {
        return Err(Error::Config("replicate count must be >= 1".into()));
    }
    let alleles = observed.alleles();
    fitted.z_map.check_matches(&alleles)?;

    let labels = match (spec.kind, observed.labels()) {
        (DiscrepancyKind::Fst, None) => {
            return Err(Error::Config("the fst discrepancy needs a label file".into()))
        }
        (_, Some(l)) => Some(LabelIndex::new(l)),
        (_, None) => None,
    };
    let phenotypes = (spec.kind == DiscrepancyKind::Association).then(|| {
        PhenotypePanel::simulate(
            &fitted.params.theta,
            spec.params.draws,
            seed,
            (spec.params.risk_high, spec.params.risk_low),
        )
    });
    let ctx = DiscrepancyContext {
        z_map: &fitted.z_map,
        theta: &fitted.params.theta,
        phi: &fitted.params.phi,
        labels: labels.as_ref(),
        phenotypes: phenotypes.as_ref(),
    };

    let observed_panels = evaluate(spec.kind, &alleles, &ctx, &spec.params)?;
    let replicated: Vec<Vec<DiscrepancyVector>> = (0..r)
        .into_par_iter()
        .map(|idx| {
            let rep = replicate_once(fitted, replicate_seed(seed, idx));
            evaluate(spec.kind, &rep, &ctx, &spec.params)
        })
        .collect::<Result<_>>()?;

    let lags = spec.params.panels(spec.kind);
    let panels: Vec<PpcPanel> = observed_panels
        .into_iter()
        .zip(lags)
        .enumerate()
        .map(|(p, (obs, lag))| {
            let reps: Vec<DiscrepancyVector> = replicated.iter().map(|r| r[p].clone()).collect();
            let scores = z_scores(&obs, &reps);
            let bf = if spec.per_lag_bf && lag.is_some() {
                let z: Vec<f64> = scores.z.iter().flatten().copied().collect();
                deviation_bayes_factor(&z, spec.sigma_floor)
            } else {
                None
            };
            PpcPanel {
                lag,
                observed: obs,
                replicated: reps,
                scores,
                bf,
            }
        })
        .collect();

    let mut result = PpcResult {
        discrepancy: spec.kind,
        k: fitted.k(),
        r,
        seed,
        panels,
        bf: None,
        inconclusive: false,
        spec: spec.clone(),
    };
    let pooled = result.pooled_z();
    result.bf = deviation_bayes_factor(&pooled, spec.sigma_floor);
    result.inconclusive = result.bf.is_none();
    Ok(result)
}
