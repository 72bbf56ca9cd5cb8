//! Per-population discrepancy functions.
//!
//! Each function maps a dataset (observed or replicated) and the fixed latent
//! structure of a fitted model to one value per ancestral population.
//! Populations where a statistic cannot be computed are reported as `None`.

pub mod association;
pub mod entropy;
pub mod fst;
pub mod ibs;
pub mod mi;
pub mod pairs;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::em::Assignments;
use crate::error::{Error, Result};
use crate::genotype::AlleleMatrix;
use crate::matrix::Matrix;

pub use association::PhenotypePanel;
pub use fst::LabelIndex;

/// One value per population; `None` where the statistic is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyVector {
    pub values: Vec<Option<f64>>,
}

impl DiscrepancyVector {
    pub fn new(values: Vec<Option<f64>>) -> Self {
        DiscrepancyVector { values }
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn defined(&self) -> Vec<bool> {
        self.values.iter().map(Option::is_some).collect()
    }

    /// Reorders populations: entry `c` becomes old entry `perm[c]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        DiscrepancyVector::new(perm.iter().map(|&p| self.values[p]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscrepancyKind {
    Ibs,
    Mi,
    Fst,
    Entropy,
    Association,
}

impl DiscrepancyKind {
    pub const ALL: [DiscrepancyKind; 5] = [
        DiscrepancyKind::Ibs,
        DiscrepancyKind::Mi,
        DiscrepancyKind::Fst,
        DiscrepancyKind::Entropy,
        DiscrepancyKind::Association,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DiscrepancyKind::Ibs => "ibs",
            DiscrepancyKind::Mi => "mi",
            DiscrepancyKind::Fst => "fst",
            DiscrepancyKind::Entropy => "entropy",
            DiscrepancyKind::Association => "association",
        }
    }
}

impl fmt::Display for DiscrepancyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DiscrepancyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DiscrepancyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = DiscrepancyKind::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!(
                    "unknown discrepancy {s:?}; valid names: {}",
                    names.join(", ")
                ))
            })
    }
}

pub const DEFAULT_MIN_SHARED: usize = 500;
pub const DEFAULT_MAX_SNPS: usize = 10_000;
pub const DEFAULT_MAX_LAG: usize = 30;
pub const DEFAULT_PHENOTYPE_DRAWS: usize = 10;
/// Phenotype probability for an individual fully from the risk population.
pub const DEFAULT_RISK_HIGH: f64 = 0.5;
/// Phenotype probability for an individual with no risk ancestry.
pub const DEFAULT_RISK_LOW: f64 = 0.1;
/// Symmetric Beta prior parameter of the beta-binomial association model.
pub const DEFAULT_SMOOTHING: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyParams {
    pub min_shared: usize,
    pub max_snps: usize,
    pub lags: Vec<usize>,
    pub draws: usize,
    pub risk_high: f64,
    pub risk_low: f64,
    pub smoothing: f64,
}

impl Default for DiscrepancyParams {
    fn default() -> Self {
        DiscrepancyParams {
            min_shared: DEFAULT_MIN_SHARED,
            max_snps: DEFAULT_MAX_SNPS,
            lags: (1..=DEFAULT_MAX_LAG).collect(),
            draws: DEFAULT_PHENOTYPE_DRAWS,
            risk_high: DEFAULT_RISK_HIGH,
            risk_low: DEFAULT_RISK_LOW,
            smoothing: DEFAULT_SMOOTHING,
        }
    }
}

impl DiscrepancyParams {
    pub fn validate(&self) -> Result<()> {
        if self.lags.is_empty() || self.lags.contains(&0) {
            return Err(Error::Config("lags must be a non-empty set of integers >= 1".into()));
        }
        if self.draws == 0 {
            return Err(Error::Config("phenotype draws must be >= 1".into()));
        }
        if self.max_snps < 2 {
            return Err(Error::Config("MI SNP window must cover at least 2 SNPs".into()));
        }
        for p in [self.risk_high, self.risk_low] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("phenotype probability {p} outside [0,1]")));
            }
        }
        if !(self.smoothing > 0.0) {
            return Err(Error::Config("beta-binomial smoothing must be > 0".into()));
        }
        Ok(())
    }

    /// Lag of each output panel; `None` for discrepancies without lags.
    pub fn panels(&self, kind: DiscrepancyKind) -> Vec<Option<usize>> {
        match kind {
            DiscrepancyKind::Mi => self.lags.iter().map(|&l| Some(l)).collect(),
            _ => vec![None],
        }
    }
}

/// Latent structure and side information held fixed across datasets.
#[derive(Debug, Clone, Copy)]
pub struct DiscrepancyContext<'a> {
    pub z_map: &'a Assignments,
    pub theta: &'a Matrix,
    pub phi: &'a Matrix,
    pub labels: Option<&'a LabelIndex>,
    pub phenotypes: Option<&'a PhenotypePanel>,
}

/// Evaluates `kind` on `data`, one vector per panel (one per lag for MI).
pub fn evaluate(
    kind: DiscrepancyKind,
    data: &AlleleMatrix,
    ctx: &DiscrepancyContext<'_>,
    params: &DiscrepancyParams,
) -> Result<Vec<DiscrepancyVector>> {
    ctx.z_map.check_matches(data)?;
    Ok(match kind {
        DiscrepancyKind::Ibs => vec![ibs::ibs_all(data, ctx.z_map, params.min_shared)],
        DiscrepancyKind::Mi => params
            .lags
            .iter()
            .map(|&lag| mi::mi_all(data, ctx.z_map, lag, params.max_snps))
            .collect(),
        DiscrepancyKind::Fst => {
            let labels = ctx
                .labels
                .ok_or_else(|| Error::Config("the fst discrepancy needs reported labels".into()))?;
            vec![fst::fst_all(data, ctx.z_map, labels)?]
        }
        DiscrepancyKind::Entropy => vec![entropy::entropy_all(data, ctx.theta, ctx.phi, ctx.z_map)?],
        DiscrepancyKind::Association => {
            let panel = ctx.phenotypes.ok_or_else(|| {
                Error::Config("the association discrepancy needs simulated phenotypes".into())
            })?;
            vec![association::association_all(data, ctx.z_map, panel, params.smoothing)?]
        }
    })
}
