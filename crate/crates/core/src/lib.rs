//! Admixture model fitting and posterior predictive checks for diploid
//! genotype data.
//!
//! The pipeline: load or simulate a [`GenotypeDataset`], [`fit`] an
//! admixture model by EM, then [`run_ppc`] one or more discrepancy
//! functions against replicates drawn from the fitted model and
//! [`render_report`] the results.

pub mod config;
pub mod discrepancy;
pub mod em;
pub mod error;
pub mod genotype;
pub mod matrix;
pub mod permutation;
pub mod ppc;
pub mod replicate;
pub mod report;
pub mod seed;
pub mod simulate;
pub mod tsv;

pub use discrepancy::{DiscrepancyKind, DiscrepancyParams, DiscrepancyVector};
pub use em::{fit, FitConfig, FittedModel, ModelParams};
pub use error::{Error, Result};
pub use genotype::{load_dataset, split_diploid, AlleleMatrix, AllelePair, GenotypeDataset};
pub use matrix::Matrix;
pub use ppc::{run_ppc, PpcResult, PpcSpec};
pub use replicate::{replicate_batch, replicate_once, ReplicateSet};
pub use report::{render_report, ReportFormat};
pub use simulate::{simulate_dataset, PhiSpec, SimulationConfig, TrueParams};
