//! Synthetic genotype data drawn from the admixture generative model.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genotype::GenotypeDataset;
use crate::matrix::Matrix;
use crate::seed::{derive_seed, rng_from_seed, Stream};

/// Generator frequencies are kept this far from 0 and 1 so every draw is a
/// valid Bernoulli parameter in the open interval.
const GENERATED_PHI_MARGIN: f64 = 1e-4;

/// How population allele frequencies are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PhiSpec {
    /// `phi[snp][k] ~ Beta(shape, shape)` independently.
    Beta { shape: f64 },
    /// `phi[snp][k] ~ Beta(m_k c, (1 - m_k) c)`: population `k` has mean
    /// frequency `m_k` across SNPs. `means` is recycled when shorter than K.
    Means { means: Vec<f64>, concentration: f64 },
    /// Explicit `L x K` matrix; every entry must lie in (0, 1).
    Matrix(Matrix),
}

impl Default for PhiSpec {
    fn default() -> Self {
        PhiSpec::Beta { shape: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub alpha: f64,
    pub phi: PhiSpec,
    pub seed: u64,
}

/// Generating parameters of a simulated dataset. `z` is `n x l x 2`,
/// zero-based population indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueParams {
    pub theta: Matrix,
    pub phi: Matrix,
    pub z: Vec<u16>,
}

impl TrueParams {
    /// Population with the largest true ancestry share per individual.
    pub fn dominant_population(&self) -> Vec<usize> {
        (0..self.theta.rows())
            .map(|i| argmax(self.theta.row(i)))
            .collect()
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = k;
        }
    }
    best
}

/// Simulates `n` individuals at `l` SNPs. Labels are `pop<k>` for each
/// individual's dominant true population (1-based).
pub fn simulate_dataset(cfg: &SimulationConfig) -> Result<(GenotypeDataset, TrueParams)> {
    if cfg.n == 0 || cfg.l == 0 || cfg.k == 0 {
        return Err(Error::Domain(format!(
            "simulation needs n, L, K >= 1 (got n={}, L={}, K={})",
            cfg.n, cfg.l, cfg.k
        )));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be > 0, got {}", cfg.alpha)));
    }
    let mut rng = rng_from_seed(derive_seed(cfg.seed, Stream::Simulate, 0));

    let theta = sample_dirichlet_rows(&mut rng, cfg.n, cfg.k, cfg.alpha)?;
    let phi = match &cfg.phi {
        PhiSpec::Beta { shape } => {
            let beta = Beta::new(*shape, *shape)
                .map_err(|e| Error::Domain(format!("beta shape {shape}: {e}")))?;
            let mut m = Matrix::zeros(cfg.l, cfg.k);
            for v in m.as_mut_slice() {
                *v = clamp_generated(beta.sample(&mut rng));
            }
            m
        }
        PhiSpec::Means {
            means,
            concentration,
        } => {
            if means.is_empty() {
                return Err(Error::Domain("phi means list is empty".into()));
            }
            let mut dists = Vec::with_capacity(cfg.k);
            for k in 0..cfg.k {
                let m = means[k % means.len()];
                if !(m > 0.0 && m < 1.0) {
                    return Err(Error::Domain(format!("phi mean {m} outside (0,1)")));
                }
                dists.push(
                    Beta::new(m * concentration, (1.0 - m) * concentration)
                        .map_err(|e| Error::Domain(format!("phi concentration: {e}")))?,
                );
            }
            let mut m = Matrix::zeros(cfg.l, cfg.k);
            for snp in 0..cfg.l {
                for (k, d) in dists.iter().enumerate() {
                    m.set(snp, k, clamp_generated(d.sample(&mut rng)));
                }
            }
            m
        }
        PhiSpec::Matrix(m) => m.clone(),
    };

    let (ds, z) = sample_genotypes(&theta, &phi, cfg.seed)?;
    let truth = TrueParams { theta, phi, z };
    let labels = truth
        .dominant_population()
        .into_iter()
        .map(|k| format!("pop{}", k + 1))
        .collect();
    Ok((ds.with_labels(labels)?, truth))
}

/// Draws assignments and alleles given fixed `theta` (`n x K`) and `phi`
/// (`L x K`). Returns the genotype dataset and the `n x L x 2` assignments.
pub fn sample_genotypes(theta: &Matrix, phi: &Matrix, seed: u64) -> Result<(GenotypeDataset, Vec<u16>)> {
    let (n, k) = (theta.rows(), theta.cols());
    let l = phi.rows();
    if phi.cols() != k {
        return Err(Error::Dimension(format!(
            "theta has {k} populations, phi has {}",
            phi.cols()
        )));
    }
    if let Some(bad) = phi.as_slice().iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::Domain(format!(
            "simulation frequencies must lie in (0,1), got {bad}"
        )));
    }
    for i in 0..n {
        let row = theta.row(i);
        let s: f64 = row.iter().sum();
        if row.iter().any(|&t| t < 0.0) || (s - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("theta row {} is not on the simplex", i + 1)));
        }
    }

    let mut rng = rng_from_seed(derive_seed(seed, Stream::Simulate, 1));
    let mut genotypes = Vec::with_capacity(n * l);
    let mut z = Vec::with_capacity(n * l * 2);
    for i in 0..n {
        let row = theta.row(i);
        for snp in 0..l {
            let mut g = 0u8;
            for _ in 0..2 {
                let pop = sample_categorical(&mut rng, row);
                z.push(pop as u16);
                if rng.random::<f64>() < phi.get(snp, pop) {
                    g += 1;
                }
            }
            genotypes.push(g);
        }
    }
    Ok((GenotypeDataset::new(n, l, genotypes)?, z))
}

fn clamp_generated(p: f64) -> f64 {
    p.clamp(GENERATED_PHI_MARGIN, 1.0 - GENERATED_PHI_MARGIN)
}

fn sample_categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding left u above the cumulative total; take the last nonzero entry
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

fn sample_dirichlet_rows<R: Rng>(rng: &mut R, n: usize, k: usize, alpha: f64) -> Result<Matrix> {
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::Domain(format!("alpha {alpha}: {e}")))?;
    let mut theta = Matrix::zeros(n, k);
    for i in 0..n {
        let row = theta.row_mut(i);
        for v in row.iter_mut() {
            *v = gamma.sample(rng);
        }
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
        } else {
            // all gamma draws underflowed (tiny alpha): the limit is a vertex
            let vertex = rng.random_range(0..k);
            row.iter_mut().enumerate().for_each(|(c, v)| *v = f64::from(u8::from(c == vertex)));
        }
    }
    Ok(theta)
}
