//! Association mapping under fixed population assignments.
//!
//! A binary phenotype is simulated with risk tied to ancestry in population
//! `k`. At each SNP, alleles assigned to `k` are split by phenotype class and
//! scored with a beta-binomial Bayes factor: separate allele frequencies per
//! class against one shared frequency, each with a symmetric Beta prior. The
//! discrepancy is the largest `2 ln BF` over SNPs, averaged over phenotype
//! draws. Draws are seeded per `(population, draw)` so observed and
//! replicated data are scored against the same phenotypes.

use rand::Rng;
use statrs::function::gamma::ln_gamma;

use super::DiscrepancyVector;
use crate::em::Assignments;
use crate::error::{Error, Result};
use crate::genotype::AlleleMatrix;
use crate::matrix::Matrix;
use crate::seed::{derive_seed, rng_from_seed, Stream};

/// `c_i ~ Bernoulli(high * theta[i][k] + low * (1 - theta[i][k]))`.
pub fn simulate_phenotype(theta: &Matrix, k: usize, seed: u64, risk: (f64, f64)) -> Vec<u8> {
    let mut rng = rng_from_seed(seed);
    (0..theta.rows())
        .map(|i| {
            let t = theta.get(i, k);
            let p = risk.0 * t + risk.1 * (1.0 - t);
            u8::from(rng.random::<f64>() < p)
        })
        .collect()
}

/// Seed of phenotype draw `draw` for population `k`.
pub fn phenotype_seed(seed: u64, k: usize, draw: usize) -> u64 {
    derive_seed(derive_seed(seed, Stream::Phenotype, k as u64), Stream::Phenotype, draw as u64)
}

/// Phenotype draws per population, fixed for a whole PPC run.
#[derive(Debug, Clone, PartialEq)]
pub struct PhenotypePanel {
    /// `draws[k][d]` is an `n`-vector of 0/1.
    pub draws: Vec<Vec<Vec<u8>>>,
}

impl PhenotypePanel {
    pub fn simulate(theta: &Matrix, draws: usize, seed: u64, risk: (f64, f64)) -> Self {
        PhenotypePanel {
            draws: (0..theta.cols())
                .map(|k| {
                    (0..draws)
                        .map(|d| simulate_phenotype(theta, k, phenotype_seed(seed, k, d), risk))
                        .collect()
                })
                .collect(),
        }
    }
}

/// Log marginal likelihood of a Bernoulli sequence under a symmetric
/// `Beta(a, a)` prior, with `ln Gamma` tabulated over integer offsets.
#[derive(Debug, Clone)]
pub struct BetaBinomial {
    lgamma_a: Vec<f64>,
    lgamma_2a: Vec<f64>,
    ln_beta_prior: f64,
}

impl BetaBinomial {
    pub fn new(a: f64, max_trials: usize) -> Self {
        let lgamma_a = (0..=max_trials).map(|m| ln_gamma(a + m as f64)).collect();
        let lgamma_2a = (0..=max_trials).map(|m| ln_gamma(2.0 * a + m as f64)).collect();
        BetaBinomial {
            lgamma_a,
            lgamma_2a,
            ln_beta_prior: 2.0 * ln_gamma(a) - ln_gamma(2.0 * a),
        }
    }

    /// `ln B(a + ones, a + trials - ones) - ln B(a, a)`.
    #[inline]
    pub fn ln_marginal(&self, ones: usize, trials: usize) -> f64 {
        self.lgamma_a[ones] + self.lgamma_a[trials - ones] - self.lgamma_2a[trials] - self.ln_beta_prior
    }

    /// `2 ln BF` of class-specific frequencies over a shared frequency.
    pub fn two_ln_bf(&self, class0: (usize, usize), class1: (usize, usize)) -> f64 {
        let split = self.ln_marginal(class0.0, class0.1) + self.ln_marginal(class1.0, class1.1);
        let pooled = self.ln_marginal(class0.0 + class1.0, class0.1 + class1.1);
        2.0 * (split - pooled)
    }
}

/// Per-SNP `(ones, trials)` for copies assigned to `k`, split by phenotype.
fn class_counts(data: &AlleleMatrix, z: &Assignments, phenotype: &[u8], k: u16) -> Vec<[(usize, usize); 2]> {
    let l = data.l();
    let mut counts = vec![[(0usize, 0usize); 2]; l];
    for (i, &c) in phenotype.iter().enumerate() {
        let zs = z.individual(i);
        let xs = data.individual(i);
        for (copy, (&za, &xa)) in zs.iter().zip(xs).enumerate() {
            if za == k {
                let cell = &mut counts[copy / 2][usize::from(c)];
                cell.0 += usize::from(xa);
                cell.1 += 1;
            }
        }
    }
    counts
}

fn max_bf_with(
    model: &BetaBinomial,
    data: &AlleleMatrix,
    z: &Assignments,
    phenotype: &[u8],
    k: usize,
) -> Option<f64> {
    class_counts(data, z, phenotype, k as u16)
        .into_iter()
        .filter(|c| c[0].1 > 0 && c[1].1 > 0)
        .map(|c| model.two_ln_bf(c[0], c[1]))
        .fold(None, |best: Option<f64>, v| Some(best.map_or(v, |b| b.max(v))))
}

/// Largest `2 ln BF` over SNPs with `k`-assigned copies in both phenotype
/// classes; `None` when no SNP qualifies (including constant phenotypes).
pub fn max_log_bf_association(
    data: &AlleleMatrix,
    z: &Assignments,
    phenotype: &[u8],
    k: usize,
    smoothing: f64,
) -> Result<Option<f64>> {
    z.check_matches(data)?;
    if phenotype.len() != data.n() {
        return Err(Error::Dimension(format!(
            "phenotype has {} entries for {} individuals",
            phenotype.len(),
            data.n()
        )));
    }
    let model = BetaBinomial::new(smoothing, 2 * data.n());
    Ok(max_bf_with(&model, data, z, phenotype, k))
}

/// Mean of the per-draw maxima over draws where the maximum is defined.
pub fn association_discrepancy(
    data: &AlleleMatrix,
    z: &Assignments,
    phenotypes: &[Vec<u8>],
    k: usize,
    smoothing: f64,
) -> Result<Option<f64>> {
    z.check_matches(data)?;
    let model = BetaBinomial::new(smoothing, 2 * data.n());
    Ok(mean_defined(phenotypes.iter().map(|p| max_bf_with(&model, data, z, p, k))))
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, count) = values.flatten().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

pub fn association_all(
    data: &AlleleMatrix,
    z: &Assignments,
    panel: &PhenotypePanel,
    smoothing: f64,
) -> Result<DiscrepancyVector> {
    if panel.draws.len() != z.k() {
        return Err(Error::Dimension(format!(
            "phenotype panel has {} populations, model has {}",
            panel.draws.len(),
            z.k()
        )));
    }
    if let Some(p) = panel.draws.iter().flatten().find(|p| p.len() != data.n()) {
        return Err(Error::Dimension(format!(
            "phenotype has {} entries for {} individuals",
            p.len(),
            data.n()
        )));
    }
    let model = BetaBinomial::new(smoothing, 2 * data.n());
    Ok(DiscrepancyVector::new(
        panel
            .draws
            .iter()
            .enumerate()
            .map(|(k, draws)| mean_defined(draws.iter().map(|p| max_bf_with(&model, data, z, p, k))))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `ln B(a + x, a + m - x) - ln B(a, a)` as a finite product of ratios.
    fn ln_marginal_oracle(a: f64, x: usize, m: usize) -> f64 {
        let up: f64 = (0..x).map(|i| (a + i as f64).ln()).sum::<f64>()
            + (0..m - x).map(|i| (a + i as f64).ln()).sum::<f64>();
        let down: f64 = (0..m).map(|i| (2.0 * a + i as f64).ln()).sum();
        up - down
    }

    #[test]
    fn marginal_matches_product_oracle() {
        let model = BetaBinomial::new(0.1, 40);
        for m in 0..=40 {
            for x in 0..=m {
                let diff = model.ln_marginal(x, m) - ln_marginal_oracle(0.1, x, m);
                assert!(diff.abs() < 1e-9, "x={x} m={m} diff={diff}");
            }
        }
    }

    #[test]
    fn identical_classes_penalized() {
        let model = BetaBinomial::new(0.1, 40);
        assert!(model.two_ln_bf((5, 10), (5, 10)) < 0.0);
    }

    #[test]
    fn opposite_classes_favoured() {
        let model = BetaBinomial::new(0.1, 40);
        assert!(model.two_ln_bf((10, 10), (0, 10)) > 0.0);
    }

    #[test]
    fn phenotype_probabilities() {
        let theta = Matrix::from_rows(&vec![vec![1.0, 0.0]; 20_000]);
        let case_rate = |k| {
            let c = simulate_phenotype(&theta, k, 3, (0.5, 0.1));
            c.iter().map(|&v| f64::from(v)).sum::<f64>() / c.len() as f64
        };
        assert!((case_rate(0) - 0.5).abs() < 0.015);
        assert!((case_rate(1) - 0.1).abs() < 0.015);
        let half = Matrix::from_rows(&vec![vec![0.5, 0.5]; 20_000]);
        let c = simulate_phenotype(&half, 0, 4, (0.5, 0.1));
        let rate = c.iter().map(|&v| f64::from(v)).sum::<f64>() / c.len() as f64;
        assert!((rate - 0.3).abs() < 0.015);
    }

    #[test]
    fn constant_phenotype_undefined() {
        let data = AlleleMatrix::from_dosages(3, 2, &[0, 1, 2, 1, 1, 0]);
        let z = Assignments::from_raw(3, 2, 1, vec![0; 12]).unwrap();
        assert_eq!(max_log_bf_association(&data, &z, &[1, 1, 1], 0, 0.1).unwrap(), None);
        assert!(max_log_bf_association(&data, &z, &[1, 0, 1], 0, 0.1).unwrap().is_some());
    }

    #[test]
    fn snp_without_assigned_alleles_skipped() {
        // SNP 0 assigned to population 1 everywhere, SNP 1 to population 0
        let data = AlleleMatrix::from_dosages(2, 2, &[2, 2, 0, 0]);
        let z = Assignments::from_raw(2, 2, 2, vec![1, 1, 0, 0, 1, 1, 0, 0]).unwrap();
        let model = BetaBinomial::new(0.1, 4);
        let expected = model.two_ln_bf((0, 2), (2, 2));
        let got = max_log_bf_association(&data, &z, &[0, 1], 0, 0.1).unwrap();
        assert_eq!(got, Some(expected));
    }

    #[test]
    fn single_draw_equals_max() {
        let data = AlleleMatrix::from_dosages(3, 2, &[0, 1, 2, 1, 1, 0]);
        let z = Assignments::from_raw(3, 2, 1, vec![0; 12]).unwrap();
        let p = vec![1, 0, 1];
        assert_eq!(
            association_discrepancy(&data, &z, std::slice::from_ref(&p), 0, 0.1).unwrap(),
            max_log_bf_association(&data, &z, &p, 0, 0.1).unwrap()
        );
    }
}
