//! Posterior predictive replicates.
//!
//! A replicate redraws every allele copy from the fitted frequency of its
//! MAP population, `x_rep ~ Bernoulli(phi[snp][z_map])`, leaving the fitted
//! model untouched. Replicate `r` is seeded by `derive_seed(seed, r)`, so it
//! can be regenerated alone and does not depend on scheduling.

use std::fs;
use std::path::Path;

use rand::Rng;

use crate::em::FittedModel;
use crate::error::{Error, Result};
use crate::genotype::{write_genotypes, AlleleMatrix};
use crate::seed::{derive_seed, rng_from_seed, Stream};

pub const DEFAULT_REPLICATES: usize = 100;
/// Replicate count for the pairwise similarity check.
pub const DEFAULT_SIMILARITY_REPLICATES: usize = 30;

pub fn replicate_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, Stream::Replicate, index as u64)
}

pub fn replicate_once(fitted: &FittedModel, seed: u64) -> AlleleMatrix {
    let z = &fitted.z_map;
    let phi = &fitted.params.phi;
    let (n, l) = (z.n(), z.l());
    let mut rng = rng_from_seed(seed);
    let data = z
        .as_slice()
        .iter()
        .enumerate()
        .map(|(idx, &pop)| {
            let snp = (idx / 2) % l;
            u8::from(rng.random::<f64>() < phi.get(snp, usize::from(pop)))
        })
        .collect();
    AlleleMatrix::from_raw(n, l, data)
}

/// `R` replicates produced on demand; nothing is materialized until asked.
#[derive(Debug, Clone, Copy)]
pub struct ReplicateSet<'a> {
    pub fitted: &'a FittedModel,
    pub r: usize,
    pub seed: u64,
}

impl<'a> ReplicateSet<'a> {
    pub fn get(&self, index: usize) -> AlleleMatrix {
        assert!(index < self.r, "replicate {index} out of range 0..{}", self.r);
        replicate_once(self.fitted, replicate_seed(self.seed, index))
    }

    pub fn iter(&self) -> impl Iterator<Item = AlleleMatrix> + 'a {
        let set = *self;
        (0..set.r).map(move |i| set.get(i))
    }

    pub fn materialize(&self) -> Vec<AlleleMatrix> {
        self.iter().collect()
    }

    /// Writes `rep_<r>.txt` genotype files (`r` is 1-based) into `dir`.
    pub fn dump(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (i, rep) in self.iter().enumerate() {
            write_genotypes(&dir.join(format!("rep_{}.txt", i + 1)), &rep.to_dataset())?;
        }
        Ok(())
    }
}

pub fn replicate_batch(fitted: &FittedModel, r: usize, seed: u64) -> Result<ReplicateSet<'_>> {
    if r == 0 {
        return Err(Error::Config("replicate count must be >= 1".into()));
    }
    Ok(ReplicateSet { fitted, r, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::{Assignments, FitMeta, ModelParams};
    use crate::matrix::Matrix;

    fn model(phi: Vec<Vec<f64>>, z: Vec<u16>, n: usize) -> FittedModel {
        let k = phi[0].len();
        let l = phi.len();
        FittedModel {
            params: ModelParams::new(Matrix::filled(n, k, 1.0 / k as f64), Matrix::from_rows(&phi)).unwrap(),
            z_map: Assignments::from_raw(n, l, k, z).unwrap(),
            posterior: None,
            meta: FitMeta {
                k,
                n,
                l,
                iterations: 1,
                seed: 0,
                loglik_trace: vec![],
                empty_cells: vec![],
            },
        }
    }

    #[test]
    fn same_seed_same_replicate() {
        let m = model(vec![vec![0.3, 0.7]; 4], vec![0, 1, 1, 0, 0, 0, 1, 1, 0, 1, 0, 1, 1, 1, 0, 0], 2);
        assert_eq!(replicate_once(&m, 5), replicate_once(&m, 5));
        let set = replicate_batch(&m, 1, 5).unwrap();
        assert_eq!(set.get(0), replicate_once(&m, replicate_seed(5, 0)));
    }

    #[test]
    fn near_certain_frequency() {
        let m = model(vec![vec![1.0 - 1e-6]; 50], vec![0; 200], 2);
        let rep = replicate_once(&m, 1);
        assert!(rep.as_slice().iter().all(|&a| a == 1));
    }

    #[test]
    fn replication_leaves_model_untouched() {
        let m = model(vec![vec![0.2, 0.6]; 3], vec![0, 1, 1, 0, 1, 1, 0, 0, 1, 0, 0, 1], 2);
        let before = m.clone();
        let _ = replicate_batch(&m, 10, 3).unwrap().materialize();
        assert_eq!(m, before);
    }

    #[test]
    fn allele_means_track_frequencies() {
        let phi = vec![vec![0.1, 0.5], vec![0.8, 0.35]];
        let z = vec![0, 1, 1, 1, 1, 0, 0, 0];
        let m = model(phi.clone(), z.clone(), 2);
        let set = replicate_batch(&m, 1000, 77).unwrap();
        let mut sums = vec![0u32; 8];
        for rep in set.iter() {
            for (s, &a) in sums.iter_mut().zip(rep.as_slice()) {
                *s += u32::from(a);
            }
        }
        for (idx, s) in sums.iter().enumerate() {
            let p = phi[(idx / 2) % 2][usize::from(z[idx])];
            assert!((f64::from(*s) / 1000.0 - p).abs() < 0.05);
        }
    }

    #[test]
    fn zero_replicates_rejected() {
        let m = model(vec![vec![0.5]], vec![0, 0], 1);
        assert!(replicate_batch(&m, 0, 1).is_err());
    }
}
