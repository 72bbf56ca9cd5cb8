//! Wright's F_ST of population-assigned alleles against reported labels.
//!
//! At SNP `s`, with `p` the minor-allele frequency among copies assigned to
//! population `k` and `p_g` the same frequency within label `g`,
//! `F_ST = mean_g (p - p_g)^2 / (p (1 - p))`, the mean running over labels
//! with at least one assigned copy. SNPs where `p` is 0 or 1 are skipped.

use std::collections::HashMap;

use super::DiscrepancyVector;
use crate::em::Assignments;
use crate::error::{Error, Result};
use crate::genotype::AlleleMatrix;

/// Dense label codes, numbered by first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelIndex {
    codes: Vec<usize>,
    names: Vec<String>,
}

impl LabelIndex {
    pub fn new(labels: &[String]) -> Self {
        let mut lookup: HashMap<&str, usize> = HashMap::new();
        let mut names = Vec::new();
        let codes = labels
            .iter()
            .map(|l| {
                *lookup.entry(l.as_str()).or_insert_with(|| {
                    names.push(l.clone());
                    names.len() - 1
                })
            })
            .collect();
        LabelIndex { codes, names }
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn groups(&self) -> usize {
        self.names.len()
    }

    pub fn code(&self, i: usize) -> usize {
        self.codes[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FstResult {
    /// Per-SNP F_ST; `None` where the SNP is excluded.
    pub per_snp: Vec<Option<f64>>,
    /// Mean over included SNPs; `None` when the population is undefined.
    pub mean: Option<f64>,
}

/// F_ST of one SNP from `(assigned copies, minor alleles)` per label.
pub fn fst_from_counts(groups: &[(u32, u32)]) -> Option<f64> {
    let (total, ones) = groups
        .iter()
        .fold((0u32, 0u32), |(t, o), &(n, x)| (t + n, o + x));
    if total == 0 || ones == 0 || ones == total {
        return None;
    }
    let p = f64::from(ones) / f64::from(total);
    let mut sum = 0.0;
    let mut regions = 0u32;
    for &(n, x) in groups {
        if n > 0 {
            let d = p - f64::from(x) / f64::from(n);
            sum += d * d;
            regions += 1;
        }
    }
    Some(sum / f64::from(regions) / (p * (1.0 - p)))
}

fn fst_impl(data: &AlleleMatrix, z: &Assignments, labels: &LabelIndex) -> Result<Vec<FstResult>> {
    if labels.len() != data.n() {
        return Err(Error::Alignment(format!(
            "{} labels for {} individuals",
            labels.len(),
            data.n()
        )));
    }
    let (k, g) = (z.k(), labels.groups());
    let mut per_snp = vec![Vec::with_capacity(data.l()); k];
    let mut seen_label = vec![vec![false; g]; k];
    let mut counts = vec![(0u32, 0u32); k * g];
    for s in 0..data.l() {
        counts.iter_mut().for_each(|c| *c = (0, 0));
        for i in 0..data.n() {
            let code = labels.code(i);
            let (zs, xs) = (z.pair(i, s), data.pair(i, s));
            for c in 0..2 {
                let cell = &mut counts[usize::from(zs[c]) * g + code];
                cell.0 += 1;
                cell.1 += u32::from(xs[c]);
            }
        }
        for pop in 0..k {
            let groups = &counts[pop * g..(pop + 1) * g];
            for (label, &(n, _)) in groups.iter().enumerate() {
                if n > 0 {
                    seen_label[pop][label] = true;
                }
            }
            per_snp[pop].push(fst_from_counts(groups));
        }
    }
    Ok(per_snp
        .into_iter()
        .zip(seen_label)
        .map(|(values, seen)| {
            let single_label = seen.iter().filter(|&&s| s).count() <= 1;
            let included: Vec<f64> = values.iter().flatten().copied().collect();
            let mean = (!single_label && !included.is_empty())
                .then(|| included.iter().sum::<f64>() / included.len() as f64);
            FstResult {
                per_snp: values,
                mean,
            }
        })
        .collect())
}

pub fn fst_vs_labels(data: &AlleleMatrix, z: &Assignments, labels: &LabelIndex, k: usize) -> Result<FstResult> {
    z.check_matches(data)?;
    Ok(fst_impl(data, z, labels)?.swap_remove(k))
}

pub fn fst_all(data: &AlleleMatrix, z: &Assignments, labels: &LabelIndex) -> Result<DiscrepancyVector> {
    Ok(DiscrepancyVector::new(
        fst_impl(data, z, labels)?.into_iter().map(|r| r.mean).collect(),
    ))
}
