//! Mutual information between alleles at SNPs a fixed lag apart.
//!
//! For each SNP pair `(s, s + lag)` inside the first `max_snps` SNPs, the
//! comparable copy pairs of every individual (both copies assigned to the
//! same population) are pooled into a 2x2 table per population. The
//! discrepancy is the mean plug-in MI, in bits, over pairs whose table has at
//! least two observations.

use rayon::prelude::*;

use super::DiscrepancyVector;
use crate::em::Assignments;
use crate::genotype::AlleleMatrix;

/// Minimum pooled observations for a SNP pair to contribute.
pub const MIN_PAIR_OBSERVATIONS: u32 = 2;

/// Plug-in mutual information in bits of a 2x2 table indexed `[xa * 2 + xb]`.
pub fn mutual_information_bits(counts: [u32; 4]) -> f64 {
    let total: u32 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = f64::from(total);
    let row = [f64::from(counts[0] + counts[1]), f64::from(counts[2] + counts[3])];
    let col = [f64::from(counts[0] + counts[2]), f64::from(counts[1] + counts[3])];
    let mut mi = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let c = counts[a * 2 + b];
            if c > 0 {
                let c = f64::from(c);
                mi += (c / n) * (c * n / (row[a] * col[b])).log2();
            }
        }
    }
    mi.max(0.0)
}

/// Accumulates the 2x2 tables of every population for one SNP pair.
fn pair_tables(data: &AlleleMatrix, z: &Assignments, a: usize, b: usize, tables: &mut [[u32; 4]]) {
    tables.iter_mut().for_each(|t| *t = [0; 4]);
    for i in 0..data.n() {
        let (za, zb) = (z.pair(i, a), z.pair(i, b));
        let (xa, xb) = (data.pair(i, a), data.pair(i, b));
        for ca in 0..2 {
            for cb in 0..2 {
                if za[ca] == zb[cb] {
                    tables[usize::from(za[ca])][usize::from(xa[ca] * 2 + xb[cb])] += 1;
                }
            }
        }
    }
}

fn mi_sums(data: &AlleleMatrix, z: &Assignments, lag: usize, max_snps: usize) -> Vec<(f64, usize)> {
    let k = z.k();
    let window = data.l().min(max_snps);
    if lag == 0 || lag >= window {
        return vec![(0.0, 0); k];
    }
    let starts: Vec<usize> = (0..window - lag).collect();
    let per_chunk: Vec<Vec<(f64, usize)>> = starts
        .par_chunks(64)
        .map(|chunk| {
            let mut acc = vec![(0.0, 0usize); k];
            let mut tables = vec![[0u32; 4]; k];
            for &s in chunk {
                pair_tables(data, z, s, s + lag, &mut tables);
                for (pop, t) in tables.iter().enumerate() {
                    if t.iter().sum::<u32>() >= MIN_PAIR_OBSERVATIONS {
                        acc[pop].0 += mutual_information_bits(*t);
                        acc[pop].1 += 1;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![(0.0, 0usize); k];
    for chunk in per_chunk {
        for (t, c) in total.iter_mut().zip(chunk) {
            t.0 += c.0;
            t.1 += c.1;
        }
    }
    total
}

pub fn mutual_info_ld(data: &AlleleMatrix, z: &Assignments, k: usize, lag: usize, max_snps: usize) -> Option<f64> {
    let (sum, pairs) = mi_sums(data, z, lag, max_snps)[k];
    (pairs > 0).then(|| sum / pairs as f64)
}

pub fn mi_all(data: &AlleleMatrix, z: &Assignments, lag: usize, max_snps: usize) -> DiscrepancyVector {
    DiscrepancyVector::new(
        mi_sums(data, z, lag, max_snps)
            .into_iter()
            .map(|(sum, pairs)| (pairs > 0).then(|| sum / pairs as f64))
            .collect(),
    )
}
