//! Identity-by-state similarity between pairs of individuals.

use rayon::prelude::*;

use super::DiscrepancyVector;
use crate::em::Assignments;
use crate::genotype::AlleleMatrix;

/// Per-(individual, SNP) counts of copies assigned to one population and of
/// minor alleles among them.
struct PopulationCounts {
    l: usize,
    assigned: Vec<u8>,
    ones: Vec<u8>,
}

impl PopulationCounts {
    fn new(data: &AlleleMatrix, z: &Assignments, k: u16) -> Self {
        let (n, l) = (data.n(), data.l());
        let mut assigned = vec![0u8; n * l];
        let mut ones = vec![0u8; n * l];
        for (copy, (&za, &xa)) in z.as_slice().iter().zip(data.as_slice()).enumerate() {
            if za == k {
                assigned[copy / 2] += 1;
                ones[copy / 2] += xa;
            }
        }
        PopulationCounts { l, assigned, ones }
    }

    /// `(comparable allele pairs, equal pairs)` between individuals `a` and `b`.
    #[inline]
    fn compare(&self, a: usize, b: usize) -> (u32, u32) {
        let (ra, rb) = (a * self.l, b * self.l);
        let ca = &self.assigned[ra..ra + self.l];
        let cb = &self.assigned[rb..rb + self.l];
        let oa = &self.ones[ra..ra + self.l];
        let ob = &self.ones[rb..rb + self.l];
        let mut comparable = 0u32;
        let mut equal = 0u32;
        for s in 0..self.l {
            let (ca, cb, oa, ob) = (u32::from(ca[s]), u32::from(cb[s]), u32::from(oa[s]), u32::from(ob[s]));
            comparable += ca * cb;
            equal += oa * ob + (ca - oa) * (cb - ob);
        }
        (comparable, equal)
    }
}

/// Mean fraction of equal alleles over individual pairs, comparing copies
/// assigned to `k` at the same SNP. Pairs with fewer than `min_shared`
/// comparable allele pairs are skipped; `None` if no pair remains.
pub fn ibs_similarity(data: &AlleleMatrix, z: &Assignments, k: usize, min_shared: usize) -> Option<f64> {
    let counts = PopulationCounts::new(data, z, k as u16);
    let n = data.n();
    let partial: Vec<(f64, usize)> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut sum = 0.0;
            let mut pairs = 0usize;
            for b in a + 1..n {
                let (comparable, equal) = counts.compare(a, b);
                if comparable as usize >= min_shared.max(1) {
                    sum += f64::from(equal) / f64::from(comparable);
                    pairs += 1;
                }
            }
            (sum, pairs)
        })
        .collect();
    let (sum, pairs) = partial
        .into_iter()
        .fold((0.0, 0usize), |(s, p), (s2, p2)| (s + s2, p + p2));
    (pairs > 0).then(|| sum / pairs as f64)
}

pub fn ibs_all(data: &AlleleMatrix, z: &Assignments, min_shared: usize) -> DiscrepancyVector {
    DiscrepancyVector::new((0..z.k()).map(|k| ibs_similarity(data, z, k, min_shared)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrepancy::pairs::enumerate_pair_comparisons;

    /// Direct evaluation through the scenario enumeration.
    fn oracle(data: &AlleleMatrix, z: &Assignments, k: u16, min_shared: usize) -> Option<f64> {
        let mut sum = 0.0;
        let mut pairs = 0;
        for a in 0..data.n() {
            for b in a + 1..data.n() {
                let (mut comparable, mut equal) = (0usize, 0usize);
                for s in 0..data.l() {
                    let m = enumerate_pair_comparisons(z.pair(a, s), z.pair(b, s), k);
                    for (ca, cb) in m.comparisons {
                        comparable += 1;
                        equal += usize::from(data.get(a, s, ca) == data.get(b, s, cb));
                    }
                }
                if comparable >= min_shared.max(1) {
                    sum += equal as f64 / comparable as f64;
                    pairs += 1;
                }
            }
        }
        (pairs > 0).then(|| sum / pairs as f64)
    }

    fn all_k(n: usize, l: usize) -> Assignments {
        Assignments::from_raw(n, l, 1, vec![0; 2 * n * l]).unwrap()
    }

    #[test]
    fn identical_homozygous_individuals() {
        let data = AlleleMatrix::from_dosages(2, 4, &[0, 2, 2, 0, 0, 2, 2, 0]);
        assert_eq!(ibs_similarity(&data, &all_k(2, 4), 0, 1), Some(1.0));
    }

    #[test]
    fn complementary_individuals() {
        let data = AlleleMatrix::from_dosages(2, 3, &[0, 2, 0, 2, 0, 2]);
        assert_eq!(ibs_similarity(&data, &all_k(2, 3), 0, 1), Some(0.0));
    }

    #[test]
    fn six_hundred_comparable_half_equal() {
        // 600 SNPs with one copy each assigned to population 0 (Single
        // match), 400 SNPs with nothing comparable; alleles equal at 300.
        let (n, l) = (2, 1000);
        let mut alleles = vec![0u8; 2 * n * l];
        let mut z = vec![1u16; 2 * n * l];
        for s in 0..600 {
            z[s * 2] = 0;
            z[(l + s) * 2 + 1] = 0;
            alleles[s * 2] = 1;
            alleles[(l + s) * 2 + 1] = u8::from(s < 300);
        }
        let data = AlleleMatrix::from_raw(n, l, alleles);
        let z = Assignments::from_raw(n, l, 2, z).unwrap();
        assert_eq!(ibs_similarity(&data, &z, 0, 500), Some(0.5));
        assert_eq!(ibs_similarity(&data, &z, 0, 601), None);
    }

    #[test]
    fn counts_match_enumeration_oracle() {
        let mut state = 99u64;
        let mut next = |m: u64| {
            state = crate::seed::mix64(state);
            state % m
        };
        for _ in 0..30 {
            let (n, l) = (5, 12);
            let alleles: Vec<u8> = (0..2 * n * l).map(|_| next(2) as u8).collect();
            let z: Vec<u16> = (0..2 * n * l).map(|_| next(3) as u16).collect();
            let data = AlleleMatrix::from_raw(n, l, alleles);
            let z = Assignments::from_raw(n, l, 3, z).unwrap();
            for k in 0..3 {
                let fast = ibs_similarity(&data, &z, k, 3);
                let slow = oracle(&data, &z, k as u16, 3);
                match (fast, slow) {
                    (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12),
                    (a, b) => assert_eq!(a, b),
                }
            }
        }
    }
}
