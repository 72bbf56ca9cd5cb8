//! Average posterior entropy of population assignments.
//!
//! Membership uses the fixed MAP assignment; the entropy itself comes from
//! the soft posterior `p(z | x, theta_i, phi_snp)` evaluated on the dataset
//! at hand, so replicated alleles change the value.

use rayon::prelude::*;

use super::DiscrepancyVector;
use crate::em::{allele_posterior, Assignments};
use crate::error::{Error, Result};
use crate::genotype::AlleleMatrix;
use crate::matrix::Matrix;

/// Shannon entropy in bits, `0 log 0 = 0`.
pub fn entropy_bits(p: &[f64]) -> f64 {
    let h: f64 = p
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum();
    h.max(0.0)
}

fn entropy_sums(data: &AlleleMatrix, theta: &Matrix, phi: &Matrix, z: &Assignments) -> Result<Vec<(f64, usize)>> {
    let k = z.k();
    if theta.cols() != k || phi.cols() != k || theta.rows() != data.n() || phi.rows() != data.l() {
        return Err(Error::Dimension("entropy: model shape does not match data".into()));
    }
    let per_individual: Vec<Vec<(f64, usize)>> = (0..data.n())
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![(0.0, 0usize); k];
            let mut post = vec![0.0; k];
            let alleles = data.individual(i);
            for (copy, &pop) in z.individual(i).iter().enumerate() {
                allele_posterior(theta.row(i), phi.row(copy / 2), alleles[copy], &mut post);
                let slot = &mut acc[usize::from(pop)];
                slot.0 += entropy_bits(&post);
                slot.1 += 1;
            }
            acc
        })
        .collect();
    let mut total = vec![(0.0, 0usize); k];
    for acc in per_individual {
        for (t, a) in total.iter_mut().zip(acc) {
            t.0 += a.0;
            t.1 += a.1;
        }
    }
    Ok(total)
}

pub fn average_entropy(data: &AlleleMatrix, theta: &Matrix, phi: &Matrix, z: &Assignments, k: usize) -> Result<Option<f64>> {
    let (sum, count) = entropy_sums(data, theta, phi, z)?[k];
    Ok((count > 0).then(|| sum / count as f64))
}

pub fn entropy_all(data: &AlleleMatrix, theta: &Matrix, phi: &Matrix, z: &Assignments) -> Result<DiscrepancyVector> {
    Ok(DiscrepancyVector::new(
        entropy_sums(data, theta, phi, z)?
            .into_iter()
            .map(|(sum, count)| (count > 0).then(|| sum / count as f64))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_and_uniform() {
        assert_eq!(entropy_bits(&[1.0, 0.0, 0.0]), 0.0);
        assert_eq!(entropy_bits(&[0.5, 0.5]), 1.0);
        let h = entropy_bits(&[0.2, 0.8]);
        assert!((h - 0.721_928_094_887_362_3).abs() < 1e-12);
    }

    #[test]
    fn averaged_by_map_membership() {
        // theta (0.5, 0.5), phi (0.2, 0.8): minor allele posterior (0.2, 0.8)
        // and major allele posterior (0.8, 0.2); both have the same entropy
        let data = AlleleMatrix::from_raw(1, 1, vec![1, 0]);
        let theta = Matrix::from_rows(&[vec![0.5, 0.5]]);
        let phi = Matrix::from_rows(&[vec![0.2, 0.8]]);
        let z = Assignments::from_raw(1, 1, 2, vec![1, 0]).unwrap();
        let v = entropy_all(&data, &theta, &phi, &z).unwrap();
        let h = entropy_bits(&[0.2, 0.8]);
        assert!((v.values[0].unwrap() - h).abs() < 1e-12);
        assert!((v.values[1].unwrap() - h).abs() < 1e-12);
    }

    #[test]
    fn separated_populations_have_zero_entropy() {
        let data = AlleleMatrix::from_raw(1, 1, vec![1, 1]);
        let theta = Matrix::from_rows(&[vec![1.0, 0.0]]);
        let phi = Matrix::from_rows(&[vec![1.0 - 1e-6, 1e-6]]);
        let z = Assignments::from_raw(1, 1, 2, vec![0, 0]).unwrap();
        let v = entropy_all(&data, &theta, &phi, &z).unwrap();
        assert_eq!(v.values, vec![Some(0.0), None]);
    }
}
