//! Diploid genotype datasets.
//!
//! Genotypes are minor-allele dosages in {0, 1, 2}. Models and discrepancies
//! work on the split representation, two binary allele copies per cell, held
//! in an [`AlleleMatrix`]. Heterozygotes always split as `(1, 0)`.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One diploid genotype split into its two allele copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AllelePair {
    pub a1: u8,
    pub a2: u8,
}

impl AllelePair {
    pub fn dosage(self) -> u8 {
        self.a1 + self.a2
    }
}

pub fn split_diploid(genotype: u8) -> Result<AllelePair> {
    match genotype {
        0 => Ok(AllelePair { a1: 0, a2: 0 }),
        1 => Ok(AllelePair { a1: 1, a2: 0 }),
        2 => Ok(AllelePair { a1: 1, a2: 1 }),
        g => Err(Error::Domain(format!("genotype {g} outside {{0,1,2}}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenotypeDataset {
    n: usize,
    l: usize,
    genotypes: Vec<u8>,
    labels: Option<Vec<String>>,
    snp_ids: Vec<String>,
}

impl GenotypeDataset {
    /// Builds a dataset from a row-major `n x l` dosage matrix. SNP
    /// identifiers default to `snp1..snpL`.
    pub fn new(n: usize, l: usize, genotypes: Vec<u8>) -> Result<Self> {
        let snp_ids = (1..=l).map(|i| format!("snp{i}")).collect();
        Self::with_snp_ids(n, l, genotypes, snp_ids)
    }

    pub fn with_snp_ids(
        n: usize,
        l: usize,
        genotypes: Vec<u8>,
        snp_ids: Vec<String>,
    ) -> Result<Self> {
        if n == 0 || l == 0 {
            return Err(Error::Domain(format!(
                "dataset needs n >= 1 and L >= 1, got n={n}, L={l}"
            )));
        }
        if genotypes.len() != n * l {
            return Err(Error::Dimension(format!(
                "expected {} genotypes for {n}x{l}, got {}",
                n * l,
                genotypes.len()
            )));
        }
        if let Some(pos) = genotypes.iter().position(|&g| g > 2) {
            return Err(Error::Domain(format!(
                "genotype {} at individual {}, SNP {} outside {{0,1,2}}",
                genotypes[pos],
                pos / l + 1,
                pos % l + 1
            )));
        }
        if snp_ids.len() != l {
            return Err(Error::Dimension(format!(
                "{} SNP identifiers for {l} SNPs",
                snp_ids.len()
            )));
        }
        let mut seen = HashSet::with_capacity(l);
        for id in &snp_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Domain(format!("duplicate SNP identifier {id}")));
            }
        }
        Ok(GenotypeDataset {
            n,
            l,
            genotypes,
            labels: None,
            snp_ids,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::Alignment(format!(
                "{} labels for {} individuals",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    #[inline]
    pub fn genotype(&self, i: usize, snp: usize) -> u8 {
        self.genotypes[i * self.l + snp]
    }

    pub fn genotypes(&self) -> &[u8] {
        &self.genotypes
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn snp_ids(&self) -> &[String] {
        &self.snp_ids
    }

    pub fn alleles(&self) -> AlleleMatrix {
        AlleleMatrix::from_dosages(self.n, self.l, &self.genotypes)
    }

    /// Per-SNP minor-allele frequency, `sum_i g[i][snp] / 2n`.
    pub fn empirical_maf(&self) -> Vec<f64> {
        let mut sums = vec![0u64; self.l];
        for row in self.genotypes.chunks_exact(self.l) {
            for (s, &g) in sums.iter_mut().zip(row) {
                *s += u64::from(g);
            }
        }
        let denom = 2.0 * self.n as f64;
        sums.into_iter().map(|s| s as f64 / denom).collect()
    }

    /// Overwrites SNPs 2..B of every consecutive block of `block_length`
    /// SNPs with the block's first SNP. A trailing partial block is treated
    /// the same way.
    pub fn inject_ld(&self, block_length: usize) -> Result<GenotypeDataset> {
        if block_length < 2 {
            return Err(Error::Domain(format!(
                "LD block length must be at least 2, got {block_length}"
            )));
        }
        if block_length > self.l {
            return Err(Error::Domain(format!(
                "LD block length {block_length} exceeds L={}",
                self.l
            )));
        }
        let mut out = self.clone();
        for row in out.genotypes.chunks_exact_mut(self.l) {
            for block in row.chunks_mut(block_length) {
                let head = block[0];
                block.iter_mut().for_each(|g| *g = head);
            }
        }
        Ok(out)
    }
}

/// Binary allele copies, `n x l x 2`, row-major by individual then SNP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlleleMatrix {
    n: usize,
    l: usize,
    data: Vec<u8>,
}

impl AlleleMatrix {
    pub fn from_dosages(n: usize, l: usize, dosages: &[u8]) -> Self {
        assert_eq!(dosages.len(), n * l);
        let mut data = Vec::with_capacity(2 * n * l);
        for &g in dosages {
            let p = split_diploid(g).expect("dosages validated on construction");
            data.push(p.a1);
            data.push(p.a2);
        }
        AlleleMatrix { n, l, data }
    }

    /// Panics unless `data` has `2nl` entries in {0, 1}.
    pub fn from_raw(n: usize, l: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), 2 * n * l);
        assert!(data.iter().all(|&a| a <= 1), "alleles must be binary");
        AlleleMatrix { n, l, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    #[inline]
    pub fn get(&self, i: usize, snp: usize, copy: usize) -> u8 {
        self.data[(i * self.l + snp) * 2 + copy]
    }

    #[inline]
    pub fn pair(&self, i: usize, snp: usize) -> [u8; 2] {
        let base = (i * self.l + snp) * 2;
        [self.data[base], self.data[base + 1]]
    }

    /// Allele copies of individual `i`, length `2l`.
    #[inline]
    pub fn individual(&self, i: usize) -> &[u8] {
        &self.data[i * self.l * 2..(i + 1) * self.l * 2]
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn dosages(&self) -> Vec<u8> {
        self.data.chunks_exact(2).map(|p| p[0] + p[1]).collect()
    }

    pub fn to_dataset(&self) -> GenotypeDataset {
        GenotypeDataset::new(self.n, self.l, self.dosages())
            .expect("allele matrix dimensions are positive")
    }
}

/// Reads a genotype matrix file and an optional label file.
pub fn load_dataset(genotype_path: &Path, label_path: Option<&Path>) -> Result<GenotypeDataset> {
    let text = fs::read_to_string(genotype_path).map_err(|e| Error::io(genotype_path, e))?;
    let mut ds = parse_genotypes(&text, &genotype_path.display().to_string())?;
    if let Some(lp) = label_path {
        let text = fs::read_to_string(lp).map_err(|e| Error::io(lp, e))?;
        let labels = parse_labels(&text, ds.n, &lp.display().to_string())?;
        ds = ds.with_labels(labels)?;
    }
    Ok(ds)
}

pub fn parse_genotypes(text: &str, source: &str) -> Result<GenotypeDataset> {
    let parse_err = |line: usize, column: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        column,
        message,
    };
    let mut lines = text.lines().enumerate();
    let (n, l) = loop {
        let Some((idx, line)) = lines.next() else {
            return Err(parse_err(1, 1, "missing `n L` header".into()));
        };
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_err(idx + 1, 1, format!("header must be `n L`, got {line:?}")));
        }
        let parse_dim = |s: &str, col: usize| {
            s.parse::<usize>()
                .map_err(|_| parse_err(idx + 1, col, format!("invalid dimension {s:?}")))
        };
        break (parse_dim(fields[0], 1)?, parse_dim(fields[1], 2)?);
    };
    if n == 0 || l == 0 {
        return Err(Error::Domain(format!(
            "{source}: header declares n={n}, L={l}; both must be >= 1"
        )));
    }

    let mut genotypes = Vec::with_capacity(n * l);
    let mut rows = 0usize;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        if rows > n {
            return Err(parse_err(idx + 1, 1, format!("more than {n} genotype rows")));
        }
        let mut cols = 0usize;
        for (c, tok) in line.split_whitespace().enumerate() {
            cols += 1;
            if cols > l {
                return Err(parse_err(idx + 1, c + 1, format!("row has more than {l} values")));
            }
            let g = match tok {
                "0" => 0,
                "1" => 1,
                "2" => 2,
                "." | "NA" | "-1" | "9" => {
                    return Err(parse_err(
                        idx + 1,
                        c + 1,
                        format!("missing genotype {tok:?} is not supported"),
                    ))
                }
                other => {
                    return Err(parse_err(
                        idx + 1,
                        c + 1,
                        format!("genotype {other:?} outside {{0,1,2}}"),
                    ))
                }
            };
            genotypes.push(g);
        }
        if cols != l {
            return Err(parse_err(idx + 1, cols + 1, format!("row has {cols} values, expected {l}")));
        }
    }
    if rows != n {
        return Err(parse_err(
            text.lines().count() + 1,
            1,
            format!("found {rows} genotype rows, header declares {n}"),
        ));
    }
    GenotypeDataset::new(n, l, genotypes)
}

/// Label lines are `index<TAB>label` with 1-based individual indices; every
/// individual must appear exactly once.
pub fn parse_labels(text: &str, n: usize, source: &str) -> Result<Vec<String>> {
    let mut labels: Vec<Option<String>> = vec![None; n];
    let mut count = 0usize;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((index, label)) = line.split_once('\t') else {
            return Err(Error::Parse {
                path: source.to_string(),
                line: idx + 1,
                column: 1,
                message: "expected `index<TAB>label`".into(),
            });
        };
        let i: usize = index.trim().parse().map_err(|_| Error::Parse {
            path: source.to_string(),
            line: idx + 1,
            column: 1,
            message: format!("invalid individual index {index:?}"),
        })?;
        count += 1;
        if i == 0 || i > n {
            return Err(Error::Alignment(format!(
                "{source}: line {}: individual {i} not in 1..={n}",
                idx + 1
            )));
        }
        if labels[i - 1].is_some() {
            return Err(Error::Alignment(format!(
                "{source}: line {}: individual {i} labelled twice",
                idx + 1
            )));
        }
        labels[i - 1] = Some(label.trim().to_string());
    }
    if count != n {
        return Err(Error::Alignment(format!(
            "{source}: {count} labels for {n} individuals"
        )));
    }
    Ok(labels.into_iter().map(|l| l.expect("all indices seen")).collect())
}

pub fn write_genotypes(path: &Path, ds: &GenotypeDataset) -> Result<()> {
    let mut out = String::with_capacity(ds.n * ds.l * 2 + 32);
    out.push_str(&format!("{} {}\n", ds.n, ds.l));
    for row in ds.genotypes.chunks_exact(ds.l) {
        for (c, g) in row.iter().enumerate() {
            if c > 0 {
                out.push(' ');
            }
            out.push((b'0' + g) as char);
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_labels(path: &Path, labels: &[String]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for (i, label) in labels.iter().enumerate() {
        writeln!(f, "{}\t{}", i + 1, label).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_canonical_forms() {
        assert_eq!(split_diploid(0).unwrap(), AllelePair { a1: 0, a2: 0 });
        assert_eq!(split_diploid(1).unwrap(), AllelePair { a1: 1, a2: 0 });
        assert_eq!(split_diploid(2).unwrap(), AllelePair { a1: 1, a2: 1 });
        assert!(matches!(split_diploid(3), Err(Error::Domain(_))));
        for g in 0..=2 {
            assert_eq!(split_diploid(g).unwrap().dosage(), g);
        }
    }

    #[test]
    fn parses_small_matrix() {
        let ds = parse_genotypes("2 3\n0 1 2\n2 1 0\n", "mem").unwrap();
        assert_eq!((ds.n(), ds.l()), (2, 3));
        assert_eq!(ds.genotypes(), &[0, 1, 2, 2, 1, 0]);
    }

    #[test]
    fn bad_value_names_cell() {
        let err = parse_genotypes("2 3\n0 1 2\n2 3 0\n", "g.txt").unwrap_err();
        match err {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_values_rejected() {
        let err = parse_genotypes("1 2\n0 NA\n", "g.txt").unwrap_err();
        assert!(err.to_string().contains("missing genotype"));
    }

    #[test]
    fn row_count_mismatch() {
        assert!(parse_genotypes("3 2\n0 1\n1 1\n", "g").is_err());
        assert!(parse_genotypes("1 2\n0 1\n1 1\n", "g").is_err());
        assert!(parse_genotypes("1 2\n0 1 1\n", "g").is_err());
        assert!(parse_genotypes("1 2\n0\n", "g").is_err());
    }

    #[test]
    fn label_count_mismatch_is_alignment_error() {
        let err = parse_labels("1\ta\n2\tb\n3\tc\n", 2, "labels").unwrap_err();
        assert!(matches!(err, Error::Alignment(_)));
        let err = parse_labels("1\ta\n1\tb\n", 2, "labels").unwrap_err();
        assert!(matches!(err, Error::Alignment(_)));
    }

    #[test]
    fn labels_aligned_by_index() {
        let labels = parse_labels("2\tYRI\n1\tCEU\n", 2, "labels").unwrap();
        assert_eq!(labels, vec!["CEU", "YRI"]);
    }

    #[test]
    fn duplicate_snp_ids_rejected() {
        let ids = vec!["a".to_string(), "a".to_string()];
        assert!(GenotypeDataset::with_snp_ids(1, 2, vec![0, 1], ids).is_err());
    }

    #[test]
    fn maf_cases() {
        let zeros = GenotypeDataset::new(2, 2, vec![0; 4]).unwrap();
        assert_eq!(zeros.empirical_maf(), vec![0.0, 0.0]);
        let twos = GenotypeDataset::new(2, 2, vec![2; 4]).unwrap();
        assert_eq!(twos.empirical_maf(), vec![1.0, 1.0]);
        let col = GenotypeDataset::new(3, 1, vec![0, 1, 2]).unwrap();
        assert_eq!(col.empirical_maf(), vec![0.5]);
    }

    #[test]
    fn inject_ld_copies_block_heads() {
        let ds = GenotypeDataset::new(1, 6, vec![0, 1, 2, 1, 0, 2]).unwrap();
        let ld = ds.inject_ld(3).unwrap();
        assert_eq!(ld.genotypes(), &[0, 0, 0, 1, 1, 1]);
        assert!(ds.inject_ld(1).is_err());
        assert!(ds.inject_ld(7).is_err());
    }

    #[test]
    fn inject_ld_preserves_block_head_frequencies() {
        let ds = GenotypeDataset::new(3, 5, vec![0, 1, 2, 1, 0, 2, 2, 0, 1, 1, 1, 0, 0, 2, 2]).unwrap();
        let ld = ds.inject_ld(2).unwrap();
        let (a, b) = (ds.empirical_maf(), ld.empirical_maf());
        for head in [0, 2, 4] {
            assert_eq!(a[head], b[head]);
        }
        assert_eq!((ld.n(), ld.l()), (3, 5));
    }

    #[test]
    fn allele_roundtrip() {
        let ds = GenotypeDataset::new(2, 3, vec![0, 1, 2, 2, 1, 0]).unwrap();
        let alleles = ds.alleles();
        assert_eq!(alleles.pair(0, 1), [1, 0]);
        assert_eq!(alleles.to_dataset().genotypes(), ds.genotypes());
    }
}
