//! Expectation maximization for the admixture model.
//!
//! Every allele copy `(i, snp, j)` carries a latent population. The E-step
//! computes `q(z = k | x) ∝ theta[i][k] * phi[snp][k]^x * (1 - phi[snp][k])^(1-x)`;
//! the M-step sets `theta[i][k]` to the mean responsibility over the `2L`
//! copies of individual `i` and `phi[snp][k]` to the responsibility-weighted
//! frequency of the minor allele. Fitting runs a fixed number of iterations.

use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genotype::{AlleleMatrix, GenotypeDataset};
use crate::matrix::Matrix;
use crate::seed::{derive_seed, rng_from_seed, Stream};
use crate::tsv;

pub const DEFAULT_ITERATIONS: usize = 1000;
pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_GAMMA: f64 = 1.0;
/// Initial frequencies are clamped to this range.
pub const INIT_PHI_CLAMP: (f64, f64) = (0.05, 0.95);
/// Upper bound of the uniform jitter added to the empirical MAF at init.
pub const INIT_PHI_JITTER: f64 = 0.1;
/// Updated frequencies are clamped to this range so the likelihood stays finite.
pub const UPDATE_PHI_CLAMP: (f64, f64) = (1e-6, 1.0 - 1e-6);

/// SNPs per work unit in a fitting pass. Fixed so that reductions happen in
/// the same order regardless of the number of threads.
const SNP_CHUNK: usize = 256;
/// Cells whose likelihoods are multiplied before taking one logarithm.
const LL_BATCH: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// `n x K`, rows on the simplex.
    pub theta: Matrix,
    /// `L x K` minor-allele frequencies.
    pub phi: Matrix,
    pub alpha: f64,
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(theta: Matrix, phi: Matrix) -> Result<Self> {
        if theta.cols() != phi.cols() || theta.cols() == 0 {
            return Err(Error::Dimension(format!(
                "theta has {} populations, phi has {}",
                theta.cols(),
                phi.cols()
            )));
        }
        Ok(ModelParams {
            theta,
            phi,
            alpha: DEFAULT_ALPHA,
            gamma: DEFAULT_GAMMA,
        })
    }

    pub fn k(&self) -> usize {
        self.theta.cols()
    }

    pub fn n(&self) -> usize {
        self.theta.rows()
    }

    pub fn l(&self) -> usize {
        self.phi.rows()
    }

    fn check_dims(&self, n: usize, l: usize) -> Result<()> {
        if self.n() != n || self.l() != l {
            return Err(Error::Dimension(format!(
                "model is {}x{} (n x L), data is {n}x{l}",
                self.n(),
                self.l()
            )));
        }
        Ok(())
    }

    /// Relabels populations: new population `c` is old population `perm[c]`.
    pub fn permuted(&self, perm: &[usize]) -> ModelParams {
        ModelParams {
            theta: self.theta.permute_cols(perm),
            phi: self.phi.permute_cols(perm),
            alpha: self.alpha,
            gamma: self.gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub iterations: usize,
    pub seed: u64,
    pub init_clamp: (f64, f64),
    pub update_clamp: (f64, f64),
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            iterations: DEFAULT_ITERATIONS,
            seed: 0,
            init_clamp: INIT_PHI_CLAMP,
            update_clamp: UPDATE_PHI_CLAMP,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be >= 1".into()));
        }
        for (name, (lo, hi)) in [("init", self.init_clamp), ("update", self.update_clamp)] {
            if !(0.0 < lo && lo < hi && hi < 1.0) {
                return Err(Error::Config(format!(
                    "{name} clamp needs 0 < lo < hi < 1, got ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

/// Hard population assignments for every allele copy, `n x L x 2`, stored
/// zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignments {
    n: usize,
    l: usize,
    k: usize,
    data: Vec<u16>,
}

impl Assignments {
    pub fn from_raw(n: usize, l: usize, k: usize, data: Vec<u16>) -> Result<Self> {
        if data.len() != 2 * n * l {
            return Err(Error::Dimension(format!(
                "{} assignments for {n}x{l}x2 allele copies",
                data.len()
            )));
        }
        if k == 0 || k > usize::from(u16::MAX) {
            return Err(Error::Domain(format!("unsupported population count {k}")));
        }
        if let Some(bad) = data.iter().find(|&&z| usize::from(z) >= k) {
            return Err(Error::Domain(format!("assignment {} outside 1..={k}", bad + 1)));
        }
        Ok(Assignments { n, l, k, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, snp: usize, copy: usize) -> u16 {
        self.data[(i * self.l + snp) * 2 + copy]
    }

    #[inline]
    pub fn pair(&self, i: usize, snp: usize) -> [u16; 2] {
        let base = (i * self.l + snp) * 2;
        [self.data[base], self.data[base + 1]]
    }

    #[inline]
    pub fn individual(&self, i: usize) -> &[u16] {
        &self.data[i * self.l * 2..(i + 1) * self.l * 2]
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.data
    }

    /// Relabels so that new population `c` is old population `perm[c]`.
    pub fn permuted(&self, perm: &[usize]) -> Assignments {
        let mut inverse = vec![0u16; self.k];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new as u16;
        }
        Assignments {
            data: self.data.iter().map(|&z| inverse[usize::from(z)]).collect(),
            ..self.clone()
        }
    }

    pub fn check_matches(&self, data: &AlleleMatrix) -> Result<()> {
        if self.n != data.n() || self.l != data.l() {
            return Err(Error::Dimension(format!(
                "assignments are {}x{}, data is {}x{}",
                self.n,
                self.l,
                data.n(),
                data.l()
            )));
        }
        Ok(())
    }
}

/// Soft posteriors `q` (`n x L x 2 x K`) and their MAP assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentPosterior {
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub q: Vec<f64>,
    pub z_map: Assignments,
}

impl AssignmentPosterior {
    #[inline]
    pub fn q(&self, i: usize, snp: usize, copy: usize) -> &[f64] {
        let base = ((i * self.l + snp) * 2 + copy) * self.k;
        &self.q[base..base + self.k]
    }
}

/// Writes the normalized posterior over populations for one allele copy into
/// `out` and returns the normalizer `sum_k theta_k * p(x | phi_k)`.
#[inline]
pub fn allele_posterior(theta: &[f64], phi: &[f64], allele: u8, out: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for ((o, &t), &p) in out.iter_mut().zip(theta).zip(phi) {
        let w = if allele == 1 { t * p } else { t * (1.0 - p) };
        *o = w;
        total += w;
    }
    if total > 0.0 {
        out.iter_mut().for_each(|o| *o /= total);
    }
    total
}

/// Index of the largest entry, lowest index on ties.
#[inline]
pub fn argmax_lowest(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = k;
        }
    }
    best
}

/// `phi = clamp(maf + U(0, 0.1))`, `theta_i = u / sum(u)` with `u ~ U(0,1)^K`.
pub fn init_params(ds: &GenotypeDataset, k: usize, seed: u64, clamp: (f64, f64)) -> Result<ModelParams> {
    if k == 0 {
        return Err(Error::Config("K must be >= 1".into()));
    }
    let mut rng = rng_from_seed(derive_seed(seed, Stream::Init, 0));
    let maf = ds.empirical_maf();
    let mut phi = Matrix::zeros(ds.l(), k);
    for (snp, &f) in maf.iter().enumerate() {
        for c in 0..k {
            let u = rng.random::<f64>() * INIT_PHI_JITTER;
            phi.set(snp, c, (f + u).clamp(clamp.0, clamp.1));
        }
    }
    let mut theta = Matrix::zeros(ds.n(), k);
    for i in 0..ds.n() {
        let row = theta.row_mut(i);
        row.iter_mut().for_each(|v| *v = rng.random::<f64>());
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
        } else {
            row.iter_mut().for_each(|v| *v = 1.0 / k as f64);
        }
    }
    ModelParams::new(theta, phi)
}

pub fn e_step(data: &AlleleMatrix, params: &ModelParams) -> Result<AssignmentPosterior> {
    params.check_dims(data.n(), data.l())?;
    let (n, l, k) = (data.n(), data.l(), params.k());
    let mut q = vec![0.0; n * l * 2 * k];
    let mut z = vec![0u16; n * l * 2];
    q.par_chunks_mut(l * 2 * k)
        .zip(z.par_chunks_mut(l * 2))
        .enumerate()
        .try_for_each(|(i, (qi, zi))| {
            let theta = params.theta.row(i);
            let alleles = data.individual(i);
            for (copy, (out, zc)) in qi.chunks_exact_mut(k).zip(zi.iter_mut()).enumerate() {
                let snp = copy / 2;
                let total = allele_posterior(theta, params.phi.row(snp), alleles[copy], out);
                if !(total > 0.0 && total.is_finite()) {
                    return Err(Error::Invariant(format!(
                        "zero posterior mass at individual {}, SNP {}, copy {}",
                        i + 1,
                        snp + 1,
                        copy % 2 + 1
                    )));
                }
                *zc = argmax_lowest(out) as u16;
            }
            Ok(())
        })?;
    Ok(AssignmentPosterior {
        n,
        l,
        k,
        q,
        z_map: Assignments::from_raw(n, l, k, z)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MStep {
    pub params: ModelParams,
    /// `(snp, population)` cells with zero responsibility mass; their
    /// frequency was set to 0.5.
    pub empty_cells: Vec<(usize, usize)>,
}

pub fn m_step(data: &AlleleMatrix, post: &AssignmentPosterior, clamp: (f64, f64)) -> Result<MStep> {
    if post.n != data.n() || post.l != data.l() {
        return Err(Error::Dimension("posterior does not match data".into()));
    }
    let (n, l, k) = (post.n, post.l, post.k);
    let mut theta = Matrix::zeros(n, k);
    let mut num = Matrix::zeros(l, k);
    let mut den = Matrix::zeros(l, k);
    for i in 0..n {
        for snp in 0..l {
            for copy in 0..2 {
                let q = post.q(i, snp, copy);
                let x = data.get(i, snp, copy);
                for c in 0..k {
                    theta.row_mut(i)[c] += q[c];
                    den.row_mut(snp)[c] += q[c];
                    if x == 1 {
                        num.row_mut(snp)[c] += q[c];
                    }
                }
            }
        }
    }
    let scale = 1.0 / (2.0 * l as f64);
    theta.as_mut_slice().iter_mut().for_each(|t| *t *= scale);
    let mut phi = Matrix::zeros(l, k);
    let mut empty_cells = Vec::new();
    for snp in 0..l {
        for c in 0..k {
            let d = den.get(snp, c);
            let p = if d > 0.0 {
                (num.get(snp, c) / d).clamp(clamp.0, clamp.1)
            } else {
                empty_cells.push((snp, c));
                0.5
            };
            phi.set(snp, c, p);
        }
    }
    Ok(MStep {
        params: ModelParams::new(theta, phi)?,
        empty_cells,
    })
}

/// Observed-data log-likelihood in nats,
/// `sum_{i,snp,j} ln sum_k theta[i][k] phi^x (1 - phi)^(1 - x)`.
pub fn log_likelihood(data: &AlleleMatrix, params: &ModelParams) -> Result<f64> {
    params.check_dims(data.n(), data.l())?;
    let per_individual: Vec<f64> = (0..data.n())
        .into_par_iter()
        .map(|i| {
            let theta = params.theta.row(i);
            let alleles = data.individual(i);
            let mut ll = 0.0;
            for (copy, &x) in alleles.iter().enumerate() {
                let phi = params.phi.row(copy / 2);
                let p: f64 = theta
                    .iter()
                    .zip(phi)
                    .map(|(&t, &f)| if x == 1 { t * f } else { t * (1.0 - f) })
                    .sum();
                ll += p.ln();
            }
            ll
        })
        .collect();
    Ok(per_individual.iter().sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    #[serde(rename = "K")]
    pub k: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub iterations: usize,
    pub seed: u64,
    pub loglik_trace: Vec<f64>,
    /// Zero-mass `(snp, population)` cells in the final M-step, 1-based.
    #[serde(default)]
    pub empty_cells: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub params: ModelParams,
    pub z_map: Assignments,
    /// Soft posteriors of the final E-step; absent for models read from disk.
    pub posterior: Option<AssignmentPosterior>,
    pub meta: FitMeta,
}

impl FittedModel {
    pub fn k(&self) -> usize {
        self.params.k()
    }

    pub fn loglik_trace(&self) -> &[f64] {
        &self.meta.loglik_trace
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        tsv::write_matrix(&dir.join("theta.tsv"), &self.params.theta)?;
        tsv::write_matrix(&dir.join("phi.tsv"), &self.params.phi)?;

        let (n, l) = (self.z_map.n(), self.z_map.l());
        let mut z = String::with_capacity(n * l * 4);
        for i in 0..n {
            let row: Vec<String> = self
                .z_map
                .individual(i)
                .iter()
                .map(|&k| (k + 1).to_string())
                .collect();
            z.push_str(&row.join("\t"));
            z.push('\n');
        }
        let zpath = dir.join("zmap.tsv");
        fs::write(&zpath, z).map_err(|e| Error::io(&zpath, e))?;

        let mpath = dir.join("meta.json");
        let meta = MetaOnDisk::from(&self.meta);
        let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::json(&mpath, e))?;
        fs::write(&mpath, json + "\n").map_err(|e| Error::io(&mpath, e))
    }

    pub fn load(dir: &Path) -> Result<FittedModel> {
        let theta = tsv::read_matrix(&dir.join("theta.tsv"))?;
        let phi = tsv::read_matrix(&dir.join("phi.tsv"))?;
        let mpath = dir.join("meta.json");
        let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
        let on_disk: MetaOnDisk = serde_json::from_str(&text).map_err(|e| Error::json(&mpath, e))?;
        let meta = on_disk.into_meta()?;
        if theta.rows() != meta.n || theta.cols() != meta.k || phi.rows() != meta.l || phi.cols() != meta.k {
            return Err(Error::Dimension(format!(
                "{}: theta/phi shapes disagree with meta.json",
                dir.display()
            )));
        }

        let zpath = dir.join("zmap.tsv");
        let text = fs::read_to_string(&zpath).map_err(|e| Error::io(&zpath, e))?;
        let mut z = Vec::with_capacity(meta.n * meta.l * 2);
        let mut rows = 0;
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            rows += 1;
            let before = z.len();
            for (c, tok) in line.split('\t').enumerate() {
                let v: u16 = tok.trim().parse().ok().filter(|&v| v >= 1).ok_or_else(|| Error::Parse {
                    path: zpath.display().to_string(),
                    line: idx + 1,
                    column: c + 1,
                    message: format!("invalid population index {tok:?}"),
                })?;
                z.push(v - 1);
            }
            if z.len() - before != 2 * meta.l {
                return Err(Error::Parse {
                    path: zpath.display().to_string(),
                    line: idx + 1,
                    column: 1,
                    message: format!("expected {} assignments", 2 * meta.l),
                });
            }
        }
        if rows != meta.n {
            return Err(Error::Dimension(format!("zmap.tsv has {rows} rows, expected {}", meta.n)));
        }
        Ok(FittedModel {
            params: ModelParams::new(theta, phi)?,
            z_map: Assignments::from_raw(meta.n, meta.l, meta.k, z)?,
            posterior: None,
            meta,
        })
    }
}

/// meta.json with the trace printed at 10 significant digits.
#[derive(Serialize, Deserialize)]
struct MetaOnDisk {
    #[serde(rename = "K")]
    k: usize,
    n: usize,
    #[serde(rename = "L")]
    l: usize,
    iterations: usize,
    seed: u64,
    loglik_trace: Vec<serde_json::Value>,
    #[serde(default)]
    empty_cells: Vec<(usize, usize)>,
}

impl From<&FitMeta> for MetaOnDisk {
    fn from(m: &FitMeta) -> Self {
        MetaOnDisk {
            k: m.k,
            n: m.n,
            l: m.l,
            iterations: m.iterations,
            seed: m.seed,
            loglik_trace: m
                .loglik_trace
                .iter()
                .map(|&v| {
                    let short: f64 = tsv::fmt_float(v).parse().unwrap_or(v);
                    serde_json::Value::from(short)
                })
                .collect(),
            empty_cells: m.empty_cells.clone(),
        }
    }
}

impl MetaOnDisk {
    fn into_meta(self) -> Result<FitMeta> {
        let trace = self
            .loglik_trace
            .iter()
            .map(|v| v.as_f64().ok_or_else(|| Error::Config("non-numeric loglik_trace entry".into())))
            .collect::<Result<Vec<f64>>>()?;
        Ok(FitMeta {
            k: self.k,
            n: self.n,
            l: self.l,
            iterations: self.iterations,
            seed: self.seed,
            loglik_trace: trace,
            empty_cells: self.empty_cells,
        })
    }
}

/// One fused E+M pass over dosages. Returns updated parameters, the
/// log-likelihood of the *input* parameters, and zero-mass cells.
fn em_pass(
    dosages: &[u8],
    n: usize,
    l: usize,
    params: &ModelParams,
    clamp: (f64, f64),
) -> (ModelParams, f64, Vec<(usize, usize)>) {
    let k = params.k();
    let mut phi_new = Matrix::zeros(l, k);

    struct ChunkOut {
        theta_part: Vec<f64>,
        ll: f64,
        empty: Vec<(usize, usize)>,
    }

    let outs: Vec<ChunkOut> = phi_new
        .as_mut_slice()
        .par_chunks_mut(SNP_CHUNK * k)
        .enumerate()
        .map(|(chunk, phi_out)| {
            let start = chunk * SNP_CHUNK;
            let width = phi_out.len() / k;
            let mut theta_part = vec![0.0; n * k];
            let mut den = vec![0.0; width * k];
            let mut w1 = vec![0.0; k];
            let mut w0 = vec![0.0; k];
            let mut ll = 0.0;
            for i in 0..n {
                let theta = params.theta.row(i);
                let row = &dosages[i * l + start..i * l + start + width];
                let tp = &mut theta_part[i * k..(i + 1) * k];
                // per-copy likelihoods are >= 1e-6 after clamping, so a
                // product over LL_BATCH cells (2 copies each) stays normal
                let mut prod: f64 = 1.0;
                for (s, &g) in row.iter().enumerate() {
                    if s % LL_BATCH == 0 && s > 0 {
                        ll += prod.ln();
                        prod = 1.0;
                    }
                    let phi = params.phi.row(start + s);
                    let ones = f64::from(g);
                    let zeros = 2.0 - ones;
                    let mut s1 = 0.0;
                    let mut s0 = 0.0;
                    for c in 0..k {
                        w1[c] = theta[c] * phi[c];
                        w0[c] = theta[c] * (1.0 - phi[c]);
                        s1 += w1[c];
                        s0 += w0[c];
                    }
                    let (a1, a0) = match g {
                        0 => {
                            prod *= s0 * s0;
                            (0.0, zeros / s0)
                        }
                        1 => {
                            prod *= s1 * s0;
                            (ones / s1, zeros / s0)
                        }
                        _ => {
                            prod *= s1 * s1;
                            (ones / s1, 0.0)
                        }
                    };
                    let num = &mut phi_out[s * k..(s + 1) * k];
                    let d = &mut den[s * k..(s + 1) * k];
                    for c in 0..k {
                        let r1 = w1[c] * a1;
                        let r = r1 + w0[c] * a0;
                        tp[c] += r;
                        num[c] += r1;
                        d[c] += r;
                    }
                }
                ll += prod.ln();
            }
            let mut empty = Vec::new();
            for (idx, (p, &d)) in phi_out.iter_mut().zip(&den).enumerate() {
                if d > 0.0 {
                    *p = (*p / d).clamp(clamp.0, clamp.1);
                } else {
                    *p = 0.5;
                    empty.push((start + idx / k, idx % k));
                }
            }
            ChunkOut {
                theta_part,
                ll,
                empty,
            }
        })
        .collect();

    let mut theta = Matrix::zeros(n, k);
    let mut ll = 0.0;
    let mut empty = Vec::new();
    for out in outs {
        for (t, p) in theta.as_mut_slice().iter_mut().zip(&out.theta_part) {
            *t += p;
        }
        ll += out.ll;
        empty.extend(out.empty);
    }
    let scale = 1.0 / (2.0 * l as f64);
    theta.as_mut_slice().iter_mut().for_each(|t| *t *= scale);
    let params = ModelParams {
        theta,
        phi: phi_new,
        alpha: params.alpha,
        gamma: params.gamma,
    };
    (params, ll, empty)
}

/// Initializes and runs exactly `cfg.iterations` EM iterations, then a final
/// E-step for the MAP assignments. `loglik_trace[t]` is the log-likelihood
/// after iteration `t + 1`.
pub fn fit(ds: &GenotypeDataset, k: usize, cfg: &FitConfig) -> Result<FittedModel> {
    cfg.validate()?;
    let mut params = init_params(ds, k, cfg.seed, cfg.init_clamp)?;
    let (n, l) = (ds.n(), ds.l());
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut empty = Vec::new();
    for it in 0..cfg.iterations {
        let (next, ll_prev, e) = em_pass(ds.genotypes(), n, l, &params, cfg.update_clamp);
        if it > 0 {
            trace.push(ll_prev);
        }
        params = next;
        empty = e;
    }
    let alleles = ds.alleles();
    trace.push(log_likelihood(&alleles, &params)?);
    let posterior = e_step(&alleles, &params)?;
    Ok(FittedModel {
        z_map: posterior.z_map.clone(),
        posterior: Some(posterior),
        meta: FitMeta {
            k,
            n,
            l,
            iterations: cfg.iterations,
            seed: cfg.seed,
            loglik_trace: trace,
            empty_cells: empty.into_iter().map(|(s, c)| (s + 1, c + 1)).collect(),
        },
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(theta: &[Vec<f64>], phi: &[Vec<f64>]) -> ModelParams {
        ModelParams::new(Matrix::from_rows(theta), Matrix::from_rows(phi)).unwrap()
    }

    #[test]
    fn init_clamps_and_normalizes() {
        let ds = GenotypeDataset::new(3, 4, vec![0, 0, 2, 2, 0, 1, 2, 2, 0, 2, 2, 2]).unwrap();
        let p = init_params(&ds, 3, 5, INIT_PHI_CLAMP).unwrap();
        assert!(p.phi.as_slice().iter().all(|&f| (0.05..=0.95).contains(&f)));
        for c in 0..3 {
            let f = p.phi.get(0, c);
            assert!((0.05..=0.1).contains(&f), "zero-MAF SNP init {f}");
        }
        for i in 0..3 {
            assert_abs_diff_eq!(p.theta.row(i).iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
        let one = init_params(&ds, 1, 5, INIT_PHI_CLAMP).unwrap();
        assert!(one.theta.as_slice().iter().all(|&t| t == 1.0));
    }

    #[test]
    fn e_step_hand_values() {
        let data = AlleleMatrix::from_raw(1, 1, vec![1, 0]);
        let post = e_step(&data, &params(&[vec![0.5, 0.5]], &[vec![0.2, 0.8]])).unwrap();
        assert_abs_diff_eq!(post.q(0, 0, 0)[0], 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(post.q(0, 0, 0)[1], 0.8, epsilon = 1e-12);
        assert_eq!(post.z_map.get(0, 0, 0), 1);
        assert_eq!(post.z_map.get(0, 0, 1), 0);

        let post = e_step(&data, &params(&[vec![1.0, 0.0]], &[vec![0.3, 0.9]])).unwrap();
        assert_eq!(post.q(0, 0, 0), &[1.0, 0.0]);
        assert_eq!(post.q(0, 0, 1), &[1.0, 0.0]);

        let post = e_step(&data, &params(&[vec![0.5, 0.5]], &[vec![0.4, 0.4]])).unwrap();
        assert_eq!(post.q(0, 0, 0), &[0.5, 0.5]);
        assert_eq!(post.z_map.get(0, 0, 0), 0);
    }

    #[test]
    fn m_step_hand_values() {
        // two individuals, one SNP, alleles (1,1) and (0,0)
        let data = AlleleMatrix::from_raw(2, 1, vec![1, 1, 0, 0]);
        let z = Assignments::from_raw(2, 1, 2, vec![0, 0, 1, 1]).unwrap();
        let post = AssignmentPosterior {
            n: 2,
            l: 1,
            k: 2,
            q: vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0],
            z_map: z,
        };
        let m = m_step(&data, &post, UPDATE_PHI_CLAMP).unwrap();
        assert_eq!(m.params.phi.row(0), &[1.0 - 1e-6, 1e-6]);
        assert_eq!(m.params.theta.row(0), &[1.0, 0.0]);
        assert!(m.empty_cells.is_empty());
    }

    #[test]
    fn m_step_flags_empty_population() {
        let data = AlleleMatrix::from_raw(1, 1, vec![1, 1]);
        let z = Assignments::from_raw(1, 1, 2, vec![0, 0]).unwrap();
        let post = AssignmentPosterior {
            n: 1,
            l: 1,
            k: 2,
            q: vec![1.0, 0.0, 1.0, 0.0],
            z_map: z,
        };
        let m = m_step(&data, &post, UPDATE_PHI_CLAMP).unwrap();
        assert_eq!(m.params.phi.row(0), &[1.0 - 1e-6, 0.5]);
        assert_eq!(m.empty_cells, vec![(0, 1)]);
    }

    #[test]
    fn fused_pass_matches_separate_steps() {
        let ds = GenotypeDataset::new(3, 5, vec![0, 1, 2, 1, 0, 2, 2, 0, 1, 1, 1, 0, 0, 2, 1]).unwrap();
        let p = init_params(&ds, 3, 17, INIT_PHI_CLAMP).unwrap();
        let alleles = ds.alleles();
        let post = e_step(&alleles, &p).unwrap();
        let separate = m_step(&alleles, &post, UPDATE_PHI_CLAMP).unwrap().params;
        let (fused, ll, _) = em_pass(ds.genotypes(), 3, 5, &p, UPDATE_PHI_CLAMP);
        for (a, b) in separate.theta.as_slice().iter().zip(fused.theta.as_slice()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        for (a, b) in separate.phi.as_slice().iter().zip(fused.phi.as_slice()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(ll, log_likelihood(&alleles, &p).unwrap(), epsilon = 1e-10);
    }

    #[test]
    fn log_likelihood_single_cell() {
        let data = AlleleMatrix::from_raw(1, 1, vec![1, 0]);
        let ll = log_likelihood(&data, &params(&[vec![1.0]], &[vec![0.5]])).unwrap();
        assert_abs_diff_eq!(ll, 2.0 * 0.5f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn degenerate_theta_equals_single_population() {
        let data = AlleleMatrix::from_dosages(2, 3, &[0, 1, 2, 2, 2, 0]);
        let two = params(
            &[vec![1.0, 0.0], vec![1.0, 0.0]],
            &[vec![0.3, 0.6], vec![0.2, 0.5], vec![0.7, 0.1]],
        );
        let one = params(&[vec![1.0], vec![1.0]], &[vec![0.3], vec![0.2], vec![0.7]]);
        assert_eq!(
            log_likelihood(&data, &two).unwrap(),
            log_likelihood(&data, &one).unwrap()
        );
    }

    #[test]
    fn k1_fit_is_closed_form() {
        let ds = GenotypeDataset::new(3, 4, vec![0, 1, 2, 1, 1, 1, 0, 2, 2, 0, 1, 1]).unwrap();
        let cfg = FitConfig {
            iterations: 1,
            ..FitConfig::default()
        };
        let m = fit(&ds, 1, &cfg).unwrap();
        assert!(m.params.theta.as_slice().iter().all(|&t| t == 1.0));
        for (snp, maf) in ds.empirical_maf().into_iter().enumerate() {
            assert_abs_diff_eq!(
                m.params.phi.get(snp, 0),
                maf.clamp(UPDATE_PHI_CLAMP.0, UPDATE_PHI_CLAMP.1),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn model_dir_roundtrip() {
        let ds = GenotypeDataset::new(3, 4, vec![0, 1, 2, 1, 1, 1, 0, 2, 2, 0, 1, 1]).unwrap();
        let cfg = FitConfig {
            iterations: 5,
            seed: 3,
            ..FitConfig::default()
        };
        let m = fit(&ds, 2, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        let back = FittedModel::load(dir.path()).unwrap();
        assert_eq!(back.z_map, m.z_map);
        assert_eq!(back.meta.k, 2);
        assert_eq!(back.meta.loglik_trace.len(), 5);
        for (a, b) in back.params.phi.as_slice().iter().zip(m.params.phi.as_slice()) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-6));
        }
        let zmap = std::fs::read_to_string(dir.path().join("zmap.tsv")).unwrap();
        assert_eq!(zmap.lines().next().unwrap().split('\t').count(), 8);
    }
}
