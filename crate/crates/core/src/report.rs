//! Report files for a set of PPC results.
//!
//! For every result a point file `ppc_<name>.tsv` lists observed and
//! replicated values for scatter plots. A summary (JSON or TSV) carries
//! z-scores and deviation BFs, and `summary.txt` is a fixed-width table with
//! star annotations.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ppc::{PpcPanel, PpcResult};
use crate::tsv::fmt_float;

pub const POINTS_HEADER: &str = "discrepancy\tpopulation\tdataset_id\tvalue\tdefined";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Tsv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(ReportFormat::Tsv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown format {other:?}; use tsv or json"))),
        }
    }
}

pub fn star_string(stars: u8) -> &'static str {
    match stars {
        0 => "",
        1 => "*",
        2 => "**",
        _ => "***",
    }
}

fn panel_name(result: &PpcResult, panel: &PpcPanel) -> String {
    match panel.lag {
        Some(lag) => format!("{}_lag{lag}", result.discrepancy),
        None => result.discrepancy.to_string(),
    }
}

fn value_cells(v: Option<f64>) -> (String, &'static str) {
    match v {
        Some(x) => (fmt_float(x), "true"),
        None => ("NA".into(), "false"),
    }
}

/// Observed rows first (one per population), then every replicate.
pub fn points_tsv(result: &PpcResult) -> String {
    let mut out = String::from(POINTS_HEADER);
    out.push('\n');
    for panel in &result.panels {
        let name = panel_name(result, panel);
        for (pop, &v) in panel.observed.values.iter().enumerate() {
            let (value, defined) = value_cells(v);
            let _ = writeln!(out, "{name}\t{}\tobserved\t{value}\t{defined}", pop + 1);
        }
        for (r, rep) in panel.replicated.iter().enumerate() {
            for (pop, &v) in rep.values.iter().enumerate() {
                let (value, defined) = value_cells(v);
                let _ = writeln!(out, "{name}\t{}\trep_{}\t{value}\t{defined}", pop + 1, r + 1);
            }
        }
    }
    out
}

fn rounded(v: f64) -> f64 {
    fmt_float(v).parse().unwrap_or(v)
}

fn rounded_opt(v: &[Option<f64>]) -> Vec<Option<f64>> {
    v.iter().map(|x| x.map(rounded)).collect()
}

#[derive(Debug, Serialize)]
struct SummarySeeds {
    run: u64,
    derivation: &'static str,
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    discrepancy: String,
    lag: Option<usize>,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "R")]
    r: usize,
    observed: Vec<Option<f64>>,
    replicate_mean: Vec<Option<f64>>,
    replicate_sd: Vec<Option<f64>>,
    z: Vec<Option<f64>>,
    two_log_bf: Option<f64>,
    log10_bf: Option<f64>,
    stars: u8,
    inconclusive: bool,
    low_confidence: bool,
    seeds: SummarySeeds,
}

fn summary_rows(results: &[PpcResult]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for result in results {
        for panel in &result.panels {
            let bf = panel.bf.or(result.bf);
            let two = bf.map(|b| b.two_log_bf);
            rows.push(SummaryRow {
                discrepancy: result.discrepancy.to_string(),
                lag: panel.lag,
                k: result.k,
                r: result.r,
                observed: rounded_opt(&panel.observed.values),
                replicate_mean: rounded_opt(&panel.scores.mean),
                replicate_sd: rounded_opt(&panel.scores.sd),
                z: rounded_opt(&panel.scores.z),
                two_log_bf: two.map(rounded),
                log10_bf: two.map(|t| rounded(t / (2.0 * std::f64::consts::LN_10))),
                stars: bf.map_or(0, |b| b.stars),
                inconclusive: bf.is_none(),
                low_confidence: bf.is_some_and(|b| b.low_confidence),
                seeds: SummarySeeds {
                    run: result.seed,
                    derivation: "splitmix64",
                },
            });
        }
    }
    rows
}

fn join_opt(v: &[Option<f64>]) -> String {
    v.iter()
        .map(|x| x.map_or_else(|| "NA".to_string(), fmt_float))
        .collect::<Vec<_>>()
        .join(",")
}

pub const SUMMARY_TSV_HEADER: &str =
    "discrepancy\tlag\tK\tR\tobserved\treplicate_mean\treplicate_sd\tz\ttwo_log_bf\tlog10_bf\tstars\tseed";

fn summary_tsv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_TSV_HEADER);
    out.push('\n');
    for row in rows {
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), fmt_float);
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            row.discrepancy,
            row.lag.map_or_else(|| "NA".to_string(), |l| l.to_string()),
            row.k,
            row.r,
            join_opt(&row.observed),
            join_opt(&row.replicate_mean),
            join_opt(&row.replicate_sd),
            join_opt(&row.z),
            opt(row.two_log_bf),
            opt(row.log10_bf),
            row.stars,
            row.seeds.run,
        );
    }
    out
}

fn summary_text(results: &[PpcResult]) -> String {
    let mut out = format!(
        "{:<14} {:>4} {:>4} {:>12} {:>12} {:<5} {}\n",
        "discrepancy", "K", "R", "2lnBF", "log10BF", "stars", "z"
    );
    for result in results {
        let z: Vec<String> = result
            .panels
            .iter()
            .flat_map(|p| p.scores.z.iter())
            .map(|z| z.map_or_else(|| "NA".into(), |v| format!("{v:.2}")))
            .collect();
        let (two, log10) = match result.two_log_bf() {
            Some(t) => (format!("{t:.3}"), format!("{:.3}", t / (2.0 * std::f64::consts::LN_10))),
            None => ("NA".into(), "NA".into()),
        };
        let stars = if result.inconclusive {
            "n/a"
        } else {
            star_string(result.stars())
        };
        let _ = writeln!(
            out,
            "{:<14} {:>4} {:>4} {:>12} {:>12} {:<5} {}",
            result.discrepancy.to_string(),
            result.k,
            result.r,
            two,
            log10,
            stars,
            z.join(" ")
        );
    }
    out
}

fn write(path: PathBuf, contents: String, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes the report into `out_dir` (created if needed) and returns the
/// paths written.
pub fn render_report(results: &[PpcResult], out_dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    for result in results {
        write(
            out_dir.join(format!("ppc_{}.tsv", result.discrepancy)),
            points_tsv(result),
            &mut written,
        )?;
    }
    let rows = summary_rows(results);
    match format {
        ReportFormat::Json => {
            let path = out_dir.join("summary.json");
            let json = serde_json::to_string_pretty(&rows).map_err(|e| Error::json(&path, e))?;
            write(path, json + "\n", &mut written)?;
        }
        ReportFormat::Tsv => write(out_dir.join("summary.tsv"), summary_tsv(&rows), &mut written)?,
    }
    write(out_dir.join("summary.txt"), summary_text(results), &mut written)?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrepancy::{DiscrepancyKind, DiscrepancyVector};
    use crate::ppc::{deviation_bayes_factor, z_scores, PpcSpec, DEFAULT_SIGMA_FLOOR};

    fn result(kind: DiscrepancyKind, observed: Vec<f64>, reps: Vec<Vec<f64>>) -> PpcResult {
        let obs = DiscrepancyVector::new(observed.into_iter().map(Some).collect());
        let reps: Vec<DiscrepancyVector> = reps
            .into_iter()
            .map(|r| DiscrepancyVector::new(r.into_iter().map(Some).collect()))
            .collect();
        let scores = z_scores(&obs, &reps);
        let z: Vec<f64> = scores.z.iter().flatten().copied().collect();
        PpcResult {
            discrepancy: kind,
            k: obs.k(),
            r: reps.len(),
            seed: 1,
            panels: vec![PpcPanel {
                lag: None,
                observed: obs,
                replicated: reps,
                scores,
                bf: None,
            }],
            bf: deviation_bayes_factor(&z, DEFAULT_SIGMA_FLOOR),
            inconclusive: false,
            spec: PpcSpec::new(kind),
        }
    }

    #[test]
    fn empty_results_keep_headers() {
        let dir = tempfile::tempdir().unwrap();
        render_report(&[], dir.path(), ReportFormat::Json).unwrap();
        let json = fs::read_to_string(dir.path().join("summary.json")).unwrap();
        assert_eq!(json.trim(), "[]");
        let text = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert!(text.starts_with("discrepancy"));
        render_report(&[], dir.path(), ReportFormat::Tsv).unwrap();
        let tsv = fs::read_to_string(dir.path().join("summary.tsv")).unwrap();
        assert_eq!(tsv, format!("{SUMMARY_TSV_HEADER}\n"));
    }

    #[test]
    fn point_rows_account_for_replicates() {
        let r = result(
            DiscrepancyKind::Entropy,
            vec![0.5, 0.2],
            vec![vec![0.1, 0.2], vec![0.3, 0.1], vec![0.2, 0.3]],
        );
        let tsv = points_tsv(&r);
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[0], POINTS_HEADER);
        assert_eq!(lines.len(), 1 + 2 + 6);
        assert_eq!(lines.iter().filter(|l| l.contains("\tobserved\t")).count(), 2);
        assert_eq!(lines[3], "entropy\t1\trep_1\t0.1\ttrue");
    }

    #[test]
    fn three_stars_render() {
        let r = result(
            DiscrepancyKind::Ibs,
            vec![10.0, 10.0, 10.0],
            vec![vec![0.0, 0.1, 0.0], vec![0.1, 0.0, 0.1], vec![0.0, 0.1, 0.1]],
        );
        assert_eq!(r.stars(), 3);
        let dir = tempfile::tempdir().unwrap();
        render_report(std::slice::from_ref(&r), dir.path(), ReportFormat::Json).unwrap();
        let text = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert!(text.contains("***"));
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        let row = &json[0];
        for key in ["discrepancy", "K", "R", "observed", "replicate_mean", "replicate_sd", "z", "two_log_bf", "stars", "seeds"] {
            assert!(row.get(key).is_some(), "missing {key}");
        }
        assert_eq!(row["stars"], 3);
    }
}
