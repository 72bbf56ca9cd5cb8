use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ppc-admix"))
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn ppc-admix");
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let model = dir.path().join("fit");
    let ppc = dir.path().join("ppc");
    run(&["simulate", "--n", "30", "--l", "120", "--k", "2", "--seed", "7", "--inject-ld", "5", "--out", p(&sim)]);
    for f in ["genotypes.txt", "labels.txt", "genotypes_ld.txt", "truth/theta.tsv", "truth/phi.tsv", "truth/z.tsv"] {
        assert!(sim.join(f).exists(), "{f}");
    }
    let genotypes = sim.join("genotypes.txt");
    run(&["fit", "--genotypes", p(&genotypes), "--k", "2", "--iterations", "50", "--out", p(&model)]);
    run(&[
        "ppc", "--genotypes", p(&genotypes), "--labels", p(&sim.join("labels.txt")),
        "--model", p(&model), "--replicates", "5", "--lags", "1..3", "--min-shared", "10",
        "--format", "tsv", "--out", p(&ppc),
    ]);
    for f in ["run_config.json", "results.json", "summary.tsv", "summary.txt", "ppc_mi.tsv", "ppc_ibs.tsv"] {
        assert!(ppc.join(f).exists(), "{f}");
    }
    let summary = fs::read_to_string(ppc.join("summary.tsv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 3 + 4);

    let report = dir.path().join("report");
    run(&["report", "--results", p(&ppc.join("results.json")), "--format", "tsv", "--out", p(&report)]);
    assert_eq!(fs::read(report.join("summary.tsv")).unwrap(), summary.into_bytes());

    let reps = dir.path().join("reps");
    run(&["replicate", "--model", p(&model), "--replicates", "3", "--out", p(&reps)]);
    assert!(reps.join("rep_3.txt").exists());
}

#[test]
fn simulate_is_deterministic_and_rerunnable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    for out in [&a, &b] {
        run(&["simulate", "--n", "20", "--l", "50", "--k", "3", "--seed", "7", "--out", p(out)]);
    }
    run(&["rerun", p(&a.join("run_config.json")), "--out", p(&c)]);
    for f in ["genotypes.txt", "labels.txt", "truth/z.tsv"] {
        let x = fs::read(a.join(f)).unwrap();
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f}");
        assert_eq!(x, fs::read(c.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let status = bin()
        .args(["simulate", "--n", "5", "--l", "5", "--k", "0", "--out", p(&out)])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));

    let o = bin()
        .args(["ppc", "--genotypes", "g", "--model", "m", "--discrepancies", "ibs,nope", "--out", p(&out)])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("ibs, mi, fst, entropy, association"), "{err}");
}

#[test]
fn refuses_non_empty_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("keep"), "x").unwrap();
    let o = bin()
        .args(["simulate", "--n", "5", "--l", "5", "--k", "1", "--out", p(dir.path())])
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert_eq!(fs::read_to_string(dir.path().join("keep")).unwrap(), "x");
}

#[test]
fn fit_with_one_population() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    run(&["simulate", "--n", "10", "--l", "30", "--k", "2", "--out", p(&sim)]);
    run(&[
        "fit", "--genotypes", p(&sim.join("genotypes.txt")), "--k", "1", "--iterations", "5",
        "--out", p(&dir.path().join("fit")),
    ]);
    let theta = fs::read_to_string(dir.path().join("fit/theta.tsv")).unwrap();
    assert!(theta.lines().all(|l| l == "1"), "{theta}");
}
