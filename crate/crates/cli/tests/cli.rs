//! End-to-end tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use condmds_cli::result::FitResult;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_condmds"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let cells: Vec<String> = (0..m.ncols())
            .map(|j| {
                let v = m[(i, j)];
                if v.is_nan() { "NA".to_string() } else { format!("{v}") }
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// A small exact instance: distances generated by the model itself, so a
/// good fit can push the stress to zero. Rows 3 and 7 lose both features,
/// row 5 loses only the first.
struct Instance {
    dir: tempfile::TempDir,
    delta: PathBuf,
    cond: PathBuf,
    v_true: DMatrix<f64>,
}

fn exact_instance() -> Instance {
    let n = 12;
    let (p, q) = (2, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut draw = |rows: usize, cols: usize| {
        let mut m = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = 2.0 * rng.random::<f64>() - 1.0;
            }
        }
        m
    };
    let u = draw(n, p);
    let v = draw(n, q);
    let b = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.2, 0.8]));
    let vb = &v * &b;
    let mut delta = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let du = (u.row(i) - u.row(j)).norm_squared();
            let dv = (vb.row(i) - vb.row(j)).norm_squared();
            delta[(i, j)] = (du + dv).sqrt();
        }
    }
    let mut cond = v.clone();
    for k in 0..q {
        cond[(3, k)] = f64::NAN;
        cond[(7, k)] = f64::NAN;
    }
    cond[(5, 0)] = f64::NAN;

    let dir = tempfile::tempdir().unwrap();
    let delta_path = dir.path().join("delta.csv");
    let cond_path = dir.path().join("cond.csv");
    write(&delta_path, &matrix_csv(&delta));
    write(&cond_path, &matrix_csv(&cond));
    Instance {
        dir,
        delta: delta_path,
        cond: cond_path,
        v_true: v,
    }
}

fn fit_instance(inst: &Instance, out_name: &str) -> PathBuf {
    let out = inst.dir.path().join(out_name);
    let output = run(&[
        "fit",
        "--delta",
        inst.delta.to_str().unwrap(),
        "--cond",
        inst.cond.to_str().unwrap(),
        "--p",
        "2",
        "--gamma",
        "1e-10",
        "--max-iter",
        "5000",
        "--restarts",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "fit failed: {}",
        stderr_of(&output)
    );
    out
}

#[test]
fn fit_recovers_an_exact_instance_and_reports_it() {
    let inst = exact_instance();
    let out = fit_instance(&inst, "fit.json");

    let text = std::fs::read_to_string(&out).unwrap();
    let fit: FitResult = serde_json::from_str(&text).expect("output is a fit result");

    assert_eq!(fit.embedding.len(), 12);
    assert_eq!(fit.embedding[0].len(), 2);
    assert_eq!(fit.transform.len(), 2);
    assert_eq!(fit.incomplete_rows, vec![3, 5, 7]);
    assert_eq!(fit.embedded_incomplete.len(), 3);
    assert!(fit.converged, "exact instance should converge");
    assert!(
        fit.normalized_stress < 1e-4,
        "stress {} too high for noiseless data",
        fit.normalized_stress
    );
    assert_eq!(fit.stress_trace.len(), fit.iterations + 1);
    assert_eq!(fit.options.init, "closed-form");
    assert_eq!(fit.options.weighting, "unit");
    assert_eq!(fit.options.symmetrize, "avg");

    // Rows that lost every feature are recoverable up to fit error; the
    // fitted transform cancels out of their imputation.
    let imputed = fit.imputed.as_ref().expect("transform is invertible");
    for (imp_row, orig_row) in [(0usize, 3usize), (2, 7)] {
        for k in 0..2 {
            let got = imputed[imp_row][k];
            let want = inst.v_true[(orig_row, k)];
            assert!(
                (got - want).abs() < 0.1,
                "imputed[{imp_row}][{k}] = {got}, true {want}"
            );
        }
    }
    // The partially observed row keeps its observed value bit for bit.
    assert_eq!(imputed[1][1], inst.v_true[(5, 1)]);
}

#[test]
fn repeated_fit_is_byte_identical() {
    let inst = exact_instance();
    let a = fit_instance(&inst, "a.json");
    let b = fit_instance(&inst, "b.json");
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "same flags and seed must reproduce the same bytes"
    );
}

#[test]
fn impute_fills_holes_and_preserves_observed_cells() {
    let inst = exact_instance();
    let fit = fit_instance(&inst, "fit.json");
    let filled = inst.dir.path().join("filled.csv");
    let output = run(&[
        "impute",
        "--fit",
        fit.to_str().unwrap(),
        "--cond",
        inst.cond.to_str().unwrap(),
        "--out",
        filled.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr_of(&output));

    let text = std::fs::read_to_string(&filled).unwrap();
    assert!(!text.contains("NA"), "all holes must be filled");
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 12);
    // Complete rows pass through unchanged.
    for i in [0usize, 1, 2, 4, 6, 8, 9, 10, 11] {
        for k in 0..2 {
            assert_eq!(rows[i][k], inst.v_true[(i, k)], "row {i} col {k}");
        }
    }
    // The observed half of the partial row survives exactly.
    assert_eq!(rows[5][1], inst.v_true[(5, 1)]);
    // Fully missing rows land near the truth.
    for i in [3usize, 7] {
        for k in 0..2 {
            assert!((rows[i][k] - inst.v_true[(i, k)]).abs() < 0.1);
        }
    }
}

#[test]
fn impute_with_singular_transform_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let fit = dir.path().join("fit.json");
    let cond = dir.path().join("cond.csv");
    let out = dir.path().join("out.csv");
    let doc = serde_json::json!({
        "embedding": [[0.0], [1.0]],
        "transform": [[0.0]],
        "incomplete_rows": [1],
        "embedded_incomplete": [[1.0]],
        "imputed": null,
        "normalized_stress": 0.1,
        "stress_trace": [0.5, 0.1],
        "iterations": 1,
        "converged": true,
        "seed": 0,
        "options": {
            "p": 1, "gamma": 1e-6, "max_iter": 1000, "init": "naive",
            "restarts": 1, "force_general_path": false,
            "weighting": "unit", "symmetrize": "avg"
        }
    });
    write(&fit, &doc.to_string());
    write(&cond, "1.0\nNA\n");
    let output = run(&[
        "impute",
        "--fit",
        fit.to_str().unwrap(),
        "--cond",
        cond.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr_of(&output).contains("singular"));
}

#[test]
fn impute_rejects_mismatched_missing_rows() {
    let inst = exact_instance();
    let fit = fit_instance(&inst, "fit.json");
    let other = inst.dir.path().join("other.csv");
    write(&other, "1,2\nNA,4\n5,6\n7,8\n9,0\n1,2\n3,4\n5,6\n7,8\n9,0\n1,2\n3,4\n");
    let out = inst.dir.path().join("out.csv");
    let output = run(&[
        "impute",
        "--fit",
        fit.to_str().unwrap(),
        "--cond",
        other.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("do not match"));
}

#[test]
fn unparsable_cell_is_reported_with_file_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let delta = dir.path().join("delta.csv");
    let cond = dir.path().join("cond.csv");
    write(&delta, "0,1,2\n1,0,oops\n2,3,0\n");
    write(&cond, "1\n2\n3\n");
    let output = run(&[
        "fit",
        "--delta",
        delta.to_str().unwrap(),
        "--cond",
        cond.to_str().unwrap(),
        "--p",
        "1",
        "--out",
        dir.path().join("out.json").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let err = stderr_of(&output);
    assert!(err.contains("row 2"), "{err}");
    assert!(err.contains("column 3"), "{err}");
    assert!(err.contains("oops"), "{err}");
}

#[test]
fn missing_input_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&[
        "fit",
        "--delta",
        dir.path().join("no-such.csv").to_str().unwrap(),
        "--cond",
        dir.path().join("also-missing.csv").to_str().unwrap(),
        "--p",
        "1",
        "--out",
        dir.path().join("out.json").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("cannot read"));
}

#[test]
fn nonsquare_dissimilarities_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let delta = dir.path().join("delta.csv");
    let cond = dir.path().join("cond.csv");
    write(&delta, "0,1,2\n1,0,3\n");
    write(&cond, "1\n2\n");
    let output = run(&[
        "fit",
        "--delta",
        delta.to_str().unwrap(),
        "--cond",
        cond.to_str().unwrap(),
        "--p",
        "1",
        "--out",
        dir.path().join("out.json").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("square"));
}

#[test]
fn weights_and_sammon_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&[
        "fit",
        "--delta",
        "x.csv",
        "--cond",
        "y.csv",
        "--p",
        "1",
        "--weights",
        "w.csv",
        "--sammon",
        "--out",
        "out.json",
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("cannot be used with"));
    let _ = dir;
}

#[test]
fn simulate_is_deterministic_and_leaves_holes() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        vec![
            "simulate".to_string(),
            "--n".into(),
            "15".into(),
            "--n1-ratio".into(),
            "0.6".into(),
            "--zeta1".into(),
            "0.1".into(),
            "--zeta2".into(),
            "0.02".into(),
            "--seed".into(),
            "3".into(),
            "--out".into(),
            out.to_str().unwrap().to_string(),
        ]
    };
    let d1 = dir.path().join("one");
    let d2 = dir.path().join("two");
    for d in [&d1, &d2] {
        let output = bin().args(args(d)).output().unwrap();
        assert!(output.status.success(), "{}", stderr_of(&output));
    }

    let names = [
        "delta.csv",
        "conditioning.csv",
        "features.csv",
        "target_true.csv",
        "v2_true.csv",
        "b_true.csv",
        "masked_rows.csv",
    ];
    for name in names {
        let a = std::fs::read(d1.join(name)).unwrap();
        let b = std::fs::read(d2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }

    let cond = std::fs::read_to_string(d1.join("conditioning.csv")).unwrap();
    assert_eq!(cond.lines().count(), 15);
    let holes = cond.lines().filter(|l| l.contains("NA")).count();
    // ceil(15 * 0.4) rows lose their conditioning features.
    assert_eq!(holes, 6);
    let masked = std::fs::read_to_string(d1.join("masked_rows.csv")).unwrap();
    let indices: Vec<usize> = masked.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(indices.len(), 6);
    assert!(indices.windows(2).all(|w| w[0] < w[1]));

    let delta = std::fs::read_to_string(d1.join("delta.csv")).unwrap();
    assert_eq!(delta.lines().count(), 15);
    assert_eq!(delta.lines().next().unwrap().split(',').count(), 15);
    let features = std::fs::read_to_string(d1.join("features.csv")).unwrap();
    assert_eq!(features.lines().next().unwrap().split(',').count(), 7);
}

#[test]
fn bench_writes_a_median_table_to_stdout() {
    // n = 14 keeps 7 complete rows at ratio 0.5, enough for every metric
    // (the configuration-agreement score needs more rows than p plus the
    // target dimension).
    let output = run(&[
        "bench",
        "--n",
        "14",
        "--n1-ratio",
        "0.5",
        "--replicates",
        "2",
        "--gamma",
        "1e-4",
        "--max-iter",
        "150",
        "--seed",
        "1",
    ]);
    assert!(output.status.success(), "{}", stderr_of(&output));
    let text = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n1_ratio,method,metric,median");
    // Two proposed methods report 4 metrics + failures, the complete-rows
    // baseline has no imputation error: 5 + 5 + 4 rows for one ratio.
    assert_eq!(lines.len(), 1 + 14);
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[0], "0.5");
        cells[3].parse::<f64>().expect("median parses");
    }
}
