use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pacf_audit::artifact::ModelFile;
use pacf_audit::ingest::{parse_table_str, Encoder, Schema, TableFormat};
use pacf_audit::linmodel::TrainedModel;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pacf-audit"));
    cmd.env(
        "PACF_DATA_DIR",
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"),
    );
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no `{key}` in output:\n{text}"))
        .parse()
        .unwrap()
}

#[test]
fn missing_dataset_exits_2_and_names_path() {
    let out = run(&[
        "audit",
        "--dataset",
        "/no/such/dir/table.csv",
        "--schema",
        "german",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/dir/table.csv"));
}

#[test]
fn unknown_flag_is_rejected() {
    let out = run(&["audit", "--preset", "german", "--seed", "7", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["audit", "--preset", "german"]);
    assert_eq!(out.status.code(), Some(2), "seed is mandatory");
}

#[test]
fn help_lists_audit_flags() {
    let help = stdout(&run(&["audit", "--help"]));
    for flag in [
        "--preset",
        "--dataset",
        "--format",
        "--schema",
        "--seed",
        "--delta",
        "--eps-alpha",
        "--eps-gamma",
        "--constant",
        "--pac-eps",
        "--n-draws",
        "--folds",
        "--lambda-grid",
        "--gamma",
        "--gamma-grid",
        "--alpha-target",
        "--strict-sizes",
        "--r-source",
        "--phi-mode",
        "--data-dir",
        "--out",
        "--markdown",
    ] {
        assert!(help.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn complexity_uniform_lower() {
    let out = run(&[
        "complexity",
        "--d",
        "108",
        "--k",
        "4",
        "--eps",
        "0.1",
        "--delta",
        "0.05",
    ]);
    assert!(out.status.success());
    assert!((value(&stdout(&out), "uniform_lower") - 1026.0).abs() < 1e-9);
}

#[test]
fn complexity_zero_norm_gives_zero_scores() {
    let out = run(&["complexity", "--R", "0", "--phi", "3", "--m", "10"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(value(&text, "pacf_uniform"), 0.0);
    assert_eq!(value(&text, "pacf_erm"), 0.0);
    assert_eq!(value(&text, "rademacher_bound"), 0.0);
}

#[test]
fn complexity_rejects_invalid_delta() {
    let out = run(&["complexity", "--R", "1", "--phi", "1", "--delta", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
}

#[test]
fn schema_command_matches_shipped_files() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    for id in ["adult", "german"] {
        let out = run(&["schema", id]);
        assert!(out.status.success());
        let shipped = std::fs::read_to_string(root.join(format!("schemas/{id}.toml"))).unwrap();
        assert_eq!(stdout(&out), shipped);
    }
    assert_eq!(run(&["schema", "foo"]).status.code(), Some(2));
}

#[test]
fn single_subgroup_audit_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, schema) = write_toy(dir.path());
    let text = std::fs::read_to_string(&csv).unwrap();
    let only_p: String = text
        .lines()
        .filter(|l| !l.contains(",q,"))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&csv, only_p).unwrap();
    let out = bin()
        .args(["audit", "--dataset"])
        .arg(&csv)
        .arg("--schema")
        .arg(&schema)
        .args(["--seed", "1", "--folds", "3", "--n-draws", "50"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

const TOY_SCHEMA: &str = r#"name = "toy"
sensitive = ["g"]

[target]
column = "y"
positive = "1"

[[columns]]
name = "a"
kind = "numeric"

[[columns]]
name = "g"
kind = "categorical"
"#;

/// Four rows, one non-sensitive numeric column, one sensitive column.
const TOY_CSV: &str = "a,g,y\n0,p,0\n1,q,1\n5,p,0\n5.5,q,1\n";

fn write_toy(dir: &Path) -> (PathBuf, PathBuf) {
    let csv = dir.join("toy.csv");
    let schema = dir.join("toy.toml");
    std::fs::write(&csv, TOY_CSV).unwrap();
    std::fs::write(&schema, TOY_SCHEMA).unwrap();
    (csv, schema)
}

fn write_model(dir: &Path, w: Vec<f64>, b: f64) -> PathBuf {
    let schema = Schema::from_toml_str(TOY_SCHEMA).unwrap();
    let table = parse_table_str(TOY_CSV, TableFormat::Csv, "toy").unwrap();
    let encoder = Encoder::fit(&table, &schema).unwrap();
    assert_eq!(encoder.dim(), 3);
    let file = ModelFile {
        encoder,
        model: TrainedModel {
            w,
            b,
            lambda_star: 1.0,
            converged: true,
            iterations: 0,
            grad_norm: 0.0,
            cv_log_loss: None,
        },
        subgroup: None,
        cv: None,
    };
    let path = dir.join("model.json");
    std::fs::write(&path, file.to_json()).unwrap();
    path
}

fn fairness(model: &Path, csv: &Path, gamma: &str) -> String {
    let out = bin()
        .args(["fairness", "--model"])
        .arg(model)
        .arg("--dataset")
        .arg(csv)
        .args(["--gamma", gamma])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout(&out)
}

#[test]
fn fairness_constant_model_has_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = write_toy(dir.path());
    let model = write_model(dir.path(), vec![0.0; 3], 0.3);
    for gamma in ["0", "0.2"] {
        assert_eq!(value(&fairness(&model, &csv, gamma), "alpha_hat"), 0.0);
    }
}

#[test]
fn fairness_large_gamma_has_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, schema) = write_toy(dir.path());
    let model = dir.path().join("trained.json");
    let out = bin()
        .args(["train", "--dataset"])
        .arg(&csv)
        .arg("--schema")
        .arg(&schema)
        .args(["--seed", "3", "--folds", "2", "--out"])
        .arg(&model)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fairness(&model, &csv, "1");
    assert_eq!(value(&text, "alpha_hat"), 0.0);
    assert_eq!(value(&text, "pairs_evaluated"), 6.0);
}

#[test]
fn fairness_matches_pair_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = write_toy(dir.path());
    // encoded layout: a (min-max), g=p, g=q
    let w = vec![1.5, 0.0, 2.0];
    let b = -1.0;
    let model = write_model(dir.path(), w.clone(), b);

    let raw = [(0.0, "p"), (1.0, "q"), (5.0, "p"), (5.5, "q")];
    let rows: Vec<[f64; 3]> = raw
        .iter()
        .map(|&(a, g)| {
            [
                a / 5.5,
                f64::from(u8::from(g == "p")),
                f64::from(u8::from(g == "q")),
            ]
        })
        .collect();
    let scores: Vec<f64> = rows
        .iter()
        .map(|r| 1.0 / (1.0 + (-(r[0] * w[0] + r[1] * w[1] + r[2] * w[2] + b)).exp()))
        .collect();
    for gamma in [0.0, 0.1, 0.3] {
        let mut violating = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                // only the numeric column is non-sensitive
                let d = (rows[i][0] - rows[j][0]).abs();
                if (scores[i] - scores[j]).abs() > d + gamma {
                    violating += 1;
                }
            }
        }
        let text = fairness(&model, &csv, &gamma.to_string());
        assert_eq!(value(&text, "pairs_evaluated"), 6.0);
        assert_eq!(
            value(&text, "alpha_hat"),
            violating as f64 / 6.0,
            "gamma {gamma}"
        );
    }
}

#[test]
fn german_audit_output_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for tag in ["a", "b"] {
        let path = dir.path().join(format!("{tag}.json"));
        let out = bin()
            .args(["audit", "--preset", "german", "--seed", "11", "--out"])
            .arg(&path)
            .output()
            .unwrap();
        assert!(out.status.success());
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
