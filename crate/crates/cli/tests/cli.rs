use std::path::Path;
use std::process::{Command, Output};

fn mlpr(args: &[&str], cwd: &Path) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_mlpr"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn mlpr");
    assert!(
        out.status.success(),
        "mlpr {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|r| r.trim().to_string()))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

const SMALL: &str = "\
name = small
train_n = 12
train_count = 4
test_n = 14
test_count = 2
kernel = linear
reps = 2
seed = 7
methods = mlpr, cbm
test_sizes = 14, 16
";

#[test]
fn generate_reduce_solve_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("small.cfg"), SMALL).unwrap();

    mlpr(&["train", "--config", "small.cfg", "--out", "model"], d);
    assert!(d.join("model/model.svm").exists());
    assert!(d.join("model/training_report.json").exists());

    let gen = stdout(&mlpr(&["generate", "--family", "euclidean", "-n", "14", "--seed", "3", "--out", "inst"], d));
    let tsp = gen.lines().next().unwrap().trim().to_string();

    let full = stdout(&mlpr(&["solve", &tsp], d));
    assert_eq!(field(&full, "optimal"), "true");
    let opt: f64 = field(&full, "cost").parse().unwrap();

    for method in ["mlpr", "cbm", "cmsa"] {
        let out = format!("{method}.red");
        mlpr(
            &["reduce", &tsp, "--method", method, "--model", "model/model.svm", "--out", &out],
            d,
        );
        let red = stdout(&mlpr(&["solve", &out], d));
        let cost: f64 = field(&red, "cost").parse().unwrap();
        assert!(cost >= opt, "{method}: reduced optimum {cost} below {opt}");
    }

    mlpr(&["reduce", &tsp, "--method", "cbm", "--format", "lp", "--out", "m.lp"], d);
    let lp = std::fs::read_to_string(d.join("m.lp")).unwrap();
    assert!(lp.contains("Minimize") || lp.contains("minimize"));
}

#[test]
fn experiment_is_reproducible_and_report_matches() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("small.cfg"), SMALL).unwrap();
    mlpr(&["experiment", "--axis", "size", "--config", "small.cfg", "--out", "a"], d);
    mlpr(&["experiment", "--axis", "size", "--config", "small.cfg", "--out", "b"], d);
    let csv_a = std::fs::read_to_string(d.join("a/small_size.csv")).unwrap();
    let csv_b = std::fs::read_to_string(d.join("b/small_size.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    assert!(csv_a.starts_with("instance,method,seed,gap_percent"));

    let json = stdout(&mlpr(&["report", "a/small_size.csv"], d));
    let emitted = std::fs::read_to_string(d.join("a/small_size_summary.json")).unwrap();
    assert_eq!(json.trim(), emitted.trim());
}

#[test]
fn bad_input_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mlpr"))
        .args(["reduce", "missing.tsp", "--out", "x"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_mlpr"))
        .args(["train", "--set", "kernel=cubic"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
}
