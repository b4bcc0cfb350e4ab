use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use srnn::dataset_io::load_dataset_csv;
use srnn::synthetic::gen_trig_dataset;

const SMALL: &str = r#"
[dataset]
kind = "synthetic"
seed = 7
samples_per_class = 8
samples_per_path = 32

[reservoir]
n = 6
noise_scale = 1.0
connectivity_seed = 1
noise_seed = 2

[train]
seed = 3
restarts = 2
max_iters = 150

[experiment]
split_seed = 2
sim_seed = 4
corruption_seed = 5
grid = [4, 8, 11]
trials = 2
sde_runs = 200
sde_dt = 0.01
"#;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new(config: &str) -> Self {
        let dir = TempDir::new().unwrap();
        fs::write(dir.path().join("srnn.toml"), config).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, out: &str, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_srnn"))
            .arg("--config")
            .arg(self.path("srnn.toml"))
            .arg("--out")
            .arg(self.path(out))
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, out: &str, args: &[&str]) {
        let o = self.run(out, args);
        assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    }
}

/// Header and data rows of a CSV with `#` comment lines.
fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let (header, rows) = table(path);
    let j = header.iter().position(|h| h == name).unwrap();
    rows.into_iter().map(|r| r[j].clone()).collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_is_byte_identical_and_round_trips() {
    let ws = Workspace::new(SMALL);
    ws.ok("a", &["generate"]);
    let first = fs::read_to_string(ws.path("a/dataset.csv")).unwrap();
    ws.ok("a", &["generate"]);
    assert!(first == fs::read_to_string(ws.path("a/dataset.csv")).unwrap());
    assert!(first.contains("# seed = 7"));

    let loaded = load_dataset_csv(&ws.path("a/dataset.csv")).unwrap();
    let direct = gen_trig_dataset(7, 8, 32).unwrap();
    assert_eq!(loaded.paths(), direct.paths());
    assert_eq!(loaded.labels(), direct.labels());
}

#[test]
fn csv_dataset_feeds_training() {
    let ws = Workspace::new(SMALL);
    ws.ok("gen", &["generate"]);
    let from_csv = SMALL.replace(
        "kind = \"synthetic\"\nseed = 7\nsamples_per_class = 8\nsamples_per_path = 32",
        "kind = \"csv\"\nfile = \"gen/dataset.csv\"",
    );
    fs::write(ws.path("csv.toml"), from_csv).unwrap();
    ws.ok("direct", &["train"]);
    let o = Command::new(env!("CARGO_BIN_EXE_srnn"))
        .arg("--config")
        .arg(ws.path("csv.toml"))
        .arg("--out")
        .arg(ws.path("via_csv"))
        .arg("train")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = json(&ws.path("direct/model.json"));
    let b = json(&ws.path("via_csv/model.json"));
    assert_eq!(a["params"], b["params"]);
}

#[test]
fn training_is_deterministic_with_nonincreasing_trace() {
    let ws = Workspace::new(SMALL);
    ws.ok("a", &["train"]);
    let first = fs::read_to_string(ws.path("a/model.json")).unwrap();
    ws.ok("a", &["train"]);
    assert!(first == fs::read_to_string(ws.path("a/model.json")).unwrap());

    let risks: Vec<f64> = column(&ws.path("a/trace.csv"), "risk").iter().map(|s| s.parse().unwrap()).collect();
    assert!(risks.len() > 1);
    assert!(risks.windows(2).all(|w| w[1] <= w[0]));

    let model = json(&ws.path("a/model.json"));
    assert_eq!(model["objective"]["kind"], "direct");
    assert_eq!(model["config"]["train"]["seed"], 3);
    assert_eq!(model["final_risk"].as_f64().unwrap(), *risks.last().unwrap());
}

#[test]
fn seed_flag_overrides_config() {
    let ws = Workspace::new(SMALL);
    ws.ok("a", &["train"]);
    ws.ok("b", &["--seed", "11", "train"]);
    let (a, b) = (json(&ws.path("a/model.json")), json(&ws.path("b/model.json")));
    assert_eq!(b["config"]["train"]["seed"], 11);
    assert_ne!(a["params"], b["params"]);
}

#[test]
fn truncated_objective_is_recorded() {
    let ws = Workspace::new(SMALL);
    ws.ok("t", &["train", "--truncated", "6"]);
    let model = json(&ws.path("t/model.json"));
    assert_eq!(model["objective"]["kind"], "truncated");
    assert_eq!(model["objective"]["order"], 6);
}

#[test]
fn evaluate_writes_one_row_per_size_and_trial() {
    let ws = Workspace::new(SMALL);
    ws.ok("e", &["--trials", "3", "evaluate"]);
    assert_eq!(column(&ws.path("e/accuracy_runs.csv"), "training_size"), ["4", "8", "11"]);
    assert_eq!(table(&ws.path("e/accuracy_trials.csv")).1.len(), 9);
    let report = json(&ws.path("e/accuracy_report.json"));
    assert_eq!(report["config"]["experiment"]["trials"], 3);
    assert_eq!(report["runs"].as_array().unwrap().len(), 3);
}

#[test]
fn bound_check_rows_dominate_gap() {
    let ws = Workspace::new(SMALL);
    ws.ok("b", &["bound-check"]);
    let path = ws.path("b/bound_runs.csv");
    let gaps = column(&path, "gap");
    let bounds = column(&path, "bound");
    assert_eq!(gaps.len(), 3);
    for (g, b) in gaps.iter().zip(&bounds) {
        assert!(g.parse::<f64>().unwrap() <= b.parse::<f64>().unwrap());
    }
    assert!(column(&path, "bound_holds").iter().all(|s| s == "true"));
}

#[test]
fn robustness_emits_one_group_per_fraction() {
    let ws = Workspace::new(SMALL);
    ws.ok("r", &["robustness"]);
    let fractions = column(&ws.path("r/robustness_runs.csv"), "mislabel_fraction");
    assert_eq!(fractions, ["0", "0.05", "0.1", "0.15"]);
    let trial_fractions = column(&ws.path("r/robustness_trials.csv"), "mislabel_fraction");
    assert_eq!(trial_fractions.len(), 8);
}

#[test]
fn simulate_sde_uses_trained_model() {
    let ws = Workspace::new(SMALL);
    let missing = ws.run("s", &["simulate-sde"]);
    assert_eq!(missing.status.code(), Some(3));
    ws.ok("s", &["train"]);
    ws.ok("s", &["simulate-sde"]);
    assert_eq!(table(&ws.path("s/sde_states.csv")).1.len(), 200);
    let summary = json(&ws.path("s/sde_summary.json"));
    assert_eq!(summary["exact_mean"].as_array().unwrap().len(), 6);
    assert!(summary["max_mean_z"].as_f64().unwrap() < 5.0);
}

#[test]
fn missing_vowels_file_is_named() {
    let cfg = SMALL.replace(
        "kind = \"synthetic\"\nseed = 7\nsamples_per_class = 8\nsamples_per_path = 32",
        "kind = \"vowels\"\ntrain_file = \"nowhere/ae.train\"\ntest_file = \"nowhere/ae.test\"",
    );
    let ws = Workspace::new(&cfg);
    let o = ws.run("v", &["generate"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere/ae.train"));
}

#[test]
fn exit_codes_separate_failure_classes() {
    let ws = Workspace::new("[dataset\nkind = ");
    assert_eq!(ws.run("x", &["generate"]).status.code(), Some(2));

    let no_seed = Workspace::new(&SMALL.replace("seed = 3\n", ""));
    assert_eq!(no_seed.run("x", &["generate"]).status.code(), Some(2));

    let o = Command::new(env!("CARGO_BIN_EXE_srnn"))
        .args(["--config", "/nonexistent/srnn.toml", "generate"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));

    let bad_csv = Workspace::new(&SMALL.replace(
        "kind = \"synthetic\"\nseed = 7\nsamples_per_class = 8\nsamples_per_path = 32",
        "kind = \"csv\"\nfile = \"bad.csv\"",
    ));
    fs::write(bad_csv.path("bad.csv"), "path_id,t,x_1,label\n0,zero,1,1\n").unwrap();
    assert_eq!(bad_csv.run("x", &["train"]).status.code(), Some(2));

    // a zero noise matrix leaves the covariance singular
    let singular = Workspace::new(&SMALL.replace("noise_scale = 1.0", "noise_scale = 0.0"));
    assert_eq!(singular.run("x", &["evaluate"]).status.code(), Some(4));
}
