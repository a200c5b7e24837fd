use std::path::Path;
use std::process::{Command, Output};

use kernelscope::{Dataset, EngineeredDataset, GramMatrix, TrainedModel};
use serde_json::Value;

fn kernelscope(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kernelscope"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) -> Value {
    let o = kernelscope(args, out);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn toy_smoke_run_emits_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let base = ["--embedding", "e1", "--n", "2", "--N", "20", "--seed", "3"];
    let with = |cmd: &str, extra: &[&str]| -> Vec<String> {
        std::iter::once(cmd)
            .chain(base)
            .chain(extra.iter().copied())
            .map(String::from)
            .collect()
    };
    let run = |cmd: &str, extra: &[&str]| {
        let args = with(cmd, extra);
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = tmp.path().join(cmd);
        (ok(&refs, &out), out)
    };

    let (r, out) = run("embed", &[]);
    assert_eq!(r["result"]["register_size"], 2);
    assert!(out.join("features.csv").exists());
    let ds = Dataset::read(&out.join("dataset.csv")).unwrap();
    assert_eq!((ds.len(), ds.n_features()), (20, 2));

    let (r, out) = run("gram", &["--kernels", "fidelity,linear", "--csv"]);
    let entries = r["result"].as_array().unwrap();
    assert_eq!(entries.len(), 2);
    let g = GramMatrix::read_binary(&out.join(entries[0]["file"].as_str().unwrap())).unwrap();
    assert_eq!(g.n(), 20);
    assert!((g.base.trace() - 20.0).abs() < 1e-9);
    assert!(g.provenance.seeds.contains_key("inputs"));

    let (r, _) = run("geometry", &["--kernels", "fidelity,linear", "--lambda-grid", "0,0.1"]);
    assert_eq!(r["result"]["pairs"].as_array().unwrap().len(), 2);

    let (r, out) = run("screen", &[]);
    assert!(r["result"]["verdict"].is_string());
    assert!(out.join("report.csv").exists());
    assert!(out.join("plots/d_eff.svg").exists() && out.join("plots/g.svg").exists());

    let (r, out) = run("learn", &["--kernels", "fidelity,rbf", "--folds", "3"]);
    assert_eq!(r["result"]["n_train"], 15);
    let m = TrainedModel::read_json(&out.join("models/fidelity.json")).unwrap();
    assert_eq!(m.n_train(), 15);
    assert!(out.join("plots/accuracy.svg").exists());

    let (r, out) = run("engineer", &[]);
    assert!(r["result"]["g_gen"].as_f64().unwrap() >= 1.0);
    assert!(out.join("engineered.csv.json").exists());
}

#[test]
fn missing_dataset_exits_with_input_error_json() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.csv");
    let o = kernelscope(
        &["screen", "--dataset", missing.to_str().unwrap(), "--n", "2"],
        &tmp.path().join("out"),
    );
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "io");
    assert_eq!(err["exit_code"], 2);
    assert!(err["path"].as_str().unwrap().ends_with("nope.csv"));
}

#[test]
fn bad_arguments_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        &["screen", "--n", "2", "--N", "1"][..],
        &["gram", "--n", "2", "--kernels", "bogus"],
        &["engineer", "--n", "2", "--noise-p", "1.5"],
        &["dlog-demo", "--p", "59", "--g", "3"],
    ] {
        let o = kernelscope(args, &tmp.path().join("out"));
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err: Value = serde_json::from_slice(&o.stderr).unwrap();
        assert!(err["message"].is_string());
    }
}

#[test]
fn identical_reference_and_learner_is_flagged() {
    let tmp = tempfile::tempdir().unwrap();
    let r = ok(
        &["engineer", "--n", "2", "--N", "25", "--reference", "linear", "--kernels", "linear"],
        &tmp.path().join("eng"),
    );
    let res = &r["result"];
    assert!((res["g_gen"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(res["separation_possible"], false);
    assert!(res["note"].as_str().unwrap().contains("no separation"));
}

#[test]
fn engineered_export_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let eng = tmp.path().join("eng");
    let r = ok(&["engineer", "--embedding", "e2", "--n", "3", "--N", "40", "--seed", "9"], &eng);
    let csv = eng.join("engineered.csv");
    let ed = EngineeredDataset::read(&csv).unwrap();
    assert_eq!(ed.x.len(), 40);
    assert!(ed.y_class.iter().all(|&v| v == 1.0 || v == -1.0));
    assert_eq!(r["result"]["positives"], ed.y_class.iter().filter(|&&v| v > 0.0).count());
    assert_eq!(r["result"]["dataset_hash"], kernelscope::data::content_hash(&std::fs::read(&csv).unwrap()));

    // The binary labels feed straight back into training.
    let learned = ok(
        &["learn", "--dataset", csv.to_str().unwrap(), "--kernels", "projected_gaussian,linear", "--folds", "3"],
        &tmp.path().join("learn"),
    );
    assert_eq!(learned["result"]["task"], "classification");
    assert_eq!(learned["result"]["n_train"], 30);
}

#[test]
fn demos_report_expected_quantities() {
    let tmp = tempfile::tempdir().unwrap();
    let r = ok(&["dlog-demo", "--reps", "2"], &tmp.path().join("dlog"));
    assert_eq!(r["result"]["order"], 58);
    assert_eq!(r["result"]["reps"].as_array().unwrap().len(), 2);
    assert_eq!(r["result"]["delta_accuracy"], 0.5);

    let r = ok(&["appendix-g-demo", "--n", "5", "--N", "12"], &tmp.path().join("g"));
    let res = &r["result"];
    assert_eq!(res["test_points"], 32);
    assert_eq!(res["linear_accuracy"], 1.0);
    assert!(res["fidelity_mae"].as_f64().unwrap() >= res["mae_lower_bound"].as_f64().unwrap() - 0.02);
}
