//! Black-box checks of the `metroflow` binary: exit codes, config plumbing,
//! output layout, and the end-to-end subcommand chain at micro settings.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metroflow"))
        .args(args)
        .output()
        .expect("spawn metroflow")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_exit(out: &Output, want: i32, ctx: &str) {
    assert_eq!(
        out.status.code(),
        Some(want),
        "{ctx}: expected exit {want}, got {:?}\nstderr: {}",
        out.status.code(),
        stderr_of(out)
    );
}

#[test]
fn help_exits_zero_and_lists_subcommands() {
    let out = run(&["--help"]);
    assert_exit(&out, 0, "--help");
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "synth", "ingest", "routes", "series", "decompose", "train", "predict", "compare",
    ] {
        assert!(text.contains(sub), "--help does not mention `{sub}`");
    }
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let out = run(&["ingest"]);
    assert_exit(&out, 2, "ingest without --input");
    assert!(
        stderr_of(&out).contains("--input"),
        "usage error should name the missing flag"
    );
}

#[test]
fn malformed_set_spec_is_a_usage_error() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out_dir = dir.path().join("out");
    let out = run(&[
        "--set",
        "no-equals-sign",
        "synth",
        "series",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_exit(&out, 2, "--set without `=`");
}

#[test]
fn unknown_config_key_is_rejected_by_name() {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = dir.path().join("metroflow.json");
    std::fs::write(&cfg, r#"{"stl": {"bogus_knob": 3}}"#).expect("write config");
    let out_dir = dir.path().join("out");
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "synth",
        "series",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_exit(&out, 3, "unknown config key");
    assert!(
        stderr_of(&out).contains("bogus_knob"),
        "error should name the offending key, got: {}",
        stderr_of(&out)
    );
}

#[test]
fn type_error_names_the_dotted_config_path() {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = dir.path().join("metroflow.json");
    std::fs::write(&cfg, r#"{"training": {"epochs": "many"}}"#).expect("write config");
    let out_dir = dir.path().join("out");
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "synth",
        "series",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_exit(&out, 3, "type error in config");
    assert!(
        stderr_of(&out).contains("training.epochs"),
        "error should spell the dotted path, got: {}",
        stderr_of(&out)
    );
}

#[test]
fn unknown_station_is_an_input_error() {
    let dir = tempfile::tempdir().expect("tempdir");
    let net_dir = dir.path().join("net");
    let out = run(&["synth", "afc", "--out", net_dir.to_str().unwrap()]);
    assert_exit(&out, 0, "synth afc");
    let net = net_dir.join("network.json");
    let out = run(&["routes", "--network", net.to_str().unwrap(), "--od", "S01,ZZZ"]);
    assert_exit(&out, 3, "routes with an unknown station");
    assert!(stderr_of(&out).contains("ZZZ"));
}

fn entries(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .expect("read dir")
        .map(|e| e.expect("entry").file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn synth_series_writes_only_into_the_out_dir_with_one_manifest() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out_dir = dir.path().join("out");
    let out = run(&[
        "--seed",
        "11",
        "--set",
        "synth.days=3",
        "--set",
        "synth.interval_secs=3600",
        "synth",
        "series",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_exit(&out, 0, "synth series");
    // nothing escapes the --out directory
    assert_eq!(entries(dir.path()), vec!["out"]);
    let names = entries(&out_dir);
    assert_eq!(
        names.iter().filter(|n| n.as_str() == "manifest.json").count(),
        1,
        "exactly one manifest per output directory, got {names:?}"
    );
    assert!(names.contains(&"series.csv".to_string()), "got {names:?}");
    assert!(names.contains(&"ground_truth.json".to_string()), "got {names:?}");
}

#[test]
fn same_seed_reruns_match_and_different_seeds_differ() {
    let dir = tempfile::tempdir().expect("tempdir");
    let series = |seed: &str, name: &str| -> Vec<u8> {
        let out_dir = dir.path().join(name);
        let out = run(&[
            "--seed",
            seed,
            "--set",
            "synth.days=2",
            "--set",
            "synth.interval_secs=3600",
            "synth",
            "series",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_exit(&out, 0, "synth series");
        std::fs::read(out_dir.join("series.csv")).expect("series.csv")
    };
    let a = series("5", "a");
    let b = series("5", "b");
    let c = series("6", "c");
    assert_eq!(a, b, "same seed must reproduce the same series bytes");
    assert_ne!(a, c, "different seeds should change the series");
}

/// The whole chain at micro settings: synth afc -> ingest -> series ->
/// decompose -> train -> predict, each stage consuming the previous stage's
/// files exactly as written.
#[test]
fn subcommand_chain_runs_end_to_end() {
    let dir = tempfile::tempdir().expect("tempdir");
    let synth_dir = dir.path().join("synth");
    const MICRO: [&str; 6] = [
        "--set",
        "synth.days=8",
        "--set",
        "synth.interval_secs=1800",
        "--set",
        "flow.interval_secs=1800",
    ];

    let mut args: Vec<&str> = MICRO.to_vec();
    args.extend(["synth", "afc", "--out", synth_dir.to_str().unwrap()]);
    let out = run(&args);
    assert_exit(&out, 0, "synth afc");
    let records = synth_dir.join("records.csv");
    let network = synth_dir.join("network.json");

    // ingest: cleaning report plus a cleaned copy
    let ingest_dir = dir.path().join("ingest");
    std::fs::create_dir_all(&ingest_dir).expect("mkdir");
    let report = ingest_dir.join("report.json");
    let cleaned = ingest_dir.join("cleaned.csv");
    let out = run(&[
        "ingest",
        "--input",
        records.to_str().unwrap(),
        "--network",
        network.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
        "--cleaned",
        cleaned.to_str().unwrap(),
    ]);
    assert_exit(&out, 0, "ingest");
    let report_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).expect("report"))
            .expect("report json");
    assert_eq!(
        report_json["rows_malformed"], 0,
        "synthetic records should all parse"
    );

    // series: per-scenario transfer-flow files
    let series_dir = dir.path().join("series");
    let mut args: Vec<&str> = MICRO.to_vec();
    args.extend([
        "series",
        "--input",
        cleaned.to_str().unwrap(),
        "--network",
        network.to_str().unwrap(),
        "--station",
        "S05",
        "--out",
        series_dir.to_str().unwrap(),
    ]);
    let out = run(&args);
    assert_exit(&out, 0, "series");
    for f in ["all.csv", "weekday_excl_fri.csv", "friday.csv", "rest_day.csv"] {
        assert!(series_dir.join(f).exists(), "series should write {f}");
    }

    // decompose the weekday series with a short-name span override;
    // 1800s bins over 05:00-24:00 give 38 bins per day
    let dec_dir = dir.path().join("dec");
    let weekday = series_dir.join("weekday_excl_fri.csv");
    let out = run(&[
        "--set",
        "stl.n_s=25",
        "decompose",
        "--input",
        weekday.to_str().unwrap(),
        "--period",
        "38",
        "--out",
        dec_dir.to_str().unwrap(),
    ]);
    assert_exit(&out, 0, "decompose");
    let params: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dec_dir.join("decomposition.params.json")).expect("params"),
    )
    .expect("params json");
    assert_eq!(
        params["params"]["seasonal_span"], 25,
        "the n_s short name must reach the decomposition"
    );
    assert_eq!(params["params"]["period"], 38);

    // the overnight-padding flag stretches each day to the full-day grid
    let pad_dir = dir.path().join("dec_padded");
    let out = run(&[
        "--set",
        "flow.pad_overnight=true",
        "decompose",
        "--input",
        weekday.to_str().unwrap(),
        "--period",
        "48",
        "--out",
        pad_dir.to_str().unwrap(),
    ]);
    assert_exit(&out, 0, "decompose padded");
    let rows = std::fs::read_to_string(pad_dir.join("decomposition.csv"))
        .expect("padded csv")
        .lines()
        .count();
    let weekday_days = std::fs::read_to_string(series_dir.join("weekday_excl_fri.csv.meta.json"))
        .expect("meta")
        .matches("2024-")
        .count();
    assert_eq!(
        rows - 1,
        weekday_days * 48,
        "padded decomposition must cover one full day of bins per date"
    );

    // train a tiny model, then predict with the saved checkpoint
    let model_path = dir.path().join("model.json");
    let out = run(&[
        "--seed",
        "3",
        "--set",
        "model.layer_sizes=[4]",
        "--set",
        "pipeline.lookback=3",
        "train",
        "--series",
        weekday.to_str().unwrap(),
        "--model",
        "gru",
        "--epochs",
        "2",
        "--out",
        model_path.to_str().unwrap(),
    ]);
    assert_exit(&out, 0, "train");
    assert!(model_path.exists());

    let pred_dir = dir.path().join("pred");
    let out = run(&[
        "predict",
        "--model",
        model_path.to_str().unwrap(),
        "--series",
        weekday.to_str().unwrap(),
        "--out",
        pred_dir.to_str().unwrap(),
    ]);
    assert_exit(&out, 0, "predict");
    assert!(pred_dir.join("predictions.csv").exists());
    let eval: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(pred_dir.join("evaluation.json")).expect("evaluation"),
    )
    .expect("evaluation json");
    assert!(eval["rmse"].as_f64().expect("rmse") >= 0.0);
}
