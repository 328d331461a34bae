use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use steercert::cli::{parse_json, CertifyJson, ExtremalJson, MeasurementSetJson, SampleJson};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steercert"))
        .args(args)
        .env("STEERCERT_THREADS", "2")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn ideal_report() {
    let o = run(&["ideal"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert!((v["W"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    let p = &v["distribution"];
    for x in 0..3 {
        for a in 0..3 {
            assert!(p[x][x][a][a].as_f64().unwrap().abs() < 1e-12);
            for b in (0..3).filter(|&b| b != a) {
                assert!((p[x][x][a][b].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);
            }
        }
    }
    for party in ["alice", "bob"] {
        for r in v["extremality"][party].as_array().unwrap() {
            assert_eq!(r["extremal"], serde_json::Value::Bool(true));
        }
    }
}

#[test]
fn ideal_csv_table() {
    let o = run(&["ideal", "--format", "csv"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,a,b,p");
    assert_eq!(lines.len(), 82);
    assert_eq!(lines[1], "0,0,0,0,0");
}

#[test]
fn lhs_bound_report_is_deterministic() {
    let args = ["lhs-bound", "--grid", "128", "--seed", "3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["reference_beta_l"].as_f64(), Some(2.673));
    assert_eq!(v["grid"]["resolution"].as_u64(), Some(128));
    assert!(v["cross_check"]["difference"].as_f64().unwrap() < 2e-3);
}

#[test]
fn lhs_bound_rejects_bad_flags() {
    assert_eq!(run(&["lhs-bound", "--grid", "1"]).status.code(), Some(2));
    assert_eq!(
        run(&["lhs-bound", "--tolerance", "0"]).status.code(),
        Some(3)
    );
    assert_eq!(
        run(&["lhs-bound", "--format", "csv"]).status.code(),
        Some(3)
    );
}

#[test]
fn robustness_csv() {
    let o = run(&["robustness", "--eps-steps", "11", "--eps-max", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("delta,epsilon,w_closed,w_sim,discrepancy")
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    assert_eq!(text.lines().nth(1), Some("0,0,3,3,0"));
    let at_01 = rows.iter().find(|r| (r[1] - 0.1).abs() < 1e-12).unwrap();
    assert_eq!(at_01[2], 2.72);
    assert!(rows.iter().all(|r| r[4] <= 1e-9));
}

#[test]
fn robustness_clips_out_of_range_noise() {
    let o = run(&[
        "robustness",
        "--eps-min",
        "0.6",
        "--eps-max",
        "0.8",
        "--eps-steps",
        "3",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["clipped_rows"].as_u64(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("clipped"));
    let crossing = &v["crossing"];
    assert!((crossing["epsilon_at_reference"].as_f64().unwrap() - 0.118335532106).abs() < 1e-9);
}

#[test]
fn robustness_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(&[
        "robustness",
        "--eps-steps",
        "3",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&out)
        .unwrap()
        .starts_with("delta,epsilon"));
}

#[test]
fn certify_fixtures() {
    let ideal = run(&[
        "certify",
        "--input",
        fixture("ideal-certify.json").to_str().unwrap(),
    ]);
    assert_eq!(ideal.status.code(), Some(0));
    let v = json(&ideal);
    assert_eq!(v["passed"], serde_json::Value::Bool(true));
    assert!(v["identity_chain_max_residual"].as_f64().unwrap() <= 1e-9);

    let embedded = run(&[
        "certify",
        "--input",
        fixture("embedded-d3-certify.json").to_str().unwrap(),
    ]);
    assert_eq!(embedded.status.code(), Some(0));

    let product = run(&[
        "certify",
        "--input",
        fixture("product-certify.json").to_str().unwrap(),
    ]);
    assert_eq!(product.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&product.stderr).contains("not entangled"));
}

#[test]
fn certify_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(
        run(&["certify", "--input", missing.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );

    let malformed = dir.path().join("bad.json");
    std::fs::write(
        &malformed,
        "{\"state\": {\"dim_a\": 2, \"dim_b\": 2, \"amplitudes\": [[1, 0], [0]]}}",
    )
    .unwrap();
    let o = run(&["certify", "--input", malformed.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("state.amplitudes[1]") && err.contains("line 1"),
        "{err}"
    );

    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("ideal-certify.json")).unwrap())
            .unwrap();
    doc["bob"]["settings"][1]["elements"][0][0][0][0] = serde_json::json!(0.9);
    let invalid = dir.path().join("invalid.json");
    std::fs::write(&invalid, doc.to_string()).unwrap();
    let o = run(&["certify", "--input", invalid.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bob.settings[1]"));

    let imbalanced = dir.path().join("imbalanced.json");
    let b = 0.9 / (1.0f64 + 0.81).sqrt();
    let a = 1.0 / (1.0f64 + 0.81).sqrt();
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("ideal-certify.json")).unwrap())
            .unwrap();
    doc["state"]["amplitudes"] = serde_json::json!([[a, 0.0], [0.0, 0.0], [0.0, 0.0], [b, 0.0]]);
    std::fs::write(&imbalanced, doc.to_string()).unwrap();
    let o = run(&["certify", "--input", imbalanced.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(json(&o)["passed"], serde_json::Value::Bool(false));
}

#[test]
fn extremal_fixtures() {
    let six = run(&[
        "extremal",
        "--input",
        fixture("six-outcome-povm.json").to_str().unwrap(),
    ]);
    assert_eq!(six.status.code(), Some(4));
    assert_eq!(json(&six)["extremal"], serde_json::Value::Bool(false));
    for f in ["alice-ideal.json", "bob-ideal.json"] {
        let o = run(&["extremal", "--input", fixture(f).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(json(&o)["extremal"], serde_json::Value::Bool(true));
    }
}

#[test]
fn sample_is_byte_identical_per_seed() {
    let input = fixture("uniform-distribution.json");
    let args = [
        "sample",
        "--input",
        input.to_str().unwrap(),
        "--shots",
        "5000",
        "--seed",
        "9",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("seed,x,y,a,b\n"));
    assert_eq!(text.lines().count(), 5001);
    let c = run(&[
        "sample",
        "--input",
        input.to_str().unwrap(),
        "--shots",
        "5000",
        "--seed",
        "10",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn sample_json_of_ideal_configuration() {
    let o = run(&["sample", "--shots", "2000", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["estimate"]["w_hat"].as_f64(), Some(3.0));
    assert_eq!(v["records"].as_array().unwrap().len(), 2000);
}

fn round_trip<T>(name: &str)
where
    T: serde::de::DeserializeOwned + serde::Serialize,
{
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    let parsed: T = parse_json(&text).unwrap();
    let again = serde_json::to_string(&parsed).unwrap();
    let original: serde_json::Value = serde_json::from_str(&text).unwrap();
    let reserialized: serde_json::Value = serde_json::from_str(&again).unwrap();
    assert_values_close(&original, &reserialized, name);
}

fn assert_values_close(a: &serde_json::Value, b: &serde_json::Value, at: &str) {
    use serde_json::Value;
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            assert!(
                (x.as_f64().unwrap() - y.as_f64().unwrap()).abs() <= 1e-15,
                "{at}"
            );
        }
        (Value::Array(x), Value::Array(y)) => {
            assert_eq!(x.len(), y.len(), "{at}");
            for (i, (u, v)) in x.iter().zip(y).enumerate() {
                assert_values_close(u, v, &format!("{at}[{i}]"));
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            assert_eq!(x.len(), y.len(), "{at}");
            for (k, u) in x {
                assert_values_close(u, &y[k], &format!("{at}.{k}"));
            }
        }
        _ => assert_eq!(a, b, "{at}"),
    }
}

#[test]
fn fixtures_round_trip() {
    round_trip::<CertifyJson>("ideal-certify.json");
    round_trip::<CertifyJson>("product-certify.json");
    round_trip::<CertifyJson>("embedded-d3-certify.json");
    round_trip::<MeasurementSetJson>("alice-ideal.json");
    round_trip::<MeasurementSetJson>("bob-ideal.json");
    round_trip::<ExtremalJson>("six-outcome-povm.json");
    round_trip::<SampleJson>("uniform-distribution.json");
}

#[test]
fn fixtures_round_trip_through_library_types() {
    let text = std::fs::read_to_string(fixture("ideal-certify.json")).unwrap();
    let parsed: CertifyJson = parse_json(&text).unwrap();
    let input = parsed.to_input().unwrap();
    let back = CertifyJson {
        state: steercert::cli::StateJson::from_ket(input.state(), 2),
        bob: MeasurementSetJson::from_set(input.bob()),
    };
    let a = serde_json::to_value(&parsed).unwrap();
    let b = serde_json::to_value(&back).unwrap();
    assert_values_close(&a, &b, "ideal-certify");
}
