use colme_wasm::{bound_curves_json, separation_table_json, simulate_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn table_marks_identical_classes_infinite() {
    let req = r#"{"classes": [
        {"label": "a", "mean": 0.9, "sigma": 1.2, "family": "gaussian"},
        {"label": "b", "mean": 1.1, "sigma": 1.8, "family": "gaussian"},
        {"label": "c", "mean": 0.9, "sigma": 1.2, "family": "gaussian"}
    ]}"#;
    let v = parse(&separation_table_json(req).unwrap());
    let pairs = v["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 3);
    assert_eq!(pairs[0]["sigma"], 417);
    assert_eq!(pairs[0]["fastest"], "sigma");
    assert_eq!(pairs[1]["mean"], "inf");
    assert!(pairs[1]["fastest"].is_null());
}

#[test]
fn table_rejects_bad_input() {
    assert!(separation_table_json("{}").is_err());
    assert!(separation_table_json(r#"{"classes": [{"label": "a", "mean": 0, "sigma": -1, "family": "gaussian"}, {"label": "b", "mean": 0, "sigma": 1, "family": "gaussian"}]}"#).is_err());
}

#[test]
fn curves_shrink_with_time() {
    let v = parse(&bound_curves_json(2.0, 0.01, 3.89, 10_000.0, 50).unwrap());
    let lap: Vec<f64> = v["laplace"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(lap.len(), 50);
    assert!(lap.windows(2).all(|w| w[1] <= w[0]));
    let gau = v["gaussian"].as_array().unwrap();
    // The time-uniform bound is always wider than the fixed-time one.
    assert!(lap.iter().zip(gau).all(|(l, g)| *l > g.as_f64().unwrap()));
    assert!(bound_curves_json(1.0, 0.01, 3.89, 1.0, 10).is_err());
}

#[test]
fn simulation_is_thinned_and_deterministic() {
    let a = simulate_json("sec6-kurtosis-c", 4, 60, 1200).unwrap();
    let b = simulate_json("sec6-kurtosis-c", 4, 60, 1200).unwrap();
    assert_eq!(a, b);
    let v = parse(&a);
    assert_eq!(v["t"].as_array().unwrap().len(), 400);
    assert_eq!(v["t"][399], 1200);
    assert!(simulate_json("sec5-two-class-sigma", 1, 9, 100).is_err());
}
