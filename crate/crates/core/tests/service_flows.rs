//! End-to-end flows through `Api::handle`, the same entry point the HTTP
//! server uses.

mod common;

use std::time::{Duration, Instant};

use harmrank_core::pipeline::{compute, RunConfig, SensitivityConfig};
use harmrank_core::service::{Api, ServiceConfig};
use harmrank_core::Schema;
use serde_json::{json, Value};

fn api(workers: usize) -> Api {
    Api::new(ServiceConfig {
        workers,
        ..Default::default()
    })
    .unwrap()
}

fn call(api: &Api, method: &str, path: &str, body: Value) -> (u16, Value) {
    let bytes = if body.is_null() { Vec::new() } else { body.to_string().into_bytes() };
    let r = api.handle(method, path, &bytes);
    (r.status, r.body)
}

fn create_fixture(api: &Api) -> (String, Value) {
    let data = common::read_fixture("aiaaic_aggregated.csv");
    let (status, body) = call(api, "POST", "/snapshots", json!({"schema": "aggregated_triplets", "data": data}));
    assert_eq!(status, 201, "{body}");
    (body["id"].as_str().unwrap().to_string(), body)
}

fn ordering(body: &Value) -> Vec<String> {
    serde_json::from_value(body["ordering"].clone()).unwrap()
}

/// category name → (aih, ci, best, worst)
fn numbers(metrics: &Value) -> Vec<(String, f64, f64, f64, f64)> {
    let mut v: Vec<_> = metrics["categories"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            (
                c["category"].as_str().unwrap().to_string(),
                c["aih"].as_f64().unwrap(),
                c["ci"].as_f64().unwrap(),
                c["boundary"]["best"].as_f64().unwrap(),
                c["boundary"]["worst"].as_f64().unwrap(),
            )
        })
        .collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

fn reorder(api: &Api, id: &str, units: &[String]) -> (String, Value) {
    let (status, body) = call(api, "POST", &format!("/snapshots/{id}/reorder"), json!({"ordering": units}));
    assert_eq!(status, 201, "{body}");
    (body["id"].as_str().unwrap().to_string(), body)
}

fn scenario(api: &Api, id: &str, spec: Value) -> Value {
    let (status, body) = call(api, "POST", &format!("/snapshots/{id}/scenario"), spec);
    assert_eq!(status, 200, "{body}");
    body
}

#[test]
fn identity_reorder_is_a_new_snapshot_with_the_same_numbers() {
    let api = api(2);
    let (id, created) = create_fixture(&api);
    let (child, body) = reorder(&api, &id, &ordering(&created));
    assert_ne!(child, id);
    assert_eq!(body["parent"], json!(id));
    assert_eq!(numbers(&created), numbers(&body));
}

#[test]
fn adjacent_swap_moves_aih_by_the_swapped_mass() {
    let api = api(2);
    let (id, created) = create_fixture(&api);
    let (_, snap) = call(&api, "GET", &format!("/snapshots/{id}"), Value::Null);
    let units = ordering(&created);
    let m = units.len() as f64;
    let r = 3;
    let mut swapped = units.clone();
    swapped.swap(r, r + 1);
    let (_, after) = reorder(&api, &id, &swapped);
    let freqs = &snap["table"]["freqs"];
    let categories = snap["table"]["categories"].as_array().unwrap();
    let after = numbers(&after);
    for (i, name) in categories.iter().enumerate() {
        let f: Vec<f64> = serde_json::from_value(freqs[i].clone()).unwrap();
        let before = numbers(&created).into_iter().find(|c| c.0 == *name).unwrap().1;
        let now = after.iter().find(|c| c.0 == *name).unwrap().1;
        assert!((now - before - (f[r] - f[r + 1]) / m).abs() < 1e-12, "{name}");
    }
}

#[test]
fn reversal_mirrors_and_boundary_sums_to_one() {
    let api = api(2);
    let (id, created) = create_fixture(&api);
    let mut reversed = ordering(&created);
    reversed.reverse();
    let (_, body) = reorder(&api, &id, &reversed);
    for (a, b) in numbers(&created).iter().zip(numbers(&body)) {
        assert!((a.1 + b.1 - 1.0).abs() < 1e-12, "{}", a.0);
        assert!((a.3 + a.4 - 1.0).abs() < 1e-12, "{}", a.0);
    }
}

#[test]
fn removal_of_nothing_reproduces_the_baseline() {
    let api = api(2);
    let (id, created) = create_fixture(&api);
    let result = scenario(&api, &id, json!({"kind": "removal", "removal_fraction": 0.0, "trials": 1, "base_seed": 9}));
    for (name, aih, ci, ..) in numbers(&created) {
        let stats = &result["per_category"][&name];
        assert_eq!(stats["mean_aih"].as_f64().unwrap().to_bits(), aih.to_bits(), "{name}");
        assert_eq!(stats["mean_ci"].as_f64().unwrap().to_bits(), ci.to_bits(), "{name}");
    }
}

#[test]
fn permutation_scenarios_are_deterministic() {
    let api = api(2);
    let (id, _) = create_fixture(&api);
    let spec = json!({"kind": "permutation", "k_swaps": 1, "n_scenarios": 20, "base_seed": 42});
    let a = scenario(&api, &id, spec.clone());
    let b = scenario(&api, &id, spec);
    assert_eq!(a, b);
    assert_eq!(a["rank_correlations"]["labels"].as_array().unwrap().len(), 21);
}

fn run_job(api: &Api, id: &str, spec: Value) -> Value {
    let mut spec = spec;
    spec["async"] = json!(true);
    let (status, accepted) = call(api, "POST", &format!("/snapshots/{id}/scenario"), spec);
    assert_eq!(status, 202, "{accepted}");
    let url = accepted["status_url"].as_str().unwrap().to_string();
    let deadline = Instant::now() + Duration::from_secs(60);
    loop {
        let (status, job) = call(api, "GET", &url, Value::Null);
        assert_eq!(status, 200);
        match job["state"].as_str().unwrap() {
            "running" => {
                assert!(Instant::now() < deadline, "job did not finish");
                std::thread::sleep(Duration::from_millis(5));
            }
            "done" => {
                assert_eq!(job["completed"], accepted["total"]);
                return job["result"].clone();
            }
            other => panic!("job ended {other}: {job}"),
        }
    }
}

#[test]
fn async_jobs_match_synchronous_runs_for_any_worker_count() {
    let spec = json!({"kind": "removal", "removal_fraction": 0.2, "trials": 50, "base_seed": 5});
    let sequential = api(1);
    let (id, _) = create_fixture(&sequential);
    let sync = scenario(&sequential, &id, spec.clone());
    assert_eq!(run_job(&sequential, &id, spec.clone()), sync);
    let parallel = api(8);
    let (id, _) = create_fixture(&parallel);
    assert_eq!(run_job(&parallel, &id, spec), sync);
}

#[test]
fn service_metrics_equal_pipeline_metrics() {
    let api = api(2);
    let (id, _) = create_fixture(&api);
    let (status, served) = call(&api, "GET", &format!("/snapshots/{id}/metrics"), Value::Null);
    assert_eq!(status, 200);
    let dir = tempfile::tempdir().unwrap();
    let mut config = RunConfig::new(
        vec![common::fixture("aiaaic_aggregated.csv")],
        Schema::AggregatedTriplets,
        dir.path(),
    );
    config.sensitivity = SensitivityConfig {
        boundary: true,
        ..Default::default()
    };
    let out = compute(&config).unwrap();
    let piped = serde_json::to_value(&out.metrics).unwrap();
    assert_eq!(numbers(&served), numbers(&piped));
    assert_eq!(served["snapshot"], json!(id));
}

#[test]
fn lorenz_curve_for_an_encoded_category() {
    let api = api(2);
    let (id, _) = create_fixture(&api);
    let (status, body) = call(&api, "GET", &format!("/snapshots/{id}/lorenz/Financial%20%26%20business"), Value::Null);
    assert_eq!(status, 200, "{body}");
    assert_eq!(body["category"], "Financial & business");
    let points = body["derivative"].as_array().unwrap();
    assert_eq!(points.len(), 10);
    assert_eq!(points[0], json!([0.0, 0.0]));
}

#[test]
fn reorder_errors_name_missing_and_extra_units() {
    let api = api(2);
    let (id, created) = create_fixture(&api);
    let mut units = ordering(&created);
    units.pop();
    units.push("Robots".into());
    let (status, body) = call(&api, "POST", &format!("/snapshots/{id}/reorder"), json!({"ordering": units}));
    assert_eq!(status, 422);
    assert_eq!(body["error"]["code"], "invalid_ordering");
    assert_eq!(body["error"]["details"]["extra"], json!(["Robots"]));
    assert_eq!(body["error"]["details"]["missing"], json!(["General public"]));
}
