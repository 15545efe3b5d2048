//! Snapshot API behind the what-if dashboard.
//!
//! A snapshot is an immutable frequency table with its severity ordering
//! and cached metrics. Reordering creates a new snapshot and leaves the old
//! one in place. Snapshots and finished jobs are evicted least recently
//! used first.
//!
//! [`Api::handle`] maps a method, path and JSON body to a status and JSON
//! body, so any HTTP front-end can sit on top of it.
//!
//! | Method | Path | Body |
//! |--------|------|------|
//! | POST | `/snapshots` | `{schema, data, ordering?, granularity?, ci_convention?, kind?}` |
//! | GET | `/snapshots` | |
//! | GET | `/snapshots/{id}` | |
//! | GET | `/snapshots/{id}/metrics` | |
//! | POST | `/snapshots/{id}/reorder` | `{ordering: [unit, ...]}` |
//! | POST | `/snapshots/{id}/scenario` | scenario spec, plus `async: true` for a job |
//! | GET | `/jobs/{id}` | |
//! | GET | `/snapshots/{id}/lorenz/{category}` | |

use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex, MutexGuard};

use lru::LruCache;
use percent_encoding::percent_decode_str;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, ErrorKind, Result};
use crate::ingest::{
    build_frequency_table, parse_annotations, FrequencyTable, Granularity, KindFilter, Schema, SeverityOrdering,
    UnitMismatch,
};
use crate::metrics::{evaluate_table, CiConvention, MetricOptions, Polyline};
use crate::report::MetricsDocument;
use crate::sensitivity::{run_scenario, ScenarioResult, ScenarioSpec};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub snapshot_capacity: usize,
    pub job_capacity: usize,
    pub workers: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            snapshot_capacity: 64,
            job_capacity: 256,
            workers: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub id: String,
    pub parent: Option<String>,
    /// Columns follow `ordering`.
    pub table: FrequencyTable,
    pub ordering: SeverityOrdering,
    pub metrics: MetricsDocument,
}

fn build_snapshot(
    id: String,
    parent: Option<String>,
    table: FrequencyTable,
    ordering: SeverityOrdering,
    ci: CiConvention,
) -> Result<Snapshot> {
    let options = MetricOptions {
        ci_convention: ci,
        severities: None,
        boundary: true,
    };
    let metrics = MetricsDocument {
        ci_convention: ci,
        units: table.units.clone(),
        categories: evaluate_table(&table, &options)?,
    };
    Ok(Snapshot {
        id,
        parent,
        table,
        ordering,
        metrics,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ApiResponse {
    pub status: u16,
    pub body: Value,
}

impl ApiResponse {
    fn ok(status: u16, body: Value) -> Self {
        ApiResponse { status, body }
    }

    fn error(status: u16, code: &str, message: impl Into<String>) -> Self {
        Self::error_with(status, code, message, Value::Null)
    }

    fn error_with(status: u16, code: &str, message: impl Into<String>, details: Value) -> Self {
        let mut err = json!({"code": code, "message": message.into()});
        if !details.is_null() {
            err["details"] = details;
        }
        ApiResponse {
            status,
            body: json!({ "error": err }),
        }
    }

    fn from_error(e: &Error) -> Self {
        match e.kind() {
            ErrorKind::Computation => Self::error(422, "computation_error", e.to_string()),
            ErrorKind::Validation => Self::error(400, "bad_request", e.to_string()),
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::error(404, "not_found", format!("no {what} {id:?}"))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    schema: Schema,
    data: String,
    #[serde(default)]
    ordering: Option<Vec<String>>,
    #[serde(default)]
    granularity: Granularity,
    #[serde(default)]
    ci_convention: CiConvention,
    #[serde(default)]
    kind: KindFilter,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReorderRequest {
    ordering: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct ScenarioRequest {
    #[serde(flatten)]
    spec: ScenarioSpec,
    #[serde(default, rename = "async")]
    run_async: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
enum JobState {
    Running,
    Done { result: Box<ScenarioResult> },
    Failed { error: String },
}

struct Job {
    snapshot: String,
    total: usize,
    completed: AtomicUsize,
    state: Mutex<JobState>,
}

struct Inner {
    snapshots: Mutex<LruCache<String, Arc<Snapshot>>>,
    jobs: Mutex<LruCache<String, Arc<Job>>>,
    next_snapshot: AtomicU64,
    next_job: AtomicU64,
    pool: rayon::ThreadPool,
}

/// Thread-safe handle; clones share state.
#[derive(Clone)]
pub struct Api {
    inner: Arc<Inner>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

fn capacity(n: usize) -> NonZeroUsize {
    NonZeroUsize::new(n).unwrap_or(NonZeroUsize::MIN)
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &[u8]) -> std::result::Result<T, ApiResponse> {
    serde_json::from_slice(body).map_err(|e| ApiResponse::error(400, "bad_request", format!("invalid request body: {e}")))
}

impl Api {
    pub fn new(config: ServiceConfig) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers.max(1))
            .thread_name(|i| format!("harmrank-scenario-{i}"))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
        Ok(Api {
            inner: Arc::new(Inner {
                snapshots: Mutex::new(LruCache::new(capacity(config.snapshot_capacity))),
                jobs: Mutex::new(LruCache::new(capacity(config.job_capacity))),
                next_snapshot: AtomicU64::new(1),
                next_job: AtomicU64::new(1),
                pool,
            }),
        })
    }

    fn next_snapshot_id(&self) -> String {
        format!("snap-{:06}", self.inner.next_snapshot.fetch_add(1, AtomicOrdering::Relaxed))
    }

    fn store(&self, snap: Snapshot) -> Arc<Snapshot> {
        let snap = Arc::new(snap);
        lock(&self.inner.snapshots).put(snap.id.clone(), snap.clone());
        snap
    }

    pub fn snapshot(&self, id: &str) -> Option<Arc<Snapshot>> {
        lock(&self.inner.snapshots).get(id).cloned()
    }

    /// Registers an already aggregated table.
    pub fn create_from_table(
        &self,
        table: FrequencyTable,
        ordering: SeverityOrdering,
        ci: CiConvention,
    ) -> Result<Arc<Snapshot>> {
        let table = table.reorder(&ordering)?;
        let snap = build_snapshot(self.next_snapshot_id(), None, table, ordering, ci)?;
        Ok(self.store(snap))
    }

    pub fn handle(&self, method: &str, path: &str, body: &[u8]) -> ApiResponse {
        let segments: Vec<&str> = path.trim_matches('/').split('/').filter(|s| !s.is_empty()).collect();
        let method = method.to_ascii_uppercase();
        match (method.as_str(), segments.as_slice()) {
            ("POST", ["snapshots"]) => self.post_snapshot(body),
            ("GET", ["snapshots"]) => self.list_snapshots(),
            ("GET", ["snapshots", id]) => self.get_snapshot(id),
            ("GET", ["snapshots", id, "metrics"]) => self.get_metrics(id),
            ("POST", ["snapshots", id, "reorder"]) => self.post_reorder(id, body),
            ("POST", ["snapshots", id, "scenario"]) => self.post_scenario(id, body),
            ("GET", ["snapshots", id, "lorenz", category]) => self.get_lorenz(id, category),
            ("GET", ["jobs", id]) => self.get_job(id),
            (_, ["snapshots"])
            | (_, ["snapshots", _])
            | (_, ["snapshots", _, "metrics" | "reorder" | "scenario"])
            | (_, ["snapshots", _, "lorenz", _])
            | (_, ["jobs", _]) => ApiResponse::error(405, "method_not_allowed", format!("{method} not allowed on {path}")),
            _ => ApiResponse::error(404, "not_found", format!("no route for {path}")),
        }
    }

    fn metrics_payload(snap: &Snapshot) -> Value {
        let mut v = serde_json::to_value(&snap.metrics).expect("metrics serialize");
        v["snapshot"] = json!(snap.id);
        v["ordering"] = json!(snap.ordering.units());
        v
    }

    fn post_snapshot(&self, body: &[u8]) -> ApiResponse {
        let req: CreateRequest = match parse_body(body) {
            Ok(r) => r,
            Err(resp) => return resp,
        };
        let ordering = match &req.ordering {
            Some(units) => match SeverityOrdering::new(units.iter().cloned()) {
                Ok(o) => o,
                Err(e) => return ApiResponse::error(422, "invalid_ordering", e.to_string()),
            },
            None if matches!(req.schema, Schema::AiaaicRaw | Schema::AggregatedTriplets) => {
                SeverityOrdering::default_stakeholders()
            }
            None => {
                return ApiResponse::error(
                    400,
                    "bad_request",
                    format!("schema {} needs an explicit ordering", req.schema),
                )
            }
        };
        let result = (|| {
            let mut parsed = parse_annotations(&req.data, req.schema)?;
            parsed.records.retain(|r| req.kind.keeps(r));
            if parsed.records.is_empty() {
                return Err(Error::EmptyInput("no records left after the kind filter".into()));
            }
            let table = build_frequency_table(&parsed.records, &ordering, req.granularity)?;
            let snap = build_snapshot(self.next_snapshot_id(), None, table, ordering.clone(), req.ci_convention)?;
            Ok((snap, parsed.report))
        })();
        match result {
            Ok((snap, report)) => {
                let snap = self.store(snap);
                let mut payload = Self::metrics_payload(&snap);
                payload["id"] = json!(snap.id);
                payload["parse_report"] = serde_json::to_value(report).expect("report serializes");
                payload["table_report"] = serde_json::to_value(&snap.table.report).expect("report serializes");
                ApiResponse::ok(201, payload)
            }
            Err(e) => ApiResponse::from_error(&e),
        }
    }

    fn list_snapshots(&self) -> ApiResponse {
        let mut list: Vec<Value> = lock(&self.inner.snapshots)
            .iter()
            .map(|(id, s)| {
                json!({
                    "id": id,
                    "parent": s.parent,
                    "units": s.ordering.units(),
                    "categories": s.metrics.categories.len(),
                })
            })
            .collect();
        list.sort_by(|a, b| a["id"].as_str().cmp(&b["id"].as_str()));
        ApiResponse::ok(200, json!({ "snapshots": list }))
    }

    fn get_snapshot(&self, id: &str) -> ApiResponse {
        match self.snapshot(id) {
            Some(s) => ApiResponse::ok(
                200,
                json!({
                    "id": s.id,
                    "parent": s.parent,
                    "ordering": s.ordering.units(),
                    "table": s.table,
                }),
            ),
            None => ApiResponse::not_found("snapshot", id),
        }
    }

    fn get_metrics(&self, id: &str) -> ApiResponse {
        match self.snapshot(id) {
            Some(s) => ApiResponse::ok(200, Self::metrics_payload(&s)),
            None => ApiResponse::not_found("snapshot", id),
        }
    }

    fn post_reorder(&self, id: &str, body: &[u8]) -> ApiResponse {
        let Some(base) = self.snapshot(id) else {
            return ApiResponse::not_found("snapshot", id);
        };
        let req: ReorderRequest = match parse_body(body) {
            Ok(r) => r,
            Err(resp) => return resp,
        };
        let ordering = match SeverityOrdering::new(req.ordering.iter().cloned()) {
            Ok(o) => o,
            Err(e) => return ApiResponse::error(422, "invalid_ordering", e.to_string()),
        };
        if let Err(UnitMismatch { missing, extra }) = base.ordering.check_same_units(&ordering) {
            let msg = UnitMismatch {
                missing: missing.clone(),
                extra: extra.clone(),
            }
            .to_string();
            return ApiResponse::error_with(422, "invalid_ordering", msg, json!({"missing": missing, "extra": extra}));
        }
        let result = base.table.reorder(&ordering).and_then(|table| {
            build_snapshot(
                self.next_snapshot_id(),
                Some(base.id.clone()),
                table,
                ordering,
                base.metrics.ci_convention,
            )
        });
        match result {
            Ok(snap) => {
                let snap = self.store(snap);
                let mut payload = Self::metrics_payload(&snap);
                payload["id"] = json!(snap.id);
                payload["parent"] = json!(base.id);
                ApiResponse::ok(201, payload)
            }
            Err(e) => ApiResponse::from_error(&e),
        }
    }

    fn post_scenario(&self, id: &str, body: &[u8]) -> ApiResponse {
        let Some(snap) = self.snapshot(id) else {
            return ApiResponse::not_found("snapshot", id);
        };
        let req: ScenarioRequest = match parse_body(body) {
            Ok(r) => r,
            Err(resp) => return resp,
        };
        if let Err(e) = req.spec.validate() {
            return ApiResponse::error(422, "invalid_scenario", e.to_string());
        }
        if !req.run_async {
            let spec = req.spec;
            let result = self.inner.pool.install(|| {
                run_scenario(&snap.table, &snap.ordering, &spec, snap.metrics.ci_convention, &|_| {})
            });
            return match result {
                Ok(r) => ApiResponse::ok(200, serde_json::to_value(r).expect("result serializes")),
                Err(e) => ApiResponse::from_error(&e),
            };
        }

        let job_id = format!("job-{:06}", self.inner.next_job.fetch_add(1, AtomicOrdering::Relaxed));
        let job = Arc::new(Job {
            snapshot: snap.id.clone(),
            total: req.spec.n_scenarios,
            completed: AtomicUsize::new(0),
            state: Mutex::new(JobState::Running),
        });
        lock(&self.inner.jobs).put(job_id.clone(), job.clone());
        let spec = req.spec;
        let total = spec.n_scenarios;
        self.inner.pool.spawn(move || {
            let progress = |n: usize| {
                job.completed.fetch_max(n, AtomicOrdering::Relaxed);
            };
            let outcome = run_scenario(&snap.table, &snap.ordering, &spec, snap.metrics.ci_convention, &progress);
            *lock(&job.state) = match outcome {
                Ok(r) => JobState::Done { result: Box::new(r) },
                Err(e) => JobState::Failed { error: e.to_string() },
            };
        });
        ApiResponse::ok(
            202,
            json!({"job": job_id, "status_url": format!("/jobs/{job_id}"), "total": total}),
        )
    }

    fn get_job(&self, id: &str) -> ApiResponse {
        let Some(job) = lock(&self.inner.jobs).get(id).cloned() else {
            return ApiResponse::not_found("job", id);
        };
        let mut v = serde_json::to_value(&*lock(&job.state)).expect("job state serializes");
        v["job"] = json!(id);
        v["snapshot"] = json!(job.snapshot);
        v["total"] = json!(job.total);
        v["completed"] = json!(job.completed.load(AtomicOrdering::Relaxed));
        ApiResponse::ok(200, v)
    }

    fn get_lorenz(&self, id: &str, raw_category: &str) -> ApiResponse {
        let Some(snap) = self.snapshot(id) else {
            return ApiResponse::not_found("snapshot", id);
        };
        let category = percent_decode_str(raw_category).decode_utf8_lossy();
        let Some(m) = snap.metrics.categories.iter().find(|m| m.category == category) else {
            return ApiResponse::not_found("category", &category);
        };
        let diagonal = Polyline::new(vec![[0.0, 0.0], [1.0, 1.0]]).expect("diagonal is monotone");
        ApiResponse::ok(
            200,
            json!({
                "snapshot": snap.id,
                "category": m.category,
                "aih": m.aih,
                "ci": m.ci,
                "derivative": m.lorenz_derivative,
                "reference": diagonal,
            }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DATA: &str = "category,unit,weight\nA,Users,3\nA,General public,1\nB,Workers,2\nB,Users,2\n";

    fn api() -> Api {
        Api::new(ServiceConfig::default()).unwrap()
    }

    fn create(api: &Api) -> String {
        let body = json!({"schema": "aggregated_triplets", "data": DATA}).to_string();
        let r = api.handle("POST", "/snapshots", body.as_bytes());
        assert_eq!(r.status, 201, "{}", r.body);
        r.body["id"].as_str().unwrap().to_string()
    }

    #[test]
    fn create_and_fetch() {
        let api = api();
        let id = create(&api);
        assert_eq!(id, "snap-000001");
        let m = api.handle("GET", &format!("/snapshots/{id}/metrics"), b"");
        assert_eq!(m.status, 200);
        assert_eq!(m.body["categories"].as_array().unwrap().len(), 2);
        assert_eq!(api.handle("GET", "/snapshots", b"").body["snapshots"][0]["id"], json!(id));
    }

    #[test]
    fn errors_carry_codes() {
        let api = api();
        let r = api.handle("GET", "/snapshots/nope/metrics", b"");
        assert_eq!((r.status, r.body["error"]["code"].as_str()), (404, Some("not_found")));
        let r = api.handle("POST", "/snapshots", b"{");
        assert_eq!(r.body["error"]["code"], "bad_request");
        let r = api.handle("DELETE", "/snapshots", b"");
        assert_eq!(r.status, 405);
        let r = api.handle("GET", "/elsewhere", b"");
        assert_eq!(r.status, 404);
    }

    #[test]
    fn reorder_rejects_non_permutations() {
        let api = api();
        let id = create(&api);
        let body = json!({"ordering": ["Users", "Workers", "Martians"]}).to_string();
        let r = api.handle("POST", &format!("/snapshots/{id}/reorder"), body.as_bytes());
        assert_eq!(r.status, 422);
        assert_eq!(r.body["error"]["code"], "invalid_ordering");
        assert_eq!(r.body["error"]["details"]["extra"], json!(["Martians"]));
        assert_eq!(r.body["error"]["details"]["missing"].as_array().unwrap().len(), 7);
    }

    #[test]
    fn lorenz_decodes_category() {
        let api = api();
        let body = json!({"schema": "aggregated_triplets", "data": "category,unit,weight\nX & Y,Users,1\nX & Y,Workers,1\n"})
            .to_string();
        let id = api.handle("POST", "/snapshots", body.as_bytes()).body["id"].as_str().unwrap().to_string();
        let r = api.handle("GET", &format!("/snapshots/{id}/lorenz/X%20%26%20Y"), b"");
        assert_eq!(r.status, 200, "{}", r.body);
        assert_eq!(r.body["category"], "X & Y");
        let r = api.handle("GET", &format!("/snapshots/{id}/lorenz/Nope"), b"");
        assert_eq!(r.status, 404);
    }

    #[test]
    fn lru_evicts_oldest() {
        let api = Api::new(ServiceConfig {
            snapshot_capacity: 2,
            ..Default::default()
        })
        .unwrap();
        let a = create(&api);
        let _b = create(&api);
        let _c = create(&api);
        assert_eq!(api.handle("GET", &format!("/snapshots/{a}/metrics"), b"").status, 404);
    }

    #[test]
    fn invalid_scenario_spec() {
        let api = api();
        let id = create(&api);
        let body = json!({"kind": "removal", "removal_fraction": 1.5, "trials": 2}).to_string();
        let r = api.handle("POST", &format!("/snapshots/{id}/scenario"), body.as_bytes());
        assert_eq!((r.status, r.body["error"]["code"].as_str()), (422, Some("invalid_scenario")));
    }
}
