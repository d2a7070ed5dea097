//! HTTP routes.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, NaiveDate, NaiveTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use urnmap_ais::{csv_io::parse_utc, import_csv, status_filter, DISPLAYED_STATUSES};
use urnmap_core::environment::load_mpas;
use urnmap_core::exposure::{RegionSummary, SpeedCap};
use urnmap_core::products::{estimate_vessel, latest_per_vessel, spl_map, MapProduct, SelRequest};
use urnmap_core::{BoundingBox, IndicatorBand, MpaPolygon, SlModelId, VesselRecord};

use crate::grid_json::{GridPayload, SEL_UNIT, SPL_UNIT};
use crate::jobs::{Admission, Job, JobStatus, ScenarioSpec, SelJobSpec, ZoneRef};
use crate::state::AppState;
use crate::tiers::{self, Tier};

pub type Shared = Arc<AppState>;

pub const API_KEY_HEADER: &str = "x-api-key";

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    id: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
            id: None,
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(id) = self.id {
            body["id"] = json!(id);
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/api/live", get(live))
        .route("/api/vessel/{mmsi}", get(vessel))
        .route("/api/history", get(history))
        .route("/api/history/dates", get(history_dates))
        .route("/api/sel", post(submit_sel))
        .route("/api/sel/{id}", get(sel_status))
        .route("/api/sel/{id}/export", get(sel_export))
        .route("/api/mpa", get(mpa))
        .route("/api/regions", get(regions))
        .route("/api/records", post(upload_records))
        .route("/api/status", get(status))
        .with_state(state)
}

fn tier_of(state: &AppState, headers: &HeaderMap) -> ApiResult<Tier> {
    let key = headers.get(API_KEY_HEADER).and_then(|v| v.to_str().ok());
    state
        .tier(key)
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "unknown API key"))
}

fn csv_response(body: String, filename: Option<String>) -> Response {
    let mut headers = HeaderMap::new();
    headers.insert(header::CONTENT_TYPE, "text/csv; charset=utf-8".parse().expect("static header"));
    if let Some(f) = filename {
        if let Ok(v) = format!("attachment; filename=\"{f}\"").parse() {
            headers.insert(header::CONTENT_DISPOSITION, v);
        }
    }
    (StatusCode::OK, headers, body).into_response()
}

/// Query parameters shared by the live and historical map endpoints.
#[derive(Debug, Default, Deserialize)]
pub struct MapQuery {
    pub extent: Option<String>,
    pub region: Option<String>,
    pub band: Option<String>,
    pub model: Option<String>,
    pub statuses: Option<String>,
    pub format: Option<String>,
    pub date: Option<String>,
    pub t: Option<String>,
}

struct MapParams {
    extent: BoundingBox,
    band: IndicatorBand,
    model: SlModelId,
    statuses: Vec<u8>,
    csv: bool,
}

fn resolve_extent(state: &AppState, extent: Option<&str>, region: Option<&str>) -> ApiResult<BoundingBox> {
    let b = match (extent, region) {
        (Some(e), _) => BoundingBox::parse(e).map_err(|e| ApiError::bad_request(e.to_string()))?,
        (None, Some(name)) => state
            .regions
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.bbox)
            .ok_or_else(|| ApiError::not_found(format!("unknown region '{name}'")))?,
        (None, None) => return Err(ApiError::bad_request("an extent or region is required")),
    };
    if !state.regions.is_empty() && !state.regions.iter().any(|r| r.bbox.intersects(&b)) {
        return Err(ApiError::not_found("extent lies outside every configured region"));
    }
    Ok(b)
}

fn check_grid_size(state: &AppState, extent: BoundingBox) -> ApiResult<()> {
    let spec = state
        .config
        .products
        .grid(extent)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    if spec.len() > state.config.max_grid_cells {
        return Err(ApiError::bad_request(format!(
            "extent needs {} cells; the limit is {}",
            spec.len(),
            state.config.max_grid_cells
        )));
    }
    Ok(())
}

fn map_params(state: &AppState, q: &MapQuery) -> ApiResult<MapParams> {
    let band = q
        .band
        .as_deref()
        .unwrap_or("bb")
        .parse::<IndicatorBand>()
        .map_err(ApiError::bad_request)?;
    let model = q
        .model
        .as_deref()
        .unwrap_or("combined")
        .parse::<SlModelId>()
        .map_err(ApiError::bad_request)?;
    let statuses = match q.statuses.as_deref() {
        None | Some("") => DISPLAYED_STATUSES.to_vec(),
        Some(s) => s
            .split(',')
            .map(|p| p.trim().parse::<u8>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| ApiError::bad_request(format!("statuses '{s}' must be a comma-separated list of codes")))?
            .into_iter()
            .filter(|s| DISPLAYED_STATUSES.contains(s))
            .collect(),
    };
    let csv = match q.format.as_deref() {
        None | Some("json") => false,
        Some("csv") => true,
        Some(f) => return Err(ApiError::bad_request(format!("unknown format '{f}'"))),
    };
    let extent = resolve_extent(state, q.extent.as_deref(), q.region.as_deref())?;
    check_grid_size(state, extent)?;
    Ok(MapParams {
        extent,
        band,
        model,
        statuses,
        csv,
    })
}

async fn compute_map(state: Shared, p: &MapParams, records: Vec<VesselRecord>) -> ApiResult<MapProduct<f64>> {
    let records = status_filter(&records, &p.statuses);
    let (model, extent) = (p.model, p.extent);
    tokio::task::spawn_blocking(move || {
        spl_map(&state.env.field, &state.models, &state.config.products, model, extent, &records)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
    .map_err(|e| ApiError::bad_request(e.to_string()))
}

fn map_body(state: &AppState, p: &MapParams, product: MapProduct<f64>) -> Value {
    let truncated = product.vessels.len() > state.config.max_vessels;
    let vessels: Vec<_> = product.vessels.into_iter().take(state.config.max_vessels).collect();
    json!({
        "band": p.band,
        "model": p.model,
        "statuses": p.statuses,
        "vessels": vessels,
        "truncated": truncated,
        "skipped": product.skipped,
        "counts": product.counts,
        "grid": GridPayload::new(&product.grid, &[p.band], SPL_UNIT),
    })
}

async fn live(State(state): State<Shared>, Query(q): Query<MapQuery>) -> ApiResult<Response> {
    let p = map_params(&state, &q)?;
    let records = state.cache.records();
    let product = compute_map(state.clone(), &p, records).await?;
    if p.csv {
        return Ok(csv_response(product.grid.to_csv("spl"), Some("live-spl.csv".into())));
    }
    let mut body = map_body(&state, &p, product);
    body["mode"] = json!("live");
    body["last_update"] = json!(state.cache.last_update());
    Ok(Json(body).into_response())
}

fn parse_snapshot_time(date: NaiveDate, t: &str) -> ApiResult<DateTime<Utc>> {
    if let Ok(ts) = parse_utc(t) {
        if ts.date_naive() != date {
            return Err(ApiError::bad_request(format!("time {t} is not on {date}")));
        }
        return Ok(ts);
    }
    let time = NaiveTime::parse_from_str(t, "%H:%M:%S")
        .or_else(|_| NaiveTime::parse_from_str(t, "%H:%M"))
        .map_err(|_| ApiError::bad_request(format!("time '{t}' must be HH:MM[:SS] or an ISO-8601 UTC timestamp")))?;
    Ok(date.and_time(time).and_utc())
}

async fn history(State(state): State<Shared>, Query(q): Query<MapQuery>) -> ApiResult<Response> {
    let date_s = q.date.as_deref().ok_or_else(|| ApiError::bad_request("date is required"))?;
    let date = NaiveDate::parse_from_str(date_s, "%Y-%m-%d")
        .map_err(|_| ApiError::bad_request(format!("date '{date_s}' must be YYYY-MM-DD")))?;
    let t = parse_snapshot_time(date, q.t.as_deref().ok_or_else(|| ApiError::bad_request("t is required"))?)?;
    let dates = state.store.dates().map_err(|e| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, e.to_string()))?;
    if !dates.contains(&date) {
        return Err(ApiError::not_found(format!("no stored data for {date}")));
    }
    let p = map_params(&state, &q)?;
    let validity = state.config.history_validity_s;
    let from = t - chrono::Duration::milliseconds((validity * 1000.0).ceil() as i64);
    let stored = state
        .store
        .query(None, from, t)
        .map_err(|e| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, e.to_string()))?;
    let snapshot = latest_per_vessel(&stored, Some(t), Some(validity));
    let product = compute_map(state.clone(), &p, snapshot).await?;
    if p.csv {
        return Ok(csv_response(product.grid.to_csv("spl"), Some(format!("history-{date}-spl.csv"))));
    }
    let mut body = map_body(&state, &p, product);
    body["mode"] = json!("historical");
    body["t"] = json!(t);
    body["validity_s"] = json!(validity);
    Ok(Json(body).into_response())
}

async fn history_dates(State(state): State<Shared>) -> ApiResult<Json<Value>> {
    let dates = state.store.dates().map_err(|e| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, e.to_string()))?;
    Ok(Json(json!({ "dates": dates })))
}

#[derive(Debug, Deserialize)]
pub struct ModelQuery {
    pub model: Option<String>,
}

async fn vessel(State(state): State<Shared>, Path(mmsi): Path<u32>, Query(q): Query<ModelQuery>) -> ApiResult<Json<Value>> {
    let model = q
        .model
        .as_deref()
        .unwrap_or("combined")
        .parse::<SlModelId>()
        .map_err(ApiError::bad_request)?;
    let (record, source, received_at) = match state.cache.get(mmsi) {
        Some(e) => (e.record, "live", Some(e.received_at)),
        None => match state.store.latest(mmsi) {
            Ok(Some(r)) => (r, "stored", None),
            Ok(None) => return Err(ApiError::not_found(format!("vessel {mmsi} not found"))),
            Err(e) => return Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, e.to_string())),
        },
    };
    if status_filter(std::slice::from_ref(&record), &DISPLAYED_STATUSES).is_empty() {
        return Err(ApiError::not_found(format!("vessel {mmsi} not found")));
    }
    let (estimate, _) = estimate_vessel(&state.models, model, &record);
    let mut body = serde_json::to_value(estimate).map_err(|e| ApiError::internal(e.to_string()))?;
    body["source"] = json!(source);
    body["received_at"] = json!(received_at);
    Ok(Json(body))
}

/// Body of `POST /api/sel`. `extent` is `[south, west, north, east]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelSubmission {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    #[serde(default)]
    pub extent: Option<[f64; 4]>,
    #[serde(default)]
    pub region: Option<String>,
    #[serde(default)]
    pub scenario: Option<ScenarioSpec>,
    #[serde(default)]
    pub summary_zone: Option<ZoneRef>,
}

fn resolve_zone(state: &AppState, z: &ZoneRef) -> ApiResult<MpaPolygon> {
    match z {
        ZoneRef::Id(id) => state
            .env
            .mpas
            .iter()
            .find(|m| &m.id == id || &m.name == id)
            .cloned()
            .ok_or_else(|| ApiError::bad_request(format!("unknown MPA '{id}'"))),
        ZoneRef::GeoJson(v) => {
            let text = match v.get("type").and_then(Value::as_str) {
                Some("Polygon") | Some("MultiPolygon") => json!({"type": "Feature", "properties": {"name": "zone"}, "geometry": v}).to_string(),
                _ => v.to_string(),
            };
            load_mpas(&text)
                .map_err(|e| ApiError::bad_request(format!("zone: {e}")))?
                .into_iter()
                .next()
                .ok_or_else(|| ApiError::bad_request("zone has no polygon"))
        }
    }
}

async fn submit_sel(State(state): State<Shared>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let tier = tier_of(&state, &headers)?;
    let sub: SelSubmission = serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("request body: {e}")))?;
    if sub.end <= sub.start {
        return Err(ApiError::bad_request("end must be after start"));
    }
    let extent = match sub.extent {
        Some([s, w, n, e]) => {
            let b = BoundingBox::new(s, w, n, e).map_err(|e| ApiError::bad_request(e.to_string()))?;
            resolve_extent(&state, Some(&format!("{s},{w},{n},{e}")), None)?;
            b
        }
        None => resolve_extent(&state, None, sub.region.as_deref())?,
    };
    let duration_s = (sub.end - sub.start).num_milliseconds() as f64 / 1000.0;
    tiers::check(tier, state.config.tiers.limits(tier), duration_s, &extent)
        .map_err(|m| ApiError::new(StatusCode::FORBIDDEN, m))?;
    check_grid_size(&state, extent)?;

    let scenario = sub
        .scenario
        .as_ref()
        .map(|s| {
            let zone = resolve_zone(&state, &s.zone)?;
            SpeedCap::new(s.cap_kn, zone, s.buffer_km).map_err(|e| ApiError::bad_request(e.to_string()))
        })
        .transpose()?;
    let summary_zone = sub.summary_zone.as_ref().map(|z| resolve_zone(&state, z)).transpose()?;
    let request = SelRequest {
        start: sub.start,
        end: sub.end,
        extent,
        scenario,
        summary_zone,
    };
    let spec = SelJobSpec {
        start: sub.start,
        end: sub.end,
        extent,
        scenario: sub.scenario,
        summary_zone: sub.summary_zone,
    };
    match state.jobs.admit(spec, state.now()) {
        Admission::Created(id) => {
            spawn_job(state.clone(), id.clone(), request);
            Ok((StatusCode::ACCEPTED, Json(json!({"id": id, "status": JobStatus::Queued}))).into_response())
        }
        Admission::InFlight(id) => Err(ApiError {
            status: StatusCode::CONFLICT,
            message: "an identical SEL job is already running".into(),
            id: Some(id),
        }),
        Admission::Completed(id) => Ok((StatusCode::OK, Json(json!({"id": id, "status": JobStatus::Done}))).into_response()),
    }
}

fn spawn_job(state: Shared, id: String, request: SelRequest) {
    tokio::spawn(async move {
        let Ok(_permit) = state.jobs.slots().acquire_owned().await else {
            return;
        };
        state.jobs.mark_running(&id, state.now());
        let worker = state.clone();
        let outcome = tokio::task::spawn_blocking(move || worker.compute_sel(&request))
            .await
            .unwrap_or_else(|e| Err(format!("job panicked: {e}")));
        if let Err(e) = &outcome {
            log::warn!("SEL job {id} failed: {e}");
        }
        state.jobs.finish(&id, outcome, state.now());
    });
}

#[derive(Serialize)]
struct BandLevels {
    #[serde(rename = "63")]
    tob63: Option<f64>,
    #[serde(rename = "125")]
    tob125: Option<f64>,
    bb: Option<f64>,
}

impl From<[Option<f64>; 3]> for BandLevels {
    fn from(v: [Option<f64>; 3]) -> Self {
        Self {
            tob63: v[0],
            tob125: v[1],
            bb: v[2],
        }
    }
}

fn summary_json(s: &RegionSummary) -> Value {
    json!({
        "zone": s.zone,
        "baseline_db": BandLevels::from(s.baseline_db),
        "scenario_db": s.scenario_db.map(BandLevels::from),
        "delta_db": s.delta_db().map(BandLevels::from),
    })
}

fn job_json(job: &Job, model: SlModelId) -> Value {
    let mut body = json!({
        "id": job.id,
        "status": job.status,
        "request": job.spec,
        "submitted_at": job.submitted_at,
        "started_at": job.started_at,
        "finished_at": job.finished_at,
    });
    if let Some(e) = &job.error {
        body["error"] = json!(e);
    }
    if let Some(r) = &job.result {
        body["result"] = json!({
            "model": model,
            "segments": r.segments,
            "used_segments": r.run.used,
            "skipped_segments": r.run.skipped.len(),
            "baseline": GridPayload::new(&r.run.baseline, &IndicatorBand::ALL, SEL_UNIT),
            "scenario": r.run.scenario.as_ref().map(|g| GridPayload::new(g, &IndicatorBand::ALL, SEL_UNIT)),
            "summary": r.summary.as_ref().map(summary_json),
        });
    }
    body
}

async fn sel_status(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let job = state
        .jobs
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("unknown job '{id}'")))?;
    Ok(Json(job_json(&job, state.config.products.sel_model)))
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    pub grid: Option<String>,
}

async fn sel_export(State(state): State<Shared>, Path(id): Path<String>, Query(q): Query<ExportQuery>) -> ApiResult<Response> {
    let job = state
        .jobs
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("unknown job '{id}'")))?;
    let Some(result) = &job.result else {
        return Err(ApiError::new(StatusCode::CONFLICT, format!("job '{id}' has not finished")));
    };
    let which = q.grid.as_deref().unwrap_or("baseline");
    let csv = match which {
        "baseline" => result.baseline_csv(),
        "scenario" => result
            .scenario_csv()
            .ok_or_else(|| ApiError::not_found(format!("job '{id}' has no scenario")))?,
        other => return Err(ApiError::bad_request(format!("grid '{other}' must be baseline or scenario"))),
    };
    Ok(csv_response(csv, Some(format!("{id}-{which}.csv"))))
}

#[derive(Debug, Deserialize)]
pub struct ExtentQuery {
    pub extent: Option<String>,
}

async fn mpa(State(state): State<Shared>, Query(q): Query<ExtentQuery>) -> ApiResult<Json<Value>> {
    let extent = q
        .extent
        .as_deref()
        .map(BoundingBox::parse)
        .transpose()
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    let features: Vec<Value> = state
        .env
        .mpas
        .iter()
        .filter(|m| extent.is_none_or(|e| m.bbox().intersects(&e)))
        .map(MpaPolygon::to_geojson)
        .collect();
    Ok(Json(json!({"type": "FeatureCollection", "features": features})))
}

async fn regions(State(state): State<Shared>) -> Json<Value> {
    let features: Vec<Value> = state.regions.iter().map(|r| r.to_geojson()).collect();
    Json(json!({"type": "FeatureCollection", "features": features}))
}

async fn upload_records(State(state): State<Shared>, headers: HeaderMap, body: Bytes) -> ApiResult<Json<Value>> {
    if tier_of(&state, &headers)? != Tier::Registered {
        return Err(ApiError::new(StatusCode::FORBIDDEN, "record upload requires the registered tier"));
    }
    let imported = import_csv(body.as_ref()).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let stored = state.store.insert(&imported.records).map_err(|e| {
        state.mark_store_failure(e.to_string());
        ApiError::new(StatusCode::SERVICE_UNAVAILABLE, e.to_string())
    })?;
    let rejected: Vec<Value> = imported
        .rejected
        .iter()
        .map(|r| json!({"line": r.line, "message": r.message}))
        .collect();
    Ok(Json(json!({
        "parsed": imported.records.len(),
        "stored": stored,
        "rejected": rejected,
    })))
}

async fn status(State(state): State<Shared>) -> Json<Value> {
    let jobs: BTreeMap<&str, usize> = state.jobs.counts();
    Json(json!({
        "health": state.health(),
        "last_update": state.cache.last_update(),
        "cached_vessels": state.cache.len(),
        "regions": state.regions.iter().map(|r| r.name.clone()).collect::<Vec<_>>(),
        "jobs": jobs,
    }))
}
