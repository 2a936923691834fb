//! HTTP routes. Every handler reads one workspace snapshot.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use visrisk_core::state::Transform;
use visrisk_core::{decode_state, encode_state, Error, ViewId, ViewState};

use crate::artifacts::network_view;
use crate::error::{ServeError, ServeResult};
use crate::export::{self, parse_window};
use crate::workspace::{Workspace, WorkspaceHandle};

pub type AppState = Arc<WorkspaceHandle>;

pub fn router(handle: AppState) -> Router {
    Router::new()
        .route("/api/meta", get(meta))
        .route("/api/cube/panel", get(panel))
        .route("/api/cube/series", get(series))
        .route("/api/events", get(events))
        .route("/api/som", get(som))
        .route("/api/som/plane", get(som_plane))
        .route("/api/som/trajectory", get(som_trajectory))
        .route("/api/sotm", get(sotm))
        .route("/api/sotm/plane", get(sotm_plane))
        .route("/api/network", get(network))
        .route("/api/network/relax", post(relax))
        .route("/api/ewm", get(ewm))
        .route("/api/state", post(post_state))
        .route("/api/state/{token}", get(get_state))
        .route("/api/export/{file}", get(export_svg))
        .with_state(handle)
}

fn parse_transform(raw: Option<&str>) -> ServeResult<Transform> {
    match raw.unwrap_or("raw") {
        "raw" => Ok(Transform::Raw),
        "percentile" => Ok(Transform::Percentile),
        other => Err(ServeError::BadRequest(format!("unknown transform {other:?}"))),
    }
}

async fn meta(State(h): State<AppState>) -> Json<Value> {
    let ws = h.snapshot();
    let (e, t, k) = ws.cube.shape();
    Json(json!({
        "version": ws.version,
        "shape": { "entities": e, "times": t, "indicators": k },
        "entities": ws.cube.entities(),
        "times": ws.cube.times(),
        "indicators": ws.cube.indicators(),
        "views": ViewId::ALL,
        "groups": ws.risk.as_ref().map(|r| &r.groups),
        "classes": ws.som.as_ref().and_then(|s| s.state_layer.as_ref()).map(|l| &l.classes),
        "artifacts": {
            "events": !ws.events.is_empty(),
            "som": ws.som.is_some(),
            "sotm": ws.sotm.is_some(),
            "network": ws.network.is_some(),
            "ewm": ws.risk.is_some(),
        },
    }))
}

#[derive(Deserialize)]
struct PanelQuery {
    indicator: String,
    transform: Option<String>,
}

async fn panel(State(h): State<AppState>, Query(q): Query<PanelQuery>) -> ServeResult<Json<Value>> {
    let ws = h.snapshot();
    let transform = parse_transform(q.transform.as_deref())?;
    let slice = ws.cube_for(transform).slice_indicator_panel(&q.indicator)?;
    let series: Vec<Value> = ws
        .cube
        .entities()
        .iter()
        .zip(slice.to_rows())
        .map(|(e, values)| json!({ "entity": e, "values": values }))
        .collect();
    Ok(Json(json!({
        "version": ws.version,
        "indicator": q.indicator,
        "transform": transform,
        "times": ws.cube.times(),
        "series": series,
    })))
}

#[derive(Deserialize)]
struct EntityQuery {
    entity: String,
    transform: Option<String>,
}

async fn series(State(h): State<AppState>, Query(q): Query<EntityQuery>) -> ServeResult<Json<Value>> {
    let ws = h.snapshot();
    let transform = parse_transform(q.transform.as_deref())?;
    let slice = ws.cube_for(transform).slice_entity_series(&q.entity)?;
    let events: Vec<_> = ws.events.iter().filter(|e| e.entity == q.entity).collect();
    Ok(Json(json!({
        "version": ws.version,
        "entity": q.entity,
        "transform": transform,
        "times": ws.cube.times(),
        "indicators": ws.cube.indicators(),
        "values": slice.to_rows(),
        "events": events,
    })))
}

async fn events(State(h): State<AppState>) -> Json<Value> {
    let ws = h.snapshot();
    Json(json!({ "version": ws.version, "events": ws.events }))
}

fn som_of(ws: &Workspace) -> ServeResult<&crate::artifacts::SomArtifact> {
    ws.som.as_ref().ok_or(ServeError::MissingArtifact("som"))
}

async fn som(State(h): State<AppState>) -> ServeResult<Json<Value>> {
    let ws = h.snapshot();
    let som = som_of(&ws)?;
    let m = &som.model;
    let coords: Vec<_> = (0..m.units()).map(|i| m.coord(i)).collect();
    Ok(Json(json!({
        "version": ws.version,
        "width": m.width(),
        "height": m.height(),
        "dim_names": m.dim_names(),
        "refs": m.refs(),
        "coords": coords,
        "config": m.config(),
        "transform": som.transform,
        "state_layer": som.state_layer,
        "partitions": som.state_layer.as_ref().map(|l| l.partitions()),
    })))
}

#[derive(Deserialize)]
struct IndicatorQuery {
    indicator: String,
}

async fn som_plane(State(h): State<AppState>, Query(q): Query<IndicatorQuery>) -> ServeResult<Json<Value>> {
    let ws = h.snapshot();
    let m = &som_of(&ws)?.model;
    let k = m
        .dim_names()
        .iter()
        .position(|d| *d == q.indicator)
        .ok_or_else(|| Error::UnknownIndicator(q.indicator.clone()))?;
    Ok(Json(json!({
        "version": ws.version,
        "indicator": q.indicator,
        "width": m.width(),
        "height": m.height(),
        "values": m.component_plane(k)?,
    })))
}

#[derive(Deserialize)]
struct TrajectoryQuery {
    entity: String,
    from: Option<String>,
    to: Option<String>,
}

async fn som_trajectory(
    State(h): State<AppState>,
    Query(q): Query<TrajectoryQuery>,
) -> ServeResult<Json<Value>> {
    let ws = h.snapshot();
    let som = som_of(&ws)?;
    let window = parse_window(q.from.as_deref(), q.to.as_deref())?;
    let path = export::trajectory(ws.cube_for(som.transform), &som.model, &q.entity, &window)?;
    let points: Vec<Value> = path
        .into_iter()
        .map(|(t, g)| json!({ "time": t, "col": g.col, "row": g.row }))
        .collect();
    Ok(Json(json!({ "version": ws.version, "entity": q.entity, "path": points })))
}

fn sotm_of(ws: &Workspace) -> ServeResult<&crate::artifacts::SotmArtifact> {
    ws.sotm.as_ref().ok_or(ServeError::MissingArtifact("sotm"))
}

async fn sotm(State(h): State<AppState>) -> ServeResult<Json<Value>> {
    let ws = h.snapshot();
    let s = sotm_of(&ws)?;
    Ok(Json(json!({
        "version": ws.version,
        "times": s.model.times(),
        "M": s.model.units(),
        "sigma": s.model.sigma(),
        "dim_names": s.model.dim_names(),
        "transform": s.transform,
        "slices": s.model.slices(),
        "coloring": s.coloring,
        "flows": s.flows,
        "structural_positions": s.structural_positions,
        "assignments": s.assignments.per_time,
    })))
}

async fn sotm_plane(State(h): State<AppState>, Query(q): Query<IndicatorQuery>) -> ServeResult<Json<Value>> {
    let ws = h.snapshot();
    let s = sotm_of(&ws)?;
    let k = s
        .model
        .dim_names()
        .iter()
        .position(|d| *d == q.indicator)
        .ok_or_else(|| Error::UnknownIndicator(q.indicator.clone()))?;
    Ok(Json(json!({
        "version": ws.version,
        "indicator": q.indicator,
        "times": s.model.times(),
        "values": s.model.component_plane_t(k)?,
    })))
}

#[derive(Deserialize)]
struct NetworkQuery {
    from: Option<String>,
    to: Option<String>,
    seed: Option<u64>,
}

async fn network(State(h): State<AppState>, Query(q): Query<NetworkQuery>) -> ServeResult<Json<Value>> {
    let ws = h.snapshot();
    let window = parse_window(q.from.as_deref(), q.to.as_deref())?;
    let settings = ws.network_settings();
    let seed = q.seed.unwrap_or(settings.seed);
    let view = network_view(&ws.occurrences, &window, &settings, seed, &BTreeMap::new(), &ws.lexicon)?;
    Ok(Json(json!({ "version": ws.version, "network": view })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RelaxRequest {
    from: Option<String>,
    to: Option<String>,
    seed: Option<u64>,
    pinned: BTreeMap<String, [f64; 2]>,
}

/// Lays out the window from `seed`, then holds the pinned nodes and relaxes
/// the rest. Nothing is stored.
async fn relax(State(h): State<AppState>, Json(body): Json<RelaxRequest>) -> ServeResult<Json<Value>> {
    let ws = h.snapshot();
    let window = parse_window(body.from.as_deref(), body.to.as_deref())?;
    let settings = ws.network_settings();
    let seed = body.seed.unwrap_or(settings.seed);
    let view = network_view(&ws.occurrences, &window, &settings, seed, &body.pinned, &ws.lexicon)?;
    Ok(Json(json!({ "version": ws.version, "network": view })))
}

#[derive(Deserialize)]
struct EwmQuery {
    entity: Option<String>,
}

#[derive(Serialize)]
struct ProbabilitySeries<'a> {
    entity: &'a str,
    times: Vec<&'a visrisk_core::TimePoint>,
    probabilities: Vec<f64>,
}

async fn ewm(State(h): State<AppState>, Query(q): Query<EwmQuery>) -> ServeResult<Json<Value>> {
    let ws = h.snapshot();
    let risk = ws.risk.as_ref().ok_or(ServeError::MissingArtifact("risk"))?;
    if let Some(entity) = q.entity {
        ws.cube.entity_index(&entity)?;
        let rows: Vec<_> = risk.for_entity(&entity).collect();
        let skipped: Vec<_> = risk.skipped.iter().filter(|s| s.entity == entity).collect();
        let events: Vec<_> = ws.events.iter().filter(|e| e.entity == entity).collect();
        return Ok(Json(json!({
            "version": ws.version,
            "entity": entity,
            "groups": risk.groups,
            "bias": risk.bias,
            "rows": rows,
            "skipped": skipped,
            "events": events,
        })));
    }
    let series: Vec<ProbabilitySeries> = ws
        .cube
        .entities()
        .iter()
        .map(|e| {
            let rows: Vec<_> = risk.for_entity(e).collect();
            ProbabilitySeries {
                entity: e,
                times: rows.iter().map(|r| &r.time).collect(),
                probabilities: rows.iter().map(|r| r.probability).collect(),
            }
        })
        .collect();
    Ok(Json(json!({
        "version": ws.version,
        "groups": risk.groups,
        "series": series,
    })))
}

async fn post_state(body: Result<Json<ViewState>, axum::extract::rejection::JsonRejection>) -> ServeResult<Json<Value>> {
    let Json(state) = body.map_err(|e| ServeError::BadRequest(e.body_text()))?;
    let token = encode_state(&state)?;
    Ok(Json(json!({ "token": token })))
}

async fn get_state(Path(token): Path<String>) -> ServeResult<Json<ViewState>> {
    Ok(Json(decode_state(&token)?))
}

#[derive(Deserialize)]
struct ExportQuery {
    state: Option<String>,
}

async fn export_svg(
    State(h): State<AppState>,
    Path(file): Path<String>,
    Query(q): Query<ExportQuery>,
) -> ServeResult<impl IntoResponse> {
    let name = file
        .strip_suffix(".svg")
        .ok_or_else(|| ServeError::UnknownView(file.clone()))?;
    let view = ViewId::parse(name).ok_or_else(|| ServeError::UnknownView(name.to_string()))?;
    let state = match q.state.as_deref() {
        Some(token) => decode_state(token)?,
        None => ViewState { view, ..ViewState::default() },
    };
    let ws = h.snapshot();
    let body = export::render(&ws, view, &state)?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], body))
}

pub async fn serve(handle: AppState, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_on(handle, listener).await
}

/// Serves on an already bound listener. On Unix, SIGHUP reloads the data
/// directory and publishes the new snapshot.
pub async fn serve_on(handle: AppState, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    #[cfg(unix)]
    {
        let h = handle.clone();
        tokio::spawn(async move {
            use tokio::signal::unix::{signal, SignalKind};
            let Ok(mut hup) = signal(SignalKind::hangup()) else { return };
            while hup.recv().await.is_some() {
                if let Err(e) = h.reload() {
                    eprintln!("{}", json!({ "error": { "kind": "reload", "message": e.to_string() } }));
                }
            }
        });
    }
    axum::serve(listener, router(handle)).await
}
