//! Static SVG rendering of a view from a permalink state.

use std::collections::BTreeMap;

use visrisk_core::state::Transform;
use visrisk_core::svg::{self, LineSeries};
use visrisk_core::{
    AlluvialFlows, Assignments, DataCube, Error, Sample, TimePoint, TimeWindow, ViewId, ViewState,
};

use crate::artifacts::network_view;
use crate::error::{ServeError, ServeResult};
use crate::workspace::Workspace;

/// Shares drawn as distressed in the network export.
pub const DISTRESS_THRESHOLD: f64 = 0.5;

pub fn parse_window(from: Option<&str>, to: Option<&str>) -> ServeResult<TimeWindow> {
    let parse = |s: Option<&str>| -> ServeResult<Option<TimePoint>> {
        match s.map(str::trim).filter(|s| !s.is_empty()) {
            Some(s) => Ok(Some(TimePoint::parse(s)?)),
            None => Ok(None),
        }
    };
    Ok(TimeWindow::new(parse(from)?, parse(to)?)?)
}

pub fn state_window(state: &ViewState) -> ServeResult<TimeWindow> {
    parse_window(state.from.as_deref(), state.to.as_deref())
}

fn time_range(cube: &DataCube, window: &TimeWindow) -> Vec<usize> {
    (0..cube.times().len())
        .filter(|&t| window.contains(&cube.times()[t]))
        .collect()
}

fn check_entities(cube: &DataCube, entities: &[String]) -> ServeResult<()> {
    for e in entities {
        cube.entity_index(e)?;
    }
    Ok(())
}

fn event_marks(ws: &Workspace, state: &ViewState, times: &[&TimePoint], shown: &[&str]) -> Vec<(usize, String)> {
    ws.events
        .iter()
        .filter(|ev| shown.contains(&ev.entity.as_str()))
        .filter(|ev| state.events.is_empty() || state.events.contains(&ev.label))
        .filter_map(|ev| {
            times
                .iter()
                .position(|t| **t == ev.start)
                .map(|i| (i, format!("{} {}", ev.entity, ev.label)))
        })
        .collect()
}

pub fn render(ws: &Workspace, view: ViewId, state: &ViewState) -> ServeResult<String> {
    let window = state_window(state)?;
    if view != ViewId::Bim {
        check_entities(&ws.cube, &state.entities)?;
    }
    match view {
        ViewId::Dashboard => dashboard(ws, state, &window),
        ViewId::Ewm => ewm(ws, state, &window),
        ViewId::Fsm => fsm(ws, state, &window),
        ViewId::Fsmt => fsmt(ws, state, &window),
        ViewId::Bim => bim(ws, state, &window),
    }
}

fn dashboard(ws: &Workspace, state: &ViewState, window: &TimeWindow) -> ServeResult<String> {
    let cube = ws.cube_for(state.transform);
    let indicator = match &state.indicator {
        Some(k) => k.clone(),
        None => cube
            .indicators()
            .first()
            .cloned()
            .ok_or(ServeError::MissingArtifact("indicator"))?,
    };
    let k = cube.indicator_index(&indicator)?;
    let ts = time_range(cube, window);
    let shown: Vec<&str> = cube
        .entities()
        .iter()
        .map(String::as_str)
        .filter(|e| state.entities.is_empty() || state.entities.iter().any(|s| s == e))
        .collect();
    let series: Vec<LineSeries> = shown
        .iter()
        .map(|e| {
            let ei = cube.entity_index(e).expect("entity from cube");
            LineSeries {
                label: e.to_string(),
                values: ts.iter().map(|&t| cube.value(ei, t, k)).collect(),
                highlighted: false,
            }
        })
        .collect();
    let times: Vec<&TimePoint> = ts.iter().map(|&t| &cube.times()[t]).collect();
    let labels: Vec<String> = times.iter().map(|t| t.to_string()).collect();
    let suffix = if state.transform == Transform::Percentile { " (percentile)" } else { "" };
    Ok(svg::line_chart(
        &format!("{indicator}{suffix}"),
        &labels,
        &series,
        &event_marks(ws, state, &times, &shown),
    ))
}

fn ewm(ws: &Workspace, state: &ViewState, window: &TimeWindow) -> ServeResult<String> {
    let risk = ws.risk.as_ref().ok_or(ServeError::MissingArtifact("risk"))?;
    let times: Vec<&TimePoint> = ws.cube.times().iter().filter(|t| window.contains(t)).collect();
    let labels: Vec<String> = times.iter().map(|t| t.to_string()).collect();
    let shown: Vec<&str> = ws
        .cube
        .entities()
        .iter()
        .map(String::as_str)
        .filter(|e| state.entities.is_empty() || state.entities.iter().any(|s| s == e))
        .collect();
    let marks = event_marks(ws, state, &times, &shown);
    if let [entity] = shown.as_slice() {
        let rows: BTreeMap<&TimePoint, &visrisk_core::ewm::RiskRow<f64>> =
            risk.for_entity(entity).map(|r| (&r.time, r)).collect();
        let layers: Vec<(String, Vec<f64>)> = risk
            .groups
            .iter()
            .enumerate()
            .map(|(g, name)| {
                let values = times
                    .iter()
                    .map(|t| rows.get(t).map_or(0.0, |r| r.contributions[g]))
                    .collect();
                (name.clone(), values)
            })
            .collect();
        return Ok(svg::stacked_area(
            &format!("{entity}: group contributions"),
            &labels,
            &layers,
            &marks,
        ));
    }
    let series: Vec<LineSeries> = shown
        .iter()
        .map(|e| {
            let rows: BTreeMap<&TimePoint, f64> =
                risk.for_entity(e).map(|r| (&r.time, r.probability)).collect();
            LineSeries {
                label: e.to_string(),
                values: times.iter().map(|t| rows.get(t).copied()).collect(),
                highlighted: false,
            }
        })
        .collect();
    Ok(svg::line_chart("crisis probability", &labels, &series, &marks))
}

fn fsm(ws: &Workspace, state: &ViewState, window: &TimeWindow) -> ServeResult<String> {
    let som = ws.som.as_ref().ok_or(ServeError::MissingArtifact("som"))?;
    let model = &som.model;
    let layer = state
        .layer
        .clone()
        .or_else(|| state.indicator.clone())
        .unwrap_or_else(|| model.dim_names()[0].clone());
    let values = if let Some(class) = layer.strip_prefix("state:") {
        som.state_layer
            .as_ref()
            .ok_or(ServeError::MissingArtifact("state layer"))?
            .probability_plane(class)
            .ok_or_else(|| ServeError::Core(Error::UnknownIndicator(layer.clone())))?
    } else {
        let k = model
            .dim_names()
            .iter()
            .position(|d| *d == layer)
            .ok_or_else(|| Error::UnknownIndicator(layer.clone()))?;
        model.component_plane(k)?
    };
    let cube = ws.cube_for(som.transform);
    let trajectories = state
        .entities
        .iter()
        .map(|e| {
            let path = trajectory(cube, model, e, window)?;
            Ok((e.clone(), path.into_iter().map(|(_, g)| g).collect()))
        })
        .collect::<ServeResult<Vec<_>>>()?;
    Ok(svg::grid_heatmap(
        &layer,
        model.width(),
        model.height(),
        &values,
        &trajectories,
    ))
}

/// Grid coordinates of an entity's observed rows inside `window`.
pub fn trajectory(
    cube: &DataCube,
    model: &visrisk_core::SomModel,
    entity: &str,
    window: &TimeWindow,
) -> ServeResult<Vec<(TimePoint, visrisk_core::GridCoord)>> {
    let e = cube.entity_index(entity)?;
    let (times, rows): (Vec<TimePoint>, Vec<Sample<f64>>) = time_range(cube, window)
        .into_iter()
        .map(|t| (cube.times()[t].clone(), cube.sample(e, t)))
        .filter(|(_, s)| s.observed_count() > 0)
        .unzip();
    let coords = model.project_trajectory(&rows)?;
    Ok(times.into_iter().zip(coords).collect())
}

/// Assignments and flows restricted to the time points inside `window`.
pub fn windowed_flows(assignments: &Assignments, window: &TimeWindow) -> (Vec<usize>, AlluvialFlows) {
    let keep: Vec<usize> = (0..assignments.times.len())
        .filter(|&t| window.contains(&assignments.times[t]))
        .collect();
    let sub = Assignments {
        times: keep.iter().map(|&t| assignments.times[t].clone()).collect(),
        units: assignments.units,
        per_time: keep.iter().map(|&t| assignments.per_time[t].clone()).collect(),
    };
    (keep, AlluvialFlows::from_assignments(&sub))
}

fn fsmt(ws: &Workspace, state: &ViewState, window: &TimeWindow) -> ServeResult<String> {
    let sotm = ws.sotm.as_ref().ok_or(ServeError::MissingArtifact("sotm"))?;
    let (keep, flows) = windowed_flows(&sotm.assignments, window);
    let pick = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> { keep.iter().map(|&t| rows[t].clone()).collect() };
    let coloring = pick(&sotm.coloring);
    let structural = pick(&sotm.structural_positions);
    let highlight: Vec<(usize, usize)> = match state.entities.first() {
        Some(e) => keep
            .iter()
            .enumerate()
            .filter_map(|(i, &t)| sotm.assignments.per_time[t].get(e).map(|&u| (i, u)))
            .collect(),
        None => Vec::new(),
    };
    Ok(svg::alluvial(
        "financial stability map over time",
        &flows,
        &coloring,
        state.structural.then_some(structural.as_slice()),
        &highlight,
    ))
}

fn bim(ws: &Workspace, state: &ViewState, window: &TimeWindow) -> ServeResult<String> {
    let settings = ws.network_settings();
    let view = network_view(
        &ws.occurrences,
        window,
        &settings,
        state.seed.unwrap_or(settings.seed),
        &state.pinned,
        &ws.lexicon,
    )?;
    Ok(svg::network("bank interrelation map", &view, DISTRESS_THRESHOLD))
}
