//! On-disk artifacts and the pipeline stages that produce them.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use visrisk_core::ewm::{self, FitOutcome, LabelRecord};
use visrisk_core::network::{read_occurrences, DistressLexicon, NetworkView as GenericView};
use visrisk_core::som::{self, TrainConfig};
use visrisk_core::state::Transform;
use visrisk_core::{
    build_cooccurrence, fr_layout, ingest_events, ingest_observations, pin_and_relax, sotm,
    AlluvialFlows, Assignments, DataCube, Error, EventRecord, EwmModel, Frame, NetworkView,
    OccurrenceRecord, Result, RiskSeries, Sample, SomModel, SotmModel, StateLayer, TimePoint,
    TimeWindow,
};

use crate::config::{Config, EwmSettings, NetworkSettings, SomSettings, SotmSettings};

pub const CUBE: &str = "cube.json";
pub const EVENTS: &str = "events.json";
pub const SOM: &str = "som.json";
pub const SOTM: &str = "sotm.json";
pub const OCCURRENCES: &str = "occurrences.json";
pub const NETWORK: &str = "network.json";
pub const EWM_MODEL: &str = "ewm_model.json";
pub const RISK: &str = "risk.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomArtifact {
    pub transform: Transform,
    pub model: SomModel,
    pub state_layer: Option<StateLayer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SotmArtifact {
    pub transform: Transform,
    pub model: SotmModel,
    pub coloring: Vec<Vec<f64>>,
    pub structural_positions: Vec<Vec<f64>>,
    pub assignments: Assignments,
    pub flows: AlluvialFlows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkArtifact {
    pub settings: NetworkSettings,
    pub distress_terms: Vec<String>,
    pub view: NetworkView,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path)?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        serde_json::to_writer(&mut f, value)?;
        f.write_all(b"\n")?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn transformed(cube: &DataCube, transform: Transform) -> DataCube {
    match transform {
        Transform::Raw => cube.clone(),
        Transform::Percentile => cube.percentile_transform(),
    }
}

pub fn ingest(config: &Config) -> Result<(DataCube, Vec<EventRecord>)> {
    let obs = config.required(&config.observations, "observations")?;
    let mut cube: DataCube = ingest_observations(fs::File::open(obs)?)?;
    if let Some(links) = &config.links {
        cube = cube.ingest_links(fs::File::open(links)?)?;
    }
    let events = match &config.events {
        Some(p) => ingest_events(fs::File::open(p)?)?,
        None => Vec::new(),
    };
    cube.check_events(&events)?;
    Ok((cube, events))
}

pub fn train_som(
    cube: &DataCube,
    settings: &SomSettings,
    states: Option<&[LabelRecord]>,
) -> Result<SomArtifact> {
    let data = transformed(cube, settings.transform);
    let rows: Vec<Sample<f64>> = data.pool_panel().into_iter().map(|r| r.sample).collect();
    let config = TrainConfig {
        iterations: settings.iterations,
        sigma_final: settings.sigma_final,
        seed: 0,
        hard_assignment: settings.hard_assignment,
    };
    let model = som::train(
        &rows,
        settings.width,
        settings.height,
        data.indicators().to_vec(),
        config,
    )?;
    let state_layer = match states {
        Some(labels) => {
            let by_key: HashMap<(String, TimePoint), Sample<f64>> = data
                .pool_panel()
                .into_iter()
                .map(|r| ((r.entity, r.time), r.sample))
                .collect();
            let labeled: Vec<(Sample<f64>, &str)> = labels
                .iter()
                .filter_map(|l| {
                    by_key
                        .get(&(l.entity.clone(), l.time.clone()))
                        .map(|s| (s.clone(), l.label.as_str()))
                })
                .collect();
            if labeled.is_empty() {
                return Err(Error::InvalidConfig(
                    "no state label matches an observed (entity, time)".into(),
                ));
            }
            Some(model.state_layer(&labeled)?)
        }
        None => None,
    };
    Ok(SomArtifact {
        transform: settings.transform,
        model,
        state_layer,
    })
}

pub fn train_sotm(cube: &DataCube, settings: &SotmSettings) -> Result<SotmArtifact> {
    let data = transformed(cube, settings.transform);
    let model = sotm::train_sotm(&data, settings.core())?;
    let assignments = model.assign_entities(&data)?;
    Ok(SotmArtifact {
        transform: settings.transform,
        coloring: model.profile_coloring(),
        structural_positions: model.structural_positions(),
        flows: AlluvialFlows::from_assignments(&assignments),
        assignments,
        model,
    })
}

pub fn read_occurrence_csv(config: &Config) -> Result<Vec<OccurrenceRecord>> {
    let path = config.required(&config.occurrences, "occurrences")?;
    read_occurrences(fs::File::open(path)?)
}

/// Windowed co-occurrence network laid out from `seed`, optionally relaxed
/// around pinned nodes. An empty window yields a view with no nodes.
pub fn network_view(
    records: &[OccurrenceRecord],
    window: &TimeWindow,
    settings: &NetworkSettings,
    seed: u64,
    pinned: &BTreeMap<String, [f64; 2]>,
    lexicon: &DistressLexicon,
) -> Result<NetworkView> {
    let frame = Frame::new(settings.width, settings.height)?;
    let net = build_cooccurrence(records, window);
    if net.nodes.is_empty() {
        if let Some(name) = pinned.keys().next() {
            return Err(Error::UnknownEntity(name.clone()));
        }
        return Ok(GenericView {
            nodes: Vec::new(),
            edges: Vec::new(),
            window: window.clone(),
            frame,
            k: 0.0,
            temperature: 0.0,
            seed,
        });
    }
    let mut layout = fr_layout(&net, frame, settings.iterations, seed)?;
    if !pinned.is_empty() {
        layout = pin_and_relax(&net, &layout, pinned, settings.relax_iterations)?;
    }
    Ok(NetworkView::new(&net, &layout, records, lexicon))
}

pub fn build_network(
    records: &[OccurrenceRecord],
    settings: &NetworkSettings,
    distress_terms: &[String],
) -> Result<NetworkArtifact> {
    let lexicon = DistressLexicon::new(distress_terms)?;
    let view = network_view(
        records,
        &TimeWindow::default(),
        settings,
        settings.seed,
        &BTreeMap::new(),
        &lexicon,
    )?;
    Ok(NetworkArtifact {
        settings: *settings,
        distress_terms: distress_terms.to_vec(),
        view,
    })
}

/// The scoring model written in the config; indicators without a weight
/// score 0.
pub fn configured_model(cube: &DataCube, settings: &EwmSettings) -> Result<EwmModel> {
    let groups = settings.resolve_groups(cube.indicators());
    let weights = groups
        .iter()
        .flat_map(|g| g.indicators.iter())
        .map(|k| (k.clone(), settings.weights.get(k).copied().unwrap_or(0.0)))
        .collect();
    if let Some(k) = settings
        .weights
        .keys()
        .find(|k| !groups.iter().any(|g| g.indicators.contains(k)))
    {
        return Err(Error::InvalidModel(format!("weight for ungrouped indicator {k:?}")));
    }
    EwmModel::new(groups, weights, settings.bias)
}

pub fn fit_ewm(
    cube: &DataCube,
    labels: &[LabelRecord],
    settings: &EwmSettings,
) -> Result<FitOutcome<f64>> {
    let groups = settings.resolve_groups(cube.indicators());
    ewm::fit(&cube.percentile_transform(), labels, groups, settings.fit)
}

pub fn score_ewm(cube: &DataCube, model: &EwmModel) -> Result<RiskSeries> {
    ewm::score(model, &cube.percentile_transform())
}
