//! Immutable workspace snapshots and their atomic replacement.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use visrisk_core::network::DistressLexicon;
use visrisk_core::{DataCube, EventRecord, EwmModel, OccurrenceRecord, Result, RiskSeries};

use crate::artifacts::{self, NetworkArtifact, SomArtifact, SotmArtifact};
use crate::config::NetworkSettings;

/// Everything the API serves, loaded once and never mutated.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub version: u64,
    pub cube: DataCube,
    pub percentile: DataCube,
    pub events: Vec<EventRecord>,
    pub som: Option<SomArtifact>,
    pub sotm: Option<SotmArtifact>,
    pub occurrences: Vec<OccurrenceRecord>,
    pub network: Option<NetworkArtifact>,
    pub lexicon: DistressLexicon,
    pub ewm: Option<EwmModel>,
    pub risk: Option<RiskSeries>,
}

fn optional<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<Option<T>> {
    let path = dir.join(name);
    if path.exists() {
        artifacts::read_json(&path).map(Some)
    } else {
        Ok(None)
    }
}

impl Workspace {
    /// Loads the artifacts in `dir`. Only the cube is required.
    pub fn load(dir: &Path, version: u64) -> Result<Workspace> {
        let cube: DataCube = artifacts::read_json(&dir.join(artifacts::CUBE))?;
        let network: Option<NetworkArtifact> = optional(dir, artifacts::NETWORK)?;
        let lexicon = DistressLexicon::new(
            network
                .as_ref()
                .map(|n| n.distress_terms.as_slice())
                .unwrap_or_default(),
        )?;
        Ok(Workspace {
            version,
            percentile: cube.percentile_transform(),
            events: optional(dir, artifacts::EVENTS)?.unwrap_or_default(),
            som: optional(dir, artifacts::SOM)?,
            sotm: optional(dir, artifacts::SOTM)?,
            occurrences: optional(dir, artifacts::OCCURRENCES)?.unwrap_or_default(),
            lexicon,
            network,
            ewm: optional(dir, artifacts::EWM_MODEL)?,
            risk: optional(dir, artifacts::RISK)?,
            cube,
        })
    }

    pub fn network_settings(&self) -> NetworkSettings {
        self.network.as_ref().map(|n| n.settings).unwrap_or_default()
    }

    pub fn cube_for(&self, transform: visrisk_core::state::Transform) -> &DataCube {
        match transform {
            visrisk_core::state::Transform::Raw => &self.cube,
            visrisk_core::state::Transform::Percentile => &self.percentile,
        }
    }
}

/// Shared handle to the current snapshot. Readers clone the `Arc` and keep
/// a consistent view for the whole request; `publish` swaps in a new one.
#[derive(Debug)]
pub struct WorkspaceHandle {
    current: RwLock<Arc<Workspace>>,
    next_version: AtomicU64,
    dir: Option<PathBuf>,
}

impl WorkspaceHandle {
    pub fn new(workspace: Workspace) -> Self {
        let next = workspace.version + 1;
        WorkspaceHandle {
            current: RwLock::new(Arc::new(workspace)),
            next_version: AtomicU64::new(next),
            dir: None,
        }
    }

    pub fn open(dir: &Path) -> Result<Self> {
        Ok(WorkspaceHandle::with_dir(Workspace::load(dir, 1)?, dir))
    }

    /// A handle whose `reload` rereads `dir`.
    pub fn with_dir(workspace: Workspace, dir: &Path) -> Self {
        let mut handle = WorkspaceHandle::new(workspace);
        handle.dir = Some(dir.to_path_buf());
        handle
    }

    pub fn snapshot(&self) -> Arc<Workspace> {
        self.current
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    /// Replaces the snapshot, stamping it with a fresh version.
    pub fn publish(&self, mut workspace: Workspace) -> u64 {
        let version = self.next_version.fetch_add(1, Ordering::SeqCst);
        workspace.version = version;
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(workspace);
        version
    }

    /// Rebuilds from the data directory; on failure the old snapshot stays.
    pub fn reload(&self) -> Result<u64> {
        let dir = self
            .dir
            .as_deref()
            .ok_or_else(|| visrisk_core::Error::InvalidConfig("workspace has no data directory".into()))?;
        let workspace = Workspace::load(dir, 0)?;
        Ok(self.publish(workspace))
    }
}
