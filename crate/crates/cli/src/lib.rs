//! Command implementations behind the `visrisk` binary. Each command reads
//! its inputs, writes one JSON artifact into the data directory and returns
//! a short summary.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use visrisk_core::ewm::read_labels;
use visrisk_core::{decode_state, DataCube, Error, ErrorKind, EwmModel, ViewId};
use visrisk_server::artifacts::{self as art, read_json, write_json, NetworkArtifact};
use visrisk_server::{export, Config, ServeError, Workspace, WorkspaceHandle};

#[derive(Debug, Parser)]
#[command(name = "visrisk", version, about = "Systemic-risk visual analytics pipeline")]
pub struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory holding the JSON artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub data_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read observations, links and events into cube.json and events.json.
    Ingest,
    /// Train the stability map into som.json.
    TrainSom,
    /// Train the time map into sotm.json.
    TrainSotm,
    /// Build the co-occurrence network into network.json.
    Network,
    /// Fit the early-warning model into ewm_model.json.
    EwmFit,
    /// Score every (entity, time) into risk.json.
    EwmScore,
    /// Serve the data directory over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
    /// Render a view to SVG from a permalink token.
    Export {
        view: String,
        #[arg(long)]
        state: Option<String>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    Serve(ServeError),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<ServeError> for CliError {
    fn from(e: ServeError) -> Self {
        match e {
            ServeError::Core(e) => CliError::Core(e),
            other => CliError::Serve(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.kind() == ErrorKind::Numeric => 4,
            _ => 3,
        }
    }

    /// Single-line JSON error for standard error.
    pub fn to_json(&self) -> String {
        let (kind, message) = match self {
            CliError::Usage(m) => ("usage", m.clone()),
            CliError::Core(e) => (
                match e.kind() {
                    ErrorKind::Numeric => "numeric",
                    ErrorKind::Io => "io",
                    ErrorKind::NotFound => "not_found",
                    ErrorKind::Data => "data",
                },
                e.to_string(),
            ),
            CliError::Serve(e) => (e.kind(), e.to_string()),
        };
        json!({ "error": { "kind": kind, "code": self.exit_code(), "message": message } }).to_string()
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn config(cli: &Cli) -> CliResult<Config> {
    match &cli.config {
        Some(p) => Ok(Config::load(p)?),
        None => Ok(Config::default()),
    }
}

fn required_config(cli: &Cli) -> CliResult<Config> {
    if cli.config.is_none() {
        return Err(CliError::Usage("this command needs --config".into()));
    }
    config(cli)
}

fn load_cube(dir: &Path) -> CliResult<DataCube> {
    Ok(read_json(&dir.join(art::CUBE))?)
}

fn open_input(path: &Path) -> CliResult<fs::File> {
    Ok(fs::File::open(path)?)
}

pub fn run(cli: &Cli) -> CliResult<Value> {
    let dir = cli.data_dir.as_path();
    match &cli.command {
        Command::Serve { .. } | Command::Export { .. } => {}
        _ => fs::create_dir_all(dir)?,
    }
    match &cli.command {
        Command::Ingest => {
            let (cube, events) = art::ingest(&required_config(cli)?)?;
            write_json(&dir.join(art::CUBE), &cube)?;
            write_json(&dir.join(art::EVENTS), &events)?;
            let (e, t, k) = cube.shape();
            Ok(json!({
                "artifact": art::CUBE, "entities": e, "times": t, "indicators": k,
                "observed": cube.observed_count(), "events": events.len(),
            }))
        }
        Command::TrainSom => {
            let config = config(cli)?;
            let cube = load_cube(dir)?;
            let states = match &config.states {
                Some(p) => Some(read_labels(open_input(p)?)?),
                None => None,
            };
            let som = art::train_som(&cube, &config.som, states.as_deref())?;
            let rows: Vec<_> = art::transformed(&cube, som.transform)
                .pool_panel()
                .into_iter()
                .map(|r| r.sample)
                .collect();
            let qe = som.model.quantization_error(&rows)?;
            write_json(&dir.join(art::SOM), &som)?;
            Ok(json!({
                "artifact": art::SOM, "width": som.model.width(), "height": som.model.height(),
                "rows": rows.len(), "quantization_error": qe,
            }))
        }
        Command::TrainSotm => {
            let config = config(cli)?;
            let sotm = art::train_sotm(&load_cube(dir)?, &config.sotm)?;
            write_json(&dir.join(art::SOTM), &sotm)?;
            Ok(json!({
                "artifact": art::SOTM, "times": sotm.model.times().len(), "units": sotm.model.units(),
            }))
        }
        Command::Network => {
            let config = required_config(cli)?;
            let records = art::read_occurrence_csv(&config)?;
            let network = art::build_network(&records, &config.network, &config.distress_terms)?;
            write_json(&dir.join(art::OCCURRENCES), &records)?;
            write_json(&dir.join(art::NETWORK), &network)?;
            Ok(json!({
                "artifact": art::NETWORK, "records": records.len(),
                "nodes": network.view.nodes.len(), "edges": network.view.edges.len(),
            }))
        }
        Command::EwmFit => {
            let config = required_config(cli)?;
            let labels_path = config.required(&config.labels, "labels")?;
            let labels = read_labels(open_input(labels_path)?)?;
            let outcome = art::fit_ewm(&load_cube(dir)?, &labels, &config.ewm)?;
            write_json(&dir.join(art::EWM_MODEL), &outcome.model)?;
            if let Some(w) = &outcome.warning {
                eprintln!("{}", json!({ "warning": w }));
            }
            Ok(json!({
                "artifact": art::EWM_MODEL, "iterations": outcome.iterations,
                "converged": outcome.converged, "gradient_norm": outcome.gradient_norm,
                "warning": outcome.warning,
            }))
        }
        Command::EwmScore => {
            let cube = load_cube(dir)?;
            let fitted = dir.join(art::EWM_MODEL);
            let model: EwmModel = if fitted.exists() {
                read_json(&fitted)?
            } else {
                art::configured_model(&cube, &config(cli)?.ewm)?
            };
            let risk = art::score_ewm(&cube, &model)?;
            write_json(&dir.join(art::RISK), &risk)?;
            Ok(json!({
                "artifact": art::RISK, "rows": risk.rows.len(), "skipped": risk.skipped.len(),
            }))
        }
        Command::Serve { port, host } => {
            let mut workspace = Workspace::load(dir, 1)?;
            if cli.config.is_some() {
                apply_network_config(&mut workspace, &config(cli)?)?;
            }
            let handle = Arc::new(WorkspaceHandle::with_dir(workspace, dir));
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(SocketAddr::new(*host, *port)).await?;
                println!("{}", json!({ "listening": listener.local_addr()?.to_string() }));
                visrisk_server::serve_on(handle, listener).await
            })?;
            Ok(json!({ "stopped": true }))
        }
        Command::Export { view, state, out } => {
            let view_id = ViewId::parse(view)
                .ok_or_else(|| CliError::Usage(format!("unknown view {view:?}")))?;
            let state = match state {
                Some(token) => decode_state(token)?,
                None => visrisk_core::ViewState { view: view_id, ..Default::default() },
            };
            let workspace = Workspace::load(dir, 1)?;
            let svg = export::render(&workspace, view_id, &state)?;
            match out {
                Some(path) => {
                    fs::write(path, &svg)?;
                    Ok(json!({ "artifact": path, "bytes": svg.len() }))
                }
                None => {
                    print!("{svg}");
                    Ok(Value::Null)
                }
            }
        }
    }
}

/// Layout parameters and the distress lexicon from the config replace the
/// ones recorded in network.json.
fn apply_network_config(workspace: &mut Workspace, config: &Config) -> CliResult<()> {
    let terms = config.distress_terms.clone();
    workspace.lexicon = visrisk_core::network::DistressLexicon::new(&terms)?;
    let view = match workspace.network.take() {
        Some(n) => n.view,
        None => art::network_view(
            &workspace.occurrences,
            &Default::default(),
            &config.network,
            config.network.seed,
            &Default::default(),
            &workspace.lexicon,
        )?,
    };
    workspace.network = Some(NetworkArtifact {
        settings: config.network,
        distress_terms: terms,
        view,
    });
    Ok(())
}
