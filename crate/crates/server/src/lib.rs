//! HTTP/JSON API over an immutable workspace of pipeline artifacts, plus
//! the SVG export shared with the command line.

pub mod api;
pub mod artifacts;
pub mod config;
pub mod error;
pub mod export;
pub mod workspace;

pub use api::{router, serve, serve_on};
pub use config::Config;
pub use error::{ServeError, ServeResult};
pub use workspace::{Workspace, WorkspaceHandle};
