//! Curve shortening flow of closed curves in Riemannian manifolds with
//! parallel one-forms, together with numerical checks of its evolution
//! identities and estimates.

pub mod config;
pub mod curve;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod io;
pub mod manifold;
pub mod presets;
pub mod rng;
pub mod run;

pub use config::RunConfig;
pub use curve::{compute_geometry, resample_uniform, CurveGeometry, DiscreteCurve};
pub use error::{CsfError, Result};
pub use flow::{advance, FlowConfig, FlowState, Scheme, Termination};
pub use manifold::{ManifoldModel, ModelKind, ParallelForm, Point};
pub use run::{run_experiment, simulate};
