//! Swap Test and Occlusion Test explanations for classifiers of registered
//! volumes, with continuity and selectivity evaluation.
//!
//! The crate covers the whole pipeline: synthetic phantom data
//! ([`phantom`]), a small CNN stack with Adam training and temperature
//! scaling ([`model`]), the heatmap engines ([`explain`]), axiom evaluation
//! ([`axioms`]) and file-driven experiment orchestration ([`experiment`]).

pub mod axioms;
pub mod error;
pub mod experiment;
pub mod explain;
pub mod format;
pub mod model;
pub mod montage;
pub mod numeric;
pub mod phantom;
pub mod seed;
pub mod volume;

pub use error::{Error, Result};
pub use explain::{Direction, ExplainConfig, Heatmap, Method, ProbabilityModel};
pub use model::{Checkpoint, Classifier, Covariates, NetworkSpec, TrainConfig};
pub use numeric::Norm;
pub use phantom::{DatasetSplits, Label, PhantomConfig, Scan};
pub use volume::{PatchGrid, Volume};
