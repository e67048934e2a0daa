//! From-scratch convolutional classifiers.

pub mod calibrate;
pub mod checkpoint;
pub mod classifier;
pub mod metrics;
pub mod network;
pub mod spec;
pub mod train;

pub use calibrate::{calibrate_temperature, fit_temperature, tempered_nll};
pub use checkpoint::Checkpoint;
pub use classifier::{tempered_prob, Classifier, Covariates};
pub use metrics::auc;
pub use network::{backward, cross_entropy, forward, softmax2, Cache, Mode, Scalar};
pub use spec::{build_alexnet2dc, build_alexnet3d, InputEncoding, LayerSpec, NetworkSpec, Plane, Shape};
pub use train::{adam_step, train, AdamState, TrainConfig, TrainHistory};
