//! Shared fixtures for the benchmarks in `benches/`.

use swaptest_core::model::build_alexnet3d;
use swaptest_core::phantom::{generate_scans, PhantomConfig};
use swaptest_core::{Classifier, Scan};

/// Untrained desk-scale AlexNet-3D; timing does not depend on the weights.
pub fn desk_model() -> Classifier {
    Classifier::init(build_alexnet3d([32, 32, 32], 0.25).expect("desk network"), 1).expect("init")
}

/// A handful of phantom scans, CN first then AD.
pub fn scans(subjects_per_class: usize) -> Vec<Scan> {
    let cfg = PhantomConfig { subjects_per_class, visits: [1, 1], ..PhantomConfig::default() };
    generate_scans(&cfg).expect("phantom")
}
