//! One experiment = one JSON config + one master seed.
//!
//! Output directory layout:
//!
//! ```text
//! manifest.json              scans, splits and file names
//! volumes/<scan>.vvol        standardized phantom volumes
//! masks/<scan>-lesion.vvol   ground-truth masks (0/1)
//! masks/<scan>-ventricle.vvol
//! model.vckpt                trained, calibrated classifier
//! train_loss.csv             epoch,train_loss,validation_loss,train_accuracy
//! test_scores.csv            scan_id,label,p_ad
//! metrics.json               test AUC, temperature, validation NLL before/after
//! heatmaps/<scan>-<method>-<direction>.vhmp and .ppm
//! axioms.csv, axioms.json
//! ```
//!
//! Every JSON artifact carries `config_hash`, the SHA-256 of the resolved
//! config serialized as compact JSON, with the output directory left out.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::axioms::{evaluate_axioms, AxiomConfig, AxiomReport};
use crate::error::{Error, Result};
use crate::explain::{
    occlusion_map, swap_map, upsample_values, Direction, ExplainConfig, Heatmap, Method, ProbabilityModel, ReferencePool,
};
use crate::format;
use crate::model::{
    auc, build_alexnet2dc, build_alexnet3d, calibrate_temperature, tempered_nll, train, Checkpoint, Classifier,
    Covariates, NetworkSpec, Plane, tempered_prob, TrainConfig,
};
use crate::montage;
use crate::phantom::{generate_dataset, DatasetSplits, Label, Mask, PhantomConfig, Scan};
use crate::seed;
use crate::volume::Volume;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Alexnet3d,
    Alexnet2dc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub architecture: Architecture,
    pub scale: f64,
    /// Slicing plane and step for the 2D+C network.
    pub plane: Plane,
    pub slice_step: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig { architecture: Architecture::Alexnet3d, scale: 0.25, plane: Plane::Sagittal, slice_step: 1 }
    }
}

impl NetworkConfig {
    pub fn build(&self, dims: [usize; 3]) -> Result<NetworkSpec> {
        match self.architecture {
            Architecture::Alexnet3d => build_alexnet3d(dims, self.scale),
            Architecture::Alexnet2dc => build_alexnet2dc(dims, self.plane, self.slice_step, self.scale),
        }
    }
}

/// The nested `seed` fields are overwritten from `seed` by [`ExperimentConfig::resolved`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub phantom: PhantomConfig,
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub explain: ExplainConfig,
    pub axioms: AxiomConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 20_190_614,
            output_dir: PathBuf::from("out"),
            phantom: PhantomConfig::default(),
            network: NetworkConfig::default(),
            train: TrainConfig::desk(),
            explain: ExplainConfig::default(),
            axioms: AxiomConfig::default(),
        }
    }
}

mod part {
    pub const PHANTOM: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const EXPLAIN: u64 = 3;
    pub const AXIOMS: u64 = 4;
}

impl ExperimentConfig {
    /// Copy with every nested seed derived from the master seed.
    pub fn resolved(&self) -> ExperimentConfig {
        let mut c = self.clone();
        c.phantom.seed = seed::derive(self.seed, &[part::PHANTOM]);
        c.train.seed = seed::derive(self.seed, &[part::TRAIN]);
        c.explain.seed = seed::derive(self.seed, &[part::EXPLAIN]);
        c.axioms.seed = seed::derive(self.seed, &[part::AXIOMS]);
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.phantom.validate()?;
        self.train.validate()?;
        self.explain.validate()?;
        self.axioms.validate()?;
        self.network.build(self.phantom.dims)?.plan()?;
        Ok(())
    }

    /// SHA-256 of the resolved config. The output directory is left out so that the same
    /// experiment run in two places produces identical artifacts.
    pub fn hash(&self) -> Result<String> {
        let mut identity = self.resolved();
        identity.output_dir = PathBuf::new();
        Ok(format::sha256_hex(&serde_json::to_vec(&identity)?))
    }

    /// Reads a config file; relative output directories resolve against the file's directory.
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let bytes = format::read_file(path)?;
        let mut cfg: ExperimentConfig = serde_json::from_slice(&bytes)?;
        if cfg.output_dir.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.output_dir = dir.join(&cfg.output_dir);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.out("model.vckpt")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub subject_id: String,
    pub visit: usize,
    pub age: f64,
    pub sex: u8,
    pub label: Label,
    pub split: String,
    pub volume: String,
    pub lesion_mask: Option<String>,
    pub ventricle_mask: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub dims: [usize; 3],
    pub scans: Vec<ManifestEntry>,
}

const SPLITS: [&str; 3] = ["train", "validation", "test"];

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    format::write_file(path, s.as_bytes())
}

fn split_lists(d: &DatasetSplits) -> [&Vec<Scan>; 3] {
    [&d.train, &d.validation, &d.test]
}

/// Generates the phantom dataset and writes the manifest, volumes and masks.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<Manifest> {
    let rc = cfg.resolved();
    let data = generate_dataset(&rc.phantom)?;
    let mut scans = Vec::new();
    let mut files: Vec<(String, &Volume)> = Vec::new();
    let mut masks: Vec<(String, Volume)> = Vec::new();
    for (split, list) in SPLITS.iter().zip(split_lists(&data)) {
        for s in list {
            let volume = format!("volumes/{}.vvol", s.id);
            files.push((volume.clone(), &s.volume));
            let mut mask_file = |m: &Option<Mask>, kind: &str| {
                m.as_ref().map(|m| {
                    let name = format!("masks/{}-{kind}.vvol", s.id);
                    masks.push((name.clone(), m.to_volume()));
                    name
                })
            };
            let lesion_mask = mask_file(&s.lesion_mask, "lesion");
            let ventricle_mask = mask_file(&s.ventricle_mask, "ventricle");
            scans.push(ManifestEntry {
                id: s.id.clone(),
                subject_id: s.subject_id.clone(),
                visit: s.visit,
                age: s.age,
                sex: s.sex,
                label: s.label,
                split: split.to_string(),
                volume,
                lesion_mask,
                ventricle_mask,
            });
        }
    }
    files.par_iter().try_for_each(|(name, v)| format::write_volume(&cfg.out(name), v))?;
    masks.par_iter().try_for_each(|(name, v)| format::write_volume(&cfg.out(name), v))?;
    let manifest = Manifest { config_hash: cfg.hash()?, dims: rc.phantom.dims, scans };
    write_json(&cfg.out("manifest.json"), &manifest)?;
    Ok(manifest)
}

pub fn read_manifest(cfg: &ExperimentConfig) -> Result<Manifest> {
    Ok(serde_json::from_slice(&format::read_file(&cfg.out("manifest.json"))?)?)
}

/// Loads the dataset written by [`cmd_generate`].
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<DatasetSplits> {
    let manifest = read_manifest(cfg)?;
    let mask = |name: &Option<String>| -> Result<Option<Mask>> {
        name.as_ref().map(|n| Ok(Mask::from_volume(&format::read_volume(&cfg.out(n))?))).transpose()
    };
    let scans: Vec<(String, Scan)> = manifest
        .scans
        .par_iter()
        .map(|e| {
            Ok((
                e.split.clone(),
                Scan {
                    id: e.id.clone(),
                    subject_id: e.subject_id.clone(),
                    visit: e.visit,
                    age: e.age,
                    sex: e.sex,
                    label: e.label,
                    volume: format::read_volume(&cfg.out(&e.volume))?,
                    lesion_mask: mask(&e.lesion_mask)?,
                    ventricle_mask: mask(&e.ventricle_mask)?,
                },
            ))
        })
        .collect::<Result<_>>()?;
    let mut out = DatasetSplits::default();
    for (split, s) in scans {
        match split.as_str() {
            "train" => out.train.push(s),
            "validation" => out.validation.push(s),
            "test" => out.test.push(s),
            other => return Err(Error::Format(format!("manifest: unknown split {other:?} for {}", s.id))),
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub config_hash: String,
    pub test_auc: f64,
    pub temperature: f64,
    pub validation_nll_before: f64,
    pub validation_nll_after: f64,
    pub test_argmax_changes: usize,
    pub n_test: usize,
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub metrics: TrainMetrics,
    /// `(scan id, label, calibrated p(AD))` for every test scan.
    pub scores: Vec<(String, Label, f64)>,
}

fn logits_of(model: &Classifier, scans: &[Scan]) -> Result<Vec<[f64; 2]>> {
    scans.par_iter().map(|s| model.logits(&s.volume, Covariates::from(s))).collect()
}

/// Trains, calibrates on validation and scores the test split, in memory.
pub fn run_training(cfg: &ExperimentConfig, data: &DatasetSplits) -> Result<TrainOutcome> {
    let rc = cfg.resolved();
    let spec = rc.network.build(rc.phantom.dims)?.with_dropout(rc.train.dropout_rate);
    let mut model = Classifier::init(spec, rc.train.seed)?;
    let history = train(&mut model, data, &rc.train)?;

    let val_logits = logits_of(&model, &data.validation)?;
    let val_labels: Vec<usize> = data.validation.iter().map(|s| s.label.class_index()).collect();
    let before = tempered_nll(&val_logits, &val_labels, 1.0);
    let temperature = calibrate_temperature(&mut model, &data.validation)?;
    let after = tempered_nll(&val_logits, &val_labels, temperature);

    let test_logits = logits_of(&model, &data.test)?;
    let scores: Vec<(String, Label, f64)> = data
        .test
        .iter()
        .zip(&test_logits)
        .map(|(s, &z)| (s.id.clone(), s.label, tempered_prob(z, temperature)))
        .collect();
    let changes = test_logits
        .iter()
        .zip(&scores)
        .filter(|(z, (_, _, p))| (z[1] > z[0]) != (*p > 0.5))
        .count();
    let p: Vec<f64> = scores.iter().map(|s| s.2).collect();
    let positive: Vec<bool> = scores.iter().map(|s| s.1 == Label::AD).collect();
    let config_hash = cfg.hash()?;
    Ok(TrainOutcome {
        metrics: TrainMetrics {
            config_hash: config_hash.clone(),
            test_auc: auc(&p, &positive)?,
            temperature,
            validation_nll_before: before,
            validation_nll_after: after,
            test_argmax_changes: changes,
            n_test: scores.len(),
        },
        checkpoint: Checkpoint { classifier: model, seed: rc.train.seed, history, config_hash: Some(config_hash) },
        scores,
    })
}

/// Trains on the generated dataset and writes the checkpoint, loss curve, test scores and metrics.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    let data = load_dataset(cfg)?;
    let outcome = run_training(cfg, &data)?;
    outcome.checkpoint.write(&cfg.checkpoint_path())?;

    let mut loss = String::from("epoch,train_loss,validation_loss,train_accuracy\n");
    for e in &outcome.checkpoint.history.epochs {
        let _ = writeln!(loss, "{},{},{},{}", e.epoch, e.train_loss, e.validation_loss, e.train_accuracy);
    }
    format::write_file(&cfg.out("train_loss.csv"), loss.as_bytes())?;

    let mut scores = String::from("scan_id,label,p_ad\n");
    for (id, label, p) in &outcome.scores {
        let _ = writeln!(scores, "{id},{label:?},{p}");
    }
    format::write_file(&cfg.out("test_scores.csv"), scores.as_bytes())?;
    write_json(&cfg.out("metrics.json"), &outcome.metrics)?;
    Ok(outcome)
}

/// Loads a checkpoint and returns it with the SHA-256 of its file.
pub fn load_checkpoint(path: &Path) -> Result<(Checkpoint, String)> {
    let bytes = format::read_file(path)?;
    Ok((Checkpoint::decode(&bytes)?, format::sha256_hex(&bytes)))
}

#[derive(Clone, Debug)]
pub struct ExplainRequest {
    pub scan_id: String,
    pub method: Method,
    pub direction: Direction,
    pub plane: Plane,
    pub slices: usize,
}

#[derive(Clone, Debug)]
pub struct ExplainOutput {
    pub heatmap: Heatmap,
    pub heatmap_path: PathBuf,
    pub montage_path: PathBuf,
}

/// Explains one manifest scan. Swap references are drawn from the test split.
pub fn cmd_explain(cfg: &ExperimentConfig, checkpoint: &Path, req: &ExplainRequest) -> Result<ExplainOutput> {
    let rc = cfg.resolved();
    let data = load_dataset(cfg)?;
    let scan = data
        .all()
        .find(|s| s.id == req.scan_id)
        .ok_or_else(|| Error::InvalidArgument(format!("scan {:?} is not in the manifest", req.scan_id)))?;
    let (ckpt, hash) = load_checkpoint(checkpoint)?;
    let model = &ckpt.classifier;
    let ecfg = rc.explain.with_direction(req.direction);
    let cov = Covariates::from(scan);
    let mut heatmap = match req.method {
        Method::Swap => {
            let pool = ReferencePool::new(model, &data.test)?;
            let predicted = model.predicted_label( &scan.volume, cov)?;
            let refs = pool.select(predicted, &scan.subject_id, ecfg.n_references, ecfg.seed)?;
            swap_map(model, &scan.volume, cov, &refs, &ecfg)?
        }
        Method::Occlusion => occlusion_map(model, &scan.volume, cov, &ecfg)?,
    };
    heatmap.input_id = Some(scan.id.clone());
    heatmap.model_hash = Some(hash);

    let stem = format!(
        "heatmaps/{}-{}-{}",
        scan.id,
        req.method.as_str(),
        match req.direction {
            Direction::Standard => "standard",
            Direction::Reversed => "reversed",
        }
    );
    let heatmap_path = cfg.out(&format!("{stem}.vhmp"));
    let montage_path = cfg.out(&format!("{stem}.ppm"));
    heatmap.write(&heatmap_path)?;
    let delta = upsample_values(&heatmap.grid, &heatmap.delta())?;
    montage::render(&scan.volume, Some(&delta), req.plane, req.slices)?.write_ppm(&montage_path)?;
    Ok(ExplainOutput { heatmap, heatmap_path, montage_path })
}

/// Evaluates both methods on the test split and writes `axioms.csv` and `axioms.json`.
pub fn cmd_axioms(cfg: &ExperimentConfig, checkpoint: &Path) -> Result<AxiomReport> {
    let rc = cfg.resolved();
    let data = load_dataset(cfg)?;
    let (ckpt, hash) = load_checkpoint(checkpoint)?;
    let mut report =
        evaluate_axioms(&ckpt.classifier, &data.test, &[Method::Swap, Method::Occlusion], &rc.axioms, &rc.explain)?;
    report.model_hash = Some(hash);
    report.write(&cfg.out("axioms.csv"), &cfg.out("axioms.json"))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_output_dir_but_tracks_settings() {
        let a = ExperimentConfig::default();
        let moved = ExperimentConfig { output_dir: "/elsewhere/run".into(), ..a.clone() };
        assert_eq!(a.hash().unwrap(), moved.hash().unwrap());
        let reseeded = ExperimentConfig { seed: a.seed + 1, ..a.clone() };
        assert_ne!(a.hash().unwrap(), reseeded.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }
}
