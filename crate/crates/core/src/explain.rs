//! Swap Test and Occlusion Test heatmaps.
//!
//! For a grid of cubic patches over a registered volume:
//!
//! | method    | direction | image scored for patch `o`                          | covariates | baseline            |
//! |-----------|-----------|-----------------------------------------------------|------------|---------------------|
//! | swap      | standard  | reference, with the input's voxels inside `o`       | reference  | mean p(reference)   |
//! | swap      | reversed  | input, with the reference's voxels inside `o`       | input      | p(input)            |
//! | occlusion | standard  | input, with `o` set to the occlusion value          | input      | p(input)            |
//! | occlusion | reversed  | occlusion value everywhere except `o`               | input      | p(input)            |
//!
//! Swap cells are averaged over the references. References are correctly
//! classified scans of the class opposite to the input's prediction.

use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{self, VHMP_MAGIC};
use crate::model::{Classifier, Covariates};
use crate::phantom::{Label, Scan};
use crate::seed::{self, stream};
use crate::volume::{copy_patch, fill_patch, keep_patch, Dims, PatchGrid, Volume};

/// Anything that maps a volume and covariates to p(AD).
pub trait ProbabilityModel: Sync {
    fn prob_ad(&self, volume: &Volume, covariates: Covariates) -> Result<f64>;

    fn predicted_label(&self, volume: &Volume, covariates: Covariates) -> Result<Label> {
        Ok(if self.prob_ad(volume, covariates)? > 0.5 { Label::AD } else { Label::CN })
    }
}

impl ProbabilityModel for Classifier {
    fn prob_ad(&self, volume: &Volume, covariates: Covariates) -> Result<f64> {
        self.predict_volume(volume, covariates)
    }
}

impl<M: ProbabilityModel + ?Sized> ProbabilityModel for &M {
    fn prob_ad(&self, volume: &Volume, covariates: Covariates) -> Result<f64> {
        (**self).prob_ad(volume, covariates)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Swap,
    Occlusion,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Swap => "swap",
            Method::Occlusion => "occlusion",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "swap" => Ok(Method::Swap),
            "occlusion" => Ok(Method::Occlusion),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Standard,
    Reversed,
}

/// Which change from the baseline counts as evidence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    Increase,
    Decrease,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainConfig {
    pub patch_size: usize,
    /// Defaults to `patch_size` (non-overlapping tiling).
    pub stride: Option<usize>,
    pub n_references: usize,
    pub occlusion_value: f32,
    pub direction: Direction,
    pub seed: u64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            patch_size: 8,
            stride: None,
            n_references: 5,
            occlusion_value: 0.0,
            direction: Direction::Standard,
            seed: 0,
        }
    }
}

impl ExplainConfig {
    /// Settings for 100-voxel volumes: 20-voxel patches, five references.
    pub fn full_scale() -> Self {
        ExplainConfig { patch_size: 20, ..Default::default() }
    }

    pub fn stride(&self) -> usize {
        self.stride.unwrap_or(self.patch_size)
    }

    pub fn with_direction(&self, direction: Direction) -> Self {
        ExplainConfig { direction, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.patch_size == 0 || self.n_references == 0 {
            return Err(Error::InvalidArgument("patch size and reference count must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.occlusion_value) {
            return Err(Error::InvalidArgument(format!(
                "occlusion value {} outside [0, 1]",
                self.occlusion_value
            )));
        }
        Ok(())
    }

    pub fn grid(&self, dims: Dims) -> Result<PatchGrid> {
        self.validate()?;
        PatchGrid::build(dims, self.patch_size, self.stride())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub grid: PatchGrid,
    /// One p(AD) per grid origin, in grid order.
    pub cells: Vec<f32>,
    pub method: Method,
    pub direction: Direction,
    pub config: ExplainConfig,
    pub baseline_prob: f64,
    pub input_id: Option<String>,
    pub model_hash: Option<String>,
}

impl Heatmap {
    pub fn cells_f64(&self) -> Vec<f64> {
        self.cells.iter().map(|&c| c as f64).collect()
    }

    /// `cell - baseline_prob` per cell.
    pub fn delta(&self) -> Vec<f64> {
        self.cells.iter().map(|&c| c as f64 - self.baseline_prob).collect()
    }

    pub fn same_grid(&self, other: &Heatmap) -> bool {
        self.grid == other.grid
    }
}

/// Correctly classified scans with their predictions, for reference sampling.
pub struct ReferencePool<'a> {
    scans: &'a [Scan],
    predicted: Vec<Label>,
}

impl<'a> ReferencePool<'a> {
    pub fn new<M: ProbabilityModel>(model: &M, scans: &'a [Scan]) -> Result<Self> {
        let predicted = scans
            .par_iter()
            .map(|s| model.predicted_label(&s.volume, Covariates::from(s)))
            .collect::<Result<_>>()?;
        Ok(ReferencePool { scans, predicted })
    }

    pub fn scans(&self) -> &'a [Scan] {
        self.scans
    }

    pub fn predicted(&self) -> &[Label] {
        &self.predicted
    }

    /// Eligible references for an input predicted as `input_predicted`: true
    /// positives for a CN prediction, true negatives for an AD prediction,
    /// never from `exclude_subject`.
    pub fn eligible(&self, input_predicted: Label, exclude_subject: &str) -> Vec<usize> {
        let want = input_predicted.opposite();
        (0..self.scans.len())
            .filter(|&i| {
                let s = &self.scans[i];
                s.label == want && self.predicted[i] == want && s.subject_id != exclude_subject
            })
            .collect()
    }

    /// `n` references sampled uniformly without replacement, returned in pool order.
    pub fn select(&self, input_predicted: Label, exclude_subject: &str, n: usize, seed: u64) -> Result<Vec<&'a Scan>> {
        let mut eligible = self.eligible(input_predicted, exclude_subject);
        if eligible.len() < n {
            return Err(Error::ReferenceShortfall { needed: n, available: eligible.len() });
        }
        let mut rng = seed::rng(seed, &[stream::REFERENCES]);
        eligible.shuffle(&mut rng);
        let mut chosen = eligible[..n].to_vec();
        chosen.sort_unstable();
        Ok(chosen.into_iter().map(|i| &self.scans[i]).collect())
    }
}

/// Samples `n` references for `input` from `pool`, predicting with `model`.
pub fn select_references<'a, M: ProbabilityModel>(
    pool: &'a [Scan],
    model: &M,
    input: &Scan,
    n: usize,
    seed: u64,
) -> Result<Vec<&'a Scan>> {
    let predicted = model.predicted_label(&input.volume, input.into())?;
    ReferencePool::new(model, pool)?.select(predicted, &input.subject_id, n, seed)
}

fn check_dims(input: &Volume, references: &[&Scan]) -> Result<()> {
    for r in references {
        if r.volume.dims() != input.dims() {
            return Err(Error::DimensionMismatch { expected: input.dims(), actual: r.volume.dims() });
        }
    }
    Ok(())
}

/// Evaluates `cell(origin)` for every origin concurrently and collects in grid order.
fn eval_cells(grid: &PatchGrid, cell: impl Fn(Dims) -> Result<f64> + Sync) -> Result<Vec<f32>> {
    grid.origins.par_iter().map(|&o| cell(o).map(|p| p as f32)).collect()
}

/// Mean of `f(reference)` accumulated in reference order.
fn mean_over(references: &[&Scan], f: impl Fn(&Scan) -> Result<f64>) -> Result<f64> {
    let mut sum = 0.0;
    for r in references {
        sum += f(r)?;
    }
    Ok(sum / references.len() as f64)
}

/// Swap heatmap in the direction given by `cfg`.
pub fn swap_map<M: ProbabilityModel>(
    model: &M,
    input: &Volume,
    covariates: Covariates,
    references: &[&Scan],
    cfg: &ExplainConfig,
) -> Result<Heatmap> {
    if references.is_empty() {
        return Err(Error::InvalidArgument("swap test needs at least one reference".into()));
    }
    check_dims(input, references)?;
    let grid = cfg.grid(input.dims())?;
    let s = grid.patch_size;
    let (cells, baseline_prob) = match cfg.direction {
        Direction::Standard => {
            let cells = eval_cells(&grid, |o| {
                mean_over(references, |r| model.prob_ad(&copy_patch(input, &r.volume, o, s)?, r.into()))
            })?;
            (cells, mean_over(references, |r| model.prob_ad(&r.volume, r.into()))?)
        }
        Direction::Reversed => {
            let cells = eval_cells(&grid, |o| {
                mean_over(references, |r| model.prob_ad(&copy_patch(&r.volume, input, o, s)?, covariates))
            })?;
            (cells, model.prob_ad(input, covariates)?)
        }
    };
    Ok(Heatmap {
        grid,
        cells,
        method: Method::Swap,
        direction: cfg.direction,
        config: cfg.clone(),
        baseline_prob,
        input_id: None,
        model_hash: None,
    })
}

/// Occlusion heatmap in the direction given by `cfg`.
pub fn occlusion_map<M: ProbabilityModel>(
    model: &M,
    input: &Volume,
    covariates: Covariates,
    cfg: &ExplainConfig,
) -> Result<Heatmap> {
    let grid = cfg.grid(input.dims())?;
    let s = grid.patch_size;
    let fill = cfg.occlusion_value;
    let cells = match cfg.direction {
        Direction::Standard => eval_cells(&grid, |o| model.prob_ad(&fill_patch(input, o, s, fill)?, covariates))?,
        Direction::Reversed => {
            let background = Volume::filled(input.dims(), fill);
            eval_cells(&grid, |o| model.prob_ad(&keep_patch(input, &background, o, s)?, covariates))?
        }
    };
    Ok(Heatmap {
        grid,
        cells,
        method: Method::Occlusion,
        direction: cfg.direction,
        config: cfg.clone(),
        baseline_prob: model.prob_ad(input, covariates)?,
        input_id: None,
        model_hash: None,
    })
}

/// Standard swap heatmap (input patch carried into each reference).
pub fn swap_heatmap<M: ProbabilityModel>(model: &M, input: &Scan, references: &[&Scan], cfg: &ExplainConfig) -> Result<Heatmap> {
    let mut h = swap_map(model, &input.volume, input.into(), references, &cfg.with_direction(Direction::Standard))?;
    h.input_id = Some(input.id.clone());
    Ok(h)
}

/// Standard occlusion heatmap.
pub fn occlusion_heatmap<M: ProbabilityModel>(model: &M, input: &Scan, cfg: &ExplainConfig) -> Result<Heatmap> {
    let mut h = occlusion_map(model, &input.volume, input.into(), &cfg.with_direction(Direction::Standard))?;
    h.input_id = Some(input.id.clone());
    Ok(h)
}

/// Reversed heatmap: everything except the patch is swapped (with `references`) or occluded (without).
pub fn reversed_heatmap<M: ProbabilityModel>(
    model: &M,
    input: &Scan,
    references: Option<&[&Scan]>,
    cfg: &ExplainConfig,
) -> Result<Heatmap> {
    let cfg = cfg.with_direction(Direction::Reversed);
    let mut h = match references {
        Some(refs) => swap_map(model, &input.volume, input.into(), refs, &cfg)?,
        None => occlusion_map(model, &input.volume, input.into(), &cfg)?,
    };
    h.input_id = Some(input.id.clone());
    Ok(h)
}

/// Per-voxel mean of `values` (one per cell) over every patch covering the voxel.
pub fn upsample_values(grid: &PatchGrid, values: &[f64]) -> Result<Volume> {
    if values.len() != grid.len() {
        return Err(Error::InvalidArgument(format!("{} values for {} cells", values.len(), grid.len())));
    }
    let n: usize = grid.dims.iter().product();
    let mut sum = vec![0.0f64; n];
    let mut count = vec![0u32; n];
    for (cell, &v) in values.iter().enumerate() {
        for i in grid.voxel_indices(cell) {
            sum[i] += v;
            count[i] += 1;
        }
    }
    let data = sum.iter().zip(&count).map(|(&s, &c)| (s / c.max(1) as f64) as f32).collect();
    Volume::new(grid.dims, data)
}

/// Cell probabilities spread back onto the voxel grid.
pub fn upsample_heatmap(h: &Heatmap, dims: Dims) -> Result<Volume> {
    if dims != h.grid.dims {
        return Err(Error::DimensionMismatch { expected: h.grid.dims, actual: dims });
    }
    upsample_values(&h.grid, &h.cells_f64())
}

/// Index of the cell with the largest increase (or decrease) from the
/// baseline; ties go to the first cell in grid order.
pub fn hotspot_cell(h: &Heatmap, polarity: Polarity) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, d) in h.delta().into_iter().enumerate() {
        let score = match polarity {
            Polarity::Increase => d,
            Polarity::Decrease => -d,
        };
        if score > best_score {
            best_score = score;
            best = i;
        }
    }
    best
}

pub fn hotspot(h: &Heatmap, polarity: Polarity) -> Dims {
    h.grid.origins[hotspot_cell(h, polarity)]
}

#[derive(Serialize, Deserialize)]
struct HeatmapHeader {
    method: Method,
    direction: Direction,
    config: ExplainConfig,
    grid: PatchGrid,
    baseline_prob: f64,
    model_hash: Option<String>,
    input_id: Option<String>,
    cells: usize,
}

impl Heatmap {
    /// `VHMP0001` container: header JSON, then f32 cells in grid order.
    pub fn encode(&self) -> Result<Vec<u8>> {
        let header = HeatmapHeader {
            method: self.method,
            direction: self.direction,
            config: self.config.clone(),
            grid: self.grid.clone(),
            baseline_prob: self.baseline_prob,
            model_hash: self.model_hash.clone(),
            input_id: self.input_id.clone(),
            cells: self.cells.len(),
        };
        format::encode(VHMP_MAGIC, &header, &self.cells)
    }

    pub fn decode(bytes: &[u8]) -> Result<Heatmap> {
        let (h, cells): (HeatmapHeader, Vec<f32>) = format::decode(VHMP_MAGIC, bytes)?;
        if cells.len() != h.cells || cells.len() != h.grid.len() {
            return Err(Error::Format(format!(
                "VHMP0001: {} cells for a grid of {} (header says {})",
                cells.len(),
                h.grid.len(),
                h.cells
            )));
        }
        Ok(Heatmap {
            grid: h.grid,
            cells,
            method: h.method,
            direction: h.direction,
            config: h.config,
            baseline_prob: h.baseline_prob,
            input_id: h.input_id,
            model_hash: h.model_hash,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        format::write_file(path, &self.encode()?)
    }

    pub fn read(path: &Path) -> Result<Heatmap> {
        Heatmap::decode(&format::read_file(path)?)
    }
}
