//! Continuity and selectivity of heatmap explanations.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::{occlusion_map, swap_map, Direction, ExplainConfig, Heatmap, Method, ProbabilityModel, ReferencePool};
use crate::format;
use crate::model::Covariates;
use crate::numeric::{lp_distance, mean, pearson, standard_error, Norm};
use crate::phantom::Scan;
use crate::seed::{self, stream};
use crate::volume::Volume;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AxiomConfig {
    pub n_images: usize,
    pub n_perturbations: usize,
    pub sigma: f64,
    pub norm: Norm,
    pub seed: u64,
}

impl Default for AxiomConfig {
    fn default() -> Self {
        AxiomConfig { n_images: 50, n_perturbations: 8, sigma: 0.02, norm: Norm::L2, seed: 0 }
    }
}

impl AxiomConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_images == 0 || self.n_perturbations == 0 || !(self.sigma > 0.0) {
            return Err(Error::InvalidArgument(
                "axiom config needs positive image count, perturbation count and sigma".into(),
            ));
        }
        Ok(())
    }
}

/// Adds N(0, sigma) noise to every voxel and clamps to [0, 1].
pub fn perturb(v: &Volume, sigma: f64, seed: u64) -> Result<Volume> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("sigma {sigma} must be non-negative")));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = seed::rng(seed, &[stream::PERTURB]);
    let data = v
        .data()
        .iter()
        .map(|&x| (x as f64 + normal.sample(&mut rng)).clamp(0.0, 1.0) as f32)
        .collect();
    Volume::with_flag(v.dims(), data, v.is_standardized())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Continuity {
    /// max over perturbations of ‖C(x) − C(x′)‖ / ‖x − x′‖₂.
    pub ratio: f64,
    /// Mean undivided ‖C(x) − C(x′)‖ over the perturbations.
    pub perturbed_distance: f64,
    pub used: usize,
}

/// Continuity of `explain` around `x`, with perturbation `k` seeded from `derive(seed, [k])`.
pub fn continuity(
    explain: impl Fn(&Volume) -> Result<Vec<f64>> + Sync,
    x: &Volume,
    cfg: &AxiomConfig,
    seed: u64,
) -> Result<Continuity> {
    cfg.validate()?;
    let reference = explain(x)?;
    let pairs = (0..cfg.n_perturbations as u64)
        .into_par_iter()
        .map(|k| {
            let xp = perturb(x, cfg.sigma, seed::derive(seed, &[k]))?;
            let dx = lp_distance(x.data(), xp.data(), Norm::L2)?;
            if dx == 0.0 {
                return Ok(None);
            }
            let dc = lp_distance(&reference, &explain(&xp)?, cfg.norm)?;
            Ok(Some((dc, dx)))
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(f64, f64)> = pairs.into_iter().flatten().collect();
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("every perturbation left the input unchanged".into()));
    }
    let ratio = pairs.iter().map(|&(dc, dx)| dc / dx).fold(0.0, f64::max);
    let distances: Vec<f64> = pairs.iter().map(|&(dc, _)| dc).collect();
    Ok(Continuity { ratio, perturbed_distance: mean(&distances), used: pairs.len() })
}

/// Mean distance over all unordered pairs of heatmaps.
pub fn heatmap_baseline(heatmaps: &[&[f64]], norm: Norm) -> Result<f64> {
    if heatmaps.len() < 2 {
        return Err(Error::InsufficientData("the baseline needs at least two heatmaps".into()));
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..heatmaps.len() {
        for j in i + 1..heatmaps.len() {
            sum += lp_distance(heatmaps[i], heatmaps[j], norm)?;
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}

/// Baseline over heatmaps, which must share one grid.
pub fn heatmap_baseline_of(heatmaps: &[Heatmap], norm: Norm) -> Result<f64> {
    if let Some(first) = heatmaps.first() {
        if heatmaps.iter().any(|h| !h.same_grid(first)) {
            return Err(Error::InvalidArgument("heatmaps are on different grids".into()));
        }
    }
    let cells: Vec<Vec<f64>> = heatmaps.iter().map(Heatmap::cells_f64).collect();
    let views: Vec<&[f64]> = cells.iter().map(Vec::as_slice).collect();
    heatmap_baseline(&views, norm)
}

/// Pearson ρ between a standard and a reversed heatmap; `None` when either is flat.
pub fn selectivity(standard: &Heatmap, reversed: &Heatmap) -> Result<Option<f64>> {
    if !standard.same_grid(reversed) {
        return Err(Error::InvalidArgument("standard and reversed heatmaps are on different grids".into()));
    }
    match pearson(&standard.cells_f64(), &reversed.cells_f64()) {
        Ok(r) => Ok(Some(r)),
        Err(Error::ZeroVariance) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageAxioms {
    pub image: usize,
    pub scan_id: String,
    pub method: Method,
    pub continuity: f64,
    pub perturbed_distance: f64,
    pub selectivity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub n_images: usize,
    pub continuity_mean: f64,
    pub continuity_se: f64,
    pub perturbed_distance_mean: f64,
    pub perturbed_distance_se: f64,
    pub baseline_distance: f64,
    /// `perturbed_distance_mean / baseline_distance`.
    pub perturbed_to_baseline: f64,
    pub selectivity_mean: Option<f64>,
    pub selectivity_se: Option<f64>,
    pub selectivity_excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub config: AxiomConfig,
    pub explain: ExplainConfig,
    pub model_hash: Option<String>,
    pub sampled: Vec<String>,
    pub methods: Vec<MethodSummary>,
    pub images: Vec<ImageAxioms>,
}

struct ImageResult {
    axioms: ImageAxioms,
    standard: Vec<f64>,
}

fn sample_images(n_scans: usize, cfg: &AxiomConfig) -> Result<Vec<usize>> {
    if n_scans < cfg.n_images {
        return Err(Error::InsufficientData(format!(
            "{} test scans for {} sampled images",
            n_scans, cfg.n_images
        )));
    }
    let mut idx: Vec<usize> = (0..n_scans).collect();
    idx.shuffle(&mut seed::rng(cfg.seed, &[stream::SAMPLE]));
    idx.truncate(cfg.n_images);
    idx.sort_unstable();
    Ok(idx)
}

fn evaluate_image<M: ProbabilityModel>(
    model: &M,
    pool: &ReferencePool<'_>,
    scan: &Scan,
    image: usize,
    method: Method,
    cfg: &AxiomConfig,
    explain: &ExplainConfig,
) -> Result<ImageResult> {
    let cov = Covariates::from(scan);
    let standard_cfg = explain.with_direction(Direction::Standard);
    let reversed_cfg = explain.with_direction(Direction::Reversed);
    let perturb_seed = seed::derive(cfg.seed, &[stream::PERTURB, image as u64]);
    let (standard, reversed, cont) = match method {
        Method::Swap => {
            let predicted = model.predicted_label(&scan.volume, cov)?;
            let ref_seed = seed::derive(explain.seed, &[image as u64]);
            let refs = pool.select(predicted, &scan.subject_id, explain.n_references, ref_seed)?;
            let standard = swap_map(model, &scan.volume, cov, &refs, &standard_cfg)?;
            let reversed = swap_map(model, &scan.volume, cov, &refs, &reversed_cfg)?;
            let cont = continuity(
                |v| Ok(swap_map(model, v, cov, &refs, &standard_cfg)?.cells_f64()),
                &scan.volume,
                cfg,
                perturb_seed,
            )?;
            (standard, reversed, cont)
        }
        Method::Occlusion => {
            let standard = occlusion_map(model, &scan.volume, cov, &standard_cfg)?;
            let reversed = occlusion_map(model, &scan.volume, cov, &reversed_cfg)?;
            let cont = continuity(
                |v| Ok(occlusion_map(model, v, cov, &standard_cfg)?.cells_f64()),
                &scan.volume,
                cfg,
                perturb_seed,
            )?;
            (standard, reversed, cont)
        }
    };
    Ok(ImageResult {
        axioms: ImageAxioms {
            image,
            scan_id: scan.id.clone(),
            method,
            continuity: cont.ratio,
            perturbed_distance: cont.perturbed_distance,
            selectivity: selectivity(&standard, &reversed)?,
        },
        standard: standard.cells_f64(),
    })
}

fn summarize(method: Method, images: &[ImageAxioms], baseline_distance: f64) -> MethodSummary {
    let cont: Vec<f64> = images.iter().map(|r| r.continuity).collect();
    let dist: Vec<f64> = images.iter().map(|r| r.perturbed_distance).collect();
    let sel: Vec<f64> = images.iter().filter_map(|r| r.selectivity).collect();
    let perturbed_distance_mean = mean(&dist);
    MethodSummary {
        method,
        n_images: images.len(),
        continuity_mean: mean(&cont),
        continuity_se: standard_error(&cont),
        perturbed_distance_mean,
        perturbed_distance_se: standard_error(&dist),
        baseline_distance,
        perturbed_to_baseline: perturbed_distance_mean / baseline_distance,
        selectivity_mean: (!sel.is_empty()).then(|| mean(&sel)),
        selectivity_se: (!sel.is_empty()).then(|| standard_error(&sel)),
        selectivity_excluded: images.len() - sel.len(),
    }
}

/// Samples `cfg.n_images` scans from `test_set` and evaluates every method on
/// each. Swap references come from `test_set` and are fixed per image, so the
/// perturbed and reversed maps share them. With a single image the baseline
/// is undefined and reported as NaN.
pub fn evaluate_axioms<M: ProbabilityModel>(
    model: &M,
    test_set: &[Scan],
    methods: &[Method],
    cfg: &AxiomConfig,
    explain: &ExplainConfig,
) -> Result<AxiomReport> {
    cfg.validate()?;
    explain.validate()?;
    let sampled = sample_images(test_set.len(), cfg)?;
    let pool = ReferencePool::new(model, test_set)?;
    let mut summaries = Vec::new();
    let mut images = Vec::new();
    for &method in methods {
        let results = sampled
            .iter()
            .enumerate()
            .map(|(image, &i)| evaluate_image(model, &pool, &test_set[i], image, method, cfg, explain))
            .collect::<Result<Vec<_>>>()?;
        let maps: Vec<&[f64]> = results.iter().map(|r| r.standard.as_slice()).collect();
        let baseline = if maps.len() >= 2 { heatmap_baseline(&maps, cfg.norm)? } else { f64::NAN };
        let rows: Vec<ImageAxioms> = results.into_iter().map(|r| r.axioms).collect();
        summaries.push(summarize(method, &rows, baseline));
        images.extend(rows);
    }
    Ok(AxiomReport {
        config: cfg.clone(),
        explain: explain.clone(),
        model_hash: None,
        sampled: sampled.iter().map(|&i| test_set[i].id.clone()).collect(),
        methods: summaries,
        images,
    })
}

/// Column schema of the per-image CSV.
pub const CSV_HEADER: &str = "image,scan_id,method,metric,value";

impl AxiomReport {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }

    /// One row per image, method and metric; an undefined selectivity has an empty value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.images {
            let m = r.method.as_str();
            let sel = r.selectivity.map(|v| v.to_string()).unwrap_or_default();
            for (metric, value) in [
                ("continuity", r.continuity.to_string()),
                ("perturbed_distance", r.perturbed_distance.to_string()),
                ("selectivity", sel),
            ] {
                let _ = writeln!(out, "{},{},{},{},{}", r.image, r.scan_id, m, metric, value);
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, csv_path: &Path, json_path: &Path) -> Result<()> {
        format::write_file(csv_path, self.to_csv().as_bytes())?;
        format::write_file(json_path, self.to_json()?.as_bytes())
    }
}
