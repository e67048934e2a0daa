//! Synthetic registered "brain" phantoms with known disease geometry.
//!
//! Each subject is an ellipsoidal head of tissue with a brighter cortical
//! shell, a dark central ventricle and a small hippocampus-like region on the
//! left side. AD subjects get a darker (atrophied) hippocampus region and an
//! enlarged ventricle. Every visit adds independent Gaussian noise and a small
//! progression of both effects, then the volume is standardized.
//!
//! Seeds: subject `i` of a dataset uses `seed::derive(master, [SUBJECT, i])`.
//! Within a subject, anatomy parameters come from stream `[SUBJECT]`, age from
//! `[AGE]` and the noise of visit `v` from `[VISIT, v]`, all keyed by the
//! subject seed. Anatomy draws are made in the same order for both labels.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, stream};
use crate::volume::{Dims, Volume, STANDARDIZE_HIGH, STANDARDIZE_LOW};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    CN,
    AD,
}

impl Label {
    pub fn class_index(self) -> usize {
        match self {
            Label::CN => 0,
            Label::AD => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        if i == 1 {
            Label::AD
        } else {
            Label::CN
        }
    }

    pub fn opposite(self) -> Label {
        match self {
            Label::CN => Label::AD,
            Label::AD => Label::CN,
        }
    }
}

/// Binary per-voxel mask, same layout as [`Volume`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    pub dims: Dims,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn union(&self, other: &Mask) -> Mask {
        Mask { dims: self.dims, bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect() }
    }

    pub fn to_volume(&self) -> Volume {
        let data = self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Volume::with_flag(self.dims, data, true).expect("mask dims are valid")
    }

    pub fn from_volume(v: &Volume) -> Mask {
        Mask { dims: v.dims(), bits: v.data().iter().map(|&x| x > 0.5).collect() }
    }
}

#[derive(Clone, Debug)]
pub struct Scan {
    pub id: String,
    pub subject_id: String,
    pub visit: usize,
    pub age: f64,
    pub sex: u8,
    pub label: Label,
    pub volume: Volume,
    /// Atrophied region; present only for AD phantoms.
    pub lesion_mask: Option<Mask>,
    /// Ventricle region of this scan (phantom only).
    pub ventricle_mask: Option<Mask>,
}

impl Scan {
    /// Union of the lesion and ventricle ground truth, if either is known.
    pub fn evidence_mask(&self) -> Option<Mask> {
        match (&self.lesion_mask, &self.ventricle_mask) {
            (Some(l), Some(v)) => Some(l.union(v)),
            (Some(m), None) | (None, Some(m)) => Some(m.clone()),
            (None, None) => None,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct DatasetSplits {
    pub train: Vec<Scan>,
    pub validation: Vec<Scan>,
    pub test: Vec<Scan>,
}

impl DatasetSplits {
    pub fn all(&self) -> impl Iterator<Item = &Scan> {
        self.train.iter().chain(&self.validation).chain(&self.test)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomConfig {
    pub dims: Dims,
    pub subjects_per_class: usize,
    /// Inclusive range of visits per subject, drawn uniformly.
    pub visits: [usize; 2],
    pub age_range: [f64; 2],
    pub age_mean_cn: f64,
    pub age_mean_ad: f64,
    pub age_sd: f64,
    /// Years between consecutive visits.
    pub visit_interval: f64,
    pub sex_ratio: f64,
    /// Brain ellipsoid semi-axes as fractions of dims.
    pub brain_radius: [f64; 3],
    pub tissue_intensity: f64,
    pub shell_intensity: f64,
    pub shell_thickness: f64,
    pub ventricle_intensity: f64,
    /// Ventricle semi-axes in voxels before enlargement.
    pub ventricle_radius: [f64; 3],
    /// Hippocampus-analog center and radius, in voxels.
    pub lesion_center: [f64; 3],
    pub lesion_radius: f64,
    /// Multiplier applied to lesion intensity for AD subjects (1 = no effect).
    pub atrophy_factor: [f64; 2],
    /// Multiplier applied to ventricle radii for AD subjects (1 = no effect).
    pub ventricle_enlargement: [f64; 2],
    /// Relative growth per visit of both disease effects.
    pub progression_per_visit: f64,
    /// Relative per-subject jitter of brain size and intensity.
    pub anatomy_jitter: f64,
    /// Relative per-subject jitter of ventricle size.
    pub ventricle_jitter: f64,
    pub noise_sigma: f64,
    pub split_fractions: [f64; 3],
    pub seed: u64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        PhantomConfig::for_dims([32, 32, 32])
    }
}

/// Cohort of the full-size registered-MRI study the defaults are scaled down from.
pub const FULL_SCALE_COHORT: FullScaleCohort = FullScaleCohort {
    cn_subjects: 826,
    ad_subjects: 422,
    train_images: 1779,
    validation_images: 427,
    test_images: 575,
    volume_side: 100,
};

#[derive(Clone, Copy, Debug)]
pub struct FullScaleCohort {
    pub cn_subjects: usize,
    pub ad_subjects: usize,
    pub train_images: usize,
    pub validation_images: usize,
    pub test_images: usize,
    pub volume_side: usize,
}

impl PhantomConfig {
    /// Default phantom with all geometry scaled from the 32-voxel layout.
    pub fn for_dims(dims: Dims) -> Self {
        let f: [f64; 3] = std::array::from_fn(|a| dims[a] as f64 / 32.0);
        PhantomConfig {
            dims,
            subjects_per_class: 80,
            visits: [1, 3],
            age_range: [55.0, 90.0],
            age_mean_cn: 72.0,
            age_mean_ad: 75.0,
            age_sd: 6.0,
            visit_interval: 1.0,
            sex_ratio: 0.5,
            brain_radius: [0.42, 0.45, 0.40],
            tissue_intensity: 0.55,
            shell_intensity: 0.85,
            shell_thickness: 2.0 * f[0],
            ventricle_intensity: 0.12,
            ventricle_radius: [3.0 * f[0], 4.5 * f[1], 3.0 * f[2]],
            lesion_center: [9.5 * f[0], 19.0 * f[1], 12.5 * f[2]],
            lesion_radius: 3.5 * f[0],
            atrophy_factor: [0.6, 0.85],
            ventricle_enlargement: [1.1, 1.4],
            progression_per_visit: 0.1,
            anatomy_jitter: 0.04,
            ventricle_jitter: 0.12,
            noise_sigma: 0.04,
            split_fractions: [0.6, 0.2, 0.2],
            seed: 20_190_614,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(format!("phantom config: {msg}")));
        if self.dims.iter().any(|&d| d < 4) {
            return bad(format!("dims {:?} too small", self.dims));
        }
        if self.subjects_per_class == 0 {
            return bad("subjects_per_class must be positive".into());
        }
        if self.visits[0] == 0 || self.visits[0] > self.visits[1] {
            return bad(format!("visit range {:?} invalid", self.visits));
        }
        if !(self.age_range[0] < self.age_range[1]) || self.age_sd <= 0.0 || self.visit_interval < 0.0 {
            return bad("age range, sd and visit interval must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.sex_ratio) {
            return bad("sex_ratio must be in [0, 1]".into());
        }
        let fr = self.split_fractions;
        if fr.iter().any(|&f| f <= 0.0) || (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("split fractions {fr:?} must be positive and sum to 1"));
        }
        let positive = [
            self.atrophy_factor[0],
            self.ventricle_enlargement[0],
            self.lesion_radius,
            self.tissue_intensity,
            self.shell_intensity,
        ];
        if positive.iter().any(|&v| v <= 0.0)
            || self.atrophy_factor[0] > self.atrophy_factor[1]
            || self.ventricle_enlargement[0] > self.ventricle_enlargement[1]
            || self.ventricle_radius.iter().any(|&r| r <= 0.0)
            || self.brain_radius.iter().any(|&r| r <= 0.0)
        {
            return bad("factors and radii must be positive with ordered ranges".into());
        }
        if self.noise_sigma < 0.0
            || self.progression_per_visit < 0.0
            || self.anatomy_jitter < 0.0
            || !(0.0..1.0).contains(&self.ventricle_jitter)
        {
            return bad("noise, progression and jitter must be non-negative".into());
        }
        for a in 0..3 {
            let c = self.lesion_center[a];
            if c - self.lesion_radius < 0.0 || c + self.lesion_radius > (self.dims[a] - 1) as f64 {
                return bad(format!("lesion cube leaves the volume along axis {a}"));
            }
        }
        Ok(())
    }

    fn center(&self) -> [f64; 3] {
        std::array::from_fn(|a| (self.dims[a] as f64 - 1.0) / 2.0)
    }
}

/// Per-subject anatomy, drawn identically for both labels.
struct Anatomy {
    brain_scale: f64,
    intensity_scale: f64,
    ventricle_scale: f64,
    atrophy: f64,
    enlargement: f64,
    visits: usize,
    sex: u8,
}

fn draw_anatomy(cfg: &PhantomConfig, subject_seed: u64) -> Anatomy {
    let mut rng = seed::rng(subject_seed, &[stream::SUBJECT]);
    let jitter = |rng: &mut rand_chacha::ChaCha8Rng| 1.0 + cfg.anatomy_jitter * (2.0 * rng.random::<f64>() - 1.0);
    let brain_scale = jitter(&mut rng);
    let intensity_scale = jitter(&mut rng);
    let ventricle_scale = 1.0 + cfg.ventricle_jitter * (2.0 * rng.random::<f64>() - 1.0);
    let u_atrophy: f64 = rng.random();
    let u_enlarge: f64 = rng.random();
    let visits = rng.random_range(cfg.visits[0]..=cfg.visits[1]);
    let sex = u8::from(rng.random::<f64>() < cfg.sex_ratio);
    let lerp = |r: [f64; 2], u: f64| r[0] + u * (r[1] - r[0]);
    Anatomy {
        brain_scale,
        intensity_scale,
        ventricle_scale,
        atrophy: lerp(cfg.atrophy_factor, u_atrophy),
        enlargement: lerp(cfg.ventricle_enlargement, u_enlarge),
        visits,
        sex,
    }
}

fn ellipsoid_level(p: [f64; 3], c: [f64; 3], r: [f64; 3]) -> f64 {
    (0..3).map(|a| ((p[a] - c[a]) / r[a]).powi(2)).sum::<f64>()
}

pub fn subject_id(index: usize) -> String {
    format!("sub-{index:04}")
}

/// All visits of one subject. Deterministic in `(cfg, subject_seed, label)`.
pub fn generate_subject(cfg: &PhantomConfig, subject_seed: u64, label: Label, subject: &str) -> Result<Vec<Scan>> {
    cfg.validate()?;
    let anatomy = draw_anatomy(cfg, subject_seed);
    let mut age_rng = seed::rng(subject_seed, &[stream::AGE]);
    let mean = match label {
        Label::CN => cfg.age_mean_cn,
        Label::AD => cfg.age_mean_ad,
    };
    let span = cfg.visit_interval * (anatomy.visits - 1) as f64;
    let age_hi = (cfg.age_range[1] - span).max(cfg.age_range[0]);
    let base_age = Normal::new(mean, cfg.age_sd)
        .expect("age sd validated")
        .sample(&mut age_rng)
        .clamp(cfg.age_range[0], age_hi);

    let dims = cfg.dims;
    let center = cfg.center();
    let brain_r: [f64; 3] = std::array::from_fn(|a| cfg.brain_radius[a] * dims[a] as f64 * anatomy.brain_scale);
    let inner_r: [f64; 3] = std::array::from_fn(|a| (brain_r[a] - cfg.shell_thickness).max(0.5));

    (0..anatomy.visits)
        .map(|visit| {
            let is_ad = label == Label::AD;
            let growth = 1.0 + cfg.progression_per_visit * visit as f64;
            let (atrophy, enlargement) = if is_ad {
                (
                    (1.0 - (1.0 - anatomy.atrophy) * growth).max(0.05),
                    1.0 + (anatomy.enlargement - 1.0) * growth,
                )
            } else {
                (1.0, 1.0)
            };
            let vent_r: [f64; 3] =
                std::array::from_fn(|a| cfg.ventricle_radius[a] * anatomy.ventricle_scale * enlargement);

            let noise = Normal::new(0.0, cfg.noise_sigma.max(f64::MIN_POSITIVE)).expect("sigma validated");
            let mut rng = seed::rng(subject_seed, &[stream::VISIT, visit as u64]);
            let n = dims.iter().product();
            let mut data = Vec::with_capacity(n);
            let mut lesion = vec![false; n];
            let mut ventricle = vec![false; n];
            let mut i = 0;
            for z in 0..dims[2] {
                for y in 0..dims[1] {
                    for x in 0..dims[0] {
                        let p = [x as f64, y as f64, z as f64];
                        let mut value = 0.0;
                        if ellipsoid_level(p, center, brain_r) <= 1.0 {
                            value = if ellipsoid_level(p, center, inner_r) <= 1.0 {
                                cfg.tissue_intensity
                            } else {
                                cfg.shell_intensity
                            } * anatomy.intensity_scale;
                            let d2 = (0..3).map(|a| (p[a] - cfg.lesion_center[a]).powi(2)).sum::<f64>();
                            if d2 <= cfg.lesion_radius * cfg.lesion_radius {
                                lesion[i] = true;
                                value *= atrophy;
                            }
                            if ellipsoid_level(p, center, vent_r) <= 1.0 {
                                ventricle[i] = true;
                                value = cfg.ventricle_intensity * anatomy.intensity_scale;
                            }
                        }
                        let eps = if cfg.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                        data.push((value + eps) as f32);
                        i += 1;
                    }
                }
            }
            let volume = Volume::new(dims, data)?.standardize(STANDARDIZE_LOW, STANDARDIZE_HIGH)?;
            Ok(Scan {
                id: format!("{subject}_v{visit}"),
                subject_id: subject.to_string(),
                visit,
                age: (base_age + cfg.visit_interval * visit as f64).min(cfg.age_range[1]),
                sex: anatomy.sex,
                label,
                volume,
                lesion_mask: is_ad.then(|| Mask { dims, bits: lesion.clone() }),
                ventricle_mask: Some(Mask { dims, bits: ventricle }),
            })
        })
        .collect()
}

/// Generates every subject (CN subjects first, then AD) and splits by subject.
pub fn generate_dataset(cfg: &PhantomConfig) -> Result<DatasetSplits> {
    let scans = generate_scans(cfg)?;
    split_by_subject(scans, cfg.split_fractions, cfg.seed)
}

pub fn generate_scans(cfg: &PhantomConfig) -> Result<Vec<Scan>> {
    cfg.validate()?;
    let n = cfg.subjects_per_class;
    let per_subject: Vec<Vec<Scan>> = (0..2 * n)
        .into_par_iter()
        .map(|i| {
            let label = if i < n { Label::CN } else { Label::AD };
            let subject_seed = seed::derive(cfg.seed, &[stream::SUBJECT, i as u64]);
            generate_subject(cfg, subject_seed, label, &subject_id(i))
        })
        .collect::<Result<_>>()?;
    Ok(per_subject.into_iter().flatten().collect())
}

/// Subject-disjoint, per-class stratified split.
///
/// Unique subjects of each class (in first-appearance order) are shuffled with
/// `seed`; the first `round(f_train * n)` go to train, the next
/// `round(f_val * n)` to validation and the rest to test.
pub fn split_by_subject(scans: Vec<Scan>, fractions: [f64; 3], seed: u64) -> Result<DatasetSplits> {
    if fractions.iter().any(|&f| f < 0.0) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("split fractions {fractions:?} must sum to 1")));
    }
    let mut subjects: BTreeMap<Label, Vec<String>> = BTreeMap::new();
    let mut subject_label: BTreeMap<String, Label> = BTreeMap::new();
    for s in &scans {
        match subject_label.get(&s.subject_id) {
            Some(&l) if l != s.label => {
                return Err(Error::InvalidArgument(format!("subject {} has mixed labels", s.subject_id)))
            }
            Some(_) => {}
            None => {
                subject_label.insert(s.subject_id.clone(), s.label);
                subjects.entry(s.label).or_default().push(s.subject_id.clone());
            }
        }
    }
    let mut assignment: BTreeMap<String, usize> = BTreeMap::new();
    for (label, ids) in subjects.iter_mut() {
        let mut rng = seed::rng(seed, &[stream::SPLIT, label.class_index() as u64]);
        ids.shuffle(&mut rng);
        let n = ids.len();
        let n_train = ((fractions[0] * n as f64).round() as usize).min(n);
        let n_val = ((fractions[1] * n as f64).round() as usize).min(n - n_train);
        for (k, id) in ids.iter().enumerate() {
            let split = if k < n_train {
                0
            } else if k < n_train + n_val {
                1
            } else {
                2
            };
            assignment.insert(id.clone(), split);
        }
    }
    let mut out = DatasetSplits::default();
    for s in scans {
        match assignment[&s.subject_id] {
            0 => out.train.push(s),
            1 => out.validation.push(s),
            _ => out.test.push(s),
        }
    }
    for (name, split) in [("train", &out.train), ("validation", &out.validation), ("test", &out.test)] {
        for label in [Label::CN, Label::AD] {
            if !split.iter().any(|s| s.label == label) {
                return Err(Error::InsufficientData(format!(
                    "{name} split has no {label:?} subjects; add subjects or change fractions"
                )));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn small_config() -> PhantomConfig {
        PhantomConfig { subjects_per_class: 10, ..PhantomConfig::for_dims([16, 16, 16]) }
    }

    #[test]
    fn default_config_is_valid() {
        PhantomConfig::default().validate().unwrap();
        small_config().validate().unwrap();
        let mut bad = PhantomConfig::default();
        bad.split_fractions = [0.5, 0.2, 0.2];
        assert!(bad.validate().is_err());
        let mut bad = PhantomConfig::default();
        bad.lesion_center = [1.0, 16.0, 16.0];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn subject_generation_is_deterministic() {
        let cfg = small_config();
        let a = generate_subject(&cfg, 42, Label::AD, "s").unwrap();
        let b = generate_subject(&cfg, 42, Label::AD, "s").unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.volume, y.volume);
            assert_eq!(x.age, y.age);
            assert_eq!(x.lesion_mask, y.lesion_mask);
        }
    }

    #[test]
    fn null_disease_effect_matches_cn() {
        let cfg = PhantomConfig { atrophy_factor: [1.0, 1.0], ventricle_enlargement: [1.0, 1.0], ..small_config() };
        for seed in 0..5 {
            let ad = generate_subject(&cfg, seed, Label::AD, "s").unwrap();
            let cn = generate_subject(&cfg, seed, Label::CN, "s").unwrap();
            assert_eq!(ad.len(), cn.len());
            for (a, c) in ad.iter().zip(&cn) {
                assert_eq!(a.volume, c.volume);
            }
        }
    }

    #[test]
    fn scan_invariants() {
        let cfg = small_config();
        for seed in 0..6 {
            for label in [Label::CN, Label::AD] {
                let scans = generate_subject(&cfg, seed, label, "s").unwrap();
                assert!((cfg.visits[0]..=cfg.visits[1]).contains(&scans.len()));
                for w in scans.windows(2) {
                    assert!(w[0].age <= w[1].age);
                    assert_eq!(w[0].sex, w[1].sex);
                    assert_eq!(w[0].subject_id, w[1].subject_id);
                }
                for s in &scans {
                    assert!(s.volume.is_standardized());
                    assert!(s.volume.data().iter().all(|v| (0.0..=1.0).contains(v)));
                    assert!((cfg.age_range[0]..=cfg.age_range[1]).contains(&s.age));
                    match label {
                        Label::AD => assert!(!s.lesion_mask.as_ref().unwrap().is_empty()),
                        Label::CN => assert!(s.lesion_mask.is_none()),
                    }
                }
            }
        }
    }

    #[test]
    fn lesion_is_darker_in_ad_on_average() {
        let cfg = PhantomConfig { visits: [1, 1], ..PhantomConfig::default() };
        let ad0 = generate_subject(&cfg, 0, Label::AD, "s").unwrap();
        let mask = ad0[0].lesion_mask.clone().unwrap();
        let lesion_mean = |label: Label| {
            let mut total = 0.0;
            for seed in 0..50u64 {
                let s = &generate_subject(&cfg, 1000 + seed, label, "s").unwrap()[0];
                let (sum, n) = s
                    .volume
                    .data()
                    .iter()
                    .zip(&mask.bits)
                    .filter(|(_, &m)| m)
                    .fold((0.0, 0usize), |(a, n), (&v, _)| (a + v as f64, n + 1));
                total += sum / n as f64;
            }
            total / 50.0
        };
        assert!(lesion_mean(Label::AD) < lesion_mean(Label::CN));
    }

    #[test]
    fn split_counts_and_disjointness() {
        let cfg = small_config();
        let splits = generate_dataset(&cfg).unwrap();
        let subjects = |v: &[Scan]| v.iter().map(|s| s.subject_id.clone()).collect::<BTreeSet<_>>();
        let (a, b, c) = (subjects(&splits.train), subjects(&splits.validation), subjects(&splits.test));
        assert_eq!((a.len(), b.len(), c.len()), (12, 4, 4));
        assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
        let again = generate_dataset(&cfg).unwrap();
        let ids = |v: &[Scan]| v.iter().map(|s| s.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&splits.test), ids(&again.test));
        assert_eq!(ids(&splits.train), ids(&again.train));
    }

    #[test]
    fn multi_visit_subject_stays_together() {
        let cfg = PhantomConfig { visits: [5, 5], ..small_config() };
        let splits = generate_dataset(&cfg).unwrap();
        let mut per_subject: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for (k, split) in [&splits.train, &splits.validation, &splits.test].into_iter().enumerate() {
            for s in split {
                per_subject.entry(s.subject_id.clone()).or_default().insert(k);
            }
        }
        assert!(per_subject.values().all(|s| s.len() == 1));
        assert_eq!(splits.all().count(), 20 * 5);
    }

    #[test]
    fn too_few_subjects_is_an_error() {
        let cfg = PhantomConfig { subjects_per_class: 2, ..small_config() };
        assert!(matches!(generate_dataset(&cfg), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn stratification_within_one_subject() {
        for (per_class_cn, per_class_ad, seed) in [(10, 7, 1u64), (13, 13, 2), (9, 21, 3)] {
            let cfg = PhantomConfig { visits: [1, 1], ..small_config() };
            let mut scans = Vec::new();
            for i in 0..per_class_cn + per_class_ad {
                let label = if i < per_class_cn { Label::CN } else { Label::AD };
                let mut s = generate_subject(&cfg, i as u64, label, &subject_id(i)).unwrap();
                scans.append(&mut s);
            }
            let total = (per_class_cn + per_class_ad) as f64;
            let global_ad = per_class_ad as f64 / total;
            let splits = split_by_subject(scans, [0.6, 0.2, 0.2], seed).unwrap();
            for split in [&splits.train, &splits.validation, &splits.test] {
                let n = split.len() as f64;
                let ad = split.iter().filter(|s| s.label == Label::AD).count() as f64;
                assert!((ad - global_ad * n).abs() <= 1.0 + 1e-9, "ad {ad} of {n} vs ratio {global_ad}");
            }
        }
    }
}
