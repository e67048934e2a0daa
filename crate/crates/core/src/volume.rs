//! Dense scalar volumes, intensity standardization and patch geometry.
//!
//! Voxels are stored in a single `Vec<f32>` with x varying fastest, then y,
//! then z: the voxel at `(x, y, z)` lives at `x + nx * (y + ny * z)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::percentile_sorted;

pub type Dims = [usize; 3];

/// Default percentile window used by [`Volume::standardize`].
pub const STANDARDIZE_LOW: f64 = 0.2;
pub const STANDARDIZE_HIGH: f64 = 99.8;

#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    dims: Dims,
    data: Vec<f32>,
    standardized: bool,
}

impl Volume {
    pub fn new(dims: Dims, data: Vec<f32>) -> Result<Self> {
        Self::with_flag(dims, data, false)
    }

    pub fn with_flag(dims: Dims, data: Vec<f32>, standardized: bool) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument(format!("volume dims must be positive, got {dims:?}")));
        }
        let n = dims.iter().product::<usize>();
        if data.len() != n {
            return Err(Error::InvalidArgument(format!(
                "volume {dims:?} needs {n} voxels, got {}",
                data.len()
            )));
        }
        if standardized && data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("standardized volume has voxels outside [0, 1]".into()));
        }
        Ok(Volume { dims, data, standardized })
    }

    pub fn filled(dims: Dims, value: f32) -> Self {
        let n = dims.iter().product();
        Volume { dims, data: vec![value; n], standardized: false }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.index(x, y, z)]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    /// Maps intensities through the `[q_low, q_high]` percentile window onto
    /// `[0, 1]`, clamping outliers. A degenerate window (`q_high == q_low`)
    /// maps every voxel to 0.
    pub fn standardize(&self, p_low: f64, p_high: f64) -> Result<Volume> {
        if self.standardized {
            return Err(Error::InvalidArgument("volume is already standardized".into()));
        }
        if !(0.0 <= p_low && p_low < p_high && p_high <= 100.0) {
            return Err(Error::InvalidArgument(format!(
                "percentile window [{p_low}, {p_high}] must satisfy 0 <= low < high <= 100"
            )));
        }
        let mut sorted: Vec<f64> = self.data.iter().map(|&v| v as f64).collect();
        sorted.sort_by(f64::total_cmp);
        let q_low = percentile_sorted(&sorted, p_low)?;
        let q_high = percentile_sorted(&sorted, p_high)?;
        let span = q_high - q_low;
        let data = if span > 0.0 {
            self.data
                .iter()
                .map(|&v| ((v as f64 - q_low) / span).clamp(0.0, 1.0) as f32)
                .collect()
        } else {
            vec![0.0; self.data.len()]
        };
        Ok(Volume { dims: self.dims, data, standardized: true })
    }

    /// Centered sub-volume. When the remainder along an axis is odd the extra
    /// voxel is dropped from the high side, i.e. the offset is `floor((n - s) / 2)`.
    pub fn center_crop(&self, size: Dims) -> Result<Volume> {
        for axis in 0..3 {
            if size[axis] == 0 || size[axis] > self.dims[axis] {
                return Err(Error::CropTooLarge { axis, size: size[axis], dim: self.dims[axis] });
            }
        }
        let off: Dims = std::array::from_fn(|a| (self.dims[a] - size[a]) / 2);
        let mut data = Vec::with_capacity(size.iter().product());
        for z in 0..size[2] {
            for y in 0..size[1] {
                let start = self.index(off[0], off[1] + y, off[2] + z);
                data.extend_from_slice(&self.data[start..start + size[0]]);
            }
        }
        Ok(Volume { dims: size, data, standardized: self.standardized })
    }

    /// Returns a copy of `self` whose cube `[origin, origin + size)` holds `src`'s voxels.
    pub fn with_patch_from(&self, src: &Volume, origin: Dims, size: usize) -> Result<Volume> {
        copy_patch(src, self, origin, size)
    }
}

fn check_patch(dims: Dims, origin: Dims, size: usize) -> Result<()> {
    if size == 0 || (0..3).any(|a| origin[a] + size > dims[a]) {
        return Err(Error::PatchOutOfBounds { origin, size, dims });
    }
    Ok(())
}

/// Visits every voxel index of the cube `[origin, origin + size)` in storage
/// order, handing out contiguous x-runs.
fn for_each_patch_row(dims: Dims, origin: Dims, size: usize, mut f: impl FnMut(std::ops::Range<usize>)) {
    for z in origin[2]..origin[2] + size {
        for y in origin[1]..origin[1] + size {
            let start = origin[0] + dims[0] * (y + dims[1] * z);
            f(start..start + size);
        }
    }
}

/// New volume equal to `dst` except inside the cube at `origin`, which takes `src`'s values.
pub fn copy_patch(src: &Volume, dst: &Volume, origin: Dims, size: usize) -> Result<Volume> {
    if src.dims != dst.dims {
        return Err(Error::DimensionMismatch { expected: dst.dims, actual: src.dims });
    }
    check_patch(dst.dims, origin, size)?;
    let mut out = dst.clone();
    for_each_patch_row(dst.dims, origin, size, |run| {
        out.data[run.clone()].copy_from_slice(&src.data[run]);
    });
    out.standardized = src.standardized && dst.standardized;
    Ok(out)
}

/// New volume equal to `v` except inside the cube at `origin`, which is set to `fill`.
pub fn fill_patch(v: &Volume, origin: Dims, size: usize, fill: f32) -> Result<Volume> {
    check_patch(v.dims, origin, size)?;
    let mut out = v.clone();
    for_each_patch_row(v.dims, origin, size, |run| out.data[run].fill(fill));
    out.standardized = v.standardized && (0.0..=1.0).contains(&fill);
    Ok(out)
}

/// New volume equal to `inside` within the cube at `origin` and to `outside` everywhere else.
///
/// With `outside` a constant volume this is the complement of [`fill_patch`].
pub fn keep_patch(inside: &Volume, outside: &Volume, origin: Dims, size: usize) -> Result<Volume> {
    copy_patch(inside, outside, origin, size)
}

/// Regular grid of cubic patches covering a volume.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub dims: Dims,
    pub patch_size: usize,
    pub stride: usize,
    pub origins: Vec<Dims>,
}

/// Origins `0, t, 2t, ...` along one axis, plus `n - s` when the last step
/// would leave voxels uncovered.
pub fn axis_origins(n: usize, patch_size: usize, stride: usize) -> Vec<usize> {
    let last = n - patch_size;
    let mut out: Vec<usize> = (0..=last).step_by(stride).collect();
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

impl PatchGrid {
    pub fn build(dims: Dims, patch_size: usize, stride: usize) -> Result<PatchGrid> {
        if patch_size == 0 || dims.iter().any(|&d| patch_size > d) {
            return Err(Error::InvalidArgument(format!(
                "patch size {patch_size} must be in 1..={} for dims {dims:?}",
                dims.iter().min().unwrap()
            )));
        }
        if stride == 0 || stride > patch_size {
            return Err(Error::InvalidArgument(format!(
                "stride {stride} must be in 1..={patch_size}"
            )));
        }
        let per_axis: [Vec<usize>; 3] = std::array::from_fn(|a| axis_origins(dims[a], patch_size, stride));
        let mut origins = Vec::with_capacity(per_axis.iter().map(Vec::len).product());
        for &z in &per_axis[2] {
            for &y in &per_axis[1] {
                for &x in &per_axis[0] {
                    origins.push([x, y, z]);
                }
            }
        }
        Ok(PatchGrid { dims, patch_size, stride, origins })
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    /// Whether the patch at `cell` contains voxel `(x, y, z)`.
    pub fn covers(&self, cell: usize, voxel: Dims) -> bool {
        let o = self.origins[cell];
        (0..3).all(|a| voxel[a] >= o[a] && voxel[a] < o[a] + self.patch_size)
    }

    /// Linear voxel indices of the patch at `cell`.
    pub fn voxel_indices(&self, cell: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.patch_size.pow(3));
        for_each_patch_row(self.dims, self.origins[cell], self.patch_size, |run| out.extend(run));
        out
    }
}
