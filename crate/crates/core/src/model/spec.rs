//! Network descriptions and the AlexNet-style builders.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Dims;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Sagittal,
    Coronal,
    Axial,
}

impl Plane {
    /// Volume axis normal to the plane: sagittal slices fix x, coronal fix y, axial fix z.
    pub fn axis(self) -> usize {
        match self {
            Plane::Sagittal => 0,
            Plane::Coronal => 1,
            Plane::Axial => 2,
        }
    }

    /// The two in-plane axes, in storage order.
    pub fn in_plane_axes(self) -> [usize; 2] {
        match self {
            Plane::Sagittal => [1, 2],
            Plane::Coronal => [0, 2],
            Plane::Axial => [0, 1],
        }
    }
}

impl std::str::FromStr for Plane {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sagittal" => Ok(Plane::Sagittal),
            "coronal" => Ok(Plane::Coronal),
            "axial" => Ok(Plane::Axial),
            other => Err(Error::InvalidArgument(format!("unknown plane {other:?}"))),
        }
    }
}

/// How a volume is presented to the first layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputEncoding {
    /// One channel, full 3D grid.
    Volume,
    /// Every `step`-th slice normal to `plane` becomes a channel of a 2D image.
    Slices { plane: Plane, step: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    /// `rank` 2 convolves the first two spatial axes only.
    Conv { rank: u8, kernel: usize, stride: usize, padding: usize, filters: usize },
    Relu,
    /// Max pooling with side and stride `size`.
    MaxPool { rank: u8, size: usize },
    Flatten,
    CovariateConcat,
    Dense { units: usize },
    Dropout { rate: f64 },
    Softmax,
}

impl LayerSpec {
    pub fn name(&self) -> String {
        match self {
            LayerSpec::Conv { rank, kernel, stride, filters, .. } => {
                format!("conv{rank}d {kernel}/{stride}, {filters}")
            }
            LayerSpec::Relu => "relu".into(),
            LayerSpec::MaxPool { rank, size } => format!("maxpool{rank}d {size}"),
            LayerSpec::Flatten => "flatten".into(),
            LayerSpec::CovariateConcat => "covariate-concat".into(),
            LayerSpec::Dense { units } => format!("dense {units}"),
            LayerSpec::Dropout { rate } => format!("dropout {rate}"),
            LayerSpec::Softmax => "softmax".into(),
        }
    }
}

/// Activation shape: `channels` feature maps over a (possibly degenerate) 3D grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub channels: usize,
    pub spatial: [usize; 3],
}

impl Shape {
    pub fn flat(n: usize) -> Shape {
        Shape { channels: n, spatial: [1, 1, 1] }
    }

    pub fn voxels(&self) -> usize {
        self.spatial.iter().product()
    }

    pub fn len(&self) -> usize {
        self.channels * self.voxels()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dims: Dims,
    pub encoding: InputEncoding,
    /// Number of appended covariates (age, sex).
    pub covariates: usize,
    /// Age range mapped onto [0, 1] before concatenation.
    pub age_range: [f64; 2],
    pub layers: Vec<LayerSpec>,
}

/// Resolved layer with its shapes and parameter slice.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerPlan {
    pub layer: LayerSpec,
    pub input: Shape,
    pub output: Shape,
    pub param_offset: usize,
    /// Weights then biases.
    pub param_len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub input: Shape,
    pub layers: Vec<LayerPlan>,
    pub param_count: usize,
}

pub const DEFAULT_AGE_RANGE: [f64; 2] = [55.0, 90.0];

fn conv_out(n: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = n + 2 * padding;
    (padded >= kernel).then(|| (padded - kernel) / stride + 1)
}

impl NetworkSpec {
    pub fn input_shape(&self) -> Result<Shape> {
        match self.encoding {
            InputEncoding::Volume => Ok(Shape { channels: 1, spatial: self.input_dims }),
            InputEncoding::Slices { plane, step } => {
                let n = self.input_dims[plane.axis()];
                if step == 0 || step >= n {
                    return Err(Error::InvalidArgument(format!(
                        "slice step {step} must be in 1..{n} for the {plane:?} axis"
                    )));
                }
                let [a, b] = plane.in_plane_axes();
                Ok(Shape { channels: n.div_ceil(step), spatial: [self.input_dims[a], self.input_dims[b], 1] })
            }
        }
    }

    /// Checks layer composition and resolves shapes and parameter offsets.
    pub fn plan(&self) -> Result<Plan> {
        let err = |index: usize, layer: &LayerSpec, reason: String| Error::Shape { index, layer: layer.name(), reason };
        let input = self.input_shape()?;
        let concat_at: Vec<usize> = self
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, LayerSpec::CovariateConcat))
            .map(|(i, _)| i)
            .collect();
        let first_dense = self.layers.iter().position(|l| matches!(l, LayerSpec::Dense { .. }));
        match (concat_at.as_slice(), first_dense) {
            (&[c], Some(d)) if c + 1 == d => {}
            _ => {
                return Err(Error::Shape {
                    index: concat_at.first().copied().unwrap_or(0),
                    layer: "covariate-concat".into(),
                    reason: "need exactly one covariate-concat placed immediately before the first dense layer".into(),
                })
            }
        }
        let n = self.layers.len();
        if n < 2
            || self.layers[n - 1] != LayerSpec::Softmax
            || self.layers[n - 2] != (LayerSpec::Dense { units: 2 })
        {
            return Err(Error::Shape {
                index: n.saturating_sub(1),
                layer: self.layers.last().map(LayerSpec::name).unwrap_or_default(),
                reason: "network must end with dense(2) + softmax".into(),
            });
        }

        let mut shape = input;
        let mut flat = false;
        let mut offset = 0;
        let mut layers = Vec::with_capacity(n);
        for (index, layer) in self.layers.iter().enumerate() {
            let (out, param_len) = match *layer {
                LayerSpec::Conv { rank, kernel, stride, padding, filters } => {
                    if flat {
                        return Err(err(index, layer, "convolution after flatten".into()));
                    }
                    if !(rank == 2 || rank == 3) || kernel == 0 || stride == 0 || filters == 0 {
                        return Err(err(index, layer, "rank must be 2 or 3; kernel, stride, filters positive".into()));
                    }
                    if rank == 2 && shape.spatial[2] != 1 {
                        return Err(err(index, layer, "2D convolution needs a unit third axis".into()));
                    }
                    let mut spatial = shape.spatial;
                    for (a, s) in spatial.iter_mut().enumerate().take(rank as usize) {
                        *s = conv_out(shape.spatial[a], kernel, stride, padding)
                            .filter(|&v| v > 0)
                            .ok_or_else(|| {
                                err(index, layer, format!("input extent {} along axis {a} is smaller than the kernel", shape.spatial[a]))
                            })?;
                    }
                    let taps = kernel.pow(rank as u32);
                    (Shape { channels: filters, spatial }, filters * shape.channels * taps + filters)
                }
                LayerSpec::MaxPool { rank, size } => {
                    if flat || size == 0 || !(rank == 2 || rank == 3) {
                        return Err(err(index, layer, "invalid pooling placement or size".into()));
                    }
                    let mut spatial = shape.spatial;
                    for (a, s) in spatial.iter_mut().enumerate().take(rank as usize) {
                        *s /= size;
                        if *s == 0 {
                            return Err(err(index, layer, format!("pooling collapses axis {a} (extent {})", shape.spatial[a])));
                        }
                    }
                    (Shape { channels: shape.channels, spatial }, 0)
                }
                LayerSpec::Relu => (shape, 0),
                LayerSpec::Dropout { rate } => {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(err(index, layer, "dropout rate must be in [0, 1)".into()));
                    }
                    (shape, 0)
                }
                LayerSpec::Flatten => {
                    flat = true;
                    (Shape::flat(shape.len()), 0)
                }
                LayerSpec::CovariateConcat => {
                    if !flat {
                        return Err(err(index, layer, "covariates must be appended to a flattened representation".into()));
                    }
                    (Shape::flat(shape.len() + self.covariates), 0)
                }
                LayerSpec::Dense { units } => {
                    if !flat || units == 0 {
                        return Err(err(index, layer, "dense layer needs flattened input and positive units".into()));
                    }
                    (Shape::flat(units), units * shape.len() + units)
                }
                LayerSpec::Softmax => {
                    if index + 1 != n {
                        return Err(err(index, layer, "softmax must be the final layer".into()));
                    }
                    (shape, 0)
                }
            };
            layers.push(LayerPlan { layer: layer.clone(), input: shape, output: out, param_offset: offset, param_len });
            offset += param_len;
            shape = out;
        }
        Ok(Plan { input, layers, param_count: offset })
    }

    pub fn param_count(&self) -> Result<usize> {
        Ok(self.plan()?.param_count)
    }

    /// Returns a copy with every dropout layer set to `rate`.
    pub fn with_dropout(mut self, rate: f64) -> Self {
        for l in &mut self.layers {
            if let LayerSpec::Dropout { rate: r } = l {
                *r = rate;
            }
        }
        self
    }

    pub fn conv_filters(&self) -> Vec<usize> {
        self.layers
            .iter()
            .filter_map(|l| match l {
                LayerSpec::Conv { filters, .. } => Some(*filters),
                _ => None,
            })
            .collect()
    }

    pub fn dense_units(&self) -> Vec<usize> {
        self.layers
            .iter()
            .filter_map(|l| match l {
                LayerSpec::Dense { units } => Some(*units),
                _ => None,
            })
            .collect()
    }
}

const ALEXNET_FILTERS: [usize; 5] = [32, 64, 128, 128, 128];
const ALEXNET_DENSE: usize = 512;

/// Spatial layout of the convolutional stack.
struct Geometry {
    first_kernel: usize,
    first_strides: &'static [usize],
    second_kernel: usize,
    tail_padding: usize,
}

/// Inputs at least this wide get the full-size kernels (11, 5, 3, 3, 3, no padding).
/// Smaller inputs use kernels (5, 3, 3, 3, 3) with unit padding on the last
/// three convolutions. In both cases the first stride is the largest candidate
/// for which the whole stack composes.
const FULL_GEOMETRY_MIN_SIDE: usize = 64;

fn geometry(min_side: usize) -> Geometry {
    if min_side >= FULL_GEOMETRY_MIN_SIDE {
        Geometry { first_kernel: 11, first_strides: &[4, 3, 2, 1], second_kernel: 5, tail_padding: 0 }
    } else {
        Geometry { first_kernel: 5, first_strides: &[2, 1], second_kernel: 3, tail_padding: 1 }
    }
}

fn scaled(count: usize, scale: f64) -> usize {
    ((count as f64 * scale).round() as usize).max(1)
}

fn alexnet_layers(rank: u8, first_stride: usize, g: &Geometry, scale: f64) -> Vec<LayerSpec> {
    let f: Vec<usize> = ALEXNET_FILTERS.iter().map(|&c| scaled(c, scale)).collect();
    let fc = scaled(ALEXNET_DENSE, scale);
    let conv = |kernel, stride, padding, filters| LayerSpec::Conv { rank, kernel, stride, padding, filters };
    let pool = LayerSpec::MaxPool { rank, size: 2 };
    vec![
        conv(g.first_kernel, first_stride, 0, f[0]),
        LayerSpec::Relu,
        pool.clone(),
        conv(g.second_kernel, 1, 0, f[1]),
        LayerSpec::Relu,
        pool.clone(),
        conv(3, 1, g.tail_padding, f[2]),
        LayerSpec::Relu,
        conv(3, 1, g.tail_padding, f[3]),
        LayerSpec::Relu,
        conv(3, 1, g.tail_padding, f[4]),
        LayerSpec::Relu,
        pool,
        LayerSpec::Flatten,
        LayerSpec::CovariateConcat,
        LayerSpec::Dense { units: fc },
        LayerSpec::Relu,
        LayerSpec::Dropout { rate: 0.5 },
        LayerSpec::Dense { units: fc },
        LayerSpec::Relu,
        LayerSpec::Dropout { rate: 0.5 },
        LayerSpec::Dense { units: 2 },
        LayerSpec::Softmax,
    ]
}

fn build_alexnet(input_dims: Dims, encoding: InputEncoding, scale: f64) -> Result<NetworkSpec> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    let mut spec = NetworkSpec {
        input_dims,
        encoding,
        covariates: 2,
        age_range: DEFAULT_AGE_RANGE,
        layers: Vec::new(),
    };
    let input = spec.input_shape()?;
    let (rank, min_side) = match encoding {
        InputEncoding::Volume => (3u8, *input.spatial.iter().min().unwrap()),
        InputEncoding::Slices { .. } => (2u8, input.spatial[0].min(input.spatial[1])),
    };
    let g = geometry(min_side);
    let mut last_err = None;
    for &stride in g.first_strides {
        spec.layers = alexnet_layers(rank, stride, &g, scale);
        match spec.plan() {
            Ok(_) => return Ok(spec),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one stride candidate"))
}

/// AlexNet-style 3D network: five convolutions (three pooled) then three dense layers.
/// Filter and unit counts are multiplied by `scale`.
pub fn build_alexnet3d(input_dims: Dims, scale: f64) -> Result<NetworkSpec> {
    build_alexnet(input_dims, InputEncoding::Volume, scale)
}

/// 2D+C variant: every `slice_step`-th slice normal to `plane` is stacked as
/// channels (`ceil(n / slice_step)` of them) and all operations are 2D.
pub fn build_alexnet2dc(input_dims: Dims, plane: Plane, slice_step: usize, scale: f64) -> Result<NetworkSpec> {
    build_alexnet(input_dims, InputEncoding::Slices { plane, step: slice_step }, scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_size_alexnet3d_keeps_table_counts() {
        let spec = build_alexnet3d([100; 3], 1.0).unwrap();
        assert_eq!(spec.conv_filters(), vec![32, 64, 128, 128, 128]);
        assert_eq!(spec.dense_units(), vec![512, 512, 2]);
        // stride 4 underflows with unpadded convolutions; 2 is the largest that composes
        assert!(matches!(spec.layers[0], LayerSpec::Conv { kernel: 11, stride: 2, .. }));
        assert_eq!(spec.layers.iter().filter(|l| matches!(l, LayerSpec::MaxPool { .. })).count(), 3);
        assert_eq!(spec.layers.iter().filter(|l| matches!(l, LayerSpec::Dropout { rate } if *rate == 0.5)).count(), 2);
    }

    #[test]
    fn compact_alexnet3d_composes() {
        let spec = build_alexnet3d([32; 3], 0.25).unwrap();
        assert_eq!(spec.conv_filters(), vec![8, 16, 32, 32, 32]);
        assert_eq!(spec.dense_units(), vec![128, 128, 2]);
        let plan = spec.plan().unwrap();
        assert_eq!(plan.layers[0].output.spatial, [14, 14, 14]);
        assert_eq!(plan.layers[13].output, Shape::flat(32));
        assert_eq!(plan.layers[14].output, Shape::flat(34));
        let small = build_alexnet3d([16; 3], 0.25).unwrap();
        assert!(matches!(small.layers[0], LayerSpec::Conv { stride: 1, .. }));
    }

    #[test]
    fn impossible_shapes_are_rejected() {
        match build_alexnet3d([8; 3], 0.25) {
            Err(Error::Shape { index, .. }) => assert!(index > 0),
            other => panic!("expected shape error, got {other:?}"),
        }
        assert!(build_alexnet3d([32; 3], 0.0).is_err());
    }

    #[test]
    fn slice_channels() {
        let s = build_alexnet2dc([32; 3], Plane::Sagittal, 5, 0.25).unwrap();
        assert_eq!(s.input_shape().unwrap(), Shape { channels: 7, spatial: [32, 32, 1] });
        let s = build_alexnet2dc([32; 3], Plane::Axial, 1, 0.25).unwrap();
        assert_eq!(s.input_shape().unwrap().channels, 32);
        let s = NetworkSpec {
            input_dims: [100; 3],
            encoding: InputEncoding::Slices { plane: Plane::Sagittal, step: 5 },
            covariates: 2,
            age_range: DEFAULT_AGE_RANGE,
            layers: vec![],
        };
        assert_eq!(s.input_shape().unwrap().channels, 20);
        assert!(build_alexnet2dc([32; 3], Plane::Coronal, 32, 0.25).is_err());
        assert!(build_alexnet2dc([32; 3], Plane::Coronal, 0, 0.25).is_err());
        let s = build_alexnet2dc([40, 32, 24], Plane::Coronal, 4, 0.25).unwrap();
        assert_eq!(s.input_shape().unwrap(), Shape { channels: 8, spatial: [40, 24, 1] });
    }

    #[test]
    fn toy_param_count_matches_formula() {
        // conv3d k=2, 3 filters on 1 channel; flatten; concat 2; dense 2
        let spec = NetworkSpec {
            input_dims: [4, 4, 4],
            encoding: InputEncoding::Volume,
            covariates: 2,
            age_range: DEFAULT_AGE_RANGE,
            layers: vec![
                LayerSpec::Conv { rank: 3, kernel: 2, stride: 2, padding: 0, filters: 3 },
                LayerSpec::Flatten,
                LayerSpec::CovariateConcat,
                LayerSpec::Dense { units: 2 },
                LayerSpec::Softmax,
            ],
        };
        let conv = 3 * (1 * 2 * 2 * 2) + 3;
        let flat = 3 * 2 * 2 * 2;
        let dense = 2 * (flat + 2) + 2;
        assert_eq!(spec.param_count().unwrap(), conv + dense);
    }

    #[test]
    fn structural_rules() {
        let base = build_alexnet3d([32; 3], 0.25).unwrap();
        let mut no_concat = base.clone();
        no_concat.layers.retain(|l| *l != LayerSpec::CovariateConcat);
        assert!(no_concat.plan().is_err());
        let mut no_softmax = base.clone();
        no_softmax.layers.pop();
        assert!(no_softmax.plan().is_err());
        let mut wrong_head = base;
        let n = wrong_head.layers.len();
        wrong_head.layers[n - 2] = LayerSpec::Dense { units: 3 };
        assert!(wrong_head.plan().is_err());
    }
}
