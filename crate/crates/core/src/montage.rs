//! Slice montages written as binary PPM.
//!
//! Layout: `N` slices normal to the plane at indices `floor((2i + 1) n / (2N))`,
//! tiled row-major in `cols = min(N, 5)` columns and `ceil(N / cols)` rows.
//! Each tile is `dims[u]` pixels wide and `dims[v]` high, where `[u, v]` are the
//! plane's in-plane axes; pixel `(col, row)` of a tile shows voxel `u = col`,
//! `v = row`. Unused tiles are black.
//!
//! Pixel colour: gray `g = round(255 * clamp(intensity, 0, 1))`. With an
//! overlay, `a = 0.6 * |d| / max|d|` over the whole volume; positive deltas
//! blend toward red `(255, 0, 0)`, negative toward blue `(0, 0, 255)` as
//! `round(g * (1 - a) + c * a)`. A zero delta leaves the gray pixel unchanged.
//!
//! File: `P6\n{width} {height}\n255\n` followed by RGB bytes, rows top to bottom.

use std::path::Path;

use crate::error::{Error, Result};
use crate::format;
use crate::model::Plane;
use crate::volume::Volume;

pub const MAX_COLUMNS: usize = 5;
pub const OVERLAY_OPACITY: f64 = 0.6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// RGB triples, row-major.
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        format::write_file(path, &self.to_ppm())
    }
}

pub fn slice_indices(n: usize, count: usize) -> Vec<usize> {
    (0..count).map(|i| (2 * i + 1) * n / (2 * count)).collect()
}

pub fn layout(count: usize) -> (usize, usize) {
    let cols = count.min(MAX_COLUMNS).max(1);
    (cols, count.div_ceil(cols))
}

fn blend(g: f64, c: f64, a: f64) -> u8 {
    (g * (1.0 - a) + c * a).round() as u8
}

/// Renders `count` slices of `volume`, optionally overlaid with a signed `delta` volume.
pub fn render(volume: &Volume, delta: Option<&Volume>, plane: Plane, count: usize) -> Result<Image> {
    let dims = volume.dims();
    if let Some(d) = delta {
        if d.dims() != dims {
            return Err(Error::DimensionMismatch { expected: dims, actual: d.dims() });
        }
    }
    let axis = plane.axis();
    if count == 0 || count > dims[axis] {
        return Err(Error::InvalidArgument(format!(
            "{count} slices requested along an axis of {}",
            dims[axis]
        )));
    }
    let [u, v] = plane.in_plane_axes();
    let (tw, th) = (dims[u], dims[v]);
    let (cols, rows) = layout(count);
    let width = tw * cols;
    let height = th * rows;
    let scale = delta.map_or(0.0, |d| d.data().iter().fold(0.0f64, |m, &x| m.max((x as f64).abs())));
    let mut pixels = vec![0u8; 3 * width * height];
    for (tile, s) in slice_indices(dims[axis], count).into_iter().enumerate() {
        let (tx, ty) = (tile % cols, tile / cols);
        for row in 0..th {
            for col in 0..tw {
                let mut p = [0usize; 3];
                p[axis] = s;
                p[u] = col;
                p[v] = row;
                let idx = volume.index(p[0], p[1], p[2]);
                let g = (255.0 * (volume.data()[idx] as f64).clamp(0.0, 1.0)).round();
                let d = delta.map_or(0.0, |dv| dv.data()[idx] as f64);
                let rgb = if scale > 0.0 && d != 0.0 {
                    let a = OVERLAY_OPACITY * d.abs() / scale;
                    if d > 0.0 {
                        [blend(g, 255.0, a), blend(g, 0.0, a), blend(g, 0.0, a)]
                    } else {
                        [blend(g, 0.0, a), blend(g, 0.0, a), blend(g, 255.0, a)]
                    }
                } else {
                    [g as u8; 3]
                };
                let o = 3 * ((ty * th + row) * width + tx * tw + col);
                pixels[o..o + 3].copy_from_slice(&rgb);
            }
        }
    }
    Ok(Image { width, height, pixels })
}
