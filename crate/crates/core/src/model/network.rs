//! Forward and reverse-mode passes over a resolved [`Plan`].
//!
//! Everything is generic over [`Scalar`] so the same code runs in f32 for
//! training and inference and in f64 for finite-difference checks.

use std::fmt::Debug;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive};
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::{self, stream};

use super::spec::{LayerPlan, LayerSpec, Plan};

pub trait Scalar: Float + FromPrimitive + AddAssign + Send + Sync + Debug + Default + 'static {}
impl Scalar for f32 {}
impl Scalar for f64 {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Debug)]
enum Aux<F> {
    None,
    Argmax(Vec<u32>),
    Mask(Vec<F>),
}

/// Activations saved by [`forward`] for [`backward`].
#[derive(Clone, Debug)]
pub struct Cache<F> {
    inputs: Vec<Vec<F>>,
    aux: Vec<Aux<F>>,
    pub logits: [F; 2],
}

/// Kernel geometry of a convolution or pooling layer, expanded to three axes.
#[derive(Clone, Copy)]
struct Window {
    kernel: [usize; 3],
    stride: [usize; 3],
    padding: [usize; 3],
}

impl Window {
    fn new(rank: u8, kernel: usize, stride: usize, padding: usize) -> Self {
        let k3 = |v: usize, flat: usize| if rank == 3 { [v; 3] } else { [v, v, flat] };
        Window { kernel: k3(kernel, 1), stride: k3(stride, 1), padding: k3(padding, 0) }
    }
}

#[inline]
fn sp_index(s: [usize; 3], x: usize, y: usize, z: usize) -> usize {
    x + s[0] * (y + s[1] * z)
}

/// Transposed im2col: row `t` (over `[channel][dz][dy][dx]`) holds the input
/// value feeding tap `t` at every output voxel, zero where the window overhangs.
fn im2col<F: Scalar>(lp: &LayerPlan, w: Window, x: &[F]) -> Vec<F> {
    let (si, so) = (lp.input.spatial, lp.output.spatial);
    let (vi, vo) = (lp.input.voxels(), lp.output.voxels());
    let taps = w.kernel.iter().product::<usize>();
    let mut cols = vec![F::zero(); lp.input.channels * taps * vo];
    let mut rows = cols.chunks_exact_mut(vo);
    for c in 0..lp.input.channels {
        let xin = &x[c * vi..(c + 1) * vi];
        for dz in 0..w.kernel[2] {
            for dy in 0..w.kernel[1] {
                for dx in 0..w.kernel[0] {
                    let row = rows.next().expect("one row per tap");
                    for oz in 0..so[2] {
                        let Some(iz) = (oz * w.stride[2] + dz).checked_sub(w.padding[2]).filter(|&v| v < si[2]) else {
                            continue;
                        };
                        for oy in 0..so[1] {
                            let Some(iy) = (oy * w.stride[1] + dy).checked_sub(w.padding[1]).filter(|&v| v < si[1]) else {
                                continue;
                            };
                            let irow = &xin[sp_index(si, 0, iy, iz)..sp_index(si, 0, iy, iz) + si[0]];
                            let orow = &mut row[sp_index(so, 0, oy, oz)..sp_index(so, 0, oy, oz) + so[0]];
                            for (ox, o) in orow.iter_mut().enumerate() {
                                if let Some(ix) = (ox * w.stride[0] + dx).checked_sub(w.padding[0]).filter(|&v| v < si[0]) {
                                    *o = irow[ix];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Inverse of [`im2col`]: accumulates every row back into the input layout.
fn col2im<F: Scalar>(lp: &LayerPlan, w: Window, cols: &[F]) -> Vec<F> {
    let (si, so) = (lp.input.spatial, lp.output.spatial);
    let (vi, vo) = (lp.input.voxels(), lp.output.voxels());
    let mut gx = vec![F::zero(); lp.input.channels * vi];
    let mut rows = cols.chunks_exact(vo);
    for c in 0..lp.input.channels {
        let gin = &mut gx[c * vi..(c + 1) * vi];
        for dz in 0..w.kernel[2] {
            for dy in 0..w.kernel[1] {
                for dx in 0..w.kernel[0] {
                    let row = rows.next().expect("one row per tap");
                    for oz in 0..so[2] {
                        let Some(iz) = (oz * w.stride[2] + dz).checked_sub(w.padding[2]).filter(|&v| v < si[2]) else {
                            continue;
                        };
                        for oy in 0..so[1] {
                            let Some(iy) = (oy * w.stride[1] + dy).checked_sub(w.padding[1]).filter(|&v| v < si[1]) else {
                                continue;
                            };
                            let base = sp_index(si, 0, iy, iz);
                            let orow = &row[sp_index(so, 0, oy, oz)..sp_index(so, 0, oy, oz) + so[0]];
                            for (ox, &g) in orow.iter().enumerate() {
                                if let Some(ix) = (ox * w.stride[0] + dx).checked_sub(w.padding[0]).filter(|&v| v < si[0]) {
                                    gin[base + ix] += g;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    gx
}

/// Dot product with eight independent accumulators.
#[inline]
fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    let mut acc = [F::zero(); 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += *x * *y;
    }
    s
}

#[inline]
fn axpy<F: Scalar>(alpha: F, x: &[F], y: &mut [F]) {
    for (yv, xv) in y.iter_mut().zip(x) {
        *yv += alpha * *xv;
    }
}

fn conv_forward<F: Scalar>(lp: &LayerPlan, w: Window, params: &[F], x: &[F]) -> Vec<F> {
    let oc_n = lp.output.channels;
    let vo = lp.output.voxels();
    let fan_in = lp.input.channels * w.kernel.iter().product::<usize>();
    let (weights, bias) = params.split_at(oc_n * fan_in);
    let cols = im2col(lp, w, x);
    let mut out = vec![F::zero(); oc_n * vo];
    for (oc, o) in out.chunks_exact_mut(vo).enumerate() {
        o.fill(bias[oc]);
        for (t, row) in cols.chunks_exact(vo).enumerate() {
            axpy(weights[oc * fan_in + t], row, o);
        }
    }
    out
}

fn conv_backward<F: Scalar>(lp: &LayerPlan, w: Window, params: &[F], x: &[F], g: &[F], gp: &mut [F]) -> Vec<F> {
    let oc_n = lp.output.channels;
    let vo = lp.output.voxels();
    let fan_in = lp.input.channels * w.kernel.iter().product::<usize>();
    let nw = oc_n * fan_in;
    let cols = im2col(lp, w, x);
    let mut gcols = vec![F::zero(); fan_in * vo];
    for (oc, go) in g.chunks_exact(vo).enumerate() {
        let mut bsum = F::zero();
        for &v in go {
            bsum += v;
        }
        gp[nw + oc] += bsum;
        for (t, (row, grow)) in cols.chunks_exact(vo).zip(gcols.chunks_exact_mut(vo)).enumerate() {
            gp[oc * fan_in + t] += dot(go, row);
            axpy(params[oc * fan_in + t], go, grow);
        }
    }
    col2im(lp, w, &gcols)
}

fn pool_forward<F: Scalar>(lp: &LayerPlan, w: Window, x: &[F]) -> (Vec<F>, Vec<u32>) {
    let (si, so) = (lp.input.spatial, lp.output.spatial);
    let (vi, vo) = (lp.input.voxels(), lp.output.voxels());
    let mut out = Vec::with_capacity(lp.output.len());
    let mut arg = Vec::with_capacity(lp.output.len());
    for c in 0..lp.input.channels {
        let xin = &x[c * vi..(c + 1) * vi];
        for oz in 0..so[2] {
            for oy in 0..so[1] {
                for ox in 0..so[0] {
                    let mut best = F::neg_infinity();
                    let mut best_i = 0;
                    for dz in 0..w.kernel[2] {
                        for dy in 0..w.kernel[1] {
                            for dx in 0..w.kernel[0] {
                                let i = sp_index(
                                    si,
                                    ox * w.stride[0] + dx,
                                    oy * w.stride[1] + dy,
                                    oz * w.stride[2] + dz,
                                );
                                if xin[i] > best {
                                    best = xin[i];
                                    best_i = i;
                                }
                            }
                        }
                    }
                    out.push(best);
                    arg.push((c * vi + best_i) as u32);
                }
            }
        }
    }
    debug_assert_eq!(out.len(), lp.output.channels * vo);
    (out, arg)
}

fn dense_forward<F: Scalar>(lp: &LayerPlan, params: &[F], x: &[F]) -> Vec<F> {
    let (n_in, n_out) = (lp.input.len(), lp.output.len());
    let (weights, bias) = params.split_at(n_in * n_out);
    (0..n_out)
        .map(|j| {
            let row = &weights[j * n_in..(j + 1) * n_in];
            let mut acc = bias[j];
            for (wv, xv) in row.iter().zip(x) {
                acc += *wv * *xv;
            }
            acc
        })
        .collect()
}

fn dense_backward<F: Scalar>(lp: &LayerPlan, params: &[F], x: &[F], g: &[F], gp: &mut [F]) -> Vec<F> {
    let (n_in, n_out) = (lp.input.len(), lp.output.len());
    let mut gx = vec![F::zero(); n_in];
    for j in 0..n_out {
        let gj = g[j];
        let row = &params[j * n_in..(j + 1) * n_in];
        let grow = &mut gp[j * n_in..(j + 1) * n_in];
        for i in 0..n_in {
            grow[i] += gj * x[i];
            gx[i] += row[i] * gj;
        }
        gp[n_in * n_out + j] += gj;
    }
    gx
}

fn dropout_mask<F: Scalar>(len: usize, rate: f64, dropout_seed: u64, layer: usize) -> Vec<F> {
    let keep = 1.0 - rate;
    let scale = F::from_f64(1.0 / keep).unwrap();
    let mut rng = seed::rng(dropout_seed, &[stream::DROPOUT, layer as u64]);
    (0..len).map(|_| if rng.random::<f64>() < keep { scale } else { F::zero() }).collect()
}

/// Runs the network up to the logits. `params` must have `plan.param_count`
/// entries, `input` `plan.input.len()` and `covariates` the spec's count.
/// Dropout is applied only in [`Mode::Train`], with masks derived from
/// `dropout_seed` and the layer index.
pub fn forward<F: Scalar>(
    plan: &Plan,
    params: &[F],
    input: &[F],
    covariates: &[F],
    mode: Mode,
    dropout_seed: u64,
) -> Result<Cache<F>> {
    if params.len() != plan.param_count {
        return Err(Error::InvalidArgument(format!(
            "expected {} parameters, got {}",
            plan.param_count,
            params.len()
        )));
    }
    if input.len() != plan.input.len() {
        return Err(Error::InvalidArgument(format!(
            "input has {} values, network expects {}",
            input.len(),
            plan.input.len()
        )));
    }
    let mut inputs = Vec::with_capacity(plan.layers.len());
    let mut aux = Vec::with_capacity(plan.layers.len());
    let mut act = input.to_vec();
    for (index, lp) in plan.layers.iter().enumerate() {
        let p = &params[lp.param_offset..lp.param_offset + lp.param_len];
        let (next, a) = match lp.layer {
            LayerSpec::Conv { rank, kernel, stride, padding, .. } => {
                (conv_forward(lp, Window::new(rank, kernel, stride, padding), p, &act), Aux::None)
            }
            LayerSpec::MaxPool { rank, size } => {
                let (o, arg) = pool_forward(lp, Window::new(rank, size, size, 0), &act);
                (o, Aux::Argmax(arg))
            }
            LayerSpec::Relu => (act.iter().map(|&v| v.max(F::zero())).collect(), Aux::None),
            LayerSpec::Dropout { rate } => match mode {
                Mode::Train if rate > 0.0 => {
                    let mask = dropout_mask::<F>(act.len(), rate, dropout_seed, index);
                    (act.iter().zip(&mask).map(|(&v, &m)| v * m).collect(), Aux::Mask(mask))
                }
                _ => (act.clone(), Aux::None),
            },
            LayerSpec::Flatten | LayerSpec::Softmax => (act.clone(), Aux::None),
            LayerSpec::CovariateConcat => {
                if covariates.len() != lp.output.len() - lp.input.len() {
                    return Err(Error::InvalidArgument(format!(
                        "expected {} covariates, got {}",
                        lp.output.len() - lp.input.len(),
                        covariates.len()
                    )));
                }
                let mut v = act.clone();
                v.extend_from_slice(covariates);
                (v, Aux::None)
            }
            LayerSpec::Dense { .. } => (dense_forward(lp, p, &act), Aux::None),
        };
        inputs.push(std::mem::replace(&mut act, next));
        aux.push(a);
    }
    Ok(Cache { inputs, aux, logits: [act[0], act[1]] })
}

pub fn softmax2<F: Scalar>(z: [F; 2]) -> [F; 2] {
    let m = z[0].max(z[1]);
    let e0 = (z[0] - m).exp();
    let e1 = (z[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

/// Cross-entropy of the logits against class `label`.
pub fn cross_entropy<F: Scalar>(z: [F; 2], label: usize) -> F {
    let m = z[0].max(z[1]);
    let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
    lse - z[label]
}

/// Gradient of the cross-entropy with respect to every parameter, added into `grad`.
pub fn backward<F: Scalar>(plan: &Plan, params: &[F], cache: &Cache<F>, label: usize, grad: &mut [F]) -> Result<()> {
    if cache.inputs.len() != plan.layers.len() || grad.len() != plan.param_count || label > 1 {
        return Err(Error::InvalidArgument("cache, gradient buffer or label does not match the network".into()));
    }
    let p = softmax2(cache.logits);
    let mut g: Vec<F> = vec![p[0], p[1]];
    g[label] = g[label] - F::one();
    for (index, lp) in plan.layers.iter().enumerate().rev() {
        let x = &cache.inputs[index];
        let range = lp.param_offset..lp.param_offset + lp.param_len;
        g = match lp.layer {
            LayerSpec::Softmax | LayerSpec::Flatten => g,
            LayerSpec::Dense { .. } => dense_backward(lp, &params[range.clone()], x, &g, &mut grad[range]),
            LayerSpec::Conv { rank, kernel, stride, padding, .. } => conv_backward(
                lp,
                Window::new(rank, kernel, stride, padding),
                &params[range.clone()],
                x,
                &g,
                &mut grad[range],
            ),
            LayerSpec::Relu => x.iter().zip(&g).map(|(&xv, &gv)| if xv > F::zero() { gv } else { F::zero() }).collect(),
            LayerSpec::Dropout { .. } => match &cache.aux[index] {
                Aux::Mask(m) => g.iter().zip(m).map(|(&gv, &mv)| gv * mv).collect(),
                _ => g,
            },
            LayerSpec::CovariateConcat => {
                g.truncate(lp.input.len());
                g
            }
            LayerSpec::MaxPool { .. } => {
                let Aux::Argmax(arg) = &cache.aux[index] else {
                    return Err(Error::InvalidArgument("pooling cache missing".into()));
                };
                let mut gx = vec![F::zero(); lp.input.len()];
                for (&i, &gv) in arg.iter().zip(&g) {
                    gx[i as usize] += gv;
                }
                gx
            }
        };
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::spec::{InputEncoding, NetworkSpec, Plane, DEFAULT_AGE_RANGE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn spec(input_dims: [usize; 3], encoding: InputEncoding, layers: Vec<LayerSpec>) -> NetworkSpec {
        NetworkSpec { input_dims, encoding, covariates: 2, age_range: DEFAULT_AGE_RANGE, layers }
    }

    fn head() -> Vec<LayerSpec> {
        vec![LayerSpec::Flatten, LayerSpec::CovariateConcat, LayerSpec::Dense { units: 2 }, LayerSpec::Softmax]
    }

    fn random(n: usize, seed: u64, scale: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect()
    }

    #[test]
    fn padded_strided_conv_matches_naive_loops() {
        for (rank, dims, k, st, pad) in [(3u8, [7, 6, 5], 3, 2, 1), (3, [5, 5, 5], 2, 1, 0), (2, [6, 7, 4], 3, 1, 2)] {
            let mut layers = vec![LayerSpec::Conv { rank, kernel: k, stride: st, padding: pad, filters: 3 }];
            layers.extend(head());
            let enc = if rank == 3 { InputEncoding::Volume } else { InputEncoding::Slices { plane: Plane::Axial, step: 2 } };
            let plan = spec(dims, enc, layers).plan().unwrap();
            let lp = &plan.layers[0];
            let w = Window::new(rank, k, st, pad);
            let params = random(plan.param_count, 3, 1.0);
            let x = random(lp.input.len(), 4, 1.0);
            let got = conv_forward(lp, w, &params, &x);
            let (si, so) = (lp.input.spatial, lp.output.spatial);
            let ic_n = lp.input.channels;
            let taps = w.kernel.iter().product::<usize>();
            let bias = &params[3 * ic_n * taps..];
            for oc in 0..3 {
                for oz in 0..so[2] {
                    for oy in 0..so[1] {
                        for ox in 0..so[0] {
                            let mut acc = bias[oc];
                            for ic in 0..ic_n {
                                for dz in 0..w.kernel[2] {
                                    for dy in 0..w.kernel[1] {
                                        for dx in 0..w.kernel[0] {
                                            let i = [ox * w.stride[0] + dx, oy * w.stride[1] + dy, oz * w.stride[2] + dz];
                                            let i: Vec<isize> = (0..3).map(|a| i[a] as isize - w.padding[a] as isize).collect();
                                            if (0..3).any(|a| i[a] < 0 || i[a] as usize >= si[a]) {
                                                continue;
                                            }
                                            let t = dx + w.kernel[0] * (dy + w.kernel[1] * dz);
                                            let wv = params[(oc * ic_n + ic) * taps + t];
                                            acc += wv * x[ic * lp.input.voxels() + sp_index(si, i[0] as usize, i[1] as usize, i[2] as usize)];
                                        }
                                    }
                                }
                            }
                            let v = got[oc * lp.output.voxels() + sp_index(so, ox, oy, oz)];
                            assert!((v - acc).abs() < 1e-12, "rank {rank}: {v} vs {acc}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn single_filter_conv_matches_hand_unrolled_dot() {
        let mut layers = vec![LayerSpec::Conv { rank: 3, kernel: 3, stride: 1, padding: 0, filters: 1 }];
        layers.extend(head());
        let plan = spec([3, 3, 3], InputEncoding::Volume, layers).plan().unwrap();
        let mut params = random(plan.param_count, 1, 1.0);
        let x = random(27, 2, 1.0);
        // conv weights 27, bias 1, then dense 2x3 + 2; make dense read the conv output directly
        let (w, b) = (params[..27].to_vec(), params[27]);
        let dense = &mut params[28..];
        dense[..6].copy_from_slice(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        dense[6..8].copy_from_slice(&[0.0, 0.0]);
        let cache = forward(&plan, &params, &x, &[0.0, 0.0], Mode::Eval, 0).unwrap();
        let mut dot = b;
        for z in 0..3 {
            for y in 0..3 {
                for xx in 0..3 {
                    let i = xx + 3 * (y + 3 * z);
                    dot += w[i] * x[i];
                }
            }
        }
        assert!((cache.logits[0] - dot).abs() < 1e-12);
        assert_eq!(cache.logits[1], 0.0);
    }

    #[test]
    fn zero_network_gives_even_odds() {
        let plan = crate::model::spec::build_alexnet3d([32; 3], 0.25).unwrap().plan().unwrap();
        let params = vec![0.0f32; plan.param_count];
        let x = random(plan.input.len(), 3, 1.0).iter().map(|&v| v as f32).collect::<Vec<_>>();
        let cache = forward(&plan, &params, &x, &[0.3, 1.0], Mode::Eval, 0).unwrap();
        assert_eq!(cache.logits, [0.0, 0.0]);
        assert_eq!(softmax2(cache.logits), [0.5, 0.5]);
    }

    #[test]
    fn softmax_ce_gradient_closed_form() {
        let plan = spec([1, 1, 1], InputEncoding::Volume, head()).plan().unwrap();
        let params = random(plan.param_count, 4, 1.0);
        let cache = forward(&plan, &params, &[0.7], &[0.2, 1.0], Mode::Train, 0).unwrap();
        let mut grad = vec![0.0; plan.param_count];
        backward(&plan, &params, &cache, 1, &mut grad).unwrap();
        let p = softmax2(cache.logits);
        // bias gradients of the final dense layer
        assert!((grad[6] - p[0]).abs() < 1e-12);
        assert!((grad[7] - (p[1] - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_input_zero_params_gradients() {
        let mut layers = vec![LayerSpec::Conv { rank: 3, kernel: 2, stride: 1, padding: 0, filters: 2 }, LayerSpec::Relu];
        layers.extend(vec![LayerSpec::Flatten, LayerSpec::CovariateConcat, LayerSpec::Dense { units: 3 }, LayerSpec::Relu, LayerSpec::Dense { units: 2 }, LayerSpec::Softmax]);
        let plan = spec([3, 3, 3], InputEncoding::Volume, layers).plan().unwrap();
        let params = vec![0.0; plan.param_count];
        let cache = forward(&plan, &params, &vec![0.0; 27], &[0.0, 0.0], Mode::Train, 0).unwrap();
        let mut grad = vec![0.0; plan.param_count];
        backward(&plan, &params, &cache, 0, &mut grad).unwrap();
        let last = plan.layers.iter().rev().find(|l| l.param_len > 0).unwrap();
        let n_w = last.input.len() * 2;
        for (i, g) in grad.iter().enumerate() {
            let is_final_bias = i >= last.param_offset + n_w;
            if is_final_bias {
                let k = i - last.param_offset - n_w;
                let expect = if k == 0 { 0.5 - 1.0 } else { 0.5 };
                assert!((g - expect).abs() < 1e-15);
            } else {
                assert_eq!(*g, 0.0, "parameter {i}");
            }
        }
    }

    #[test]
    fn eval_forward_is_deterministic_and_train_uses_seed() {
        let mut layers = vec![LayerSpec::Flatten, LayerSpec::CovariateConcat, LayerSpec::Dense { units: 16 }, LayerSpec::Dropout { rate: 0.5 }];
        layers.extend(vec![LayerSpec::Dense { units: 2 }, LayerSpec::Softmax]);
        let plan = spec([2, 2, 2], InputEncoding::Volume, layers).plan().unwrap();
        let params = random(plan.param_count, 5, 1.0);
        let x = random(8, 6, 1.0);
        let a = forward(&plan, &params, &x, &[0.1, 0.0], Mode::Eval, 1).unwrap().logits;
        let b = forward(&plan, &params, &x, &[0.1, 0.0], Mode::Eval, 2).unwrap().logits;
        assert_eq!(a, b);
        let t1 = forward(&plan, &params, &x, &[0.1, 0.0], Mode::Train, 1).unwrap().logits;
        let t1b = forward(&plan, &params, &x, &[0.1, 0.0], Mode::Train, 1).unwrap().logits;
        let t2 = forward(&plan, &params, &x, &[0.1, 0.0], Mode::Train, 2).unwrap().logits;
        assert_eq!(t1, t1b);
        assert_ne!(t1, t2);
        assert!(forward(&plan, &params, &x[..7], &[0.1, 0.0], Mode::Eval, 0).is_err());
        assert!(forward(&plan, &params, &x, &[0.1], Mode::Eval, 0).is_err());
    }
}
