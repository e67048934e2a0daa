use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::phantom::{Label, Scan};
use crate::seed::{self, stream};
use crate::volume::Volume;

use super::network::{forward, softmax2, Mode};
use super::spec::{InputEncoding, LayerSpec, NetworkSpec, Plan};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Covariates {
    pub age: f64,
    pub sex: u8,
}

impl From<&Scan> for Covariates {
    fn from(s: &Scan) -> Self {
        Covariates { age: s.age, sex: s.sex }
    }
}

/// A network, its parameters and a softmax temperature.
#[derive(Clone, Debug)]
pub struct Classifier {
    spec: NetworkSpec,
    plan: Plan,
    params: Vec<f32>,
    temperature: f64,
}

impl PartialEq for Classifier {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.params == other.params && self.temperature == other.temperature
    }
}

impl Classifier {
    pub fn new(spec: NetworkSpec, params: Vec<f32>) -> Result<Self> {
        let plan = spec.plan()?;
        if params.len() != plan.param_count {
            return Err(Error::InvalidArgument(format!(
                "network needs {} parameters, got {}",
                plan.param_count,
                params.len()
            )));
        }
        Ok(Classifier { spec, plan, params, temperature: 1.0 })
    }

    /// He-normal weights (std `sqrt(2 / fan_in)`), zero biases.
    pub fn init(spec: NetworkSpec, seed: u64) -> Result<Self> {
        let plan = spec.plan()?;
        let mut params = vec![0.0f32; plan.param_count];
        let mut rng = seed::rng(seed, &[stream::INIT]);
        for lp in &plan.layers {
            let (n_weights, fan_in) = match lp.layer {
                LayerSpec::Conv { rank, kernel, filters, .. } => {
                    let fan_in = lp.input.channels * kernel.pow(rank as u32);
                    (filters * fan_in, fan_in)
                }
                LayerSpec::Dense { units } => (units * lp.input.len(), lp.input.len()),
                _ => continue,
            };
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            for p in &mut params[lp.param_offset..lp.param_offset + n_weights] {
                *p = normal.sample(&mut rng) as f32;
            }
        }
        Classifier::new(spec, params)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    pub fn params(&self) -> &[f32] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f32] {
        &mut self.params
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn set_temperature(&mut self, t: f64) -> Result<()> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("temperature must be positive, got {t}")));
        }
        self.temperature = t;
        Ok(())
    }

    /// Lays a volume out as the network input (channel-major, x fastest).
    pub fn encode_volume(&self, v: &Volume) -> Result<Vec<f32>> {
        if v.dims() != self.spec.input_dims {
            return Err(Error::DimensionMismatch { expected: self.spec.input_dims, actual: v.dims() });
        }
        match self.spec.encoding {
            InputEncoding::Volume => Ok(v.data().to_vec()),
            InputEncoding::Slices { plane, step } => {
                let dims = v.dims();
                let axis = plane.axis();
                let [a, b] = plane.in_plane_axes();
                let mut out = Vec::with_capacity(self.plan.input.len());
                for slice in (0..dims[axis]).step_by(step) {
                    for j in 0..dims[b] {
                        for i in 0..dims[a] {
                            let mut p = [0usize; 3];
                            p[axis] = slice;
                            p[a] = i;
                            p[b] = j;
                            out.push(v.get(p[0], p[1], p[2]));
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Age min-max scaled by the spec's range (clamped), sex as 0/1.
    pub fn encode_covariates(&self, c: Covariates) -> [f32; 2] {
        let [lo, hi] = self.spec.age_range;
        [((c.age - lo) / (hi - lo)).clamp(0.0, 1.0) as f32, c.sex as f32]
    }

    /// Raw (untempered) eval-mode logits.
    pub fn logits(&self, v: &Volume, c: Covariates) -> Result<[f64; 2]> {
        let input = self.encode_volume(v)?;
        self.logits_encoded(&input, &self.encode_covariates(c))
    }

    pub(crate) fn logits_encoded(&self, input: &[f32], cov: &[f32; 2]) -> Result<[f64; 2]> {
        let cache = forward(&self.plan, &self.params, input, cov, Mode::Eval, 0)?;
        Ok([cache.logits[0] as f64, cache.logits[1] as f64])
    }

    /// `softmax(logits / T)[AD]`.
    pub fn predict_volume(&self, v: &Volume, c: Covariates) -> Result<f64> {
        let z = self.logits(v, c)?;
        Ok(tempered_prob(z, self.temperature))
    }

    pub fn predict_proba(&self, scan: &Scan) -> Result<f64> {
        self.predict_volume(&scan.volume, scan.into())
    }

    pub fn predict_label(&self, scan: &Scan) -> Result<Label> {
        let z = self.logits(&scan.volume, scan.into())?;
        Ok(if z[1] > z[0] { Label::AD } else { Label::CN })
    }
}

/// Probability of class AD after dividing the logits by `t`.
pub fn tempered_prob(z: [f64; 2], t: f64) -> f64 {
    softmax2([z[0] / t, z[1] / t])[1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::spec::{build_alexnet2dc, build_alexnet3d, Plane};

    #[test]
    fn temperature_closed_forms() {
        let z = [0.3, 1.1];
        assert_eq!(tempered_prob(z, 1.0), softmax2(z)[1]);
        let expect = 1.0f64.exp() / (1.0 + 1.0f64.exp());
        assert!((tempered_prob([0.0, 2.0], 2.0) - expect).abs() < 1e-15);
        assert!((tempered_prob([2.0, 0.0], 2.0) - (1.0 - expect)).abs() < 1e-15);
        for t in [0.05, 0.5, 3.0, 20.0] {
            assert_eq!(tempered_prob(z, t) > 0.5, z[1] > z[0]);
        }
    }

    #[test]
    fn slice_encoding_picks_every_step() {
        let spec = build_alexnet2dc([32; 3], Plane::Sagittal, 5, 0.25).unwrap();
        let clf = Classifier::init(spec, 1).unwrap();
        let data: Vec<f32> = (0..32 * 32 * 32).map(|i| i as f32).collect();
        let v = Volume::new([32; 3], data).unwrap();
        let enc = clf.encode_volume(&v).unwrap();
        assert_eq!(enc.len(), 7 * 32 * 32);
        // channel 1 is x = 5; in-plane (y, z) with y fastest
        assert_eq!(enc[32 * 32 + 3 + 32 * 2], v.get(5, 3, 2));
        assert_eq!(enc[6 * 32 * 32], v.get(30, 0, 0));
        assert!(clf.encode_volume(&Volume::filled([16; 3], 0.0)).is_err());
    }

    #[test]
    fn zero_volume_probabilities_sum_to_one() {
        let clf = Classifier::init(build_alexnet3d([32; 3], 0.25).unwrap(), 3).unwrap();
        let z = clf.logits(&Volume::filled([32; 3], 0.0), Covariates { age: 70.0, sex: 1 }).unwrap();
        let p = softmax2(z);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-6);
        assert!(clf.clone().set_temperature(0.0).is_err());
    }
}
