//! Temperature scaling.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::phantom::Scan;

use super::classifier::{Classifier, Covariates};
use super::network::cross_entropy;

pub const TEMPERATURE_RANGE: (f64, f64) = (0.05, 20.0);
pub const TEMPERATURE_TOLERANCE: f64 = 1e-4;

/// Mean cross-entropy of `logits / t`.
pub fn tempered_nll(logits: &[[f64; 2]], labels: &[usize], t: f64) -> f64 {
    let total: f64 = logits.iter().zip(labels).map(|(z, &y)| cross_entropy([z[0] / t, z[1] / t], y)).sum();
    total / logits.len() as f64
}

/// Golden-section minimization of `f` over `[a, b]` down to a bracket of width `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Temperature minimizing validation NLL over [`TEMPERATURE_RANGE`].
///
/// The golden-section result is compared against `T = 1` and the better of
/// the two is returned, so calibration never increases the NLL.
pub fn fit_temperature(logits: &[[f64; 2]], labels: &[usize]) -> Result<f64> {
    if logits.len() != labels.len() || logits.is_empty() {
        return Err(Error::InvalidArgument("need matching non-empty logits and labels".into()));
    }
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::InsufficientData("temperature calibration needs both classes".into()));
    }
    let nll = |t: f64| tempered_nll(logits, labels, t);
    let (lo, hi) = TEMPERATURE_RANGE;
    let t = golden_section(nll, lo, hi, TEMPERATURE_TOLERANCE);
    Ok(if nll(t) <= nll(1.0) { t } else { 1.0 })
}

/// Fits and installs the temperature of `model` on `validation`. Other parameters are untouched.
pub fn calibrate_temperature(model: &mut Classifier, validation: &[Scan]) -> Result<f64> {
    let logits: Vec<[f64; 2]> = validation
        .par_iter()
        .map(|s| model.logits(&s.volume, Covariates::from(s)))
        .collect::<Result<_>>()?;
    let labels: Vec<usize> = validation.iter().map(|s| s.label.class_index()).collect();
    let t = fit_temperature(&logits, &labels)?;
    model.set_temperature(t)?;
    Ok(t)
}
