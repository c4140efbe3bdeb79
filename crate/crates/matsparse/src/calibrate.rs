//! Doubling search for the constant `c` in the sample-size formula: the
//! smallest ladder value for which the Monte Carlo mean error at
//! `k = ⌈c γ (1+‖A‖) ln d / ε²⌉` drops to ε across a family of dimensions.
//! The family is the cross-polytope decomposition (`γ = d`, `‖A‖ = 1`).

use serde::{Deserialize, Serialize};

use crate::constructions::cross_polytope;
use crate::decomp::required_sample_size;
use crate::error::{Error, Result};
use crate::sampling::{derive_seed, rudelson_experiment};

const LADDER_START: f64 = 0.125;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationStep {
    pub c: f64,
    pub dims: Vec<usize>,
    pub ks: Vec<usize>,
    pub means: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub c_est: f64,
    pub epsilon: f64,
    pub target_quantile: f64,
    pub replicates: usize,
    pub seed: u64,
    pub steps: Vec<CalibrationStep>,
}

/// Find the smallest `c = 0.125 · 2^j` such that at least a `target_quantile`
/// fraction of the dimensions have Monte Carlo mean error at most `ε`.
pub fn calibrate_constant(
    dims: &[usize],
    eps: f64,
    target_quantile: f64,
    replicates: usize,
    seed: u64,
    max_doublings: usize,
) -> Result<CalibrationResult> {
    if dims.len() < 2 {
        return Err(Error::InvalidParameter(
            "calibration needs at least 2 dimensions".into(),
        ));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "ε must be in (0, 1], got {eps}"
        )));
    }
    if !(0.0..=1.0).contains(&target_quantile) {
        return Err(Error::InvalidParameter(format!(
            "target quantile must be in [0, 1], got {target_quantile}"
        )));
    }
    let decs: Vec<_> = dims.iter().map(|&d| cross_polytope(d)).collect();
    let need = ((target_quantile * dims.len() as f64).ceil() as usize).max(1);

    let mut steps = Vec::new();
    let mut c = LADDER_START;
    for step in 0..=max_doublings {
        let mut ks = Vec::with_capacity(dims.len());
        let mut means = Vec::with_capacity(dims.len());
        for (i, (&d, dec)) in dims.iter().zip(decs.iter()).enumerate() {
            let k = required_sample_size(d, d as f64, 1.0, eps, c)?;
            let report = rudelson_experiment(
                dec,
                k,
                replicates,
                derive_seed(seed, (step * dims.len() + i) as u64),
            )?;
            ks.push(k);
            means.push(report.mean);
        }
        let passing = means.iter().filter(|m| **m <= eps).count();
        let passed = passing >= need;
        steps.push(CalibrationStep {
            c,
            dims: dims.to_vec(),
            ks,
            means,
            passed,
        });
        if passed {
            return Ok(CalibrationResult {
                c_est: c,
                epsilon: eps,
                target_quantile,
                replicates,
                seed,
                steps,
            });
        }
        c *= 2.0;
    }
    Err(Error::NumericalFailure(format!(
        "calibration did not converge within {max_doublings} doublings (last c = {c})"
    )))
}
