//! Randomized sampling of decomposition members and the Monte Carlo
//! experiment harness.
//!
//! Every routine takes an explicit 64-bit master seed. Replicate (or attempt)
//! `r` runs on its own ChaCha12 stream seeded with `derive_seed(master, r)`,
//! so results are independent of execution order and identical with or
//! without the `parallel` feature.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::decomp::{
    extract_guarantees, kahan_sum, lift_pairs, ContactPairs, ConvexDecomposition, ExtractedBounds,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::multiset::Multiset;
use crate::par;

/// Name of the generator recorded in every report.
pub const RNG_NAME: &str = "chacha12";

/// Stream-splitting hash (splitmix64 finalizer): stream `r` of a master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// `k` i.i.d. categorical draws from the given probability vector.
pub fn draw_multiset<R: Rng>(weights: &[f64], k: usize, rng: &mut R) -> Result<Multiset> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if weights.is_empty() {
        return Err(Error::EmptyInput("no weights".into()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidParameter("weights must be finite and >= 0".into()));
    }
    let sum = kahan_sum(weights.iter().copied());
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "weights sum to {sum}, not a probability vector"
        )));
    }
    let dist = WeightedIndex::new(weights)
        .map_err(|e| Error::InvalidParameter(format!("invalid weights: {e}")))?;
    let draws: Vec<usize> = (0..k).map(|_| dist.sample(rng)).collect();
    Multiset::from_draws(&draws)
}

/// `‖(1/|σ|) Σ_{i∈σ} Qᵢ − A‖` for a sub-multiset of the decomposition.
pub fn sample_error(dec: &ConvexDecomposition, sigma: &Multiset) -> Result<f64> {
    if sigma.max_index() >= dec.len() {
        return Err(Error::InvalidParameter(format!(
            "multiset index {} out of range for {} members",
            sigma.max_index(),
            dec.len()
        )));
    }
    let k = sigma.size() as f64;
    let mut acc = Matrix::zeros(dec.dim(), dec.dim());
    for &(idx, mult) in sigma.items() {
        acc.add_scaled(dec.matrix(idx), mult as f64 / k);
    }
    acc.add_scaled(dec.target(), -1.0);
    acc.operator_norm()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentParams {
    pub dim: usize,
    pub k: usize,
    pub epsilon: Option<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub rng: String,
}

/// Per-replicate errors of a sampling experiment plus summary statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub params: ExperimentParams,
    pub errors: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n−1 denominator; 0 for a single replicate).
    pub std: f64,
    /// Normal-approximation 95% confidence interval for the mean.
    pub ci95: [f64; 2],
}

impl ExperimentReport {
    fn from_errors(params: ExperimentParams, errors: Vec<f64>) -> Self {
        let n = errors.len() as f64;
        let mean = kahan_sum(errors.iter().copied()) / n;
        let std = if errors.len() > 1 {
            (errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let half = 1.96 * std / n.sqrt();
        Self {
            params,
            errors,
            mean,
            std,
            ci95: [mean - half, mean + half],
        }
    }

    /// CSV rows, one per replicate: `replicate,seed,error` with floats at 17
    /// significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("replicate,seed,error\n");
        for (r, e) in self.errors.iter().enumerate() {
            let seed = derive_seed(self.params.seed, r as u64);
            out.push_str(&format!("{r},{seed},{:.16e}\n", e));
        }
        out
    }
}

/// Monte Carlo estimate of the expected approximation error
/// `E‖(1/k) Σ_{i∈σ} Qᵢ − A‖` over `replicates` independent multisets of size
/// `k`, drawn from the decomposition's weights.
pub fn rudelson_experiment(
    dec: &ConvexDecomposition,
    k: usize,
    replicates: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    if replicates < 1 {
        return Err(Error::InvalidParameter("replicates must be >= 1".into()));
    }
    if k < 1 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let results = par::map_indexed(replicates, |r| {
        let mut rng = rng_from_seed(derive_seed(seed, r as u64));
        let sigma = draw_multiset(dec.weights(), k, &mut rng)?;
        sample_error(dec, &sigma)
    });
    let errors = results.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(ExperimentReport::from_errors(
        ExperimentParams {
            dim: dec.dim(),
            k,
            epsilon: None,
            replicates,
            seed,
            rng: RNG_NAME.into(),
        },
        errors,
    ))
}

/// Result of a repeated-sampling search. Failure is a value carrying the best
/// candidate found, to aid calibration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SearchOutcome {
    Found {
        sigma: Multiset,
        error: f64,
        attempts: usize,
    },
    Exhausted {
        best_sigma: Multiset,
        best_error: f64,
        attempts: usize,
    },
}

impl SearchOutcome {
    pub fn succeeded(&self) -> bool {
        matches!(self, SearchOutcome::Found { .. })
    }
}

/// Repeated i.i.d. sampling until a multiset of size `k` with
/// `sample_error ≤ ε` turns up, at most `max_attempts` times. Attempt `j`
/// uses the seed stream `derive_seed(seed, j)`.
pub fn find_good_multiset(
    dec: &ConvexDecomposition,
    k: usize,
    eps: f64,
    max_attempts: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    if max_attempts < 1 {
        return Err(Error::InvalidParameter("max_attempts must be >= 1".into()));
    }
    let mut best: Option<(Multiset, f64)> = None;
    for attempt in 0..max_attempts {
        let mut rng = rng_from_seed(derive_seed(seed, attempt as u64));
        let sigma = draw_multiset(dec.weights(), k, &mut rng)?;
        let error = sample_error(dec, &sigma)?;
        if error <= eps {
            return Ok(SearchOutcome::Found {
                sigma,
                error,
                attempts: attempt + 1,
            });
        }
        if best.as_ref().map_or(true, |(_, e)| error < *e) {
            best = Some((sigma, error));
        }
    }
    let (best_sigma, best_error) = best.expect("at least one attempt");
    Ok(SearchOutcome::Exhausted {
        best_sigma,
        best_error,
        attempts: max_attempts,
    })
}

/// Successful non-symmetric search: the multiset meets the identity bound in
/// the lifted dimension, which forces all three extracted guarantees.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum NonsymmOutcome {
    Found {
        sigma: Multiset,
        lifted_error: f64,
        bounds: ExtractedBounds,
        attempts: usize,
    },
    Exhausted {
        best_sigma: Multiset,
        best_lifted_error: f64,
        attempts: usize,
    },
}

impl NonsymmOutcome {
    pub fn succeeded(&self) -> bool {
        matches!(self, NonsymmOutcome::Found { .. })
    }
}

/// Search for a multiset of contact pairs whose diad average approximates the
/// identity *and* whose vector sums are balanced: lift the pairs to dimension
/// `d+1`, sample until the lifted identity error drops to `ε`, and read the
/// base-dimension guarantees off the successful multiset (identity error at
/// most ε, balances at most `ε/√d`).
pub fn nonsymm_find_multiset(
    cpd: &ContactPairs,
    k: usize,
    eps: f64,
    max_attempts: usize,
    seed: u64,
) -> Result<NonsymmOutcome> {
    let lifted = lift_pairs(cpd, 1e-9)?;
    let dec = lifted.to_decomposition();
    match find_good_multiset(&dec, k, eps, max_attempts, seed)? {
        SearchOutcome::Found {
            sigma,
            error,
            attempts,
        } => {
            let bounds = extract_guarantees(&lifted, &sigma)?;
            Ok(NonsymmOutcome::Found {
                sigma,
                lifted_error: error,
                bounds,
                attempts,
            })
        }
        SearchOutcome::Exhausted {
            best_sigma,
            best_error,
            attempts,
        } => Ok(NonsymmOutcome::Exhausted {
            best_sigma,
            best_lifted_error: best_error,
            attempts,
        }),
    }
}

/// Empirical ratio
/// `[E_r ‖Σ rⱼQⱼ‖_p^p]^{1/p} / (√p ‖(Σ QⱼQⱼᵀ + QⱼᵀQⱼ)^{1/2}‖_p)`
/// over `trials` Rademacher sign draws — a finite lower bound on the constant
/// in the moment inequality for random sign combinations. Requires `p ≥ 2`.
pub fn lust_piquard_diagnostic(
    matrices: &[Matrix],
    p: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::InvalidParameter(format!("p must be >= 2, got {p}")));
    }
    if matrices.is_empty() {
        return Err(Error::EmptyInput("no matrices".into()));
    }
    if trials < 1 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let dim = matrices[0].rows();
    for m in matrices {
        if !m.is_square() || m.rows() != dim {
            return Err(Error::DimensionMismatch(
                "matrices must all be square of equal size".into(),
            ));
        }
    }

    // denominator: eigenvalues of S = Σ QQᵀ + QᵀQ give the singular values
    // of S^{1/2} directly
    let mut s = Matrix::zeros(dim, dim);
    for q in matrices {
        let qt = q.transpose();
        s.add_scaled(&q.matmul(&qt)?, 1.0);
        s.add_scaled(&qt.matmul(q)?, 1.0);
    }
    let evs = crate::eigen::symmetric_eigenvalues(&s)?;
    let top = evs[0].max(0.0);
    if top == 0.0 {
        return Err(Error::InvalidParameter(
            "all matrices are zero; the ratio is 0/0".into(),
        ));
    }
    let sum: f64 = evs.iter().map(|l| (l.max(0.0) / top).powf(p / 2.0)).sum();
    let denom = p.sqrt() * top.sqrt() * sum.powf(1.0 / p);

    let moments = par::map_indexed(trials, |t| {
        let mut rng = rng_from_seed(derive_seed(seed, t as u64));
        let mut acc = Matrix::zeros(dim, dim);
        for q in matrices {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            acc.add_scaled(q, sign);
        }
        acc.schatten_norm(p).map(|n| n.powf(p))
    });
    let moments = moments.into_iter().collect::<Result<Vec<f64>>>()?;
    let numer = (kahan_sum(moments.iter().copied()) / trials as f64).powf(1.0 / p);
    Ok(numer / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{ball_in_cube_pairs, cross_polytope};
    use crate::matrix::outer;

    #[test]
    fn draw_degenerate_distribution() {
        let mut rng = rng_from_seed(1);
        let m = draw_multiset(&[1.0, 0.0, 0.0], 5, &mut rng).unwrap();
        assert_eq!(m.items(), &[(0, 5)]);
    }

    #[test]
    fn draw_uniform_support() {
        let mut rng = rng_from_seed(2);
        let m = draw_multiset(&[0.25; 4], 100, &mut rng).unwrap();
        assert_eq!(m.size(), 100);
        assert!(m.max_index() < 4);
    }

    #[test]
    fn draw_is_deterministic() {
        let mut r1 = rng_from_seed(42);
        let mut r2 = rng_from_seed(42);
        let a = draw_multiset(&[0.25; 4], 3, &mut r1).unwrap();
        let b = draw_multiset(&[0.25; 4], 3, &mut r2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn draw_rejects_bad_input() {
        let mut rng = rng_from_seed(1);
        assert!(draw_multiset(&[0.5, 0.5], 0, &mut rng).is_err());
        assert!(draw_multiset(&[0.5, 0.2], 3, &mut rng).is_err());
        assert!(draw_multiset(&[-0.5, 1.5], 3, &mut rng).is_err());
    }

    #[test]
    fn sample_error_exact_cover() {
        let dec = cross_polytope(2);
        let sigma = Multiset::from_draws(&[0, 1, 2, 3]).unwrap();
        assert!(sample_error(&dec, &sigma).unwrap() < 1e-12);
    }

    #[test]
    fn sample_error_repeated_member() {
        // (1/2)(Q₀ + Q₀) = diag(2,0), distance 1 from I
        let dec = cross_polytope(2);
        let sigma = Multiset::from_draws(&[0, 0]).unwrap();
        assert!((sample_error(&dec, &sigma).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sample_error_weight_proportional_support() {
        let dec = cross_polytope(3);
        // multiplicities proportional to the uniform weights reproduce Σ αQ
        let all: Vec<usize> = (0..dec.len()).collect();
        let sigma = Multiset::from_draws(&all).unwrap();
        assert!(sample_error(&dec, &sigma).unwrap() <= 1e-12);
    }

    #[test]
    fn sample_error_coarse_bound() {
        // PSD members with target I: error can never exceed max(γ, 1)
        let dec = cross_polytope(4);
        let bound = dec.gamma().max(1.0);
        for seed in 0..20 {
            let mut rng = rng_from_seed(seed);
            let sigma = draw_multiset(dec.weights(), 3, &mut rng).unwrap();
            assert!(sample_error(&dec, &sigma).unwrap() <= bound + 1e-9);
        }
    }

    #[test]
    fn experiment_singleton_mean_zero() {
        let q = Matrix::identity(3);
        let dec =
            crate::decomp::ConvexDecomposition::new(vec![1.0], vec![q.clone()], q, true).unwrap();
        let report = rudelson_experiment(&dec, 4, 10, 7).unwrap();
        assert!(report.mean < 1e-12);
        assert_eq!(report.errors.len(), 10);
        assert!(report.ci95[0] <= report.mean && report.mean <= report.ci95[1]);
    }

    #[test]
    fn experiment_error_decreases_with_k() {
        let dec = cross_polytope(16);
        let small = rudelson_experiment(&dec, 250, 50, 11).unwrap();
        let large = rudelson_experiment(&dec, 4000, 50, 11).unwrap();
        assert!(
            large.mean < small.mean,
            "k=4000 mean {} !< k=250 mean {}",
            large.mean,
            small.mean
        );
    }

    #[test]
    fn experiment_reports_are_byte_identical() {
        let dec = cross_polytope(8);
        let a = rudelson_experiment(&dec, 100, 20, 99).unwrap();
        let b = rudelson_experiment(&dec, 100, 20, 99).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn find_exact_singleton_first_attempt() {
        let q = Matrix::identity(2);
        let dec =
            crate::decomp::ConvexDecomposition::new(vec![1.0], vec![q.clone()], q, true).unwrap();
        match find_good_multiset(&dec, 3, 0.5, 10, 1).unwrap() {
            SearchOutcome::Found { error, attempts, .. } => {
                assert_eq!(attempts, 1);
                assert!(error < 1e-12);
            }
            other => panic!("expected success, got {other:?}"),
        }
    }

    #[test]
    fn find_cross_polytope_within_hundred_attempts() {
        let dec = cross_polytope(16);
        let k = crate::decomp::required_sample_size(16, 16.0, 1.0, 0.25, 2.0).unwrap();
        match find_good_multiset(&dec, k, 0.25, 100, 13).unwrap() {
            SearchOutcome::Found { error, attempts, .. } => {
                assert!(error <= 0.25);
                assert!(attempts <= 100);
            }
            other => panic!("expected success, got {other:?}"),
        }
    }

    #[test]
    fn find_below_certified_bound_always_fails() {
        // the exhaustive verifier proves no multiset of size ≤ ⌊size_bound⌋
        // reaches ε, so sampling at such k can never succeed
        let inst = crate::constructions::log_needed_construction(8, 1.0, 1.0 / 32.0).unwrap();
        let dec = inst.to_decomposition().unwrap();
        let k = inst.size_bound().floor() as usize;
        match find_good_multiset(&dec, k, inst.epsilon(), 50, 19).unwrap() {
            SearchOutcome::Exhausted { best_error, .. } => {
                assert!(best_error >= inst.epsilon());
            }
            SearchOutcome::Found { sigma, error, .. } => {
                panic!("found σ={sigma} with error {error}, contradicting the certified bound")
            }
        }
    }

    #[test]
    fn find_reports_best_on_failure() {
        let dec = cross_polytope(8);
        // ε = 0 is unreachable by sampling
        match find_good_multiset(&dec, 4, 0.0, 5, 3).unwrap() {
            SearchOutcome::Exhausted {
                best_error,
                attempts,
                ..
            } => {
                assert_eq!(attempts, 5);
                assert!(best_error > 0.0);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn nonsymm_ball_in_cube_succeeds() {
        let cpd = ball_in_cube_pairs(8);
        let k = crate::decomp::required_sample_size(8, 8.0, 1.0, 0.4, 2.0).unwrap();
        match nonsymm_find_multiset(&cpd, k, 0.4, 100, 5).unwrap() {
            NonsymmOutcome::Found {
                lifted_error,
                bounds,
                ..
            } => {
                assert!(lifted_error <= 0.4);
                assert!(bounds.identity_error <= lifted_error + 1e-9);
                let root_d = 8.0f64.sqrt();
                assert!(bounds.balance_u <= lifted_error / root_d + 1e-9);
                assert!(bounds.balance_v <= lifted_error / root_d + 1e-9);
            }
            other => panic!("expected success, got {other:?}"),
        }
    }

    #[test]
    fn lust_piquard_single_symmetric() {
        let q = Matrix::diagonal(&[1.0, 2.0]);
        for p in [2.0, 3.0, 4.5] {
            let ratio = lust_piquard_diagnostic(&[q.clone()], p, 7, 1).unwrap();
            let expected = 1.0 / (p.sqrt() * 2.0f64.sqrt());
            assert!(
                (ratio - expected).abs() < 1e-12,
                "p={p}: {ratio} vs {expected}"
            );
        }
    }

    #[test]
    fn lust_piquard_guards() {
        let z = Matrix::zeros(2, 2);
        assert!(lust_piquard_diagnostic(&[z], 2.0, 5, 1).is_err());
        let q = Matrix::identity(2);
        assert!(lust_piquard_diagnostic(&[q.clone()], 1.5, 5, 1).is_err());
        assert!(lust_piquard_diagnostic(&[], 2.0, 5, 1).is_err());
    }

    #[test]
    fn lust_piquard_bounded_over_dims() {
        // random diads, p = max(2, ln d): the ratio stays bounded
        for d in [4usize, 8, 16, 32] {
            let mut rng = rng_from_seed(d as u64);
            let mats: Vec<Matrix> = (0..2 * d)
                .map(|_| {
                    let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    outer(&u, &u).unwrap()
                })
                .collect();
            let p = crate::matrix::schatten_p_for_dim(d);
            let ratio = lust_piquard_diagnostic(&mats, p, 50, 7).unwrap();
            assert!(ratio > 0.0 && ratio < 2.0, "d={d}: ratio {ratio}");
        }
    }

    /// Monte Carlo check of the symmetrization bound: the expected deviation
    /// of a k-sample average from its mean is at most twice the expected norm
    /// of the Rademacher-signed sum divided by k (plus sampling noise).
    #[test]
    fn symmetrization_bound_holds() {
        for (dim, k) in [(4usize, 6usize), (8, 12)] {
            let dec = cross_polytope(dim);
            let reps = 200;
            let mut lhs = Vec::with_capacity(reps);
            let mut rhs = Vec::with_capacity(reps);
            for r in 0..reps {
                let mut rng = rng_from_seed(derive_seed(1234, r as u64));
                let dist = WeightedIndex::new(dec.weights()).unwrap();
                let draws: Vec<usize> = (0..k).map(|_| dist.sample(&mut rng)).collect();
                let mut avg = Matrix::zeros(dim, dim);
                let mut signed = Matrix::zeros(dim, dim);
                for &i in &draws {
                    avg.add_scaled(dec.matrix(i), 1.0 / k as f64);
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    signed.add_scaled(dec.matrix(i), sign);
                }
                avg.add_scaled(dec.target(), -1.0);
                lhs.push(avg.operator_norm().unwrap());
                rhs.push(2.0 / k as f64 * signed.operator_norm().unwrap());
            }
            let mean = |v: &[f64]| kahan_sum(v.iter().copied()) / v.len() as f64;
            let se = |v: &[f64]| {
                let m = mean(v);
                (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
                    / (v.len() as f64 * (v.len() as f64 - 1.0)))
                    .sqrt()
            };
            let slack = 3.0 * (se(&lhs) + se(&rhs));
            assert!(
                mean(&lhs) <= mean(&rhs) + slack,
                "dim={dim} k={k}: {} !<= {} + {slack}",
                mean(&lhs),
                mean(&rhs)
            );
        }
    }
}
