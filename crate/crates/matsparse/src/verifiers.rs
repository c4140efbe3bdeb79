//! Desk-scale certification of the lower bounds: the ℓ₁ center gap, the
//! minimum sampling error over all bounded-size multisets of a
//! [`LogNeededInstance`], and support-size certificates for the cube/simplex
//! configuration.

use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::constructions::{CubeSimplexInstance, LogNeededInstance};
use crate::eigen::top_singular_triple;
use crate::error::{Error, Result};
use crate::matrix::{dot, l2_norm, Matrix};
use crate::multiset::{count_multisets, enumerate_multisets, Multiset};
use crate::par;
use crate::sampling::{derive_seed, rng_from_seed};
use rand::Rng;

/// Exhaustive enumeration is used when the number of candidate multisets does
/// not exceed this.
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

/// ℓ₁ distance between the average `(1/s) Σ_{i∈σ₀} eᵢ/2` and the center
/// `a = (1/(12k))(1,…,1)` in ℓ₁ᵗ. Index `t` (0-based) stands for the zero
/// vector. Defined for `1 ≤ |σ₀| ≤ 3k`; always at least `t/(12k)`.
pub fn l1_center_gap(t: usize, k: usize, sigma0: &Multiset) -> Result<f64> {
    l1_center_gap_exact(t, k, sigma0).map(|r| r.to_f64().expect("small rational"))
}

/// Exact-rational variant of [`l1_center_gap`]; the certification tests use
/// this so that boundary cases compare exactly.
pub fn l1_center_gap_exact(t: usize, k: usize, sigma0: &Multiset) -> Result<Rational64> {
    if t < 1 || k < 1 {
        return Err(Error::InvalidParameter(format!("need t ≥ 1 and k ≥ 1, got t={t}, k={k}")));
    }
    let s = sigma0.size();
    if s == 0 || s > 3 * k {
        return Err(Error::InvalidParameter(format!(
            "|σ₀| = {s} outside 1..={}",
            3 * k
        )));
    }
    if sigma0.max_index() > t {
        return Err(Error::InvalidParameter(format!(
            "index {} out of range 0..={t}",
            sigma0.max_index()
        )));
    }
    let mut mult = vec![0i64; t];
    for &(idx, m) in sigma0.items() {
        if idx < t {
            mult[idx] = m as i64;
        }
    }
    let (s, k) = (s as i64, k as i64);
    // coordinate i of the average is mᵢ/(2s); the gap is Σ |mᵢ/(2s) − 1/(12k)|
    let gap = mult
        .iter()
        .map(|&m| Rational64::new(6 * k * m - s, 12 * k * s).abs())
        .fold(Rational64::zero(), |a, b| a + b);
    Ok(gap)
}

/// How [`min_error_over_multisets`] is allowed to search.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SearchMode {
    /// Exhaustive when the candidate count is at most [`EXHAUSTIVE_LIMIT`],
    /// otherwise random sampling plus greedy descent.
    Auto { random_samples: usize, seed: u64 },
    Exhaustive,
    Random { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SizeResult {
    pub size: usize,
    pub min_error: f64,
    pub witness: Multiset,
}

/// Result of a lower-bound search over bounded-size multisets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerBoundReport {
    /// `"exhaustive"` or `"random+greedy"`.
    pub mode: String,
    /// The ε the minimum is compared against.
    pub threshold: f64,
    /// Largest multiset size examined, `⌊γt/(96ε)⌋`.
    pub size_bound: usize,
    /// Best candidate per examined size.
    pub sizes: Vec<SizeResult>,
    pub min_error: f64,
    pub witness: Multiset,
    /// True only for exhaustive searches: the minimum is proven, not sampled.
    pub certified: bool,
    /// `min_error >= threshold`.
    pub meets_threshold: bool,
}

impl LowerBoundReport {
    /// CSV rows, one per examined size: `size,min_error,witness`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,min_error,witness\n");
        for s in &self.sizes {
            out.push_str(&format!("{},{:.16e},{}\n", s.size, s.min_error, s.witness));
        }
        out
    }
}

/// Sampling error of a multiset against the full identity, using the
/// diagonal structure of the instance: the operator norm of a diagonal
/// matrix is the largest absolute diagonal entry.
pub fn diagonal_sample_error(diags: &[Vec<f64>], dim: usize, sigma: &Multiset) -> f64 {
    let k = sigma.size() as f64;
    let mut avg = vec![0.0; dim];
    for &(idx, mult) in sigma.items() {
        for (a, d) in avg.iter_mut().zip(diags[idx].iter()) {
            *a += mult as f64 * d;
        }
    }
    avg.iter().map(|a| (a / k - 1.0).abs()).fold(0.0, f64::max)
}

/// Minimum of the sampling error over all multisets of members with size
/// between 1 and `⌊size_bound⌋`, measured against the identity. Exhaustive
/// search certifies the minimum; the random fallback reports the best it saw.
pub fn min_error_over_multisets(inst: &LogNeededInstance, mode: SearchMode) -> LowerBoundReport {
    let n = inst.member_count();
    let bound = inst.size_bound().floor() as usize;
    let bound = bound.max(1);
    let diags: Vec<Vec<f64>> = (0..n).map(|i| inst.diag(i)).collect();
    let dim = inst.dim();

    let exhaustive = match mode {
        SearchMode::Exhaustive => true,
        SearchMode::Random { .. } => false,
        SearchMode::Auto { .. } => count_multisets(n, bound) <= EXHAUSTIVE_LIMIT,
    };

    let mut sizes: Vec<SizeResult> = Vec::new();
    if exhaustive {
        for s in 1..=bound {
            let mut best: Option<(f64, Multiset)> = None;
            for sigma in enumerate_multisets(n, s) {
                let err = diagonal_sample_error(&diags, dim, &sigma);
                if best.as_ref().map_or(true, |(e, _)| err < *e) {
                    best = Some((err, sigma));
                }
            }
            let (min_error, witness) = best.expect("at least one multiset per size");
            sizes.push(SizeResult {
                size: s,
                min_error,
                witness,
            });
        }
    } else {
        let (samples, seed) = match mode {
            SearchMode::Random { samples, seed } | SearchMode::Auto { random_samples: samples, seed } => {
                (samples, seed)
            }
            SearchMode::Exhaustive => unreachable!(),
        };
        let candidates = par::map_indexed(samples.max(1), |i| {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            let s = rng.gen_range(1..=bound);
            let draws: Vec<usize> = (0..s).map(|_| rng.gen_range(0..n)).collect();
            let sigma = Multiset::from_draws(&draws).expect("s >= 1");
            (diagonal_sample_error(&diags, dim, &sigma), sigma)
        });
        let mut per_size: Vec<Option<(f64, Multiset)>> = vec![None; bound + 1];
        for (err, sigma) in candidates {
            let slot = &mut per_size[sigma.size()];
            if slot.as_ref().map_or(true, |(e, _)| err < *e) {
                *slot = Some((err, sigma));
            }
        }
        // greedy one-swap descent from the best sampled candidate
        if let Some((mut err, mut sigma)) = per_size
            .iter()
            .flatten()
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .cloned()
        {
            loop {
                let mut improved = false;
                let expanded = sigma.expanded();
                'outer: for pos in 0..expanded.len() {
                    for replacement in 0..n {
                        if replacement == expanded[pos] {
                            continue;
                        }
                        let mut draws = expanded.clone();
                        draws[pos] = replacement;
                        let cand = Multiset::from_draws(&draws).expect("non-empty");
                        let cand_err = diagonal_sample_error(&diags, dim, &cand);
                        if cand_err < err {
                            err = cand_err;
                            sigma = cand;
                            improved = true;
                            break 'outer;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            let slot = &mut per_size[sigma.size()];
            if slot.as_ref().map_or(true, |(e, _)| err < *e) {
                *slot = Some((err, sigma));
            }
        }
        for (s, entry) in per_size.into_iter().enumerate().skip(1) {
            if let Some((min_error, witness)) = entry {
                sizes.push(SizeResult {
                    size: s,
                    min_error,
                    witness,
                });
            }
        }
    }

    let (min_error, witness) = sizes
        .iter()
        .min_by(|a, b| a.min_error.partial_cmp(&b.min_error).unwrap())
        .map(|s| (s.min_error, s.witness.clone()))
        .expect("at least one size examined");
    LowerBoundReport {
        mode: if exhaustive {
            "exhaustive".into()
        } else {
            "random+greedy".into()
        },
        threshold: inst.epsilon(),
        size_bound: bound,
        sizes,
        min_error,
        witness,
        certified: exhaustive,
        meets_threshold: min_error >= inst.epsilon(),
    }
}

/// Result of the β optimization for a fixed support.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaOptimum {
    /// Upper bound on `min_β ‖Σ β Q − I‖` (best iterate found).
    pub error: f64,
    /// Coefficients matching the support order.
    pub beta: Vec<f64>,
    /// Residual of the Frobenius least-squares initialization.
    pub frobenius_residual: f64,
}

/// Approximate minimum of `‖Σ_{(i,j)∈M} β_{ij} Q_{ij} − I‖` over real β by
/// subgradient descent on the spectral norm, initialized at the closed-form
/// Frobenius least-squares solution (or zero if that system is singular).
/// The returned value is an upper bound on the true minimum.
pub fn best_beta_error(
    inst: &CubeSimplexInstance,
    support: &[(usize, usize)],
) -> Result<BetaOptimum> {
    if support.is_empty() {
        return Err(Error::EmptyInput("empty support".into()));
    }
    let d = inst.dim();
    let dp = inst.d_prime();
    for &(i, j) in support {
        if i >= d || j >= dp {
            return Err(Error::InvalidParameter(format!(
                "support pair ({i},{j}) out of range {d}x{dp}"
            )));
        }
    }
    let m = support.len();
    let df = d as f64;

    // members have a single nonzero row, so Frobenius inner products reduce
    // to d²⟨wᵢⱼ, wᵢ'ⱼ'⟩ on matching rows and the right-hand side is d
    let mut gram = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in a..m {
            let (ia, ja) = support[a];
            let (ib, jb) = support[b];
            let g = if ia == ib {
                df * df * dot(inst.point(ia, ja), inst.point(ib, jb))
            } else {
                0.0
            };
            gram[a][b] = g;
            gram[b][a] = g;
        }
    }
    let rhs = vec![df; m];
    let mut beta = solve_spd(gram, rhs).unwrap_or_else(|| vec![0.0; m]);

    let members: Vec<Matrix> = support.iter().map(|&(i, j)| inst.member(i, j)).collect();
    let residual = |beta: &[f64]| -> Matrix {
        let mut r = Matrix::identity(d).scale(-1.0);
        for (b, q) in beta.iter().zip(members.iter()) {
            r.add_scaled(q, *b);
        }
        r
    };
    let frobenius_residual = residual(&beta).frobenius_norm();

    let mut best_error = f64::INFINITY;
    let mut best_beta = beta.clone();
    let eta0 = 1.0 / (df * dp as f64);
    let iterations = 5000;
    for iter in 0..iterations {
        let r = residual(&beta);
        let (s, u, v) = top_singular_triple(&r)?;
        if s < best_error {
            best_error = s;
            best_beta.copy_from_slice(&beta);
            if s < 1e-14 {
                break;
            }
        }
        // ∂‖R‖/∂βₙ = uᵀ Qₙ v = d·u[iₙ]·⟨wₙ, v⟩
        let eta = eta0 / ((iter + 1) as f64).sqrt();
        for (n, &(i, j)) in support.iter().enumerate() {
            let g = df * u[i] * dot(inst.point(i, j), &v);
            beta[n] -= eta * g;
        }
    }
    Ok(BetaOptimum {
        error: best_error,
        beta: best_beta,
        frobenius_residual,
    })
}

/// Gaussian elimination with partial pivoting; `None` when the system is
/// numerically singular.
fn solve_spd(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())?;
        if a[pivot_row][col].abs() < 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in (col + 1)..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// Witness certificate: a lower bound on `‖Σ β Q − I‖` obtained from two
/// inner-product tests against the row with the smallest support.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BmCertificate {
    /// `max(e1_test, x_test)`; a valid lower bound on the operator norm.
    pub lower_bound: f64,
    /// `|⟨(A−I)e_i*, e_i*⟩|`.
    pub e1_test: f64,
    /// `|⟨(A−I)x, e_i*⟩|` with `x` the normalized sum of the support offsets;
    /// absent when that sum vanishes (e.g. a full row).
    pub x_test: Option<f64>,
    /// Row index with the fewest nonzero coefficients.
    pub min_row: usize,
    /// ℓ, the number of nonzero coefficients in that row.
    pub min_row_support: usize,
    /// `d′ Σⱼ β_{i*,j}` over the minimal row.
    pub coef_sum: f64,
    /// `δ/(4√ℓ)`, the analytic bound; absent when ℓ = 0.
    pub analytic_bound: Option<f64>,
    /// When ℓ < d′/2 and the coefficient sum is at least `1 − ε`: whether the
    /// certificate dominates the analytic bound (it must, since every support
    /// point then has the same positive projection onto `x`).
    pub consistent: Option<bool>,
}

/// Evaluate the certificate for given support and coefficients; `eps` only
/// gates the consistency cross-check, the bound itself is unconditional.
pub fn bm_certificate(
    inst: &CubeSimplexInstance,
    support: &[(usize, usize)],
    beta: &[f64],
    eps: f64,
) -> Result<BmCertificate> {
    if support.len() != beta.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} support pairs but {} coefficients",
            support.len(),
            beta.len()
        )));
    }
    if support.is_empty() {
        return Err(Error::EmptyInput("empty support".into()));
    }
    let d = inst.dim();
    let dp = inst.d_prime();

    // the minimal-support row, counting only nonzero coefficients
    let mut row_counts = vec![0usize; d];
    for (&(i, _), &b) in support.iter().zip(beta.iter()) {
        if b != 0.0 {
            row_counts[i] += 1;
        }
    }
    let min_row = (0..d).min_by_key(|&i| row_counts[i]).expect("d > 0");
    let ell = row_counts[min_row];

    // A − I applied where needed; A has row i equal to d Σⱼ β_{ij} wᵢʲᵀ
    let mut a = Matrix::zeros(d, d);
    for (&(i, j), &b) in support.iter().zip(beta.iter()) {
        if b == 0.0 {
            continue;
        }
        let w = inst.point(i, j);
        for c in 0..d {
            a[(i, c)] += d as f64 * b * w[c];
        }
    }

    let e1_test = (a[(min_row, min_row)] - 1.0).abs();
    let coef_sum: f64 = dp as f64
        * support
            .iter()
            .zip(beta.iter())
            .filter(|(&(i, _), _)| i == min_row)
            .map(|(_, &b)| b)
            .sum::<f64>();

    let mut y = vec![0.0; d];
    for (&(i, j), &b) in support.iter().zip(beta.iter()) {
        if i == min_row && b != 0.0 {
            let w = inst.point(i, j);
            for c in 0..d {
                y[c] += w[c];
            }
            y[min_row] -= 1.0; // subtract e_i*
        }
    }
    let ny = l2_norm(&y);
    let x_test = if ny > 1e-12 {
        let x: Vec<f64> = y.iter().map(|c| c / ny).collect();
        let ax = a.apply(&x);
        Some((ax[min_row] - x[min_row]).abs())
    } else {
        None
    };

    let lower_bound = e1_test.max(x_test.unwrap_or(0.0));
    let analytic_bound = if ell >= 1 {
        Some(inst.delta() / (4.0 * (ell as f64).sqrt()))
    } else {
        None
    };
    let consistent = match analytic_bound {
        Some(ab) if ell < dp / 2 && coef_sum >= 1.0 - eps => Some(lower_bound + 1e-12 >= ab),
        _ => None,
    };
    Ok(BmCertificate {
        lower_bound,
        e1_test,
        x_test,
        min_row,
        min_row_support: ell,
        coef_sum,
        analytic_bound,
        consistent,
    })
}

/// Support-size lower bound `d · min(d/4, (δ/(4ε))²)`: any ε-approximation of
/// the identity by the cube/simplex diads needs at least this many pairs.
pub fn bm_lower_bound(d: usize, delta: f64, eps: f64) -> Result<f64> {
    if d <= 2 {
        return Err(Error::InvalidParameter(format!("d must be > 2, got {d}")));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "ε must be in (0, 1/2), got {eps}"
        )));
    }
    let delta_max = (d as f64 / 2.0 - 1.0).sqrt();
    if !(delta > 0.0 && delta < delta_max) {
        return Err(Error::InvalidParameter(format!(
            "δ must be in (0, {delta_max}), got {delta}"
        )));
    }
    let df = d as f64;
    Ok(df * (df / 4.0).min((delta / (4.0 * eps)).powi(2)))
}
