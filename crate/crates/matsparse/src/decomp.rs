//! Decomposition data types and their validators.
//!
//! A [`ConvexDecomposition`] is a target matrix written as a convex
//! combination of square matrices. [`ContactPairs`] holds weighted vector
//! pairs realizing `Σ αᵢ uᵢ⊗vᵢ = I/d` (contact data of a body in John's
//! position), which [`lift_pairs`] embeds into dimension `d+1` so that a
//! single identity approximation controls both the diad error and the
//! balance sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, l2_norm, outer, Matrix};
use crate::multiset::Multiset;

/// Weight sums are checked against this before renormalization is attempted.
const WEIGHT_REJECT_TOL: f64 = 1e-9;
/// Weight sums already this close to 1 are stored as given, which keeps
/// serialization round-trips bit-faithful.
const WEIGHT_KEEP_TOL: f64 = 1e-12;

pub(crate) fn kahan_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in xs {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

fn normalize_weights(mut weights: Vec<f64>) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::EmptyInput("no weights".into()));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidParameter(format!("weight {w} not in [0, ∞)")));
    }
    let sum = kahan_sum(weights.iter().copied());
    if (sum - 1.0).abs() > WEIGHT_REJECT_TOL {
        return Err(Error::InvalidParameter(format!(
            "weights sum to {sum}, not 1; refusing to renormalize badly scaled input"
        )));
    }
    if (sum - 1.0).abs() > WEIGHT_KEEP_TOL {
        for w in &mut weights {
            *w /= sum;
        }
    }
    Ok(weights)
}

/// One violated invariant with its measured residual.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub residual: f64,
}

/// Outcome of a validator run; empty means every invariant held.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn check(&mut self, name: &str, residual: f64, tol: f64) {
        if !(residual <= tol) {
            self.violations.push(Violation {
                check: name.to_string(),
                residual,
            });
        }
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        if self.is_valid() {
            write!(f, "valid")
        } else {
            let parts: Vec<String> = self
                .violations
                .iter()
                .map(|v| format!("{} (residual {:e})", v.check, v.residual))
                .collect();
            write!(f, "invalid: {}", parts.join("; "))
        }
    }
}

/// A target matrix `A` with weights `αᵢ ≥ 0`, `Σ αᵢ = 1`, and square matrices
/// `Qᵢ` such that `Σ αᵢ Qᵢ = A`. When `psd` is set the members are expected
/// to be positive semi-definite.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DecompositionData", into = "DecompositionData")]
pub struct ConvexDecomposition {
    dim: usize,
    weights: Vec<f64>,
    matrices: Vec<Matrix>,
    target: Matrix,
    psd: bool,
}

#[derive(Serialize, Deserialize)]
struct DecompositionData {
    dim: usize,
    weights: Vec<f64>,
    matrices: Vec<Matrix>,
    target: Matrix,
    psd: bool,
}

impl TryFrom<DecompositionData> for ConvexDecomposition {
    type Error = Error;
    fn try_from(d: DecompositionData) -> Result<Self> {
        if d.dim == 0 {
            return Err(Error::InvalidParameter("dim must be positive".into()));
        }
        ConvexDecomposition::new(d.weights, d.matrices, d.target, d.psd)
    }
}

impl From<ConvexDecomposition> for DecompositionData {
    fn from(d: ConvexDecomposition) -> Self {
        DecompositionData {
            dim: d.dim,
            weights: d.weights,
            matrices: d.matrices,
            target: d.target,
            psd: d.psd,
        }
    }
}

impl ConvexDecomposition {
    pub fn new(
        weights: Vec<f64>,
        matrices: Vec<Matrix>,
        target: Matrix,
        psd: bool,
    ) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::EmptyInput("decomposition with no matrices".into()));
        }
        if weights.len() != matrices.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} matrices",
                weights.len(),
                matrices.len()
            )));
        }
        if !target.is_square() {
            return Err(Error::NotSquare {
                rows: target.rows(),
                cols: target.cols(),
            });
        }
        let dim = target.rows();
        for (i, q) in matrices.iter().enumerate() {
            if q.rows() != dim || q.cols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "matrix {i} is {}x{}, target is {dim}x{dim}",
                    q.rows(),
                    q.cols()
                )));
            }
        }
        let weights = normalize_weights(weights)?;
        Ok(Self {
            dim,
            weights,
            matrices,
            target,
            psd,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn matrix(&self, i: usize) -> &Matrix {
        &self.matrices[i]
    }

    pub fn target(&self) -> &Matrix {
        &self.target
    }

    pub fn psd_members(&self) -> bool {
        self.psd
    }

    /// Weighted combination `Σ αᵢ Qᵢ`.
    pub fn combination(&self) -> Matrix {
        let mut acc = Matrix::zeros(self.dim, self.dim);
        for (w, q) in self.weights.iter().zip(self.matrices.iter()) {
            acc.add_scaled(q, *w);
        }
        acc
    }

    /// Check every stored invariant and report the ones that fail.
    /// `tol` applies to the operator-norm residual of the combination and to
    /// the per-member PSD checks; the weight sum is held to 1e-12.
    pub fn validate(&self, tol: f64) -> ValidationReport {
        let mut report = ValidationReport::default();
        let wsum = kahan_sum(self.weights.iter().copied());
        report.check("weights sum to 1", (wsum - 1.0).abs(), 1e-12);
        if let Some(w) = self.weights.iter().copied().find(|w| *w < 0.0) {
            report.check("weights nonnegative", -w, 0.0);
        }
        let residual = (&self.combination() - &self.target)
            .operator_norm()
            .expect("square by construction");
        report.check("combination equals target", residual, tol);
        if self.psd {
            for (i, q) in self.matrices.iter().enumerate() {
                if !q.is_psd(tol) {
                    report.check(&format!("member {i} positive semi-definite"), f64::NAN, 0.0);
                }
            }
        }
        report
    }

    /// `γ = max_i ‖Qᵢ‖`.
    pub fn gamma(&self) -> f64 {
        self.matrices
            .iter()
            .map(|q| q.operator_norm().expect("square by construction"))
            .fold(0.0, f64::max)
    }

    /// Symmetrize the members: `Uᵢ = (Qᵢ Qᵢᵀ + Qᵢᵀ Qᵢ) / (2γ)`, all PSD with
    /// `‖Uᵢ‖ ≤ γ`, together with their weighted average `B` and `b = ‖B‖`.
    pub fn symmetrize(&self) -> Result<Symmetrization> {
        let gamma = self.gamma();
        if gamma == 0.0 {
            return Err(Error::InvalidParameter(
                "cannot symmetrize: every matrix is zero (γ = 0)".into(),
            ));
        }
        let mut symmetrized = Vec::with_capacity(self.len());
        let mut average = Matrix::zeros(self.dim, self.dim);
        for (w, q) in self.weights.iter().zip(self.matrices.iter()) {
            let qt = q.transpose();
            let mut u = q.matmul(&qt)?;
            u.add_scaled(&qt.matmul(q)?, 1.0);
            let u = u.scale(1.0 / (2.0 * gamma));
            average.add_scaled(&u, *w);
            symmetrized.push(u);
        }
        let average_norm = average.operator_norm()?;
        Ok(Symmetrization {
            gamma,
            symmetrized,
            average,
            average_norm,
        })
    }
}

/// Output of [`ConvexDecomposition::symmetrize`].
#[derive(Debug, Clone)]
pub struct Symmetrization {
    /// `max_i ‖Qᵢ‖` of the source decomposition.
    pub gamma: f64,
    /// The PSD matrices `Uᵢ`.
    pub symmetrized: Vec<Matrix>,
    /// `B = Σ αᵢ Uᵢ`.
    pub average: Matrix,
    /// `b = ‖B‖`.
    pub average_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Weighted contact pairs `(uᵢ, vᵢ)` with `Σ αᵢ uᵢ⊗vᵢ = I/d` and
/// `⟨uᵢ, vᵢ⟩ = 1`. When `balanced` is set, `Σ αᵢ uᵢ = Σ αᵢ vᵢ = 0` is also
/// required (the position of a body inside another induces both conditions).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ContactPairsData", into = "ContactPairsData")]
pub struct ContactPairs {
    dim: usize,
    weights: Vec<f64>,
    pairs: Vec<Pair>,
    balanced: bool,
}

#[derive(Serialize, Deserialize)]
struct ContactPairsData {
    dim: usize,
    weights: Vec<f64>,
    pairs: Vec<Pair>,
    balanced: bool,
}

impl TryFrom<ContactPairsData> for ContactPairs {
    type Error = Error;
    fn try_from(d: ContactPairsData) -> Result<Self> {
        ContactPairs::new(d.dim, d.weights, d.pairs, d.balanced)
    }
}

impl From<ContactPairs> for ContactPairsData {
    fn from(d: ContactPairs) -> Self {
        ContactPairsData {
            dim: d.dim,
            weights: d.weights,
            pairs: d.pairs,
            balanced: d.balanced,
        }
    }
}

impl ContactPairs {
    pub fn new(dim: usize, weights: Vec<f64>, pairs: Vec<Pair>, balanced: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be positive".into()));
        }
        if pairs.is_empty() {
            return Err(Error::EmptyInput("no contact pairs".into()));
        }
        if weights.len() != pairs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} pairs",
                weights.len(),
                pairs.len()
            )));
        }
        for (i, p) in pairs.iter().enumerate() {
            if p.u.len() != dim || p.v.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "pair {i} has lengths ({}, {}), expected {dim}",
                    p.u.len(),
                    p.v.len()
                )));
            }
            if p.u.iter().chain(p.v.iter()).any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("pair {i}")));
            }
        }
        let weights = normalize_weights(weights)?;
        Ok(Self {
            dim,
            weights,
            pairs,
            balanced,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn balanced(&self) -> bool {
        self.balanced
    }

    /// Check the identity `Σ αᵢ uᵢ⊗vᵢ = I/d`, the pairings `⟨uᵢ,vᵢ⟩ = 1`,
    /// and, when the balanced flag is set, `Σ αᵢ uᵢ = Σ αᵢ vᵢ = 0`.
    pub fn validate_johns_position(&self, tol: f64) -> ValidationReport {
        let mut report = ValidationReport::default();
        let wsum = kahan_sum(self.weights.iter().copied());
        report.check("weights sum to 1", (wsum - 1.0).abs(), 1e-12);

        let d = self.dim;
        let mut acc = Matrix::zeros(d, d);
        for (w, p) in self.weights.iter().zip(self.pairs.iter()) {
            acc.add_scaled(&outer(&p.u, &p.v).expect("validated dims"), *w);
        }
        let residual = (&acc - &Matrix::identity(d).scale(1.0 / d as f64))
            .operator_norm()
            .expect("square");
        report.check("Σ αᵢ uᵢ⊗vᵢ equals I/d", residual, tol);

        let worst_pairing = self
            .pairs
            .iter()
            .map(|p| (dot(&p.u, &p.v) - 1.0).abs())
            .fold(0.0, f64::max);
        report.check("⟨uᵢ,vᵢ⟩ equals 1", worst_pairing, tol);

        if self.balanced {
            let mut su = vec![0.0; d];
            let mut sv = vec![0.0; d];
            for (w, p) in self.weights.iter().zip(self.pairs.iter()) {
                for i in 0..d {
                    su[i] += w * p.u[i];
                    sv[i] += w * p.v[i];
                }
            }
            report.check("Σ αᵢ uᵢ equals 0", l2_norm(&su), tol);
            report.check("Σ αᵢ vᵢ equals 0", l2_norm(&sv), tol);
        }
        report
    }
}

/// Contact pairs lifted one dimension up: `aᵢ = (vᵢ, 1/√d)`,
/// `bᵢ = (uᵢ, 1/√d)`, so that `Σ αᵢ d aᵢ⊗bᵢ = I` in dimension `d+1` and
/// `⟨aᵢ, bᵢ⟩ = 1 + 1/d`.
#[derive(Debug, Clone)]
pub struct LiftedPairs {
    base_dim: usize,
    weights: Vec<f64>,
    pairs: Vec<Pair>, // u field holds aᵢ, v field holds bᵢ
}

/// Lift contact pairs to dimension `d+1`. Fails if the identity or balance
/// residuals exceed `tol` (the lift only folds the balance conditions into a
/// single identity when both actually hold).
pub fn lift_pairs(cpd: &ContactPairs, tol: f64) -> Result<LiftedPairs> {
    let mut checked = cpd.clone();
    checked.balanced = true;
    let report = checked.validate_johns_position(tol);
    if !report.is_valid() {
        return Err(Error::InvalidParameter(format!(
            "contact pairs fail John-position checks: {report}"
        )));
    }
    let d = cpd.dim();
    let last = 1.0 / (d as f64).sqrt();
    let pairs = cpd
        .pairs
        .iter()
        .map(|p| {
            let mut a = p.v.clone();
            a.push(last);
            let mut b = p.u.clone();
            b.push(last);
            Pair { u: a, v: b }
        })
        .collect();
    Ok(LiftedPairs {
        base_dim: d,
        weights: cpd.weights.clone(),
        pairs,
    })
}

impl LiftedPairs {
    /// Dimension of the lifted space, `d + 1`.
    pub fn dim(&self) -> usize {
        self.base_dim + 1
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Lifted pair `(aᵢ, bᵢ)`.
    pub fn pair(&self, i: usize) -> (&[f64], &[f64]) {
        (&self.pairs[i].u, &self.pairs[i].v)
    }

    /// The lifted decomposition: members `d · aᵢ⊗bᵢ`, target `I` in `d+1`.
    pub fn to_decomposition(&self) -> ConvexDecomposition {
        let d = self.base_dim as f64;
        let matrices: Vec<Matrix> = self
            .pairs
            .iter()
            .map(|p| outer(&p.u, &p.v).expect("equal lengths").scale(d))
            .collect();
        ConvexDecomposition::new(
            self.weights.clone(),
            matrices,
            Matrix::identity(self.dim()),
            false,
        )
        .expect("weights already normalized")
    }
}

/// Error bounds read off a sub-multiset of lifted pairs, all measured in the
/// base dimension `d`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExtractedBounds {
    /// `‖(d/k) Σ_{i∈σ} uᵢ⊗vᵢ − I‖`.
    pub identity_error: f64,
    /// `(1/k) ‖Σ_{i∈σ} uᵢ‖`.
    pub balance_u: f64,
    /// `(1/k) ‖Σ_{i∈σ} vᵢ‖`.
    pub balance_v: f64,
}

/// Read the base-dimension guarantees off a multiset of lifted pairs. If the
/// lifted identity error is at most `ε`, then `identity_error ≤ ε` and both
/// balances are at most `ε/√d`: the three quantities are blocks of the lifted
/// difference matrix, and block compression does not increase the operator
/// norm.
pub fn extract_guarantees(lifted: &LiftedPairs, sigma: &Multiset) -> Result<ExtractedBounds> {
    if sigma.max_index() >= lifted.len() {
        return Err(Error::InvalidParameter(format!(
            "multiset index {} out of range for {} pairs",
            sigma.max_index(),
            lifted.len()
        )));
    }
    let d = lifted.base_dim;
    let k = sigma.size() as f64;
    let mut acc = Matrix::zeros(d, d);
    let mut su = vec![0.0; d];
    let mut sv = vec![0.0; d];
    for &(idx, mult) in sigma.items() {
        let (a, b) = lifted.pair(idx);
        let u = &b[..d];
        let v = &a[..d];
        acc.add_scaled(&outer(u, v)?, mult as f64);
        for i in 0..d {
            su[i] += mult as f64 * u[i];
            sv[i] += mult as f64 * v[i];
        }
    }
    let avg = acc.scale(d as f64 / k);
    let identity_error = (&avg - &Matrix::identity(d)).operator_norm()?;
    Ok(ExtractedBounds {
        identity_error,
        balance_u: l2_norm(&su) / k,
        balance_v: l2_norm(&sv) / k,
    })
}

/// Sample size `⌈c γ (1 + ‖A‖) ln d / ε²⌉` sufficient for the expected
/// approximation error to drop below `ε`, with `c` a calibration constant.
pub fn required_sample_size(
    d: usize,
    gamma: f64,
    norm_a: f64,
    eps: f64,
    c: f64,
) -> Result<usize> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("d must be >= 2, got {d}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("γ must be > 0, got {gamma}")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "ε must be in (0, 1], got {eps}"
        )));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("c must be > 0, got {c}")));
    }
    if !(norm_a >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "‖A‖ must be >= 0, got {norm_a}"
        )));
    }
    let k = (c * gamma * (1.0 + norm_a) * (d as f64).ln() / (eps * eps)).ceil();
    Ok(k as usize)
}
