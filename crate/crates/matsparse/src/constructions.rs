//! Generators for the explicit objects the experiments and verifiers run on:
//! Walsh matrices, the isometric embedding of ℓ₁ᵗ into ℓ∞ᵈ (d = 2ᵗ), the
//! diagonal PSD family witnessing that the logarithmic sample-size factor is
//! necessary, the cube/simplex contact configuration behind the support-size
//! lower bound, and the symmetrization counterexample.
//!
//! Construction arithmetic is exact where possible: Walsh entries are ±1
//! integers and the diagonal family is built in `i64` rationals, converted to
//! floats only at the boundary.

use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::decomp::{ContactPairs, ConvexDecomposition, Pair};
use crate::error::{Error, Result};
use crate::matrix::{basis_vector, outer, Matrix};

/// Walsh matrix of size `dim` (a power of two): `H₁ = [1]`,
/// `H_{2n} = [[Hₙ, Hₙ], [Hₙ, −Hₙ]]`. Satisfies `HᵀH = dim·I` exactly.
pub fn walsh(dim: usize) -> Result<Matrix> {
    let signs = walsh_signs(dim)?;
    Ok(Matrix::new(
        dim,
        dim,
        signs.iter().map(|&s| s as f64).collect(),
    )
    .expect("entries are ±1"))
}

/// Integer Walsh matrix, row-major. The doubling recursion closes to
/// `H[r][c] = (−1)^popcount(r & c)`.
pub fn walsh_signs(dim: usize) -> Result<Vec<i64>> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "walsh matrix size must be a power of two, got {dim}"
        )));
    }
    let mut out = Vec::with_capacity(dim * dim);
    for r in 0..dim {
        for c in 0..dim {
            out.push(if (r & c).count_ones() % 2 == 0 { 1 } else { -1 });
        }
    }
    Ok(out)
}

/// Sign of coordinate `l` of the `j`-th ±1 sequence of length `t`, in
/// lexicographic order with +1 before −1. Sequence 0 is all +1.
fn sign_at(j: usize, l: usize, t: usize) -> i64 {
    if (j >> (t - 1 - l)) & 1 == 0 {
        1
    } else {
        -1
    }
}

/// Isometric embedding of ℓ₁ᵗ into ℓ∞ᵈ with `d = 2ᵗ`: coordinate `j` of the
/// output is `⟨x, sⱼ⟩` where `s₀, s₁, …` enumerate all ±1 sequences of
/// length `t` lexicographically (+1 before −1). The sup norm of the output
/// equals `‖x‖₁` exactly.
pub fn l1_to_linf_embed(x: &[f64]) -> Vec<f64> {
    let t = x.len();
    assert!(t >= 1 && t < usize::BITS as usize, "embedding needs 1 <= t < {}", usize::BITS);
    let d = 1usize << t;
    let mut out = Vec::with_capacity(d);
    for j in 0..d {
        let mut acc = 0.0;
        for (l, &xl) in x.iter().enumerate() {
            if sign_at(j, l, t) == 1 {
                acc += xl;
            } else {
                acc -= xl;
            }
        }
        out.push(acc);
    }
    out
}

/// The diagonal PSD family showing that a sub-multiset of size
/// `γ⌊log₂d⌋/(96ε)` or smaller cannot approximate the identity to within ε.
///
/// Members `Q₀ … Q_{t-1}` embed the scaled basis points `eᵢ/2 − a` of ℓ₁ᵗ,
/// `Q_t` embeds `−a` (the zero ℓ₁ point), and `Q_{t+1}` is the zero matrix.
/// All are diagonal of size `2ᵗ`, padded with zero rows/columns up to `dim`
/// when `dim` is not a power of two. Diagonals are kept as exact `i64`
/// rationals (denominator `12k`) before the γ scaling.
#[derive(Debug, Clone)]
pub struct LogNeededInstance {
    t: usize,
    core_dim: usize,
    dim: usize,
    gamma: f64,
    epsilon: f64,
    k: usize,
    size_bound: f64,
    diag_rational: Vec<Vec<Rational64>>,
}

/// Build a [`LogNeededInstance`]. Requires `dim ≥ 8`, `γ ≥ 1`,
/// `0 < ε < 1/16`, and a resulting `k = ⌊t/(96ε)⌋ ≥ 1` where
/// `t = ⌊log₂ dim⌋`.
pub fn log_needed_construction(dim: usize, gamma: f64, epsilon: f64) -> Result<LogNeededInstance> {
    if dim < 8 {
        return Err(Error::InvalidParameter(format!("dim must be >= 8, got {dim}")));
    }
    if !(gamma >= 1.0) {
        return Err(Error::InvalidParameter(format!("γ must be >= 1, got {gamma}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0 / 16.0) {
        return Err(Error::InvalidParameter(format!(
            "ε must be in (0, 1/16), got {epsilon}"
        )));
    }
    let t = (usize::BITS - 1 - dim.leading_zeros()) as usize; // ⌊log₂ dim⌋
    if t >= 26 {
        return Err(Error::InvalidParameter(format!(
            "dim {dim} is beyond the supported range (2^26)"
        )));
    }
    let k_real = t as f64 / (96.0 * epsilon);
    let k = k_real.floor() as usize;
    if k < 1 {
        return Err(Error::InvalidParameter(format!(
            "⌊t/(96ε)⌋ = 0 for t={t}, ε={epsilon}; no instance exists"
        )));
    }
    let core_dim = 1usize << t;
    let denom = 12 * k as i64;

    // diagonal of ψ(eᵢ/2) = φ(eᵢ/2 − a) + I in exact rationals; entry j is
    // 1 + sⱼ[i]/2 − Sⱼ/(12k) with Sⱼ the coordinate sum of the j-th sign
    // sequence. For i = t the eᵢ/2 term is absent (zero ℓ₁ point).
    let mut diag_rational = Vec::with_capacity(t + 1);
    for i in 0..=t {
        let mut diag = Vec::with_capacity(core_dim);
        for j in 0..core_dim {
            let s_sum: i64 = (0..t).map(|l| sign_at(j, l, t)).sum();
            let mut numer = denom - s_sum;
            if i < t {
                numer += 6 * k as i64 * sign_at(j, i, t);
            }
            diag.push(Rational64::new(numer, denom));
        }
        diag_rational.push(diag);
    }

    Ok(LogNeededInstance {
        t,
        core_dim,
        dim,
        gamma,
        epsilon,
        k,
        size_bound: gamma * t as f64 / (96.0 * epsilon),
        diag_rational,
    })
}

impl LogNeededInstance {
    pub fn t(&self) -> usize {
        self.t
    }

    /// `2ᵗ`, the dimension the construction lives in.
    pub fn core_dim(&self) -> usize {
        self.core_dim
    }

    /// Output dimension (matrices are zero-padded up to this).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `⌊t/(96ε)⌋`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// `γ t / (96 ε)`; sub-multisets up to this size cannot ε-approximate I.
    pub fn size_bound(&self) -> f64 {
        self.size_bound
    }

    /// Number of members including the zero matrix.
    pub fn member_count(&self) -> usize {
        self.t + 2
    }

    /// Exact rational diagonal of member `i` before the γ scaling; `None`
    /// for the zero matrix.
    pub fn diag_rational(&self, i: usize) -> Option<&[Rational64]> {
        self.diag_rational.get(i).map(|d| d.as_slice())
    }

    /// Diagonal of member `i` as floats (γ-scaled, padded to `dim`).
    pub fn diag(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        if let Some(diag) = self.diag_rational.get(i) {
            for (j, r) in diag.iter().enumerate() {
                out[j] = self.gamma * r.to_f64().expect("small rational");
            }
        }
        out
    }

    pub fn matrix(&self, i: usize) -> Matrix {
        Matrix::diagonal(&self.diag(i))
    }

    /// Trace of member `i` via the exact rational path: the rational diagonal
    /// sums to exactly `core_dim`, so the trace is `γ · core_dim` with a
    /// single float multiplication.
    pub fn trace_exact(&self, i: usize) -> f64 {
        match self.diag_rational.get(i) {
            Some(diag) => {
                let sum: Rational64 = diag.iter().sum();
                self.gamma * sum.to_f64().expect("small rational")
            }
            None => 0.0,
        }
    }

    /// Convex weights: `λᵢ/γ` for the ψ members (`λᵢ = 1/(6k)` for `i < t`,
    /// `λ_t = 1 − t/(6k)`) and `1 − 1/γ` for the zero matrix.
    pub fn weights(&self) -> Vec<f64> {
        let k = self.k as f64;
        let t = self.t as f64;
        let mut w: Vec<f64> = (0..self.t).map(|_| 1.0 / (6.0 * k) / self.gamma).collect();
        w.push((1.0 - t / (6.0 * k)) / self.gamma);
        w.push(1.0 - 1.0 / self.gamma);
        w
    }

    /// The padded target: identity on the first `core_dim` coordinates. The
    /// zero-padding prescribed for non-power-of-two dimensions leaves the
    /// convex combination equal to this block identity, while the
    /// no-approximation guarantee is measured against the full identity
    /// (trivially, since the padded rows are zero).
    pub fn target(&self) -> Matrix {
        let mut diag = vec![0.0; self.dim];
        for x in diag.iter_mut().take(self.core_dim) {
            *x = 1.0;
        }
        Matrix::diagonal(&diag)
    }

    pub fn to_decomposition(&self) -> Result<ConvexDecomposition> {
        let matrices: Vec<Matrix> = (0..self.member_count()).map(|i| self.matrix(i)).collect();
        ConvexDecomposition::new(self.weights(), matrices, self.target(), true)
    }
}

/// The cube/simplex contact configuration: for each basis direction `eᵢ`,
/// `d′ = 2^⌊log₂d⌋` points `wᵢʲ` on the facet `⟨x, eᵢ⟩ = 1` of the cube
/// `[−1,1]ᵈ` forming a regular simplex of circumradius δ centered at `eᵢ`.
/// The pairs `(wᵢʲ, eᵢ)` satisfy `I = (1/dd′) Σ d wᵢʲ⊗eᵢ`.
#[derive(Debug, Clone)]
pub struct CubeSimplexInstance {
    dim: usize,
    d_prime: usize,
    delta: f64,
    points: Vec<Vec<f64>>, // w_i^j at index i * d_prime + j
}

/// Build a [`CubeSimplexInstance`]. Requires `dim > 2` and
/// `0 < δ < √(dim/2 − 1)`.
pub fn cube_simplex_construction(dim: usize, delta: f64) -> Result<CubeSimplexInstance> {
    if dim <= 2 {
        return Err(Error::InvalidParameter(format!("dim must be > 2, got {dim}")));
    }
    let delta_max = (dim as f64 / 2.0 - 1.0).sqrt();
    if !(delta > 0.0 && delta < delta_max) {
        return Err(Error::InvalidParameter(format!(
            "δ must be in (0, {delta_max}), got {delta}"
        )));
    }
    let d_prime = 1usize << (usize::BITS - 1 - dim.leading_zeros()); // 2^⌊log₂ dim⌋
    let signs = walsh_signs(d_prime)?;
    let scale = delta / ((d_prime - 1) as f64).sqrt();

    let mut points = Vec::with_capacity(dim * d_prime);
    for i in 0..dim {
        // the d′−1 free simplex coordinates go to the coordinates != i,
        // in increasing order
        let slots: Vec<usize> = (0..dim).filter(|&c| c != i).take(d_prime - 1).collect();
        for j in 0..d_prime {
            let mut w = basis_vector(dim, i);
            for (m, &slot) in slots.iter().enumerate() {
                // column j of the Walsh matrix, skipping the all-ones first row
                let entry = signs[(m + 1) * d_prime + j] as f64;
                w[slot] = scale * entry;
            }
            points.push(w);
        }
    }
    Ok(CubeSimplexInstance {
        dim,
        d_prime,
        delta,
        points,
    })
}

impl CubeSimplexInstance {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn d_prime(&self) -> usize {
        self.d_prime
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Total number of pairs, `d · d′`.
    pub fn pair_count(&self) -> usize {
        self.dim * self.d_prime
    }

    /// `wᵢʲ` for `i ∈ [0, d)`, `j ∈ [0, d′)`.
    pub fn point(&self, i: usize, j: usize) -> &[f64] {
        &self.points[i * self.d_prime + j]
    }

    /// The rank-one member `Q_{ij} = d · wᵢʲ ⊗ eᵢ`.
    pub fn member(&self, i: usize, j: usize) -> Matrix {
        outer(self.point(i, j), &basis_vector(self.dim, i))
            .expect("equal lengths")
            .scale(self.dim as f64)
    }

    /// Pairs `(u, v) = (wᵢʲ, eᵢ)` with uniform weights `1/(dd′)`. These
    /// satisfy the identity but are not sign-balanced.
    pub fn contact_pairs(&self) -> ContactPairs {
        let m = self.pair_count();
        let pairs: Vec<Pair> = (0..self.dim)
            .flat_map(|i| {
                (0..self.d_prime).map(move |j| Pair {
                    u: self.point(i, j).to_vec(),
                    v: basis_vector(self.dim, i),
                })
            })
            .collect();
        ContactPairs::new(self.dim, vec![1.0 / m as f64; m], pairs, false)
            .expect("uniform weights")
    }

    /// Sign-symmetric pairs `(±wᵢʲ, ±eᵢ)` with weights `1/(2dd′)`; adding the
    /// opposite of each vector makes the balance conditions hold as well.
    pub fn symmetrized_contact_pairs(&self) -> ContactPairs {
        let m = 2 * self.pair_count();
        let mut pairs = Vec::with_capacity(m);
        for i in 0..self.dim {
            for j in 0..self.d_prime {
                let w = self.point(i, j).to_vec();
                let e = basis_vector(self.dim, i);
                pairs.push(Pair {
                    u: w.clone(),
                    v: e.clone(),
                });
                pairs.push(Pair {
                    u: w.iter().map(|x| -x).collect(),
                    v: e.iter().map(|x| -x).collect(),
                });
            }
        }
        ContactPairs::new(self.dim, vec![1.0 / m as f64; m], pairs, true)
            .expect("uniform weights")
    }
}

/// The family showing symmetrization can lose all structure: diads
/// `u₁=v₁=e₁`, `u₂=v₂=e₂`, and for each remaining direction the four sign
/// combinations of `uᵢ± = eᵢ ± δe₁`, `vᵢ± = eᵢ ± δe₂`, scaled so every member
/// carries weight `1/(4d)`. The displayed weights sum to `1 − 3/(2d)`, so a
/// zero matrix with the residual weight completes the convex combination
/// (changing neither the target, γ, nor the symmetrized average).
pub fn symmetrization_counterexample(dim: usize, delta: f64) -> Result<ConvexDecomposition> {
    if dim < 3 {
        return Err(Error::InvalidParameter(format!("dim must be >= 3, got {dim}")));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("δ must be >= 0, got {delta}")));
    }
    let d = dim as f64;
    let e1 = basis_vector(dim, 0);
    let e2 = basis_vector(dim, 1);

    let mut matrices = Vec::with_capacity(4 * dim - 5);
    matrices.push(outer(&e1, &e1)?.scale(4.0 * d));
    matrices.push(outer(&e2, &e2)?.scale(4.0 * d));
    for i in 2..dim {
        let ei = basis_vector(dim, i);
        for &su in &[1.0, -1.0] {
            for &sv in &[1.0, -1.0] {
                let u: Vec<f64> = ei.iter().zip(e1.iter()).map(|(a, b)| a + su * delta * b).collect();
                let v: Vec<f64> = ei.iter().zip(e2.iter()).map(|(a, b)| a + sv * delta * b).collect();
                matrices.push(outer(&u, &v)?.scale(d));
            }
        }
    }
    let mut weights = vec![1.0 / (4.0 * d); matrices.len()];
    matrices.push(Matrix::zeros(dim, dim));
    weights.push(6.0 / (4.0 * d));
    ConvexDecomposition::new(weights, matrices, Matrix::identity(dim), false)
}

/// The same family as [`symmetrization_counterexample`], but as contact
/// pairs: weights `1/d` on the two axis diads and `1/(4d)` on each sign
/// combination satisfy the identity exactly, and including the opposite of
/// each vector (at half weight) makes the pair sums balance.
pub fn symmetrization_counterexample_pairs(dim: usize, delta: f64) -> Result<ContactPairs> {
    if dim < 3 {
        return Err(Error::InvalidParameter(format!("dim must be >= 3, got {dim}")));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("δ must be >= 0, got {delta}")));
    }
    let d = dim as f64;
    let e1 = basis_vector(dim, 0);
    let e2 = basis_vector(dim, 1);
    let mut pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    pairs.push((e1.clone(), e1.clone(), 1.0 / d));
    pairs.push((e2.clone(), e2.clone(), 1.0 / d));
    for i in 2..dim {
        let ei = basis_vector(dim, i);
        for &su in &[1.0, -1.0] {
            for &sv in &[1.0, -1.0] {
                let u: Vec<f64> = ei.iter().zip(e1.iter()).map(|(a, b)| a + su * delta * b).collect();
                let v: Vec<f64> = ei.iter().zip(e2.iter()).map(|(a, b)| a + sv * delta * b).collect();
                pairs.push((u, v, 1.0 / (4.0 * d)));
            }
        }
    }
    let mut out = Vec::with_capacity(2 * pairs.len());
    let mut weights = Vec::with_capacity(2 * pairs.len());
    for (u, v, w) in pairs {
        let nu: Vec<f64> = u.iter().map(|x| -x).collect();
        let nv: Vec<f64> = v.iter().map(|x| -x).collect();
        out.push(Pair { u, v });
        weights.push(w / 2.0);
        out.push(Pair { u: nu, v: nv });
        weights.push(w / 2.0);
    }
    ContactPairs::new(dim, weights, out, true)
}

/// Cross-polytope decomposition of the identity: members `d·(±eᵢ)⊗(±eᵢ)`
/// with uniform weights `1/(2d)`.
pub fn cross_polytope(dim: usize) -> ConvexDecomposition {
    let d = dim as f64;
    let mut matrices = Vec::with_capacity(2 * dim);
    for i in 0..dim {
        let e = basis_vector(dim, i);
        let ne: Vec<f64> = e.iter().map(|x| -x).collect();
        matrices.push(outer(&e, &e).expect("same length").scale(d));
        matrices.push(outer(&ne, &ne).expect("same length").scale(d));
    }
    ConvexDecomposition::new(
        vec![1.0 / (2.0 * d); 2 * dim],
        matrices,
        Matrix::identity(dim),
        true,
    )
    .expect("uniform weights")
}

/// Contact pairs of the unit ball sitting in the cube: `uᵢ = vᵢ = ±eᵢ` with
/// weights `1/(2d)`, balanced by symmetry.
pub fn ball_in_cube_pairs(dim: usize) -> ContactPairs {
    let mut pairs = Vec::with_capacity(2 * dim);
    for i in 0..dim {
        let e = basis_vector(dim, i);
        let ne: Vec<f64> = e.iter().map(|x| -x).collect();
        pairs.push(Pair {
            u: e.clone(),
            v: e,
        });
        pairs.push(Pair {
            u: ne.clone(),
            v: ne,
        });
    }
    ContactPairs::new(dim, vec![1.0 / (2.0 * dim as f64); 2 * dim], pairs, true)
        .expect("uniform weights")
}

/// Metadata block attached to serialized instances.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "construction", content = "params", rename_all = "kebab-case")]
pub enum InstanceMetadata {
    LogNeeded {
        dim: usize,
        gamma: f64,
        epsilon: f64,
        t: usize,
        k: usize,
        size_bound: f64,
    },
    CubeSimplex {
        dim: usize,
        d_prime: usize,
        delta: f64,
    },
    SymmCounterexample {
        dim: usize,
        delta: f64,
    },
}

impl LogNeededInstance {
    pub fn metadata(&self) -> InstanceMetadata {
        InstanceMetadata::LogNeeded {
            dim: self.dim,
            gamma: self.gamma,
            epsilon: self.epsilon,
            t: self.t,
            k: self.k,
            size_bound: self.size_bound,
        }
    }
}

impl CubeSimplexInstance {
    pub fn metadata(&self) -> InstanceMetadata {
        InstanceMetadata::CubeSimplex {
            dim: self.dim,
            d_prime: self.d_prime,
            delta: self.delta,
        }
    }
}
