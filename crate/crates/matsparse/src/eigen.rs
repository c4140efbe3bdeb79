//! Symmetric eigensolver (cyclic Jacobi) and a power-iteration estimate of the
//! largest singular value.
//!
//! Jacobi is the ground truth everywhere in this crate: dependency-free,
//! robust, and fast enough for the dimensions we care about (d <= 1024).
//! Power iteration is offered for large sweeps where only the top singular
//! value is needed; it is tested against the Jacobi result.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::matrix::{l2_norm, Matrix};

const MAX_SWEEPS: usize = 64;

/// Eigenvalues of a symmetric matrix, sorted descending.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    jacobi(m, false).map(|(evs, _)| evs)
}

/// Eigenvalues (descending) and matching eigenvectors (columns) of a
/// symmetric matrix.
pub fn symmetric_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let (evs, vecs) = jacobi(m, true)?;
    Ok((evs, vecs.expect("eigenvectors requested")))
}

// threshold-cyclic Jacobi: updates live in the upper triangle, early sweeps
// rotate only entries above a threshold, and once converged locally small
// entries are zeroed outright instead of rotated
fn jacobi(m: &Matrix, want_vectors: bool) -> Result<(Vec<f64>, Option<Matrix>)> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    let mut a: Vec<f64> = m.data().to_vec();
    let mut v: Option<Vec<f64>> = if want_vectors {
        let mut id = vec![0.0; n * n];
        for i in 0..n {
            id[i * n + i] = 1.0;
        }
        Some(id)
    } else {
        None
    };

    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if frob == 0.0 || n == 1 {
        return Ok(finish(d, v, n));
    }
    let mut b = d.clone();
    let mut z = vec![0.0; n];
    let stop = 1e-15 * frob;

    for sweep in 0..MAX_SWEEPS {
        let mut sm = 0.0;
        for p in 0..(n - 1) {
            sm += a[p * n + p + 1..(p + 1) * n]
                .iter()
                .map(|x| x.abs())
                .sum::<f64>();
        }
        if sm <= stop {
            return Ok(finish(d, v, n));
        }
        let thresh = if sweep < 3 {
            0.2 * sm / (n * n) as f64
        } else {
            0.0
        };

        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let g = 100.0 * apq.abs();
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    // negligible against both diagonal entries
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                if apq.abs() <= thresh {
                    continue;
                }
                let h = d[q] - d[p];
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let h = t * apq;
                z[p] -= h;
                z[q] += h;
                d[p] -= h;
                d[q] += h;

                // rows p and q carry the full off-diagonal data by symmetry;
                // mix them contiguously, then mirror into the columns. The
                // stale diagonal entries of `a` are never read (d is
                // authoritative).
                {
                    let (head, tail) = a.split_at_mut(q * n);
                    let rp = &mut head[p * n..p * n + n];
                    let rq = &mut tail[..n];
                    for j in 0..n {
                        if j == p || j == q {
                            continue;
                        }
                        let x = rp[j];
                        let y = rq[j];
                        rp[j] = c * x - s * y;
                        rq[j] = s * x + c * y;
                    }
                    rp[q] = 0.0;
                    rq[p] = 0.0;
                }
                for j in 0..n {
                    if j == p || j == q {
                        continue;
                    }
                    a[j * n + p] = a[p * n + j];
                    a[j * n + q] = a[q * n + j];
                }
                if let Some(vv) = v.as_mut() {
                    for j in 0..n {
                        let x = vv[j * n + p];
                        let y = vv[j * n + q];
                        vv[j * n + p] = c * x - s * y;
                        vv[j * n + q] = s * x + c * y;
                    }
                }
            }
        }
        for p in 0..n {
            b[p] += z[p];
            d[p] = b[p];
            z[p] = 0.0;
        }
    }
    Err(Error::NumericalFailure(format!(
        "jacobi did not converge in {MAX_SWEEPS} sweeps"
    )))
}

fn finish(d: Vec<f64>, v: Option<Vec<f64>>, n: usize) -> (Vec<f64>, Option<Matrix>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[y].partial_cmp(&d[x]).unwrap());
    let evs: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vecs = v.map(|vv| Matrix::from_fn(n, n, |r, c| vv[r * n + order[c]]));
    (evs, vecs)
}

/// Singular values of a square matrix by one-sided cyclic Jacobi on its
/// columns: each rotation orthogonalizes a column pair with exactly the angle
/// the two-sided iteration would apply to `AᵀA`, so this is the same Jacobi
/// sweep applied implicitly to the Gram matrix, without ever forming it.
/// Column operations are contiguous, which keeps large matrices fast, and
/// working on the factor directly avoids the accuracy loss of squaring.
pub(crate) fn singular_values_one_sided(a: &Matrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.cols();
    // column-major copy
    let mut cols = vec![0.0f64; n * n];
    for r in 0..n {
        for c in 0..n {
            cols[c * n + r] = a[(r, c)];
        }
    }
    let mut norms2: Vec<f64> = (0..n)
        .map(|c| cols[c * n..(c + 1) * n].iter().map(|x| x * x).sum())
        .collect();
    const ORTHO_TOL: f64 = 1e-14;

    for _sweep in 0..MAX_SWEEPS {
        let mut max_rel = 0.0f64;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let alpha = norms2[p];
                let beta = norms2[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let (head, tail) = cols.split_at_mut(q * n);
                let cp = &mut head[p * n..p * n + n];
                let cq = &mut tail[..n];
                let gamma: f64 = cp.iter().zip(cq.iter()).map(|(x, y)| x * y).sum();
                let rel = gamma.abs() / (alpha * beta).sqrt();
                max_rel = max_rel.max(rel);
                if rel <= ORTHO_TOL {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let xv = *x;
                    let yv = *y;
                    *x = c * xv - s * yv;
                    *y = s * xv + c * yv;
                }
                // same 2x2 diagonal update as the explicit iteration
                norms2[p] = alpha - t * gamma;
                norms2[q] = beta + t * gamma;
            }
        }
        if max_rel <= ORTHO_TOL {
            // final values from the actual columns, not the running updates
            let mut sv: Vec<f64> = (0..n)
                .map(|c| {
                    cols[c * n..(c + 1) * n]
                        .iter()
                        .map(|x| x * x)
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
            return Ok(sv);
        }
    }
    Err(Error::NumericalFailure(format!(
        "one-sided jacobi did not converge in {MAX_SWEEPS} sweeps"
    )))
}

/// Largest singular value by power iteration on `AᵀA`, started from a fixed
/// seeded random vector. `max_iter` caps the iteration count and `rel_tol`
/// is the relative change between successive estimates at which we stop.
///
/// The defaults used by callers in this crate are `max_iter = 10_000` and
/// `rel_tol = 1e-12`; the Jacobi-based [`Matrix::operator_norm`] is the
/// tie-breaking ground truth.
pub fn operator_norm_power(a: &Matrix, max_iter: usize, rel_tol: f64) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.cols();
    let mut rng = ChaCha12Rng::seed_from_u64(0x9E37_79B9_7F4A_7C15);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nv = l2_norm(&v);
    if nv == 0.0 {
        v[0] = 1.0;
    } else {
        v.iter_mut().for_each(|x| *x /= nv);
    }

    let mut sigma = 0.0f64;
    for _ in 0..max_iter {
        let w = a.apply(&v);
        let new_sigma = l2_norm(&w); // = |Av| for unit v
        let mut z = a.apply_transpose(&w);
        let nz = l2_norm(&z);
        if nz == 0.0 {
            return Ok(0.0);
        }
        z.iter_mut().for_each(|x| *x /= nz);
        v = z;
        if (new_sigma - sigma).abs() <= rel_tol * new_sigma.max(f64::MIN_POSITIVE) {
            return Ok(new_sigma);
        }
        sigma = new_sigma;
    }
    Ok(sigma)
}

/// Top singular triple `(s, u, v)` of a square matrix with `A v = s u`,
/// computed from the eigendecomposition of `AᵀA`. Ties between equal
/// singular values are broken by the first index of the sorted spectrum.
pub fn top_singular_triple(a: &Matrix) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (evs, vecs) = symmetric_eigen(&a.gram())?;
    let n = a.cols();
    let v: Vec<f64> = (0..n).map(|r| vecs[(r, 0)]).collect();
    let s = evs[0].max(0.0).sqrt();
    let av = a.apply(&v);
    let nav = l2_norm(&av);
    let u = if nav > 0.0 {
        av.iter().map(|x| x / nav).collect()
    } else {
        // zero matrix: any unit vector works
        crate::matrix::basis_vector(a.rows(), 0)
    };
    Ok((s, u, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::dot;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn random_matrix(rng: &mut ChaCha12Rng, d: usize) -> Matrix {
        Matrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0))
    }

    /// Largest eigenvalue of a symmetric 2x2 from the characteristic polynomial.
    fn char_poly_max_eig_2(b: &Matrix) -> f64 {
        let (a, bb, c) = (b[(0, 0)], b[(0, 1)], b[(1, 1)]);
        let tr = a + c;
        let det = a * c - bb * bb;
        0.5 * (tr + (tr * tr - 4.0 * det).max(0.0).sqrt())
    }

    /// Largest eigenvalue of a symmetric 3x3, trigonometric closed form.
    fn char_poly_max_eig_3(b: &Matrix) -> f64 {
        let p1 = b[(0, 1)].powi(2) + b[(0, 2)].powi(2) + b[(1, 2)].powi(2);
        let q = (b[(0, 0)] + b[(1, 1)] + b[(2, 2)]) / 3.0;
        if p1 == 0.0 {
            return b[(0, 0)].max(b[(1, 1)]).max(b[(2, 2)]);
        }
        let p2 = (b[(0, 0)] - q).powi(2)
            + (b[(1, 1)] - q).powi(2)
            + (b[(2, 2)] - q).powi(2)
            + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let mut det = 0.0;
        // det of (B - qI)/p
        let m = |r: usize, c: usize| (b[(r, c)] - if r == c { q } else { 0.0 }) / p;
        det += m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1));
        det -= m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0));
        det += m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
        let r = (det / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        q + 2.0 * p * phi.cos()
    }

    #[test]
    fn jacobi_matches_char_poly_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for d in [2usize, 3] {
            for _ in 0..200 {
                let a = random_matrix(&mut rng, d);
                let g = a.gram();
                let oracle = if d == 2 {
                    char_poly_max_eig_2(&g)
                } else {
                    char_poly_max_eig_3(&g)
                };
                let jac = symmetric_eigenvalues(&g).unwrap()[0];
                assert!(
                    (jac - oracle).abs() <= 1e-10 * (1.0 + oracle.abs()),
                    "d={d} jacobi={jac} oracle={oracle}"
                );
            }
        }
    }

    #[test]
    fn eigenvectors_reconstruct() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 6);
            let s = a.gram();
            let (evs, vecs) = symmetric_eigen(&s).unwrap();
            for c in 0..6 {
                let v: Vec<f64> = (0..6).map(|r| vecs[(r, c)]).collect();
                let sv = s.apply(&v);
                for r in 0..6 {
                    assert!(
                        (sv[r] - evs[c] * v[r]).abs() < 1e-9,
                        "S v != lambda v at column {c}"
                    );
                }
            }
        }
    }

    #[test]
    fn power_iteration_agrees_with_jacobi() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for d in [2usize, 5, 17, 40] {
            for _ in 0..10 {
                let a = random_matrix(&mut rng, d);
                let exact = a.operator_norm().unwrap();
                let fast = operator_norm_power(&a, 10_000, 1e-12).unwrap();
                assert!(
                    (exact - fast).abs() <= 1e-9 * (1.0 + exact),
                    "d={d} exact={exact} power={fast}"
                );
            }
        }
    }

    #[test]
    fn power_iteration_zero_matrix() {
        let z = Matrix::zeros(4, 4);
        assert_eq!(operator_norm_power(&z, 100, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn top_singular_triple_is_consistent() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 7);
            let (s, u, v) = top_singular_triple(&a).unwrap();
            let av = a.apply(&v);
            for i in 0..7 {
                assert!((av[i] - s * u[i]).abs() < 1e-9);
            }
            assert!((dot(&u, &u) - 1.0).abs() < 1e-12);
            assert!((dot(&v, &v) - 1.0).abs() < 1e-12);
            assert!((s - a.operator_norm().unwrap()).abs() < 1e-10);
        }
    }
}
