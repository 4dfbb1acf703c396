//! Least-squares solving and null spaces.
//!
//! Both are driven by the Hermitian eigendecomposition of the augmented
//! matrix [[0, A], [A†, 0]], whose positive eigenvalues are the singular
//! values of A. This avoids squaring the condition number the way a Gram
//! matrix approach would.

use super::eig::eig_hermitian;
use super::{vec_norm, vec_sub, CMatrix, ToleranceContext, ZERO};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Outcome of [`solve_linear`]: the least-squares minimizer of ‖Mx − b‖ and
/// the achieved residual. Callers decide whether the residual is acceptable.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: Vec<Complex64>,
    pub residual: f64,
}

struct SingularTriplet {
    sigma: f64,
    u: Vec<Complex64>,
    v: Vec<Complex64>,
}

fn augmented_eig(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let (rows, cols) = (m.rows(), m.cols());
    let n = rows + cols;
    let mut h = CMatrix::zeros(n, n);
    for i in 0..rows {
        for j in 0..cols {
            h[(i, rows + j)] = m[(i, j)];
            h[(rows + j, i)] = m[(i, j)].conj();
        }
    }
    let eig = eig_hermitian(&h)?;
    Ok((eig.eigenvalues, eig.eigenvectors))
}

fn singular_triplets(m: &CMatrix) -> Result<Vec<SingularTriplet>> {
    let (rows, cols) = (m.rows(), m.cols());
    let (vals, vecs) = augmented_eig(m)?;
    let mut trips = Vec::new();
    for (k, &lambda) in vals.iter().enumerate() {
        if lambda <= 0.0 {
            continue;
        }
        let col = vecs.column(k);
        let scale = Complex64::new(std::f64::consts::SQRT_2, 0.0);
        let u: Vec<Complex64> = col[..rows].iter().map(|z| z * scale).collect();
        let v: Vec<Complex64> = col[rows..rows + cols].iter().map(|z| z * scale).collect();
        trips.push(SingularTriplet {
            sigma: lambda,
            u,
            v,
        });
    }
    Ok(trips)
}

/// Least-squares solve with pseudo-inverse semantics: returns the minimum
/// norm minimizer of ‖Mx − b‖. Singular values below `rank_cut` relative to
/// the largest are treated as zero.
pub fn solve_linear(m: &CMatrix, b: &[Complex64], tol: &ToleranceContext) -> Result<LeastSquares> {
    m.check_finite()?;
    if b.len() != m.rows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} does not match {} rows",
            b.len(),
            m.rows()
        )));
    }
    for (i, z) in b.iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
    }
    let trips = singular_triplets(m)?;
    let sigma_max = trips.iter().fold(0.0_f64, |s, t| s.max(t.sigma));
    let cut = tol.rank_cut * sigma_max;
    let mut x = vec![ZERO; m.cols()];
    for t in &trips {
        if t.sigma < cut || t.sigma == 0.0 {
            continue;
        }
        let coeff: Complex64 =
            t.u.iter()
                .zip(b)
                .map(|(ui, bi)| ui.conj() * bi)
                .sum::<Complex64>()
                / Complex64::new(t.sigma, 0.0);
        for (xi, vi) in x.iter_mut().zip(&t.v) {
            *xi += coeff * vi;
        }
    }
    let residual = vec_norm(&vec_sub(&m.mul_vec(&x), b));
    Ok(LeastSquares {
        solution: x,
        residual,
    })
}

/// Orthonormal frame spanning the (right) null space of `m`: columns v with
/// ‖Mv‖ ≤ cut. The cut is `eq_tol` relative to max(σ_max, 1): the matrices
/// this crate feeds here (Φ̂ − I, commutation stacks, shifted projectors)
/// live on unit scale, so a numerically-zero input means a full kernel, not
/// an empty one.
pub fn null_space(m: &CMatrix, tol: &ToleranceContext) -> Result<CMatrix> {
    m.check_finite()?;
    let (rows, cols) = (m.rows(), m.cols());
    let (vals, vecs) = augmented_eig(m)?;
    let sigma_max = vals.iter().fold(0.0_f64, |s, &l| s.max(l.abs()));
    let cut = tol.eq_tol * sigma_max.max(1.0);
    // The v-parts of the zero-cluster eigenvectors carry the kernel: their
    // outer products sum to the projector onto ker M, so the candidate
    // matrix has singular value exactly 1 on every kernel direction and
    // only noise elsewhere. The singular vectors above the absolute cut 1/2
    // therefore span the kernel without amplifying eigenvector noise the
    // way sequential orthogonalization of nearly dependent candidates
    // would, and an empty kernel yields an empty basis.
    let mut candidates: Vec<Vec<Complex64>> = Vec::new();
    for (k, &lambda) in vals.iter().enumerate() {
        if lambda.abs() <= cut {
            let col = vecs.column(k);
            candidates.push(col[rows..rows + cols].to_vec());
        }
    }
    if candidates.is_empty() {
        return Ok(CMatrix::zeros(cols, 0));
    }
    let m = CMatrix::from_columns(cols, &candidates);
    let mut trips = singular_triplets(&m)?;
    trips.sort_by(|a, b| b.sigma.partial_cmp(&a.sigma).unwrap());
    let frame_cols: Vec<Vec<Complex64>> = trips
        .iter()
        .filter(|t| t.sigma > 0.5)
        .map(|t| t.u.clone())
        .collect();
    Ok(CMatrix::from_columns(cols, &frame_cols))
}

/// Orthonormal basis of the span of the given vectors through the singular
/// vectors of the matrix they form as columns. Directions with singular
/// value below `rel_cut` of the largest are treated as noise; unlike
/// Gram-Schmidt this never amplifies errors of nearly dependent inputs.
pub fn span_basis(ambient: usize, vectors: &[Vec<Complex64>], rel_cut: f64) -> Result<CMatrix> {
    if vectors.is_empty() {
        return Ok(CMatrix::zeros(ambient, 0));
    }
    let m = CMatrix::from_columns(ambient, vectors);
    let mut trips = singular_triplets(&m)?;
    trips.sort_by(|a, b| b.sigma.partial_cmp(&a.sigma).unwrap());
    let sigma_max = trips.first().map_or(0.0, |t| t.sigma);
    let cols: Vec<Vec<Complex64>> = trips
        .iter()
        .filter(|t| t.sigma > rel_cut * sigma_max && t.sigma > 0.0)
        .map(|t| t.u.clone())
        .collect();
    Ok(CMatrix::from_columns(ambient, &cols))
}

/// Modified Gram-Schmidt with one reorthogonalization pass. The remainder
/// threshold is `drop_tol` relative to the largest input norm, so a vector
/// that is itself numerical noise cannot smuggle a garbage direction into
/// the basis by passing a test relative to its own tiny norm.
pub fn orthonormalize(ambient: usize, vectors: &[Vec<Complex64>], drop_tol: f64) -> CMatrix {
    let scale = vectors.iter().map(|v| vec_norm(v)).fold(0.0_f64, f64::max);
    orthonormalize_scaled(ambient, vectors, drop_tol, scale)
}

/// [`orthonormalize`] with an explicit reference scale for the drop
/// threshold. Callers whose inputs are slices of unit vectors (null-space
/// candidates, operator parts) pass scale 1 so that an all-noise candidate
/// family yields an empty basis instead of normalized garbage.
pub fn orthonormalize_scaled(
    ambient: usize,
    vectors: &[Vec<Complex64>],
    drop_tol: f64,
    scale: f64,
) -> CMatrix {
    if scale == 0.0 {
        return CMatrix::zeros(ambient, 0);
    }
    let floor = drop_tol * scale;
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for v in vectors {
        debug_assert_eq!(v.len(), ambient);
        if vec_norm(v) <= floor {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let coeff: Complex64 = b.iter().zip(&w).map(|(bi, wi)| bi.conj() * wi).sum();
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= coeff * bi;
                }
            }
        }
        let rem = vec_norm(&w);
        if rem > floor {
            let inv = Complex64::new(1.0 / rem, 0.0);
            for wi in w.iter_mut() {
                *wi *= inv;
            }
            basis.push(w);
        }
    }
    CMatrix::from_columns(ambient, &basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ONE;

    fn tol() -> ToleranceContext {
        ToleranceContext::default()
    }

    #[test]
    fn identity_solve() {
        let m = CMatrix::identity(3);
        let b = vec![ONE, Complex64::new(2.0, -1.0), Complex64::new(0.0, 3.0)];
        let ls = solve_linear(&m, &b, &tol()).unwrap();
        assert!(vec_norm(&vec_sub(&ls.solution, &b)) < 1e-12);
        assert!(ls.residual < 1e-12);
    }

    #[test]
    fn diagonal_solve() {
        let m = CMatrix::real_diagonal(&[2.0, 4.0]);
        let b = vec![Complex64::new(2.0, 0.0), Complex64::new(2.0, 0.0)];
        let ls = solve_linear(&m, &b, &tol()).unwrap();
        assert!((ls.solution[0].re - 1.0).abs() < 1e-12);
        assert!((ls.solution[1].re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn singular_least_squares() {
        // M = [[1,0],[0,0]], b = (1,1): minimizer (1,0), residual 1
        let m = CMatrix::real_diagonal(&[1.0, 0.0]);
        let b = vec![ONE, ONE];
        let ls = solve_linear(&m, &b, &tol()).unwrap();
        assert!((ls.solution[0].re - 1.0).abs() < 1e-12);
        assert!(ls.solution[1].norm() < 1e-12);
        assert!((ls.residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_space_of_projector_complement() {
        // M = diag(1, 1, 0): kernel is span{e2}
        let m = CMatrix::real_diagonal(&[1.0, 1.0, 0.0]);
        let ns = null_space(&m, &tol()).unwrap();
        assert_eq!(ns.cols(), 1);
        assert!((ns[(2, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_space_of_zero_is_everything() {
        let ns = null_space(&CMatrix::zeros(2, 3), &tol()).unwrap();
        assert_eq!(ns.cols(), 3);
    }

    #[test]
    fn null_space_rectangular() {
        // 1x3 row (1, 1, 1): kernel has dimension 2 and is orthogonal to it
        let m = CMatrix::from_real_rows(&[vec![1.0, 1.0, 1.0]]).unwrap();
        let ns = null_space(&m, &tol()).unwrap();
        assert_eq!(ns.cols(), 2);
        for j in 0..2 {
            let col = ns.column(j);
            let s: Complex64 = col.iter().sum();
            assert!(s.norm() < 1e-10);
        }
    }

    #[test]
    fn orthonormalize_drops_dependent() {
        let v1 = vec![ONE, ZERO];
        let v2 = vec![Complex64::new(2.0, 0.0), ZERO];
        let v3 = vec![ONE, ONE];
        let q = orthonormalize(2, &[v1, v2, v3], 1e-7);
        assert_eq!(q.cols(), 2);
        let qtq = q.adjoint().mul_mat(&q);
        assert!(qtq.sub_mat(&CMatrix::identity(2)).norm_fro() < 1e-12);
    }
}
