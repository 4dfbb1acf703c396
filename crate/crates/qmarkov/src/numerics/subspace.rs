//! Closed subspaces as orthonormal frames, and the lattice operations on
//! them (intersection, sum, complement, containment), plus support
//! projectors of positive semidefinite matrices.

use super::eig::eig_hermitian;
use super::solve::{null_space, orthonormalize};
use super::{CMatrix, ToleranceContext};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// A closed subspace of Cᵈ, stored as an orthonormal frame (d × k matrix
/// with orthonormal columns; k may be zero).
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: usize,
    frame: CMatrix,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Self {
            ambient,
            frame: CMatrix::zeros(ambient, 0),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Self {
            ambient,
            frame: CMatrix::identity(ambient),
        }
    }

    /// Span of the given standard basis vectors.
    pub fn span_of_basis(ambient: usize, indices: &[usize]) -> Self {
        let mut frame = CMatrix::zeros(ambient, indices.len());
        for (j, &i) in indices.iter().enumerate() {
            frame[(i, j)] = super::ONE;
        }
        Self { ambient, frame }
    }

    /// Span of arbitrary vectors; orthonormalizes and truncates rank.
    pub fn span_of_columns(ambient: usize, columns: &[Vec<Complex64>]) -> Self {
        Self {
            ambient,
            frame: orthonormalize(ambient, columns, 1e-7),
        }
    }

    /// Wrap a frame that is already orthonormal (checked).
    pub fn from_orthonormal_frame(frame: CMatrix, tol: &ToleranceContext) -> Result<Self> {
        let ambient = frame.rows();
        let gram = frame.adjoint().mul_mat(&frame);
        let k = frame.cols();
        let res = gram.sub_mat(&CMatrix::identity(k)).norm_fro();
        if res > tol.eq_tol * (1.0 + k as f64) {
            return Err(Error::Precondition(format!(
                "frame is not orthonormal: ‖F†F − I‖ = {res:.3e}"
            )));
        }
        Ok(Self { ambient, frame })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.frame.cols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient
    }

    pub fn frame(&self) -> &CMatrix {
        &self.frame
    }

    /// Orthogonal projector F F†.
    pub fn projector(&self) -> CMatrix {
        if self.dim() == 0 {
            return CMatrix::zeros(self.ambient, self.ambient);
        }
        self.frame.mul_mat(&self.frame.adjoint())
    }

    /// Compress a d×d operator to subspace coordinates: F† X F.
    pub fn compress(&self, x: &CMatrix) -> CMatrix {
        self.frame.adjoint().mul_mat(x).mul_mat(&self.frame)
    }

    /// Embed a k×k operator back into the ambient space: F Y F†.
    pub fn embed(&self, y: &CMatrix) -> CMatrix {
        self.frame.mul_mat(y).mul_mat(&self.frame.adjoint())
    }

    pub fn complement(&self) -> Self {
        let p = self.projector();
        let tol = ToleranceContext::default();
        let frame = null_space(&p, &tol).expect("projector null space");
        Self {
            ambient: self.ambient,
            frame,
        }
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        check_ambient(self, other)?;
        // null space of [P1 - I; P2 - I]: vectors fixed by both projectors
        let id = CMatrix::identity(self.ambient);
        let top = self.projector().sub_mat(&id);
        let bottom = other.projector().sub_mat(&id);
        let stacked = top.vstack(&bottom);
        let tol = ToleranceContext::default();
        let frame = null_space(&stacked, &tol)?;
        Ok(Self {
            ambient: self.ambient,
            frame,
        })
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        check_ambient(self, other)?;
        let tol = ToleranceContext::default();
        support_projector(&self.projector().add_mat(&other.projector()), &tol)
    }

    /// ‖(I − P_other) P_self‖ ≤ eq_tol, i.e. self ⊆ other.
    pub fn contained_in(&self, other: &Self, tol: &ToleranceContext) -> Result<bool> {
        check_ambient(self, other)?;
        if self.dim() == 0 {
            return Ok(true);
        }
        let id = CMatrix::identity(self.ambient);
        let leak = id.sub_mat(&other.projector()).mul_mat(&self.projector());
        Ok(leak.norm_op() <= tol.eq_tol)
    }

    pub fn is_orthogonal_to(&self, other: &Self, tol: &ToleranceContext) -> Result<bool> {
        check_ambient(self, other)?;
        let overlap = self.frame.adjoint().mul_mat(&other.frame);
        Ok(overlap.norm_op() <= tol.eq_tol)
    }

    /// Angle-free distance between subspaces: ‖P1 − P2‖.
    pub fn projector_distance(&self, other: &Self) -> f64 {
        self.projector().sub_mat(&other.projector()).norm_op()
    }
}

fn check_ambient(a: &Subspace, b: &Subspace) -> Result<()> {
    if a.ambient != b.ambient {
        return Err(Error::DimensionMismatch(format!(
            "ambient dimensions differ: {} vs {}",
            a.ambient, b.ambient
        )));
    }
    Ok(())
}

/// Support projector of a positive semidefinite matrix: the span of
/// eigenvectors with eigenvalue above `rank_cut` relative to the largest.
/// Near-zero eigenvalues are clipped to zero first; ties at the cut resolve
/// toward inclusion. A significantly negative eigenvalue (below
/// −eq_tol·‖A‖) is an error.
pub fn support_projector(a: &CMatrix, tol: &ToleranceContext) -> Result<Subspace> {
    a.check_square()?;
    let eig = eig_hermitian(a)?;
    let n = a.rows();
    let scale = eig.spectral_radius();
    if let Some(&min) = eig.eigenvalues.first() {
        if min < -tol.eq_tol * scale.max(1.0) {
            return Err(Error::NotPositive { min_eig: min });
        }
    }
    let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    if lmax == 0.0 {
        return Ok(Subspace::zero(n));
    }
    let cut = tol.rank_cut * lmax;
    let cols: Vec<Vec<Complex64>> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l.max(0.0) >= cut)
        .map(|(k, _)| eig.eigenvectors.column(k))
        .collect();
    let frame = CMatrix::from_columns(n, &cols);
    Ok(Subspace { ambient: n, frame })
}

/// Lattice operations in the dispatch form used by callers that work over a
/// run-time choice of operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspaceOp {
    Intersect,
    Sum,
    Complement,
    Contains,
}

pub enum SubspaceResult {
    Space(Subspace),
    Bool(bool),
}

pub fn subspace_op(
    op: SubspaceOp,
    s1: &Subspace,
    s2: Option<&Subspace>,
    tol: &ToleranceContext,
) -> Result<SubspaceResult> {
    fn need<'a>(s2: Option<&'a Subspace>) -> Result<&'a Subspace> {
        s2.ok_or_else(|| Error::Precondition("operation needs a second subspace".into()))
    }
    match op {
        SubspaceOp::Intersect => Ok(SubspaceResult::Space(s1.intersect(need(s2)?)?)),
        SubspaceOp::Sum => Ok(SubspaceResult::Space(s1.sum(need(s2)?)?)),
        SubspaceOp::Complement => Ok(SubspaceResult::Space(s1.complement())),
        SubspaceOp::Contains => Ok(SubspaceResult::Bool(need(s2)?.contained_in(s1, tol)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{ONE, ZERO};

    fn tol() -> ToleranceContext {
        ToleranceContext::default()
    }

    #[test]
    fn complement_of_ray() {
        let s = Subspace::span_of_basis(2, &[0]);
        let c = s.complement();
        assert_eq!(c.dim(), 1);
        assert!((c.frame()[(1, 0)].norm() - 1.0).abs() < 1e-12);
        assert!(c.frame()[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn intersect_planes() {
        let s1 = Subspace::span_of_basis(3, &[0, 1]);
        let s2 = Subspace::span_of_basis(3, &[1, 2]);
        let meet = s1.intersect(&s2).unwrap();
        assert_eq!(meet.dim(), 1);
        assert!((meet.frame()[(1, 0)].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn contains_diagonal_ray() {
        let big = Subspace::span_of_basis(3, &[0, 1]);
        let inv_sqrt2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let ray = Subspace::span_of_columns(3, &[vec![inv_sqrt2, inv_sqrt2, ZERO]]);
        assert!(ray.contained_in(&big, &tol()).unwrap());
        assert!(!big.contained_in(&ray, &tol()).unwrap());
    }

    #[test]
    fn sum_contains_both_summands() {
        let s1 = Subspace::span_of_basis(4, &[0]);
        let s2 = Subspace::span_of_columns(4, &[vec![ONE, ONE, ONE, ZERO]]);
        let s = s1.sum(&s2).unwrap();
        assert!(s1.contained_in(&s, &tol()).unwrap());
        assert!(s2.contained_in(&s, &tol()).unwrap());
        assert_eq!(s.dim(), 2);
    }

    #[test]
    fn intersect_with_complement_is_zero() {
        let s = Subspace::span_of_columns(3, &[vec![ONE, 2.0 * ONE, ZERO], vec![ZERO, ONE, ONE]]);
        let z = s.intersect(&s.complement()).unwrap();
        assert_eq!(z.dim(), 0);
    }

    #[test]
    fn support_of_zero_matrix() {
        let s = support_projector(&CMatrix::zeros(3, 3), &tol()).unwrap();
        assert!(s.is_zero());
    }

    #[test]
    fn support_of_projector_is_itself() {
        let p = CMatrix::real_diagonal(&[1.0, 0.0, 1.0]);
        let s = support_projector(&p, &tol()).unwrap();
        assert!(s.projector().sub_mat(&p).norm_fro() < 1e-12);
    }

    #[test]
    fn support_respects_rank_cut() {
        // diag(1, 1e-14, 0.3) with rank_cut 1e-10 keeps e0 and e2
        let a = CMatrix::real_diagonal(&[1.0, 1e-14, 0.3]);
        let s = support_projector(&a, &tol()).unwrap();
        assert_eq!(s.dim(), 2);
        let p = s.projector();
        assert!((p[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(p[(1, 1)].norm() < 1e-12);
        assert!((p[(2, 2)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn support_rejects_negative() {
        let a = CMatrix::real_diagonal(&[1.0, -0.5]);
        assert!(support_projector(&a, &tol()).is_err());
    }

    #[test]
    fn support_commutes_with_input() {
        let a = CMatrix::from_fn(4, 4, |i, j| {
            Complex64::new(((i + j) as f64).sin(), (i as f64 - j as f64) * 0.1)
        })
        .hermitian_part();
        let a2 = a.mul_mat(&a); // PSD
        let s = support_projector(&a2, &tol()).unwrap();
        let p = s.projector();
        let comm = p.mul_mat(&a2).sub_mat(&a2.mul_mat(&p));
        assert!(comm.norm_fro() < 1e-10 * (1.0 + a2.norm_fro()));
    }

    #[test]
    fn ambient_mismatch_is_error() {
        let s1 = Subspace::full(2);
        let s2 = Subspace::full(3);
        assert!(s1.intersect(&s2).is_err());
    }

    #[test]
    fn subspace_op_dispatch() {
        let t = tol();
        let s1 = Subspace::span_of_basis(3, &[0, 1]);
        let s2 = Subspace::span_of_basis(3, &[1, 2]);
        match subspace_op(SubspaceOp::Intersect, &s1, Some(&s2), &t).unwrap() {
            SubspaceResult::Space(s) => assert_eq!(s.dim(), 1),
            _ => panic!("expected a subspace"),
        }
        match subspace_op(SubspaceOp::Sum, &s1, Some(&s2), &t).unwrap() {
            SubspaceResult::Space(s) => assert_eq!(s.dim(), 3),
            _ => panic!("expected a subspace"),
        }
        match subspace_op(SubspaceOp::Complement, &s1, None, &t).unwrap() {
            SubspaceResult::Space(s) => assert_eq!(s.dim(), 1),
            _ => panic!("expected a subspace"),
        }
        let ray = Subspace::span_of_basis(3, &[0]);
        match subspace_op(SubspaceOp::Contains, &s1, Some(&ray), &t).unwrap() {
            SubspaceResult::Bool(b) => assert!(b),
            _ => panic!("expected a boolean"),
        }
        assert!(subspace_op(SubspaceOp::Sum, &s1, None, &t).is_err());
    }
}
