//! Quantum channels, their superoperator matrices, restrictions to
//! enclosures, Cesàro averages, and continuous-time semigroup members built
//! from GKLS generators.
//!
//! The stored representation is the predual Kraus family: Φ_*(ρ) = Σ Bᵢρ Bᵢ†
//! evolves states, Φ(x) = Σ Bᵢ† x Bᵢ evolves observables. The two pictures
//! are linked by tr(Φ(x)ρ) = tr(x Φ_*(ρ)); in column-stacking vectorization
//! the Heisenberg matrix is the adjoint of the predual matrix.

use crate::error::{Error, Result};
use crate::numerics::{
    eig_hermitian, expm, unvectorize, vec_norm, vec_sub, vectorize, CMatrix, Subspace,
    ToleranceContext,
};
use num_complex::Complex64;

/// Which side of the trace duality a map acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    /// Observable evolution, Φ(x) = Σ Bᵢ† x Bᵢ; unital.
    Heisenberg,
    /// State evolution, Φ_*(ρ) = Σ Bᵢ ρ Bᵢ†; trace preserving.
    Predual,
}

/// A completely positive map given by predual Kraus operators.
///
/// `validate` requires unitality/trace preservation (‖Σ Bᵢ†Bᵢ − I‖ ≤ eq_tol).
/// Truncations of infinite-dimensional channels with absorbing boundaries are
/// trace non-increasing instead; those go through `new_subnormalized`, which
/// only requires Σ Bᵢ†Bᵢ ≤ I + eq_tol.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    dim: usize,
    kraus: Vec<CMatrix>,
    tol: ToleranceContext,
    fingerprint: u64,
    normalization_residual: f64,
    trace_preserving: bool,
}

/// Diagnostic returned when validation fails: the residual and the offending
/// Kraus sum Σ Bᵢ†Bᵢ.
#[derive(Debug, Clone)]
pub struct ValidationDiagnostic {
    pub residual: f64,
    pub kraus_sum: CMatrix,
}

impl QuantumChannel {
    /// Validate a Kraus family as a trace-preserving channel.
    pub fn validate(kraus: Vec<CMatrix>, dim: usize, tol: ToleranceContext) -> Result<Self> {
        let sum = kraus_sum_checked(&kraus, dim)?;
        let residual = sum.sub_mat(&CMatrix::identity(dim)).norm_op();
        if residual > tol.eq_tol {
            return Err(Error::NotTracePreserving {
                residual,
                eq_tol: tol.eq_tol,
            });
        }
        Ok(Self {
            dim,
            fingerprint: fingerprint(&kraus),
            kraus,
            tol,
            normalization_residual: residual,
            trace_preserving: true,
        })
    }

    /// Like [`QuantumChannel::validate`] but reporting the offending sum on
    /// failure instead of a bare error.
    pub fn validate_with_diagnostic(
        kraus: Vec<CMatrix>,
        dim: usize,
        tol: ToleranceContext,
    ) -> std::result::Result<Self, Box<ValidationDiagnostic>> {
        let sum = match kraus_sum_checked(&kraus, dim) {
            Ok(s) => s,
            Err(_) => {
                return Err(Box::new(ValidationDiagnostic {
                    residual: f64::INFINITY,
                    kraus_sum: CMatrix::zeros(dim, dim),
                }))
            }
        };
        let residual = sum.sub_mat(&CMatrix::identity(dim)).norm_op();
        if residual > tol.eq_tol {
            return Err(Box::new(ValidationDiagnostic {
                residual,
                kraus_sum: sum,
            }));
        }
        Ok(Self {
            dim,
            fingerprint: fingerprint(&kraus),
            kraus,
            tol,
            normalization_residual: residual,
            trace_preserving: true,
        })
    }

    /// Accept a trace non-increasing family (Σ Bᵢ†Bᵢ ≤ I + eq_tol). Used for
    /// absorbing-boundary truncations.
    pub fn new_subnormalized(
        kraus: Vec<CMatrix>,
        dim: usize,
        tol: ToleranceContext,
    ) -> Result<Self> {
        let sum = kraus_sum_checked(&kraus, dim)?;
        let gap = CMatrix::identity(dim).sub_mat(&sum);
        let eig = eig_hermitian(&gap.hermitian_part())?;
        let min = eig.eigenvalues.first().copied().unwrap_or(0.0);
        if min < -tol.eq_tol {
            return Err(Error::Precondition(format!(
                "Kraus sum exceeds identity by {:.3e}",
                -min
            )));
        }
        let residual = sum.sub_mat(&CMatrix::identity(dim)).norm_op();
        Ok(Self {
            dim,
            fingerprint: fingerprint(&kraus),
            kraus,
            tol,
            normalization_residual: residual,
            trace_preserving: residual <= tol.eq_tol,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn tol(&self) -> &ToleranceContext {
        &self.tol
    }

    /// Hash of the Kraus data; derived objects carry it for cache coherence.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    pub fn normalization_residual(&self) -> f64 {
        self.normalization_residual
    }

    /// Apply the channel to a d×d matrix in the requested picture.
    pub fn apply(&self, x: &CMatrix, picture: Picture) -> Result<CMatrix> {
        if x.rows() != self.dim || x.cols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}, channel dimension is {}",
                x.rows(),
                x.cols(),
                self.dim
            )));
        }
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for b in &self.kraus {
            let term = match picture {
                Picture::Heisenberg => b.adjoint().mul_mat(x).mul_mat(b),
                Picture::Predual => b.mul_mat(x).mul_mat(&b.adjoint()),
            };
            out = out.add_mat(&term);
        }
        Ok(out)
    }

    /// d²×d² matrix of the channel in the requested picture, acting on
    /// column-stacked vectorizations.
    pub fn superoperator(&self, picture: Picture) -> Superoperator {
        let d = self.dim;
        let mut m = CMatrix::zeros(d * d, d * d);
        for b in &self.kraus {
            let term = match picture {
                // vec(B† x B) = (Bᵀ ⊗ B†) vec(x)
                Picture::Heisenberg => b.transpose().kron(&b.adjoint()),
                // vec(B ρ B†) = (conj(B) ⊗ B) vec(ρ)
                Picture::Predual => b.conj().kron(b),
            };
            m = m.add_mat(&term);
        }
        Superoperator {
            dim: d,
            matrix: m,
            picture,
        }
    }

    /// Restriction to an enclosure V with frame F: predual Kraus {F† Bᵢ F}.
    ///
    /// Refuses when the subharmonicity slack λ_min(Φ(p_V) − p_V) is below
    /// −eq_tol, since the restriction formula needs an enclosure.
    pub fn restrict(&self, v: &Subspace) -> Result<QuantumChannel> {
        if v.ambient_dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "subspace ambient {} vs channel dimension {}",
                v.ambient_dim(),
                self.dim
            )));
        }
        if v.dim() == 0 {
            return Err(Error::Precondition(
                "cannot restrict to the zero subspace".into(),
            ));
        }
        let slack = self.subharmonic_slack(v)?;
        if slack < -self.tol.eq_tol {
            return Err(Error::NotEnclosure { slack });
        }
        let restricted: Vec<CMatrix> = self.kraus.iter().map(|b| v.compress(b)).collect();
        if self.trace_preserving {
            QuantumChannel::validate(restricted, v.dim(), self.tol)
        } else {
            QuantumChannel::new_subnormalized(restricted, v.dim(), self.tol)
        }
    }

    /// λ_min(Φ(p_V) − p_V); nonnegative exactly when V is an enclosure.
    pub fn subharmonic_slack(&self, v: &Subspace) -> Result<f64> {
        let p = v.projector();
        let phi_p = self.apply(&p, Picture::Heisenberg)?;
        let eig = eig_hermitian(&phi_p.sub_mat(&p).hermitian_part())?;
        Ok(eig.eigenvalues.first().copied().unwrap_or(0.0))
    }
}

fn kraus_sum_checked(kraus: &[CMatrix], dim: usize) -> Result<CMatrix> {
    if kraus.is_empty() {
        return Err(Error::EmptyKraus);
    }
    let mut sum = CMatrix::zeros(dim, dim);
    for (i, b) in kraus.iter().enumerate() {
        if b.rows() != dim || b.cols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "kraus[{i}] is {}x{}, expected {dim}x{dim}",
                b.rows(),
                b.cols()
            )));
        }
        b.check_finite()?;
        sum = sum.add_mat(&b.adjoint().mul_mat(b));
    }
    Ok(sum)
}

fn fingerprint(kraus: &[CMatrix]) -> u64 {
    // FNV-1a over the little-endian bytes of the entries
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    for b in kraus {
        eat(&(b.rows() as u64).to_le_bytes());
        for z in b.data() {
            eat(&z.re.to_le_bytes());
            eat(&z.im.to_le_bytes());
        }
    }
    h
}

/// A d²×d² matrix representation of a map on d×d matrices.
#[derive(Debug, Clone)]
pub struct Superoperator {
    pub dim: usize,
    pub matrix: CMatrix,
    pub picture: Picture,
}

impl Superoperator {
    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        let v = self.matrix.mul_vec(&vectorize(x));
        unvectorize(&v, self.dim, self.dim)
    }

    /// The same map in the other picture (adjoint under the trace pairing).
    pub fn dual(&self) -> Superoperator {
        Superoperator {
            dim: self.dim,
            matrix: self.matrix.adjoint(),
            picture: match self.picture {
                Picture::Heisenberg => Picture::Predual,
                Picture::Predual => Picture::Heisenberg,
            },
        }
    }
}

/// Anything that can evolve observables and states: a Kraus channel or a
/// sampled member exp(tℒ) of a continuous-time semigroup held in
/// superoperator form.
pub trait ChannelMap {
    fn map_dim(&self) -> usize;
    fn map_tol(&self) -> &ToleranceContext;
    fn map_apply(&self, x: &CMatrix, picture: Picture) -> Result<CMatrix>;
    /// Heisenberg-picture superoperator matrix.
    fn heisenberg_matrix(&self) -> CMatrix;

    /// λ_min(Φ(p_V) − p_V) for this map.
    fn slack(&self, v: &Subspace) -> Result<f64> {
        let p = v.projector();
        let phi_p = self.map_apply(&p, Picture::Heisenberg)?;
        let eig = eig_hermitian(&phi_p.sub_mat(&p).hermitian_part())?;
        Ok(eig.eigenvalues.first().copied().unwrap_or(0.0))
    }
}

impl ChannelMap for QuantumChannel {
    fn map_dim(&self) -> usize {
        self.dim
    }
    fn map_tol(&self) -> &ToleranceContext {
        &self.tol
    }
    fn map_apply(&self, x: &CMatrix, picture: Picture) -> Result<CMatrix> {
        self.apply(x, picture)
    }
    fn heisenberg_matrix(&self) -> CMatrix {
        self.superoperator(Picture::Heisenberg).matrix
    }
}

/// A GKLS generator ℒ(x) = i[H, x] + Σ (Lᵢ† x Lᵢ − ½{Lᵢ†Lᵢ, x}) in the
/// Heisenberg picture.
#[derive(Debug, Clone)]
pub struct GKLSGenerator {
    dim: usize,
    hamiltonian: CMatrix,
    jumps: Vec<CMatrix>,
    tol: ToleranceContext,
}

impl GKLSGenerator {
    pub fn new(hamiltonian: CMatrix, jumps: Vec<CMatrix>, tol: ToleranceContext) -> Result<Self> {
        hamiltonian.check_square()?;
        hamiltonian.check_finite()?;
        let dim = hamiltonian.rows();
        if !hamiltonian.is_hermitian(tol.eq_tol) {
            return Err(Error::Precondition("hamiltonian is not Hermitian".into()));
        }
        for (i, l) in jumps.iter().enumerate() {
            if l.rows() != dim || l.cols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "jump[{i}] is {}x{}, expected {dim}x{dim}",
                    l.rows(),
                    l.cols()
                )));
            }
            l.check_finite()?;
        }
        Ok(Self {
            dim,
            hamiltonian,
            jumps,
            tol,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Heisenberg-picture generator as a d²×d² matrix.
    pub fn generator_matrix(&self) -> CMatrix {
        let d = self.dim;
        let id = CMatrix::identity(d);
        // column stacking: vec(AX) = (I ⊗ A) vec X, vec(XA) = (Aᵀ ⊗ I) vec X
        let h = &self.hamiltonian;
        let comm = id.kron(h).sub_mat(&h.transpose().kron(&id));
        let mut m = comm.scale(Complex64::new(0.0, 1.0));
        for l in &self.jumps {
            let ldl = l.adjoint().mul_mat(l);
            let sandwich = l.transpose().kron(&l.adjoint());
            let anti = id
                .kron(&ldl)
                .add_mat(&ldl.transpose().kron(&id))
                .scale_re(0.5);
            m = m.add_mat(&sandwich.sub_mat(&anti));
        }
        m
    }

    /// The semigroup member exp(tℒ), held in superoperator form. t ≥ 0.
    pub fn sample(&self, t: f64) -> Result<SampledChannel> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let gen = self.generator_matrix();
        let heis = expm(&gen.scale_re(t))?;
        Ok(SampledChannel {
            dim: self.dim,
            heisenberg: Superoperator {
                dim: self.dim,
                matrix: heis,
                picture: Picture::Heisenberg,
            },
            tol: self.tol,
            time: t,
        })
    }
}

/// Builds exp(tℒ) from a GKLS generator. Convenience wrapper for
/// [`GKLSGenerator::sample`].
pub fn generator_channel(gen: &GKLSGenerator, t: f64) -> Result<SampledChannel> {
    gen.sample(t)
}

/// One member exp(tℒ) of a continuous-time semigroup, kept in superoperator
/// form (no Kraus extraction).
#[derive(Debug, Clone)]
pub struct SampledChannel {
    dim: usize,
    heisenberg: Superoperator,
    tol: ToleranceContext,
    time: f64,
}

impl SampledChannel {
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn superoperator(&self, picture: Picture) -> Superoperator {
        match picture {
            Picture::Heisenberg => self.heisenberg.clone(),
            Picture::Predual => self.heisenberg.dual(),
        }
    }
}

impl ChannelMap for SampledChannel {
    fn map_dim(&self) -> usize {
        self.dim
    }
    fn map_tol(&self) -> &ToleranceContext {
        &self.tol
    }
    fn map_apply(&self, x: &CMatrix, picture: Picture) -> Result<CMatrix> {
        match picture {
            Picture::Heisenberg => self.heisenberg.apply(x),
            Picture::Predual => self.heisenberg.dual().apply(x),
        }
    }
    fn heisenberg_matrix(&self) -> CMatrix {
        self.heisenberg.matrix.clone()
    }
}

/// Stopping rule for iterative limits.
#[derive(Debug, Clone, Copy)]
pub struct StopRule {
    /// Iteration halts once consecutive iterates (or averages) differ by no
    /// more than this in Frobenius norm.
    pub stall_tol: f64,
    pub max_terms: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        // peripheral eigenvalues decay like 1/n in Cesàro mean, so stall
        // detection needs a generous term budget
        Self {
            stall_tol: 1e-9,
            max_terms: 100_000,
        }
    }
}

/// Convergence report attached to iterative results.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceReport {
    pub terms: usize,
    pub converged: bool,
    pub last_delta: f64,
}

/// Precomputed superoperator matrix used to drive iteration loops; one
/// matrix-vector product per step regardless of the Kraus count.
pub struct Propagator {
    dim: usize,
    matrix: CMatrix,
}

impl Propagator {
    pub fn new(map: &impl ChannelMap, picture: Picture) -> Self {
        let matrix = match picture {
            Picture::Heisenberg => map.heisenberg_matrix(),
            Picture::Predual => map.heisenberg_matrix().adjoint(),
        };
        Self {
            dim: map.map_dim(),
            matrix,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.matrix.mul_vec(v)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Cesàro average (1/n) Σ_{k<n} Φᵏ(X), stopped at the first n where
/// consecutive averages differ by at most `stop.stall_tol`, or at
/// `stop.max_terms` with a non-converged flag.
pub fn cesaro_average(
    map: &impl ChannelMap,
    x: &CMatrix,
    picture: Picture,
    stop: &StopRule,
) -> Result<(CMatrix, ConvergenceReport)> {
    let d = map.map_dim();
    if x.rows() != d || x.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, map dimension is {d}",
            x.rows(),
            x.cols()
        )));
    }
    let prop = Propagator::new(map, picture);
    let mut iterate = vectorize(x);
    let mut avg = iterate.clone();
    let mut report = ConvergenceReport {
        terms: 1,
        converged: false,
        last_delta: f64::INFINITY,
    };
    for n in 1..stop.max_terms {
        iterate = prop.step(&iterate);
        // avg_{n+1} = avg_n + (iterate - avg_n) / (n+1)
        let mut delta_sq = 0.0;
        let w = 1.0 / (n as f64 + 1.0);
        for (a, it) in avg.iter_mut().zip(&iterate) {
            let delta = (it - *a) * w;
            delta_sq += delta.norm_sqr();
            *a += delta;
        }
        let delta = delta_sq.sqrt();
        report.terms = n + 1;
        report.last_delta = delta;
        if delta <= stop.stall_tol {
            report.converged = true;
            break;
        }
    }
    if stop.max_terms == 1 {
        report.converged = true;
        report.last_delta = 0.0;
    }
    Ok((unvectorize(&avg, d, d)?, report))
}

/// Plain power limit lim Φⁿ(X), stall-detected on consecutive iterates.
/// Converges geometrically where it applies (monotone subharmonic inputs).
pub fn power_limit(
    map: &impl ChannelMap,
    x: &CMatrix,
    picture: Picture,
    stop: &StopRule,
) -> Result<(CMatrix, ConvergenceReport)> {
    let d = map.map_dim();
    let prop = Propagator::new(map, picture);
    let mut current = vectorize(x);
    let mut report = ConvergenceReport {
        terms: 0,
        converged: false,
        last_delta: f64::INFINITY,
    };
    for n in 0..stop.max_terms {
        let next = prop.step(&current);
        let delta = vec_norm(&vec_sub(&next, &current));
        current = next;
        report.terms = n + 1;
        report.last_delta = delta;
        if delta <= stop.stall_tol {
            report.converged = true;
            break;
        }
    }
    Ok((unvectorize(&current, d, d)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{ONE, ZERO};

    fn tol() -> ToleranceContext {
        ToleranceContext::default()
    }

    pub(crate) fn amplitude_damping(gamma: f64) -> QuantumChannel {
        let b0 = CMatrix::from_rows(&[
            vec![ONE, ZERO],
            vec![ZERO, Complex64::new((1.0 - gamma).sqrt(), 0.0)],
        ])
        .unwrap();
        let mut b1 = CMatrix::zeros(2, 2);
        b1[(0, 1)] = Complex64::new(gamma.sqrt(), 0.0);
        QuantumChannel::validate(vec![b0, b1], 2, tol()).unwrap()
    }

    pub(crate) fn three_level_absorber() -> QuantumChannel {
        // B1 = |0><0| + |1><1|, B2 = |ψ><2| with ψ = (|0⟩+|1⟩)/√2
        let mut b1 = CMatrix::zeros(3, 3);
        b1[(0, 0)] = ONE;
        b1[(1, 1)] = ONE;
        let mut b2 = CMatrix::zeros(3, 3);
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        b2[(0, 2)] = r;
        b2[(1, 2)] = r;
        QuantumChannel::validate(vec![b1, b2], 3, tol()).unwrap()
    }

    #[test]
    fn amplitude_damping_validates() {
        let ch = amplitude_damping(0.5);
        assert!(ch.is_trace_preserving());
    }

    #[test]
    fn single_scaled_identity_rejected() {
        let b = CMatrix::identity(2).scale_re(std::f64::consts::FRAC_1_SQRT_2);
        match QuantumChannel::validate_with_diagnostic(vec![b], 2, tol()) {
            Err(diag) => assert!((diag.residual - 0.5).abs() < 1e-12),
            Ok(_) => panic!("should not validate"),
        }
    }

    #[test]
    fn absorber_validates() {
        let ch = three_level_absorber();
        assert_eq!(ch.dim(), 3);
    }

    #[test]
    fn empty_kraus_rejected() {
        assert!(matches!(
            QuantumChannel::validate(vec![], 2, tol()),
            Err(Error::EmptyKraus)
        ));
    }

    #[test]
    fn heisenberg_fixes_identity() {
        let ch = three_level_absorber();
        let i3 = CMatrix::identity(3);
        let out = ch.apply(&i3, Picture::Heisenberg).unwrap();
        assert!(out.sub_mat(&i3).norm_fro() < 1e-12);
    }

    #[test]
    fn absorber_heisenberg_on_p0() {
        let ch = three_level_absorber();
        let p0 = CMatrix::matrix_unit(3, 0, 0);
        let out = ch.apply(&p0, Picture::Heisenberg).unwrap();
        let expected = {
            let mut m = CMatrix::matrix_unit(3, 0, 0);
            m[(2, 2)] = Complex64::new(0.5, 0.0);
            m
        };
        assert!(out.sub_mat(&expected).norm_fro() < 1e-14);
    }

    #[test]
    fn damping_predual_on_excited() {
        let ch = amplitude_damping(0.5);
        let p1 = CMatrix::matrix_unit(2, 1, 1);
        let out = ch.apply(&p1, Picture::Predual).unwrap();
        let expected = CMatrix::real_diagonal(&[0.5, 0.5]);
        assert!(out.sub_mat(&expected).norm_fro() < 1e-14);
    }

    #[test]
    fn superoperator_matches_apply() {
        let ch = amplitude_damping(0.3);
        for picture in [Picture::Heisenberg, Picture::Predual] {
            let sup = ch.superoperator(picture);
            let x = CMatrix::from_fn(2, 2, |i, j| Complex64::new(i as f64 + 0.2, j as f64 - 0.4));
            let via_matrix = sup.apply(&x).unwrap();
            let direct = ch.apply(&x, picture).unwrap();
            assert!(via_matrix.sub_mat(&direct).norm_fro() < 1e-13);
        }
    }

    #[test]
    fn identity_channel_superoperator() {
        let ch = QuantumChannel::validate(vec![CMatrix::identity(3)], 3, tol()).unwrap();
        let sup = ch.superoperator(Picture::Heisenberg);
        assert!(sup.matrix.sub_mat(&CMatrix::identity(9)).norm_fro() < 1e-14);
    }

    #[test]
    fn pictures_are_trace_duals() {
        let ch = three_level_absorber();
        let heis = ch.superoperator(Picture::Heisenberg);
        let pred = ch.superoperator(Picture::Predual);
        assert!(heis.matrix.sub_mat(&pred.matrix.adjoint()).norm_fro() < 1e-13);
    }

    #[test]
    fn restrict_absorber_to_r_is_identity_channel() {
        let ch = three_level_absorber();
        let v = Subspace::span_of_basis(3, &[0, 1]);
        let restricted = ch.restrict(&v).unwrap();
        assert_eq!(restricted.dim(), 2);
        let x = CMatrix::from_fn(2, 2, |i, j| Complex64::new(0.3 * i as f64, 0.7 * j as f64));
        let out = restricted.apply(&x, Picture::Predual).unwrap();
        assert!(out.sub_mat(&x).norm_fro() < 1e-12);
    }

    #[test]
    fn restrict_to_non_enclosure_refused() {
        let ch = amplitude_damping(0.5);
        let v = Subspace::span_of_basis(2, &[1]);
        assert!(matches!(ch.restrict(&v), Err(Error::NotEnclosure { .. })));
    }

    #[test]
    fn restrict_to_full_space_is_noop() {
        let ch = amplitude_damping(0.5);
        let v = Subspace::full(2);
        let restricted = ch.restrict(&v).unwrap();
        let x = CMatrix::from_fn(2, 2, |i, j| Complex64::new(i as f64, j as f64));
        let a = ch.apply(&x, Picture::Predual).unwrap();
        let b = restricted.apply(&x, Picture::Predual).unwrap();
        assert!(a.sub_mat(&b).norm_fro() < 1e-12);
    }

    #[test]
    fn restriction_composes() {
        let ch = three_level_absorber();
        let r = Subspace::span_of_basis(3, &[0, 1]);
        let once = ch.restrict(&r).unwrap();
        let ray = Subspace::span_of_basis(2, &[0]);
        let twice = once.restrict(&ray).unwrap();
        assert_eq!(twice.dim(), 1);
        // 1-dim trace preserving channel is the identity
        let x = CMatrix::identity(1);
        let out = twice.apply(&x, Picture::Predual).unwrap();
        assert!(out.sub_mat(&x).norm_fro() < 1e-12);
    }

    #[test]
    fn cesaro_identity_channel_converges_immediately() {
        let ch = QuantumChannel::validate(vec![CMatrix::identity(2)], 2, tol()).unwrap();
        let x = CMatrix::from_fn(2, 2, |i, j| Complex64::new(i as f64, j as f64));
        let (avg, rep) =
            cesaro_average(&ch, &x, Picture::Heisenberg, &StopRule::default()).unwrap();
        assert!(rep.converged);
        assert!(avg.sub_mat(&x).norm_fro() < 1e-12);
    }

    #[test]
    fn cesaro_kills_peripheral_rotation() {
        // unitary conjugation by diag(1, i) on |0><1|: averages of i^k
        let u = CMatrix::diagonal(&[ONE, Complex64::new(0.0, 1.0)]);
        let ch = QuantumChannel::validate(vec![u], 2, tol()).unwrap();
        let x = CMatrix::matrix_unit(2, 0, 1);
        let stop = StopRule {
            stall_tol: 1e-9,
            max_terms: 20_000,
        };
        let (avg, rep) = cesaro_average(&ch, &x, Picture::Heisenberg, &stop).unwrap();
        // |Σ_{k<n} i^k| / n ≤ √2/n
        assert!(!rep.converged);
        assert!(
            avg.norm_fro() <= 2.0 * std::f64::consts::SQRT_2 / 20_000.0,
            "{}",
            avg.norm_fro()
        );
    }

    #[test]
    fn cesaro_absorber_on_p0() {
        let ch = three_level_absorber();
        let p0 = CMatrix::matrix_unit(3, 0, 0);
        let stop = StopRule {
            stall_tol: 1e-10,
            max_terms: 2_000_000,
        };
        let (avg, _) = cesaro_average(&ch, &p0, Picture::Heisenberg, &stop).unwrap();
        let mut expected = CMatrix::matrix_unit(3, 0, 0);
        expected[(2, 2)] = Complex64::new(0.5, 0.0);
        // Φⁿ(p₀) is constant from n = 1 on; the Cesàro average carries an
        // O(1/n) tail from the k = 0 term
        assert!(avg.sub_mat(&expected).norm_fro() < 1e-4);
    }

    #[test]
    fn predual_preserves_trace_and_positivity() {
        let ch = amplitude_damping(0.5);
        let rho = {
            let g = CMatrix::from_fn(2, 2, |i, j| Complex64::new(0.4 + i as f64, 0.3 - j as f64));
            let p = g.adjoint().mul_mat(&g);
            let t = p.trace().re;
            p.scale_re(1.0 / t)
        };
        let out = ch.apply(&rho, Picture::Predual).unwrap();
        assert!((out.trace().re - 1.0).abs() < 1e-12);
        let eig = eig_hermitian(&out.hermitian_part()).unwrap();
        assert!(eig.eigenvalues[0] > -1e-12);
    }

    #[test]
    fn gkls_dephasing_decay() {
        // L = Z: ℒ(x) = ZxZ − x, exp(tℒ)(X) = e^{−2t} X for X = Pauli X
        let z = CMatrix::real_diagonal(&[1.0, -1.0]);
        let gen = GKLSGenerator::new(CMatrix::zeros(2, 2), vec![z], tol()).unwrap();
        let t = 0.9;
        let sampled = gen.sample(t).unwrap();
        let pauli_x = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let out = sampled.map_apply(&pauli_x, Picture::Heisenberg).unwrap();
        let expected = pauli_x.scale_re((-2.0 * t).exp());
        assert!(out.sub_mat(&expected).norm_fro() < 1e-12);
    }

    #[test]
    fn gkls_is_unital_and_trace_preserving() {
        let h = CMatrix::from_rows(&[
            vec![ONE, Complex64::new(0.2, 0.1)],
            vec![Complex64::new(0.2, -0.1), Complex64::new(-0.3, 0.0)],
        ])
        .unwrap();
        let l1 = CMatrix::from_fn(2, 2, |i, j| Complex64::new(0.3 * i as f64, 0.4 * j as f64));
        let gen = GKLSGenerator::new(h, vec![l1], tol()).unwrap();
        let sampled = gen.sample(1.3).unwrap();
        let id = CMatrix::identity(2);
        let heis = sampled.map_apply(&id, Picture::Heisenberg).unwrap();
        assert!(heis.sub_mat(&id).norm_fro() < 1e-12);
        let rho = CMatrix::real_diagonal(&[0.7, 0.3]);
        let out = sampled.map_apply(&rho, Picture::Predual).unwrap();
        assert!((out.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gkls_time_zero_is_identity() {
        let gen =
            GKLSGenerator::new(CMatrix::zeros(2, 2), vec![CMatrix::identity(2)], tol()).unwrap();
        let sampled = gen.sample(0.0).unwrap();
        assert!(
            sampled
                .heisenberg_matrix()
                .sub_mat(&CMatrix::identity(4))
                .norm_fro()
                < 1e-14
        );
    }

    #[test]
    fn gkls_negative_time_rejected() {
        let gen = GKLSGenerator::new(CMatrix::zeros(2, 2), vec![], tol()).unwrap();
        assert!(matches!(gen.sample(-1.0), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn gkls_semigroup_law() {
        let z = CMatrix::real_diagonal(&[1.0, -1.0]);
        let gen = GKLSGenerator::new(CMatrix::zeros(2, 2), vec![z], tol()).unwrap();
        let (s, t) = (0.6, 1.1);
        let a = gen.sample(s).unwrap().heisenberg_matrix();
        let b = gen.sample(t).unwrap().heisenberg_matrix();
        let c = gen.sample(s + t).unwrap().heisenberg_matrix();
        assert!(a.mul_mat(&b).sub_mat(&c).norm_fro() < 1e-12);
    }

    #[test]
    fn duality_identity_random_pairs() {
        let ch = three_level_absorber();
        let mut seed = 12345u64;
        let mut rand = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for _ in 0..20 {
            let x = CMatrix::from_fn(3, 3, |_, _| Complex64::new(rand(), rand()));
            let rho = CMatrix::from_fn(3, 3, |_, _| Complex64::new(rand(), rand()));
            let lhs = ch
                .apply(&x, Picture::Heisenberg)
                .unwrap()
                .mul_mat(&rho)
                .trace();
            let rhs = x
                .mul_mat(&ch.apply(&rho, Picture::Predual).unwrap())
                .trace();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn propagator_step_matches_apply() {
        let ch = amplitude_damping(0.25);
        let prop = Propagator::new(&ch, Picture::Predual);
        let x = CMatrix::from_fn(2, 2, |i, j| Complex64::new(0.3 + i as f64, 0.1 * j as f64));
        let via_prop = prop.step(&vectorize(&x));
        let direct = vectorize(&ch.apply(&x, Picture::Predual).unwrap());
        assert!(vec_norm(&vec_sub(&via_prop, &direct)) < 1e-13);
    }

    #[test]
    fn restrict_compress_commutes_for_supported_operators() {
        // p_V Φ(p_V x p_V) p_V = p_V Φ(x) p_V for x supported in V
        let ch = three_level_absorber();
        let v = Subspace::span_of_basis(3, &[0, 1]);
        let p = v.projector();
        let small = CMatrix::from_fn(2, 2, |i, j| Complex64::new(i as f64 + 1.0, j as f64 - 0.5));
        let x = v.embed(&small); // supported in V
        let lhs = {
            let compressed = p.mul_mat(&x).mul_mat(&p);
            let phi = ch.apply(&compressed, Picture::Heisenberg).unwrap();
            p.mul_mat(&phi).mul_mat(&p)
        };
        let rhs = {
            let phi = ch.apply(&x, Picture::Heisenberg).unwrap();
            p.mul_mat(&phi).mul_mat(&p)
        };
        assert!(lhs.sub_mat(&rhs).norm_fro() < 1e-12);
    }
}
