//! Structural analysis: enclosure certificates, fixed-point spaces,
//! invariant states, the recurrence decomposition, commutants, algebra
//! checks, and decompositions into orthogonal minimal enclosures.
//!
//! A closed subspace V is an enclosure when states supported in V stay
//! supported in V; equivalently the projection p_V is subharmonic,
//! Φ(p_V) ≥ p_V. Certificates report the slack λ_min(Φ(p_V) − p_V).

use crate::channel::{
    cesaro_average, ChannelMap, ConvergenceReport, Picture, Propagator, QuantumChannel, StopRule,
};
use crate::error::{Error, Result};
use crate::numerics::{
    eig_hermitian, support_projector, unvectorize, vec_norm, vec_sub, vectorize, CMatrix, Subspace,
    ToleranceContext,
};
use crate::sampling::SeededRng;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;

/// Subharmonicity certificate for a subspace.
#[derive(Debug, Clone)]
pub struct EnclosureCert {
    pub subspace: Subspace,
    /// λ_min(Φ(p_V) − p_V).
    pub slack: f64,
    pub is_enclosure: bool,
}

/// Certify whether V is an enclosure for the map. The zero subspace and the
/// full space are always certified (trivial cases of the definition).
pub fn is_enclosure(map: &impl ChannelMap, v: &Subspace) -> Result<EnclosureCert> {
    if v.ambient_dim() != map.map_dim() {
        return Err(Error::DimensionMismatch(format!(
            "subspace ambient {} vs map dimension {}",
            v.ambient_dim(),
            map.map_dim()
        )));
    }
    let slack = map.slack(v)?;
    let trivial = v.is_zero() || v.is_full();
    let is_enclosure = trivial || slack >= -map.map_tol().eq_tol;
    Ok(EnclosureCert {
        subspace: v.clone(),
        slack,
        is_enclosure,
    })
}

/// Largest leak ‖(I−p)Φ_*(ρ)(I−p)‖ over random states ρ supported in V.
/// This is the hereditary characterization of enclosures on the predual
/// side; tests check it against the subharmonic certificate.
pub fn hereditary_leak(
    map: &impl ChannelMap,
    v: &Subspace,
    n_states: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    if v.dim() == 0 {
        return Ok(0.0);
    }
    let q = CMatrix::identity(map.map_dim()).sub_mat(&v.projector());
    let mut worst = 0.0_f64;
    for _ in 0..n_states {
        let rho = crate::sampling::random_state(map.map_dim(), Some(v), rng);
        let out = map.map_apply(&rho, Picture::Predual)?;
        let leak = q.mul_mat(&out).mul_mat(&q).norm_op();
        worst = worst.max(leak);
    }
    Ok(worst)
}

/// Orthonormal basis (under the trace pairing) of the fixed-point space
/// F(P) = {x : Φ(x) = x}. The space is closed under adjoints; the residual
/// of that closure is tracked alongside the fixed-point residual.
#[derive(Debug, Clone)]
pub struct FixedPointSpace {
    pub basis: Vec<CMatrix>,
    pub dim: usize,
    /// max over the basis of ‖Φ(b) − b‖.
    pub max_fixed_residual: f64,
    /// max over the basis of the distance of b† from the span.
    pub adjoint_closure_residual: f64,
}

impl FixedPointSpace {
    /// Hilbert-Schmidt distance from x to the span of the basis, computed
    /// from the explicit remainder (no cancellation floor).
    pub fn distance_to_span(&self, x: &CMatrix) -> f64 {
        let mut rem = x.clone();
        for b in &self.basis {
            let coeff = b.hs_inner(x);
            rem = rem.sub_mat(&b.scale(coeff));
        }
        rem.norm_fro()
    }

    /// Random Hermitian element of the space: the Hermitian part of a
    /// random complex combination lies in the span because the span is
    /// closed under adjoints.
    pub fn random_hermitian_element(&self, rng: &mut impl Rng) -> CMatrix {
        let d = self.basis[0].rows();
        let mut x = CMatrix::zeros(d, d);
        for b in &self.basis {
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            x = x.add_mat(&b.scale(c));
        }
        x.hermitian_part()
    }
}

/// Kernel of (Φ̂ − I) where Φ̂ is the Heisenberg superoperator.
pub fn fixed_point_space(map: &impl ChannelMap) -> Result<FixedPointSpace> {
    let d = map.map_dim();
    let m = map.heisenberg_matrix().sub_mat(&CMatrix::identity(d * d));
    let frame = crate::numerics::null_space(&m, map.map_tol())?;
    let matrices: Vec<CMatrix> = (0..frame.cols())
        .map(|j| unvectorize(&frame.column(j), d, d))
        .collect::<Result<_>>()?;
    operator_space(matrices, Some(map))
}

/// Orthonormal basis of {x : x Gᵢ = Gᵢ x and x Gᵢ† = Gᵢ† x for all i},
/// computed as the joint kernel of the commutation superoperators.
pub fn commutant_basis(generators: &[CMatrix], tol: &ToleranceContext) -> Result<FixedPointSpace> {
    if generators.is_empty() {
        return Err(Error::Precondition("empty generator list".into()));
    }
    let d = generators[0].rows();
    let id = CMatrix::identity(d);
    let mut blocks: Vec<CMatrix> = Vec::new();
    for g in generators {
        g.check_square()?;
        if g.rows() != d {
            return Err(Error::DimensionMismatch("generator sizes differ".into()));
        }
        for gg in [g.clone(), g.adjoint()] {
            // vec(Gx - xG) = (I ⊗ G − Gᵀ ⊗ I) vec(x)
            blocks.push(id.kron(&gg).sub_mat(&gg.transpose().kron(&id)));
        }
    }
    let mut stacked = blocks[0].clone();
    for b in &blocks[1..] {
        stacked = stacked.vstack(b);
    }
    let frame = crate::numerics::null_space(&stacked, tol)?;
    let matrices: Vec<CMatrix> = (0..frame.cols())
        .map(|j| unvectorize(&frame.column(j), d, d))
        .collect::<Result<_>>()?;
    operator_space(matrices, None::<&QuantumChannel>)
}

/// Wrap an orthonormal family of matrices as an operator space, recording
/// the fixed-point and adjoint-closure residuals.
fn operator_space(
    basis: Vec<CMatrix>,
    residual_map: Option<&impl ChannelMap>,
) -> Result<FixedPointSpace> {
    let mut space = FixedPointSpace {
        dim: basis.len(),
        basis,
        max_fixed_residual: 0.0,
        adjoint_closure_residual: 0.0,
    };
    if let Some(map) = residual_map {
        for b in &space.basis {
            let r = map.map_apply(b, Picture::Heisenberg)?.sub_mat(b).norm_fro();
            space.max_fixed_residual = space.max_fixed_residual.max(r);
        }
    }
    space.adjoint_closure_residual = space
        .basis
        .iter()
        .map(|b| space.distance_to_span(&b.adjoint()))
        .fold(0.0, f64::max);
    Ok(space)
}

/// Convergence data for the invariant-state construction.
#[derive(Debug, Clone, Copy)]
pub struct InvariantStateReport {
    pub cesaro: ConvergenceReport,
    pub smoothing_steps: usize,
    /// ‖Φ_*(σ) − σ‖ for the returned state.
    pub invariance_residual: f64,
    pub converged: bool,
}

/// Invariant state whose support is the positive recurrent space R₊
/// (the supremum of supports over all invariant states).
///
/// Stage one Cesàro-averages the predual orbit of the maximally mixed state
/// I/d — a full-support start dominates every invariant support, and the
/// averaging suppresses peripheral oscillation. Stage two applies plain
/// predual powers to the average: transient remainders decay geometrically
/// while the invariant part is untouched, so support decisions are not
/// polluted by the O(1/n) Cesàro tail. Peripheral remainders survive stage
/// two but are supported inside R₊, where they are harmless.
pub fn maximal_invariant_state(
    map: &impl ChannelMap,
    stop: &StopRule,
) -> Result<(CMatrix, InvariantStateReport)> {
    let d = map.map_dim();
    let mixed = CMatrix::identity(d).scale_re(1.0 / d as f64);
    let (avg, cesaro) = cesaro_average(map, &mixed, Picture::Predual, stop)?;

    // plain-power smoothing
    let prop = Propagator::new(map, Picture::Predual);
    let mut current = vectorize(&avg);
    let mut best_delta = f64::INFINITY;
    let mut since_improvement = 0usize;
    let mut steps = 0usize;
    let budget = (stop.max_terms / 10).max(512);
    while steps < budget {
        let next = prop.step(&current);
        let delta = vec_norm(&vec_sub(&next, &current));
        current = next;
        steps += 1;
        if delta < best_delta * 0.999 {
            best_delta = delta;
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        if delta <= 1e-15 || since_improvement > 100 {
            break;
        }
    }

    let mut sigma = unvectorize(&current, d, d)?.hermitian_part();
    let tr = sigma.trace().re;
    if tr.abs() > 1e-300 {
        sigma = sigma.scale_re(1.0 / tr);
    }
    let invariance_residual = map
        .map_apply(&sigma, Picture::Predual)?
        .sub_mat(&sigma)
        .norm_op();
    let converged = cesaro.converged || invariance_residual <= stop.stall_tol.sqrt();
    Ok((
        sigma,
        InvariantStateReport {
            cesaro,
            smoothing_steps: steps,
            invariance_residual,
            converged,
        },
    ))
}

/// The triple (R₊, R₀, T) of mutually orthogonal subspaces. In finite
/// dimension the null recurrent space R₀ is always zero, so the recurrent
/// space R coincides with R₊ and T is its orthocomplement.
#[derive(Debug, Clone)]
pub struct RecurrenceDecomposition {
    pub r_plus: Subspace,
    pub r_zero: Subspace,
    pub transient: Subspace,
    pub max_invariant_state: CMatrix,
    pub r_plus_cert: EnclosureCert,
    pub report: InvariantStateReport,
}

impl RecurrenceDecomposition {
    /// R = R₊ ⊕ R₀ (= R₊ here).
    pub fn recurrent(&self) -> &Subspace {
        &self.r_plus
    }
}

pub fn recurrence_decomposition(map: &impl ChannelMap) -> Result<RecurrenceDecomposition> {
    let (sigma, report) = maximal_invariant_state(map, &StopRule::default())?;
    // clip tiny negative eigenvalues before the support decision
    let eig = eig_hermitian(&sigma)?;
    let clipped = eig.map_eigenvalues(|l| l.max(0.0));
    let r_plus = support_projector(&clipped, map.map_tol())?;
    let transient = r_plus.complement();
    let r_zero = Subspace::zero(map.map_dim());
    let r_plus_cert = is_enclosure(map, &r_plus)?;
    Ok(RecurrenceDecomposition {
        r_plus,
        r_zero,
        transient,
        max_invariant_state: sigma,
        r_plus_cert,
        report,
    })
}

/// Result of the span-closure test on an operator space.
#[derive(Debug, Clone, Copy)]
pub struct AlgebraCheck {
    pub is_algebra: bool,
    /// Index pair of the product furthest from the span.
    pub worst_pair: (usize, usize),
    pub worst_distance: f64,
}

/// Check whether span(basis) is closed under products: every bᵢ·bⱼ must stay
/// within `eq_tol` of the span.
pub fn algebra_closure_check(space: &FixedPointSpace, tol: &ToleranceContext) -> AlgebraCheck {
    let mut worst = (0usize, 0usize);
    let mut worst_distance = 0.0_f64;
    for (i, bi) in space.basis.iter().enumerate() {
        for (j, bj) in space.basis.iter().enumerate() {
            let p = bi.mul_mat(bj);
            let dist = space.distance_to_span(&p);
            if dist > worst_distance {
                worst_distance = dist;
                worst = (i, j);
            }
        }
    }
    AlgebraCheck {
        is_algebra: worst_distance <= tol.eq_tol,
        worst_pair: worst,
        worst_distance,
    }
}

/// A decomposition of a subspace into mutually orthogonal minimal
/// enclosures.
#[derive(Debug, Clone)]
pub struct Dome {
    pub parts: Vec<Subspace>,
    pub spans: Subspace,
}

/// Decompose the recurrent space R into orthogonal minimal enclosures by
/// recursive splitting.
///
/// On each enclosure V the restricted channel is positive recurrent, so its
/// fixed points form an algebra whose projections correspond to enclosures;
/// distinct eigenspace clusters of a random Hermitian fixed point therefore
/// split V. A part is declared minimal when its restricted fixed-point space
/// is one-dimensional or when `non_split_draws` consecutive draws produce no
/// split. Identical seeds give identical decompositions.
pub fn minimal_enclosures(
    channel: &QuantumChannel,
    deco: &RecurrenceDecomposition,
    seed: u64,
) -> Result<Dome> {
    let mut rng = SeededRng::seed_from_u64(seed);
    let mut parts = Vec::new();
    if deco.r_plus.dim() > 0 {
        split_enclosure(channel, &deco.r_plus, &mut rng, 8, &mut parts)?;
    }
    // deterministic ordering regardless of recursion shape
    parts.sort_by(|a, b| {
        b.dim().cmp(&a.dim()).then_with(|| {
            let fa = format!("{:?}", a.frame().data().first());
            let fb = format!("{:?}", b.frame().data().first());
            fa.partial_cmp(&fb).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    Ok(Dome {
        parts,
        spans: deco.r_plus.clone(),
    })
}

fn split_enclosure(
    channel: &QuantumChannel,
    v: &Subspace,
    rng: &mut impl Rng,
    non_split_draws: usize,
    out: &mut Vec<Subspace>,
) -> Result<()> {
    if v.dim() == 1 {
        out.push(v.clone());
        return Ok(());
    }
    let restricted = channel.restrict(v)?;
    let fps = fixed_point_space(&restricted)?;
    if fps.dim <= 1 {
        out.push(v.clone());
        return Ok(());
    }
    for _ in 0..non_split_draws {
        let h = fps.random_hermitian_element(rng);
        let groups = eigenvalue_clusters(&h)?;
        if groups.len() < 2 {
            continue;
        }
        for cols in groups {
            let lifted: Vec<Vec<Complex64>> = cols
                .iter()
                .map(|c| {
                    let mut col = vec![Complex64::new(0.0, 0.0); v.ambient_dim()];
                    let frame = v.frame();
                    for (idx, coeff) in c.iter().enumerate() {
                        for r in 0..v.ambient_dim() {
                            col[r] += frame[(r, idx)] * coeff;
                        }
                    }
                    col
                })
                .collect();
            let w = Subspace::span_of_columns(v.ambient_dim(), &lifted);
            split_enclosure(channel, &w, rng, non_split_draws, out)?;
        }
        return Ok(());
    }
    out.push(v.clone());
    Ok(())
}

/// Group the eigenvectors of a Hermitian matrix by eigenvalue clusters
/// (relative gap above 1e-6 of the spread starts a new cluster). Returns
/// eigenvector coordinate columns per cluster.
fn eigenvalue_clusters(h: &CMatrix) -> Result<Vec<Vec<Vec<Complex64>>>> {
    let eig = eig_hermitian(h)?;
    let n = h.rows();
    if n == 0 {
        return Ok(vec![]);
    }
    let spread = eig.eigenvalues[n - 1] - eig.eigenvalues[0];
    let gap = 1e-6 * (1.0 + spread.abs());
    let mut groups: Vec<Vec<Vec<Complex64>>> = Vec::new();
    let mut current: Vec<Vec<Complex64>> = vec![eig.eigenvectors.column(0)];
    for k in 1..n {
        if eig.eigenvalues[k] - eig.eigenvalues[k - 1] > gap {
            groups.push(std::mem::take(&mut current));
        }
        current.push(eig.eigenvectors.column(k));
    }
    groups.push(current);
    Ok(groups)
}

/// Certificate for Z ∩ V⊥ when V ⊆ Z ⊆ R are enclosures (nested-enclosure
/// complement). A negative certificate is reported, not silently accepted.
pub fn enclosure_complement(
    map: &impl ChannelMap,
    v: &Subspace,
    z: &Subspace,
    deco: &RecurrenceDecomposition,
) -> Result<EnclosureCert> {
    let tol = map.map_tol();
    if !v.contained_in(z, tol)? {
        return Err(Error::Precondition("V is not contained in Z".into()));
    }
    if !z.contained_in(deco.recurrent(), tol)? {
        return Err(Error::Precondition(
            "Z is not contained in the recurrent space".into(),
        ));
    }
    for (name, s) in [("V", v), ("Z", z)] {
        let cert = is_enclosure(map, s)?;
        if !cert.is_enclosure {
            return Err(Error::Precondition(format!("{name} is not an enclosure")));
        }
    }
    let complement = z.intersect(&v.complement())?;
    is_enclosure(map, &complement)
}

/// Sample enclosures contained in R as spectral clusters of random Hermitian
/// fixed points of the restricted channel, lifted back to the ambient space.
/// Each draw may contribute several mutually orthogonal enclosures; the
/// groups of one draw are returned together.
pub fn random_enclosures_in_recurrent(
    channel: &QuantumChannel,
    deco: &RecurrenceDecomposition,
    rng: &mut impl Rng,
    draws: usize,
) -> Result<Vec<Vec<Subspace>>> {
    let r = deco.recurrent();
    if r.dim() == 0 {
        return Ok(vec![]);
    }
    let restricted = channel.restrict(r)?;
    let fps = fixed_point_space(&restricted)?;
    let mut out = Vec::new();
    for _ in 0..draws {
        let h = fps.random_hermitian_element(rng);
        let groups = eigenvalue_clusters(&h)?;
        let lifted: Vec<Subspace> = groups
            .iter()
            .map(|cols| {
                let ambient_cols: Vec<Vec<Complex64>> = cols
                    .iter()
                    .map(|c| {
                        let mut col = vec![Complex64::new(0.0, 0.0); r.ambient_dim()];
                        let frame = r.frame();
                        for (idx, coeff) in c.iter().enumerate() {
                            for row in 0..r.ambient_dim() {
                                col[row] += frame[(row, idx)] * coeff;
                            }
                        }
                        col
                    })
                    .collect();
                Subspace::span_of_columns(r.ambient_dim(), &ambient_cols)
            })
            .collect();
        out.push(lifted);
    }
    Ok(out)
}

/// Dimension of the span of spectral-cluster projections of random Hermitian
/// fixed points. For a recurrent channel the fixed points form an algebra,
/// which is recovered by finitely many projections; the dimension check
/// certifies that the draws reached the full space.
pub fn projection_span_dimension(
    map: &impl ChannelMap,
    fps: &FixedPointSpace,
    rng: &mut impl Rng,
    draws: usize,
) -> Result<usize> {
    let d = map.map_dim();
    let mut vectors: Vec<Vec<Complex64>> = Vec::new();
    for _ in 0..draws {
        let h = fps.random_hermitian_element(rng);
        for cols in eigenvalue_clusters(&h)? {
            let mut p = CMatrix::zeros(d, d);
            for v in &cols {
                for i in 0..d {
                    for j in 0..d {
                        p[(i, j)] += v[i] * v[j].conj();
                    }
                }
            }
            vectors.push(vectorize(&p));
        }
    }
    Ok(crate::numerics::span_basis(d * d, &vectors, 1e-6)?.cols())
}

/// The three-way decomposition of an enclosure against (R₊, R₀, T), with the
/// residuals of the identities it must satisfy.
#[derive(Debug, Clone)]
pub struct EnclosureDecomposition {
    pub v_r_plus: Subspace,
    pub v_r_zero: Subspace,
    pub v_transient: Subspace,
    /// ‖p_V − (p_{V∩R₊} + p_{V∩R₀} + p_{V∩T})‖.
    pub projector_residual: f64,
    /// λ_min(A(V∩R) − p_{V∩R} − p_{V∩T}); nonnegative within tolerance.
    pub inequality_slack: f64,
    pub v_cap_r_nonzero: bool,
    /// ‖[p_V, p_{R₊}]‖, ‖[p_V, p_{R₀}]‖, ‖[p_V, p_T]‖ — recorded as data
    /// (whether subharmonic projections always commute with the recurrence
    /// projectors is open; nothing is asserted about these).
    pub commutator_norms: [f64; 3],
}

/// Decompose an enclosure V as (V∩R₊) ⊕ (V∩R₀) ⊕ (V∩T) and verify the
/// identities that make the decomposition meaningful: the projectors add up
/// to p_V, the transient part is dominated by A(V∩R) − p_{V∩R}, and V∩R is
/// nonzero for nonzero V.
pub fn enclosure_structure(
    channel: &QuantumChannel,
    v: &Subspace,
    deco: &RecurrenceDecomposition,
) -> Result<EnclosureDecomposition> {
    let cert = is_enclosure(channel, v)?;
    if !cert.is_enclosure {
        return Err(Error::NotEnclosure { slack: cert.slack });
    }
    let v_r_plus = v.intersect(&deco.r_plus)?;
    let v_r_zero = v.intersect(&deco.r_zero)?;
    let v_transient = v.intersect(&deco.transient)?;
    let sum = v_r_plus
        .projector()
        .add_mat(&v_r_zero.projector())
        .add_mat(&v_transient.projector());
    let projector_residual = v.projector().sub_mat(&sum).norm_op();

    let p_v = v.projector();
    let commutator_norms = [&deco.r_plus, &deco.r_zero, &deco.transient].map(|s| {
        let p = s.projector();
        p_v.mul_mat(&p).sub_mat(&p.mul_mat(&p_v)).norm_op()
    });

    let v_cap_r = v.intersect(deco.recurrent())?;
    let inequality_slack = if v.dim() == 0 {
        0.0
    } else if v_cap_r.dim() == 0 {
        f64::NEG_INFINITY
    } else {
        let a = crate::absorption::absorption_iterative(
            channel,
            &v_cap_r,
            deco,
            &crate::absorption::absorption_stop(),
        )?;
        let gap = a
            .matrix
            .sub_mat(&v_cap_r.projector())
            .sub_mat(&v_transient.projector());
        eig_hermitian(&gap.hermitian_part())?
            .eigenvalues
            .first()
            .copied()
            .unwrap_or(0.0)
    };
    Ok(EnclosureDecomposition {
        v_cap_r_nonzero: v.dim() == 0 || v_cap_r.dim() > 0,
        v_r_plus,
        v_r_zero,
        v_transient,
        projector_residual,
        inequality_slack,
        commutator_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::QuantumChannel;
    use crate::numerics::ONE;
    use crate::sampling::rng_from_seed;

    fn tol() -> ToleranceContext {
        ToleranceContext::default()
    }

    fn identity_channel(d: usize) -> QuantumChannel {
        QuantumChannel::validate(vec![CMatrix::identity(d)], d, tol()).unwrap()
    }

    fn amplitude_damping(gamma: f64) -> QuantumChannel {
        let b0 = CMatrix::diagonal(&[ONE, Complex64::new((1.0 - gamma).sqrt(), 0.0)]);
        let mut b1 = CMatrix::zeros(2, 2);
        b1[(0, 1)] = Complex64::new(gamma.sqrt(), 0.0);
        QuantumChannel::validate(vec![b0, b1], 2, tol()).unwrap()
    }

    fn three_level_absorber() -> QuantumChannel {
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
    fn identity_channel_everything_is_enclosure() {
        let ch = identity_channel(3);
        let mut rng = rng_from_seed(1);
        for _ in 0..5 {
            let v = crate::sampling::random_subspace(3, 2, &mut rng);
            let cert = is_enclosure(&ch, &v).unwrap();
            assert!(cert.is_enclosure);
            assert!(cert.slack.abs() < 1e-10);
        }
    }

    #[test]
    fn damping_ground_state_is_enclosure() {
        let ch = amplitude_damping(0.5);
        let cert = is_enclosure(&ch, &Subspace::span_of_basis(2, &[0])).unwrap();
        assert!(cert.is_enclosure);
        assert!(cert.slack.abs() < 1e-12);
        let cert1 = is_enclosure(&ch, &Subspace::span_of_basis(2, &[1])).unwrap();
        assert!(!cert1.is_enclosure);
        assert!((cert1.slack + 0.5).abs() < 1e-12);
    }

    #[test]
    fn fixed_points_of_identity_channel() {
        let fps = fixed_point_space(&identity_channel(3)).unwrap();
        assert_eq!(fps.dim, 9);
        assert!(fps.max_fixed_residual < 1e-10);
    }

    #[test]
    fn fixed_points_of_damping() {
        let fps = fixed_point_space(&amplitude_damping(0.5)).unwrap();
        assert_eq!(fps.dim, 1);
        // basis {I/√2} up to phase
        let b = &fps.basis[0];
        let expected = CMatrix::identity(2).scale_re(std::f64::consts::FRAC_1_SQRT_2);
        let overlap = b.hs_inner(&expected).norm();
        assert!((overlap - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fixed_points_of_absorber() {
        let fps = fixed_point_space(&three_level_absorber()).unwrap();
        assert_eq!(fps.dim, 4);
        // every fixed point x satisfies x22 = <ψ|x|ψ> with ψ = (e0+e1)/√2
        for b in &fps.basis {
            let psi_avg = 0.5 * (b[(0, 0)] + b[(0, 1)] + b[(1, 0)] + b[(1, 1)]);
            assert!((b[(2, 2)] - psi_avg).norm() < 1e-9);
            // off-diagonal blocks vanish
            for i in 0..2 {
                assert!(b[(i, 2)].norm() < 1e-9);
                assert!(b[(2, i)].norm() < 1e-9);
            }
        }
    }

    #[test]
    fn fixed_point_basis_is_orthonormal_and_adjoint_closed() {
        let fps = fixed_point_space(&three_level_absorber()).unwrap();
        assert!(fps.adjoint_closure_residual < 1e-10);
        for (i, a) in fps.basis.iter().enumerate() {
            for (j, b) in fps.basis.iter().enumerate() {
                let ip = a.hs_inner(b);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip.re - expected).abs() < 1e-10 && ip.im.abs() < 1e-10);
            }
        }
        // random Hermitian draws really are Hermitian and fixed
        let ch = three_level_absorber();
        let mut rng = rng_from_seed(4);
        for _ in 0..5 {
            let h = fps.random_hermitian_element(&mut rng);
            assert!(h.sub_mat(&h.adjoint()).norm_fro() < 1e-12);
            let moved = ch.apply(&h, crate::channel::Picture::Heisenberg).unwrap();
            assert!(moved.sub_mat(&h).norm_fro() < 1e-9);
        }
    }

    #[test]
    fn invariant_state_identity_channel() {
        let ch = identity_channel(4);
        let (sigma, rep) = maximal_invariant_state(&ch, &StopRule::default()).unwrap();
        assert!(rep.converged);
        assert!(
            sigma
                .sub_mat(&CMatrix::identity(4).scale_re(0.25))
                .norm_fro()
                < 1e-9
        );
    }

    #[test]
    fn invariant_state_damping_is_ground_state() {
        let ch = amplitude_damping(0.5);
        let (sigma, rep) = maximal_invariant_state(&ch, &StopRule::default()).unwrap();
        assert!(rep.invariance_residual < 1e-9);
        assert!(sigma.sub_mat(&CMatrix::matrix_unit(2, 0, 0)).norm_fro() < 1e-8);
    }

    #[test]
    fn recurrence_decomposition_damping() {
        let deco = recurrence_decomposition(&amplitude_damping(0.5)).unwrap();
        assert_eq!(deco.r_plus.dim(), 1);
        assert_eq!(deco.transient.dim(), 1);
        assert_eq!(deco.r_zero.dim(), 0);
        assert!((deco.r_plus.projector()[(0, 0)].re - 1.0).abs() < 1e-9);
        assert!(deco.r_plus_cert.is_enclosure);
    }

    #[test]
    fn recurrence_decomposition_absorber() {
        let deco = recurrence_decomposition(&three_level_absorber()).unwrap();
        assert_eq!(deco.r_plus.dim(), 2);
        assert_eq!(deco.transient.dim(), 1);
        // R₊ = span{e0, e1}
        let expected = Subspace::span_of_basis(3, &[0, 1]);
        assert!(deco.r_plus.projector_distance(&expected) < 1e-8);
        // support of the invariant state is R₊ by construction
        let s = support_projector(&deco.max_invariant_state, &tol()).unwrap();
        assert!(s.projector_distance(&deco.r_plus) < 1e-8);
    }

    #[test]
    fn recurrence_decomposition_identity() {
        let deco = recurrence_decomposition(&identity_channel(3)).unwrap();
        assert_eq!(deco.r_plus.dim(), 3);
        assert_eq!(deco.transient.dim(), 0);
    }

    #[test]
    fn commutant_of_identity_is_everything() {
        let fps = commutant_basis(&[CMatrix::identity(3)], &tol()).unwrap();
        assert_eq!(fps.dim, 9);
    }

    #[test]
    fn commutant_of_paulis_is_scalars() {
        let x = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let z = CMatrix::real_diagonal(&[1.0, -1.0]);
        let fps = commutant_basis(&[x, z], &tol()).unwrap();
        assert_eq!(fps.dim, 1);
    }

    #[test]
    fn commutant_of_diagonal_is_diagonals() {
        let g = CMatrix::real_diagonal(&[1.0, 2.0]);
        let fps = commutant_basis(&[g], &tol()).unwrap();
        assert_eq!(fps.dim, 2);
        for b in &fps.basis {
            assert!(b[(0, 1)].norm() < 1e-10 && b[(1, 0)].norm() < 1e-10);
        }
    }

    #[test]
    fn algebra_check_accepts_pauli_span() {
        let x = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let basis = vec![
            CMatrix::identity(2).scale_re(std::f64::consts::FRAC_1_SQRT_2),
            x.scale_re(std::f64::consts::FRAC_1_SQRT_2),
        ];
        let space = FixedPointSpace {
            dim: 2,
            basis,
            max_fixed_residual: 0.0,
            adjoint_closure_residual: 0.0,
        };
        let check = algebra_closure_check(&space, &tol());
        assert!(check.is_algebra, "worst {}", check.worst_distance);
    }

    #[test]
    fn algebra_check_rejects_absorber_fixed_points() {
        let fps = fixed_point_space(&three_level_absorber()).unwrap();
        let check = algebra_closure_check(&fps, &tol());
        assert!(!check.is_algebra);
        assert!(check.worst_distance > 0.01);
    }

    #[test]
    fn dome_of_damping_is_single_ray() {
        let ch = amplitude_damping(0.5);
        let deco = recurrence_decomposition(&ch).unwrap();
        let dome = minimal_enclosures(&ch, &deco, 7).unwrap();
        assert_eq!(dome.parts.len(), 1);
        assert_eq!(dome.parts[0].dim(), 1);
    }

    #[test]
    fn dome_of_identity_qubit_two_rays() {
        let ch = identity_channel(2);
        let deco = recurrence_decomposition(&ch).unwrap();
        let dome = minimal_enclosures(&ch, &deco, 3).unwrap();
        assert_eq!(dome.parts.len(), 2);
        for p in &dome.parts {
            assert_eq!(p.dim(), 1);
            let cert = is_enclosure(&ch, p).unwrap();
            assert!(cert.is_enclosure);
        }
        assert!(dome.parts[0]
            .is_orthogonal_to(&dome.parts[1], &tol())
            .unwrap());
        // deterministic under the same seed
        let again = minimal_enclosures(&ch, &deco, 3).unwrap();
        assert!(dome.parts[0].projector_distance(&again.parts[0]) < 1e-12);
    }

    #[test]
    fn dome_of_absorber_two_rays_in_r() {
        let ch = three_level_absorber();
        let deco = recurrence_decomposition(&ch).unwrap();
        let dome = minimal_enclosures(&ch, &deco, 11).unwrap();
        assert_eq!(dome.parts.len(), 2);
        let r = Subspace::span_of_basis(3, &[0, 1]);
        let mut total = Subspace::zero(3);
        for p in &dome.parts {
            assert_eq!(p.dim(), 1);
            assert!(p.contained_in(&r, &tol()).unwrap());
            total = total.sum(p).unwrap();
        }
        assert!(total.projector_distance(&r) < 1e-8);
    }

    #[test]
    fn enclosure_complement_absorber() {
        let ch = three_level_absorber();
        let deco = recurrence_decomposition(&ch).unwrap();
        let v = Subspace::span_of_basis(3, &[0]);
        let z = Subspace::span_of_basis(3, &[0, 1]);
        let cert = enclosure_complement(&ch, &v, &z, &deco).unwrap();
        assert!(cert.is_enclosure);
        assert_eq!(cert.subspace.dim(), 1);
        assert!((cert.subspace.projector()[(1, 1)].re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn enclosure_complement_v_equals_z() {
        let ch = identity_channel(3);
        let deco = recurrence_decomposition(&ch).unwrap();
        let v = Subspace::span_of_basis(3, &[0, 1]);
        let cert = enclosure_complement(&ch, &v, &v, &deco).unwrap();
        assert!(cert.is_enclosure);
        assert_eq!(cert.subspace.dim(), 0);
    }

    #[test]
    fn enclosure_complement_rejects_non_nested() {
        let ch = identity_channel(3);
        let deco = recurrence_decomposition(&ch).unwrap();
        let v = Subspace::span_of_basis(3, &[2]);
        let z = Subspace::span_of_basis(3, &[0, 1]);
        assert!(enclosure_complement(&ch, &v, &z, &deco).is_err());
    }

    #[test]
    fn hereditary_leak_matches_certificates() {
        let ch = amplitude_damping(0.5);
        let mut rng = rng_from_seed(9);
        let good = Subspace::span_of_basis(2, &[0]);
        assert!(hereditary_leak(&ch, &good, 10, &mut rng).unwrap() < 1e-10);
        let bad = Subspace::span_of_basis(2, &[1]);
        assert!(hereditary_leak(&ch, &bad, 10, &mut rng).unwrap() > 1e-3);
    }

    #[test]
    fn enclosure_structure_of_full_space() {
        let ch = three_level_absorber();
        let deco = recurrence_decomposition(&ch).unwrap();
        let full = Subspace::full(3);
        let parts = enclosure_structure(&ch, &full, &deco).unwrap();
        assert_eq!(parts.v_r_plus.dim(), 2);
        assert_eq!(parts.v_r_zero.dim(), 0);
        assert_eq!(parts.v_transient.dim(), 1);
        assert!(parts.projector_residual < 1e-8);
        assert!(parts.inequality_slack > -1e-8);
        assert!(parts.v_cap_r_nonzero);
    }

    #[test]
    fn enclosure_structure_inside_r_plus() {
        let ch = three_level_absorber();
        let deco = recurrence_decomposition(&ch).unwrap();
        let v = Subspace::span_of_basis(3, &[0]);
        let parts = enclosure_structure(&ch, &v, &deco).unwrap();
        assert_eq!(parts.v_r_plus.dim(), 1);
        assert_eq!(parts.v_transient.dim(), 0);
        assert!(parts.projector_residual < 1e-8);
    }
}
