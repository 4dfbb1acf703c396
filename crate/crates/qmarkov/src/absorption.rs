//! Absorption operators and their classical counterparts.
//!
//! For an enclosure V the absorption operator A(V) = lim Φⁿ(p_V) encodes the
//! asymptotic probability of ending up in V: ⟨v, A(V) v⟩ is the long-run
//! weight a system started in |v⟩⟨v| places on V. Since p_V is subharmonic
//! the powers increase monotonically, so the plain power limit converges
//! geometrically; it is computed here alongside an independent route that
//! solves the compressed linear system on the transient corner. Absorption
//! operators are fixed points of the channel, carry the block structure
//! A(V) = p_V + p_{V⊥∩T} A(V) p_{V⊥∩T}, and — when the recurrent space is
//! absorbing — span the whole fixed-point space.

use crate::channel::{ChannelMap, ConvergenceReport, Picture, QuantumChannel, StopRule};
use crate::error::{Error, Result};
use crate::numerics::{solve_linear, unvectorize, vectorize, CMatrix, Subspace, ToleranceContext};
use crate::sampling::SeededRng;
use crate::structure::{
    fixed_point_space, is_enclosure, random_enclosures_in_recurrent, Dome, RecurrenceDecomposition,
};
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;

/// How an absorption operator was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbsorptionMethod {
    Iterative,
    LinearSystem,
}

/// Residuals carried by every computed absorption operator.
#[derive(Debug, Clone, Copy)]
pub struct AbsorptionResiduals {
    /// ‖Φ(A) − A‖ (absorption operators are fixed points).
    pub fixed_point: f64,
    /// ‖A − p_V − p_{V⊥∩T} A p_{V⊥∩T}‖ (block structure).
    pub blocks: f64,
}

/// A(V) with provenance and residuals. The matrix is Hermitian with
/// 0 ⪯ A ⪯ I within tolerance.
#[derive(Debug, Clone)]
pub struct AbsorptionOperator {
    pub enclosure: Subspace,
    pub matrix: CMatrix,
    pub method: AbsorptionMethod,
    pub residuals: AbsorptionResiduals,
    pub report: ConvergenceReport,
}

/// Default stopping rule for absorption iterations. The powers of a
/// subharmonic projection converge geometrically, so a tight stall threshold
/// is affordable and keeps the limit accurate to ~1e-9.
pub fn absorption_stop() -> StopRule {
    StopRule {
        stall_tol: 1e-12,
        max_terms: 100_000,
    }
}

/// A(V) as the monotone limit of Φⁿ(p_V), stall-detected on consecutive
/// iterates.
pub fn absorption_iterative(
    map: &impl ChannelMap,
    v: &Subspace,
    deco: &RecurrenceDecomposition,
    stop: &StopRule,
) -> Result<AbsorptionOperator> {
    let cert = is_enclosure(map, v)?;
    if !cert.is_enclosure {
        return Err(Error::NotEnclosure { slack: cert.slack });
    }
    let p = v.projector();
    let (limit, report) = crate::channel::power_limit(map, &p, Picture::Heisenberg, stop)?;
    let matrix = limit.hermitian_part();
    finish_operator(map, v, deco, matrix, AbsorptionMethod::Iterative, report)
}

/// A(V) through the compressed linear system on B(T).
///
/// Requires A(R) = I (absorbing recurrent space), V ⊆ R, and a transient
/// corner with spectral radius strictly below 1 − eq_tol; the unique
/// solution y of the compressed equation gives A = p_V + y.
pub fn absorption_linear(
    map: &impl ChannelMap,
    v: &Subspace,
    deco: &RecurrenceDecomposition,
) -> Result<AbsorptionOperator> {
    let tol = *map.map_tol();
    let absorbing = is_absorbing_recurrent(map, deco)?;
    if !absorbing.absorbing {
        return Err(Error::Precondition(format!(
            "recurrent space is not absorbing: ‖A(R) − I‖ = {:.3e}",
            absorbing.deviation
        )));
    }
    if !v.contained_in(deco.recurrent(), &tol)? {
        return Err(Error::Precondition(
            "V is not contained in the recurrent space".into(),
        ));
    }
    let cert = is_enclosure(map, v)?;
    if !cert.is_enclosure {
        return Err(Error::NotEnclosure { slack: cert.slack });
    }

    let t_space = &deco.transient;
    let t = t_space.dim();
    let p_v = v.projector();
    if t == 0 {
        let report = ConvergenceReport {
            terms: 0,
            converged: true,
            last_delta: 0.0,
        };
        return finish_operator(map, v, deco, p_v, AbsorptionMethod::LinearSystem, report);
    }

    // corner map Ψ(y) = G† Φ(G y G†) G as a t²×t² matrix
    let mut corner = CMatrix::zeros(t * t, t * t);
    for col in 0..t * t {
        let (i, j) = (col % t, col / t);
        let unit = CMatrix::matrix_unit(t, i, j);
        let image = t_space.compress(&map.map_apply(&t_space.embed(&unit), Picture::Heisenberg)?);
        let vec_image = vectorize(&image);
        for row in 0..t * t {
            corner[(row, col)] = vec_image[row];
        }
    }

    // solvability guard: ρ(Ψ) ≤ ‖Ψ^64‖^{1/64} must stay below 1 − eq_tol
    let mut power = corner.clone();
    for _ in 0..6 {
        power = power.mul_mat(&power);
    }
    let radius_bound = power.norm_fro().powf(1.0 / 64.0);
    if radius_bound >= 1.0 - tol.eq_tol {
        return Err(Error::Precondition(format!(
            "transient corner spectral radius bound {radius_bound:.6} is not below 1"
        )));
    }

    // (Ψ − I) vec(y) = −vec(G† (Φ(p_V) − p_V) G)
    let drift = map.map_apply(&p_v, Picture::Heisenberg)?.sub_mat(&p_v);
    let rhs_mat = t_space.compress(&drift).scale_re(-1.0);
    let system = corner.sub_mat(&CMatrix::identity(t * t));
    let ls = solve_linear(&system, &vectorize(&rhs_mat), &tol)?;
    if ls.residual > tol.eq_tol * (1.0 + rhs_mat.norm_fro()) {
        return Err(Error::Precondition(format!(
            "compressed system is near singular: residual {:.3e}",
            ls.residual
        )));
    }
    let y = unvectorize(&ls.solution, t, t)?.hermitian_part();
    let matrix = p_v.add_mat(&t_space.embed(&y));
    let report = ConvergenceReport {
        terms: 1,
        converged: true,
        last_delta: ls.residual,
    };
    finish_operator(map, v, deco, matrix, AbsorptionMethod::LinearSystem, report)
}

fn finish_operator(
    map: &impl ChannelMap,
    v: &Subspace,
    deco: &RecurrenceDecomposition,
    matrix: CMatrix,
    method: AbsorptionMethod,
    report: ConvergenceReport,
) -> Result<AbsorptionOperator> {
    let fixed_point = map
        .map_apply(&matrix, Picture::Heisenberg)?
        .sub_mat(&matrix)
        .norm_op();
    let blocks = blocks_residual(&matrix, v, deco)?;
    Ok(AbsorptionOperator {
        enclosure: v.clone(),
        matrix,
        method,
        residuals: AbsorptionResiduals {
            fixed_point,
            blocks,
        },
        report,
    })
}

/// ‖A − p_V − p_{V⊥∩T} A p_{V⊥∩T}‖ for an absorption operator A of the
/// enclosure V.
pub fn blocks_residual(a: &CMatrix, v: &Subspace, deco: &RecurrenceDecomposition) -> Result<f64> {
    let rest = v.complement().intersect(&deco.transient)?;
    let q = rest.projector();
    let expected = v.projector().add_mat(&q.mul_mat(a).mul_mat(&q));
    Ok(a.sub_mat(&expected).norm_op())
}

/// Whether A(R) = I, with the deviation ‖A(R) − I‖. In finite dimension the
/// deviation exceeding eq_tol indicates a numerical defect, not a structural
/// possibility.
#[derive(Debug, Clone, Copy)]
pub struct AbsorbingRecurrent {
    pub absorbing: bool,
    pub deviation: f64,
}

pub fn is_absorbing_recurrent(
    map: &impl ChannelMap,
    deco: &RecurrenceDecomposition,
) -> Result<AbsorbingRecurrent> {
    let r = deco.recurrent();
    if r.dim() == 0 {
        return Ok(AbsorbingRecurrent {
            absorbing: map.map_dim() == 0,
            deviation: 1.0,
        });
    }
    let p = r.projector();
    let (limit, _) = crate::channel::power_limit(map, &p, Picture::Heisenberg, &absorption_stop())?;
    let deviation = limit.sub_mat(&CMatrix::identity(map.map_dim())).norm_op();
    Ok(AbsorbingRecurrent {
        absorbing: deviation <= map.map_tol().eq_tol,
        deviation,
    })
}

/// Outcome of rebuilding F(P) from absorption operators.
#[derive(Debug, Clone)]
pub struct FixedPointComparison {
    /// Orthonormal basis (trace pairing) of span{A(V)}.
    pub absorption_basis: Vec<CMatrix>,
    pub span_dim: usize,
    pub fixed_dim: usize,
    /// max distance of a fixed-point basis element from the absorption span.
    pub fixed_to_span: f64,
    /// max distance of an absorption-span basis element from F(P).
    pub span_to_fixed: f64,
    /// max over the span basis of ‖x − p_{R₊}xp_{R₊} − p_{R₀}xp_{R₀} − p_T x p_T‖.
    pub block_residual: f64,
    pub enclosures_used: usize,
}

/// Span the fixed-point space by absorption operators of enclosures in R:
/// all DOME parts, their pairwise sums, and seeded random spectral-cluster
/// enclosures of the restricted fixed-point algebra.
pub fn fixed_points_via_absorption(
    channel: &QuantumChannel,
    deco: &RecurrenceDecomposition,
    dome: &Dome,
    seed: u64,
) -> Result<FixedPointComparison> {
    let absorbing = is_absorbing_recurrent(channel, deco)?;
    if !absorbing.absorbing {
        return Err(Error::Precondition(format!(
            "recurrent space is not absorbing: deviation {:.3e}",
            absorbing.deviation
        )));
    }
    let mut enclosures: Vec<Subspace> = Vec::new();
    enclosures.push(deco.recurrent().clone());
    for p in &dome.parts {
        enclosures.push(p.clone());
    }
    for i in 0..dome.parts.len() {
        for j in i + 1..dome.parts.len() {
            enclosures.push(dome.parts[i].sum(&dome.parts[j])?);
        }
    }
    let fps = fixed_point_space(channel)?;
    let mut rng = SeededRng::seed_from_u64(seed);
    let draws = (2 * fps.dim).max(8);
    for group in random_enclosures_in_recurrent(channel, deco, &mut rng, draws)? {
        for v in group {
            if v.dim() > 0 {
                enclosures.push(v);
            }
        }
    }

    let stop = absorption_stop();
    let mut vectors: Vec<Vec<Complex64>> = Vec::new();
    for v in &enclosures {
        let a = absorption_iterative(channel, v, deco, &stop)?;
        vectors.push(vectorize(&a.matrix));
    }
    let d = channel.dim();
    let frame = crate::numerics::span_basis(d * d, &vectors, 1e-6)?;
    let basis: Vec<CMatrix> = (0..frame.cols())
        .map(|j| unvectorize(&frame.column(j), d, d))
        .collect::<Result<_>>()?;

    let span_distance = |x: &CMatrix| -> f64 {
        let mut rem = x.clone();
        for b in &basis {
            let coeff = b.hs_inner(x);
            rem = rem.sub_mat(&b.scale(coeff));
        }
        rem.norm_fro()
    };
    let fixed_to_span = fps
        .basis
        .iter()
        .map(|b| span_distance(b))
        .fold(0.0, f64::max);
    let span_to_fixed = basis
        .iter()
        .map(|s| fps.distance_to_span(s))
        .fold(0.0, f64::max);

    let (pr, p0, pt) = (
        deco.r_plus.projector(),
        deco.r_zero.projector(),
        deco.transient.projector(),
    );
    let block_residual = basis
        .iter()
        .map(|x| {
            let diag = pr
                .mul_mat(x)
                .mul_mat(&pr)
                .add_mat(&p0.mul_mat(x).mul_mat(&p0))
                .add_mat(&pt.mul_mat(x).mul_mat(&pt));
            x.sub_mat(&diag).norm_op()
        })
        .fold(0.0, f64::max);

    Ok(FixedPointComparison {
        span_dim: basis.len(),
        absorption_basis: basis,
        fixed_dim: fps.dim,
        fixed_to_span,
        span_to_fixed,
        block_residual,
        enclosures_used: enclosures.len(),
    })
}

/// Verdict of the probabilistic algebra criterion: F(P) is an algebra
/// exactly when orthogonal enclosures have annihilating absorption
/// operators.
#[derive(Debug, Clone)]
pub struct AlgebraCriterion {
    pub is_algebra: bool,
    pub worst_norm: f64,
    pub worst_pair: Option<(Subspace, Subspace)>,
    pub pairs_checked: usize,
}

/// Max of ‖A(V)A(W)‖ over ordered pairs of orthogonal enclosures in R: all
/// DOME part pairs plus seeded random orthogonal pairs from spectral
/// clusters of the restricted fixed points.
pub fn algebra_criterion(
    channel: &QuantumChannel,
    deco: &RecurrenceDecomposition,
    dome: &Dome,
    seed: u64,
) -> Result<AlgebraCriterion> {
    let absorbing = is_absorbing_recurrent(channel, deco)?;
    if !absorbing.absorbing {
        return Err(Error::Precondition(format!(
            "recurrent space is not absorbing: deviation {:.3e}",
            absorbing.deviation
        )));
    }
    let mut pairs: Vec<(Subspace, Subspace)> = Vec::new();
    for i in 0..dome.parts.len() {
        for j in 0..dome.parts.len() {
            if i != j {
                pairs.push((dome.parts[i].clone(), dome.parts[j].clone()));
            }
        }
    }
    let mut rng = SeededRng::seed_from_u64(seed);
    let mut random_pairs = 0usize;
    for group in random_enclosures_in_recurrent(channel, deco, &mut rng, 20)? {
        if random_pairs >= 10 {
            break;
        }
        let nonzero: Vec<&Subspace> = group.iter().filter(|s| s.dim() > 0).collect();
        if nonzero.len() >= 2 {
            pairs.push(((*nonzero[0]).clone(), (*nonzero[1]).clone()));
            pairs.push(((*nonzero[1]).clone(), (*nonzero[0]).clone()));
            random_pairs += 1;
        }
    }

    let stop = absorption_stop();
    let tol = channel.tol();
    let mut worst_norm = 0.0_f64;
    let mut worst_pair = None;
    for (v, w) in &pairs {
        let av = absorption_iterative(channel, v, deco, &stop)?;
        let aw = absorption_iterative(channel, w, deco, &stop)?;
        let norm = av.matrix.mul_mat(&aw.matrix).norm_op();
        if norm > worst_norm {
            worst_norm = norm;
            worst_pair = Some((v.clone(), w.clone()));
        }
    }
    Ok(AlgebraCriterion {
        is_algebra: worst_norm <= tol.eq_tol,
        worst_norm,
        worst_pair,
        pairs_checked: pairs.len(),
    })
}

/// A finite Markov chain given by a row-stochastic transition matrix.
#[derive(Debug, Clone)]
pub struct ClassicalChain {
    n: usize,
    p: Vec<f64>,
    labels: Vec<String>,
    tol: ToleranceContext,
}

impl ClassicalChain {
    pub fn new(n: usize, p: Vec<f64>, tol: ToleranceContext) -> Result<Self> {
        if p.len() != n * n {
            return Err(Error::InvalidChain(format!(
                "expected {} entries for {n} states, found {}",
                n * n,
                p.len()
            )));
        }
        for (idx, &x) in p.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::InvalidChain(format!(
                    "non-finite entry at index {idx}"
                )));
            }
            if x < -tol.eq_tol {
                return Err(Error::InvalidChain(format!(
                    "negative probability {x:.3e} at ({}, {})",
                    idx / n,
                    idx % n
                )));
            }
        }
        for x in 0..n {
            let row_sum: f64 = (0..n).map(|y| p[x * n + y]).sum();
            if (row_sum - 1.0).abs() > tol.eq_tol {
                return Err(Error::InvalidChain(format!(
                    "row {x} sums to {row_sum}, expected 1"
                )));
            }
        }
        let labels = (0..n).map(|i| i.to_string()).collect();
        Ok(Self { n, p, labels, tol })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::InvalidChain("label count mismatch".into()));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.p[x * self.n + y]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn tol(&self) -> &ToleranceContext {
        &self.tol
    }

    /// No probability leaves C: Σ_{y∉C} p_{xy} ≤ eq_tol for every x ∈ C.
    pub fn is_closed(&self, c: &[usize]) -> bool {
        let in_c = self.membership(c);
        c.iter().all(|&x| {
            (0..self.n)
                .filter(|&y| !in_c[y])
                .map(|y| self.prob(x, y))
                .sum::<f64>()
                <= self.tol.eq_tol
        })
    }

    fn membership(&self, c: &[usize]) -> Vec<bool> {
        let mut m = vec![false; self.n];
        for &x in c {
            m[x] = true;
        }
        m
    }

    /// States lying in closed communicating classes (recurrent states, given
    /// that recurrent classes are absorbing).
    pub fn recurrent_states(&self) -> Vec<bool> {
        let n = self.n;
        let edge = |x: usize, y: usize| self.prob(x, y) > self.tol.eq_tol;
        // reachability closure
        let mut reach = vec![vec![false; n]; n];
        for x in 0..n {
            // BFS
            let mut stack = vec![x];
            while let Some(u) = stack.pop() {
                for y in 0..n {
                    if edge(u, y) && !reach[x][y] {
                        reach[x][y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        // x is recurrent iff every state reachable from x reaches back to x
        (0..n)
            .map(|x| (0..n).all(|y| !reach[x][y] || reach[y][x] || y == x))
            .collect()
    }
}

/// Absorption probabilities into a closed set C: 1 on C, 0 on recurrent
/// states outside C, and on transient states the unique solution of
/// Σ_y (p_{xy} − δ_{xy}) A_y = −Σ_{y∈C} p_{xy}.
pub fn classical_absorption(chain: &ClassicalChain, closed: &[usize]) -> Result<Vec<f64>> {
    let n = chain.n();
    for &x in closed {
        if x >= n {
            return Err(Error::InvalidChain(format!("state {x} out of range")));
        }
    }
    if !chain.is_closed(closed) {
        return Err(Error::Precondition("target set is not closed".into()));
    }
    let in_c = chain.membership(closed);
    let recurrent = chain.recurrent_states();
    let transient: Vec<usize> = (0..n).filter(|&x| !in_c[x] && !recurrent[x]).collect();
    let t = transient.len();

    let mut result = vec![0.0; n];
    for &x in closed {
        result[x] = 1.0;
    }
    if t == 0 {
        return Ok(result);
    }

    // transient block and its spectral radius guard
    let q = CMatrix::from_fn(t, t, |i, j| {
        Complex64::new(chain.prob(transient[i], transient[j]), 0.0)
    });
    let mut power = q.clone();
    for _ in 0..6 {
        power = power.mul_mat(&power);
    }
    if power.norm_fro().powf(1.0 / 64.0) >= 1.0 - chain.tol().eq_tol {
        return Err(Error::Precondition(
            "transient block spectral radius is not below 1 (singular system)".into(),
        ));
    }

    let system = q.sub_mat(&CMatrix::identity(t));
    let rhs: Vec<Complex64> = transient
        .iter()
        .map(|&x| {
            let into_c: f64 = closed.iter().map(|&y| chain.prob(x, y)).sum();
            Complex64::new(-into_c, 0.0)
        })
        .collect();
    let ls = solve_linear(&system, &rhs, chain.tol())?;
    if ls.residual > chain.tol().eq_tol {
        return Err(Error::Precondition(format!(
            "singular transient system: residual {:.3e}",
            ls.residual
        )));
    }
    for (k, &x) in transient.iter().enumerate() {
        result[x] = ls.solution[k].re;
    }
    // sanity: probabilities within tolerance of [0, 1]
    for (x, &a) in result.iter().enumerate() {
        if !(-chain.tol().eq_tol..=1.0 + chain.tol().eq_tol).contains(&a) {
            return Err(Error::Precondition(format!(
                "absorption probability {a} at state {x} escapes [0, 1]"
            )));
        }
    }
    Ok(result)
}

/// Embed a classical chain as a quantum channel on the diagonal algebra:
/// Kraus B_{(x,y)} = √p_{xy} |y⟩⟨x|, so the predual sends |x⟩⟨x| to
/// Σ_y p_{xy} |y⟩⟨y|.
pub fn embed_classical_chain(chain: &ClassicalChain) -> Result<QuantumChannel> {
    let n = chain.n();
    let mut kraus = Vec::new();
    for x in 0..n {
        for y in 0..n {
            let p = chain.prob(x, y);
            if p > 0.0 {
                let mut b = CMatrix::zeros(n, n);
                b[(y, x)] = Complex64::new(p.sqrt(), 0.0);
                kraus.push(b);
            }
        }
    }
    QuantumChannel::validate(kraus, n, *chain.tol())
}

/// Symmetric gambler's ruin on {0..n-1} with absorbing endpoints.
pub fn gamblers_ruin(n: usize, tol: ToleranceContext) -> Result<ClassicalChain> {
    let mut p = vec![0.0; n * n];
    p[0] = 1.0;
    p[(n - 1) * n + (n - 1)] = 1.0;
    for x in 1..n - 1 {
        p[x * n + x - 1] = 0.5;
        p[x * n + x + 1] = 0.5;
    }
    ClassicalChain::new(n, p, tol)
}
